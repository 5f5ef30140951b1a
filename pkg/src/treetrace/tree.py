"""Rooted p-adic metric trees.

Edge ``(n, k)`` lives in generation ``n`` with ``0 <= k < p**n``; its
children are ``(n + 1, p*k + j)`` for ``j = 0 .. p-1``.  On the geometric
tree the edge has length ``ell**n`` and integration weight ``alpha**n`` and
covers the arclength interval ``[t_{n-1}, t_n]`` with ``t_{-1} = 0`` and
``t_n = sum_{i<=n} ell**i``.  A perturbed tree keeps the combinatorics but
assigns individual lengths and weights to finitely many edges.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping, NamedTuple

import numpy as np

from .errors import ParameterError

ROOT = None
"""Marker returned by :func:`parent` for the root edge ``(0, 0)``."""


@dataclass(frozen=True)
class TreeParams:
    """Branching factor ``p``, length ratio ``ell`` and weight ratio ``alpha``."""

    p: int
    ell: float
    alpha: float

    def __post_init__(self) -> None:
        if isinstance(self.p, bool) or int(self.p) != self.p or self.p < 2:
            raise ParameterError(f"p must be an integer >= 2, got {self.p!r}")
        object.__setattr__(self, "p", int(self.p))
        if not (0.0 < self.ell < 1.0):
            raise ParameterError(f"ell must satisfy 0 < ell < 1, got {self.ell!r}")
        if not self.alpha > 0.0:
            raise ParameterError(f"alpha must be > 0, got {self.alpha!r}")
        object.__setattr__(self, "ell", float(self.ell))
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def height(self) -> float:
        """Height ``L = 1/(1 - ell)`` of the infinite tree."""
        return 1.0 / (1.0 - self.ell)

    def t(self, n: int) -> float:
        """Arclength ``t_n`` of the generation-``n`` vertices (``t_{-1} = 0``)."""
        if n < -1:
            raise ParameterError(f"generation must be >= -1, got {n}")
        return (1.0 - self.ell ** (n + 1)) / (1.0 - self.ell)


class EdgeId(NamedTuple):
    n: int
    k: int


def _check_edge(e: tuple[int, int], p: int) -> EdgeId:
    n, k = int(e[0]), int(e[1])
    if n < 0 or not (0 <= k < p**n):
        raise ParameterError(f"invalid edge id ({n}, {k}) for p={p}")
    return EdgeId(n, k)


def children(e: tuple[int, int], p: int) -> list[EdgeId]:
    n, k = _check_edge(e, p)
    return [EdgeId(n + 1, p * k + j) for j in range(p)]


def parent(e: tuple[int, int], p: int) -> EdgeId | None:
    """Parent edge, or :data:`ROOT` (``None``) for ``(0, 0)``."""
    n, k = _check_edge(e, p)
    if n == 0:
        return ROOT
    return EdgeId(n - 1, k // p)


def subtree_contains(
    ancestor: tuple[int, int], x: tuple[int, int], p: int
) -> tuple[bool, int | None]:
    """Whether edge ``x`` lies in the subtree rooted at the end of ``ancestor``.

    The subtree includes ``ancestor`` itself.  The second component is the
    branch index ``j`` such that ``x`` belongs to the subtree hanging off the
    child ``(n+1, p*k+j)``; it is ``None`` when ``x`` is not strictly below
    the ancestor.
    """
    an, ak = _check_edge(ancestor, p)
    xn, xk = _check_edge(x, p)
    if xn < an:
        return False, None
    m = xn - an
    if xk // p**m != ak:
        return False, None
    if m == 0:
        return True, None
    return True, (xk // p ** (m - 1)) % p


@dataclass(frozen=True, eq=False)
class TreeTopology:
    """A tree truncated at generation ``depth``.

    ``lengths[n]`` and ``weights[n]`` are arrays of shape ``(p**n,)``;
    ``ends[n][k]`` is the arclength ``L_{n,k}`` of the lower vertex of edge
    ``(n, k)``.  For the geometric kind ``ends[n][k] == t_n``.
    """

    params: TreeParams
    depth: int
    kind: str
    lengths: tuple[np.ndarray, ...] = field(repr=False)
    weights: tuple[np.ndarray, ...] = field(repr=False)
    ends: tuple[np.ndarray, ...] = field(repr=False)
    distortion: float = 1.0
    perturbations: tuple[tuple[int, int, float, float], ...] = ()

    @property
    def p(self) -> int:
        return self.params.p

    @property
    def height(self) -> float:
        return self.params.height

    @property
    def t_grid(self) -> np.ndarray:
        """``[t_{-1}, t_0, ..., t_depth]`` for the geometric tree."""
        return np.array([self.params.t(n) for n in range(-1, self.depth + 1)])

    @property
    def is_geometric(self) -> bool:
        return self.kind == "geometric"

    def n_edges(self, n: int | None = None) -> int:
        p = self.p
        if n is None:
            return (p ** (self.depth + 1) - 1) // (p - 1)
        return p**n

    def edges(self, generation: int | None = None) -> Iterator[EdgeId]:
        gens = range(self.depth + 1) if generation is None else [generation]
        for n in gens:
            for k in range(self.p**n):
                yield EdgeId(n, k)

    def edge_length(self, n: int, k: int) -> float:
        return float(self.lengths[n][k])

    def edge_weight(self, n: int, k: int) -> float:
        return float(self.weights[n][k])

    def edge_interval(self, n: int, k: int) -> tuple[float, float]:
        end = float(self.ends[n][k])
        return end - float(self.lengths[n][k]), end

    def same_shape(self, other: "TreeTopology") -> bool:
        return self.p == other.p and self.depth == other.depth

    def to_json(self) -> str:
        return json.dumps(tree_to_dict(self), sort_keys=True)


def _geometric_arrays(params: TreeParams, depth: int):
    p, ell, alpha = params.p, params.ell, params.alpha
    lengths = tuple(np.full(p**n, ell**n) for n in range(depth + 1))
    weights = tuple(np.full(p**n, alpha**n) for n in range(depth + 1))
    return lengths, weights


def _cumulative_ends(p: int, lengths: tuple[np.ndarray, ...]) -> tuple[np.ndarray, ...]:
    ends = [lengths[0].copy()]
    for n in range(1, len(lengths)):
        ends.append(np.repeat(ends[-1], p) + lengths[n])
    return tuple(ends)


def geometric_tree(params: TreeParams, depth: int) -> TreeTopology:
    if int(depth) != depth or depth < 0:
        raise ParameterError(f"depth must be a non-negative integer, got {depth!r}")
    depth = int(depth)
    lengths, weights = _geometric_arrays(params, depth)
    ends = tuple(np.full(params.p**n, params.t(n)) for n in range(depth + 1))
    return TreeTopology(params, depth, "geometric", lengths, weights, ends, 1.0, ())


def perturbed_tree(
    lengths: Mapping[tuple[int, int], float] | None,
    weights: Mapping[tuple[int, int], float] | None,
    params: TreeParams,
    depth: int,
) -> TreeTopology:
    """Tree with prescribed lengths and weights on finitely many edges.

    Unlisted edges keep their geometric values.  The stored distortion is the
    smallest ``c >= 1`` with ``c^-1 ell^n <= length <= c ell^n`` and the same
    sandwich for the weights.
    """
    base = geometric_tree(params, depth)
    lens = [a.copy() for a in base.lengths]
    wts = [a.copy() for a in base.weights]
    c = 1.0
    pert: dict[tuple[int, int], list[float]] = {}
    for table, target, ref, slot in (
        (lengths or {}, lens, params.ell, 0),
        (weights or {}, wts, params.alpha, 1),
    ):
        for e, value in table.items():
            n, k = _check_edge(e, params.p)
            if n > depth:
                raise ParameterError(f"edge ({n}, {k}) lies beyond depth {depth}")
            value = float(value)
            if not (value > 0.0 and math.isfinite(value)):
                raise ParameterError(f"edge ({n}, {k}): values must be positive, got {value!r}")
            target[n][k] = value
            ratio = value / ref**n
            c = max(c, ratio, 1.0 / ratio)
            pert.setdefault((n, k), [params.ell**n, params.alpha**n])[slot] = value
    lens_t = tuple(lens)
    ends = _cumulative_ends(params.p, lens_t)
    records = tuple(sorted((n, k, v[0], v[1]) for (n, k), v in pert.items()))
    return TreeTopology(params, int(depth), "perturbed", lens_t, tuple(wts), ends, c, records)


class TreePoint(NamedTuple):
    edge: EdgeId
    t: float


def _point_check(tree: TreeTopology, x: TreePoint, geometric_coords: bool) -> tuple[int, int, float]:
    n, k = _check_edge(x.edge, tree.p)
    if n > tree.depth:
        raise ParameterError(f"edge ({n}, {k}) lies beyond depth {tree.depth}")
    if geometric_coords:
        lo, hi = tree.params.t(n - 1), tree.params.t(n)
    else:
        lo, hi = tree.edge_interval(n, k)
    tol = 1e-12 * max(1.0, abs(hi))
    if not (lo - tol <= x.t <= hi + tol):
        raise ParameterError(f"coordinate {x.t!r} outside edge ({n}, {k}) interval [{lo}, {hi}]")
    return n, k, float(x.t)


def coordinate_map(tree: TreeTopology, x: TreePoint) -> TreePoint:
    """Map a point of the geometric tree to the same edge of ``tree``.

    The map is affine on each edge and fixes every vertex.
    """
    n, k, t = _point_check(tree, x, geometric_coords=True)
    lnk = tree.edge_length(n, k)
    start = float(tree.ends[n][k]) - lnk
    s = start + (t - tree.params.t(n - 1)) / tree.params.ell**n * lnk
    return TreePoint(EdgeId(n, k), s)


def coordinate_map_inverse(tree: TreeTopology, y: TreePoint) -> TreePoint:
    n, k, s = _point_check(tree, y, geometric_coords=False)
    lnk = tree.edge_length(n, k)
    start = float(tree.ends[n][k]) - lnk
    t = tree.params.t(n - 1) + (s - start) / lnk * tree.params.ell**n
    return TreePoint(EdgeId(n, k), t)


def tree_to_dict(tree: TreeTopology) -> dict:
    prm = tree.params
    return {
        "p": prm.p,
        "ell": prm.ell,
        "alpha": prm.alpha,
        "depth": tree.depth,
        "perturbations": [
            {"n": n, "k": k, "length": length, "weight": weight}
            for n, k, length, weight in tree.perturbations
        ],
    }


def tree_from_dict(data: Mapping) -> TreeTopology:
    params = TreeParams(data["p"], data["ell"], data["alpha"])
    depth = data["depth"]
    perts = data.get("perturbations") or []
    if not perts:
        return geometric_tree(params, depth)
    lengths = {(int(r["n"]), int(r["k"])): r["length"] for r in perts if "length" in r}
    weights = {(int(r["n"]), int(r["k"])): r["weight"] for r in perts if "weight" in r}
    return perturbed_tree(lengths, weights, params, depth)


def tree_from_json(text: str) -> TreeTopology:
    return tree_from_dict(json.loads(text))
