"""Continuous piecewise-linear functions on truncated trees.

Each edge carries ``m`` complex samples on a uniform grid spanning the edge
interval, endpoints included.  Norms integrate the piecewise-linear
interpolant exactly, so discrete identities (Parseval, telescoping) hold to
rounding error.

Beyond the truncation depth a function is continued by constants, optionally
corrected by a harmonic *tail*: a finite map ``z -> c_z`` meaning that past
generation ``depth`` the derivative equals ``sum_z c_z phi_z'``.  The tail is
what lets closed-form harmonic functions keep their exact trace.
"""

from __future__ import annotations

import io
import csv
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import ContinuityError, DepthError, ParameterError
from .tree import TreeTopology, tree_from_dict, tree_to_dict

CONTINUITY_TOL = 1e-12
CUTOFF_LO = 0.5
CUTOFF_HI = 0.75


@dataclass(frozen=True)
class NormReport:
    l2: float
    h1_semi: float
    h1: float
    poincare_ratio: float


def _as_tail(tail) -> tuple:
    items = tail.items() if isinstance(tail, Mapping) else tail
    merged: dict = {}
    for z, c in items:
        merged[z] = merged.get(z, 0.0) + complex(c)
    return tuple(sorted(((z, c) for z, c in merged.items() if c != 0), key=lambda it: it[0]))


@dataclass(frozen=True, eq=False)
class TreeFunction:
    """Samples ``values[n]`` of shape ``(p**n, m)`` for generations ``0..depth``."""

    tree: TreeTopology
    values: tuple[np.ndarray, ...] = field(repr=False)
    tail: tuple = ()

    def __post_init__(self) -> None:
        tree = self.tree
        if len(self.values) != tree.depth + 1:
            raise ParameterError(
                f"expected {tree.depth + 1} generations of samples, got {len(self.values)}"
            )
        vals = []
        m = None
        for n, arr in enumerate(self.values):
            a = np.array(arr, dtype=np.complex128)
            if a.ndim != 2 or a.shape[0] != tree.p**n:
                raise ParameterError(f"generation {n}: expected shape ({tree.p**n}, m), got {a.shape}")
            m = a.shape[1] if m is None else m
            if a.shape[1] != m or m < 2:
                raise ParameterError("all edges need the same number m >= 2 of samples")
            a.setflags(write=False)
            vals.append(a)
        object.__setattr__(self, "values", tuple(vals))
        object.__setattr__(self, "tail", _as_tail(self.tail))
        self._check_continuity()

    def _check_continuity(self) -> None:
        p = self.tree.p
        for n in range(self.tree.depth):
            top = np.repeat(self.values[n][:, -1], p)
            bottom = self.values[n + 1][:, 0]
            gap = np.abs(top - bottom)
            scale = np.maximum(1.0, np.abs(top))
            bad = np.nonzero(gap > CONTINUITY_TOL * scale)[0]
            if bad.size:
                k = int(bad[0])
                raise ContinuityError(
                    f"vertex mismatch {gap[k]:.3e} between edge ({n}, {k // p}) and child ({n + 1}, {k})"
                )

    @property
    def m(self) -> int:
        return self.values[0].shape[1]

    @property
    def depth(self) -> int:
        return self.tree.depth

    @property
    def root_value(self) -> complex:
        return complex(self.values[0][0, 0])

    @property
    def tail_map(self) -> dict:
        return dict(self.tail)

    def with_values(self, values, tail=None) -> "TreeFunction":
        return TreeFunction(self.tree, tuple(values), self.tail if tail is None else tail)

    def _combine(self, other: "TreeFunction", sign: float) -> "TreeFunction":
        if other.tree is not self.tree and not (
            self.tree.same_shape(other.tree) and self.tree.params == other.tree.params
        ):
            raise ParameterError("functions live on different trees")
        if other.m != self.m:
            raise ParameterError("functions use different samples_per_edge")
        vals = [a + sign * b for a, b in zip(self.values, other.values)]
        tail = list(self.tail) + [(z, sign * c) for z, c in other.tail]
        return TreeFunction(self.tree, tuple(vals), tail)

    def __add__(self, other: "TreeFunction") -> "TreeFunction":
        return self._combine(other, 1.0)

    def __sub__(self, other: "TreeFunction") -> "TreeFunction":
        return self._combine(other, -1.0)

    def __mul__(self, c: complex) -> "TreeFunction":
        c = complex(c)
        return TreeFunction(self.tree, tuple(c * a for a in self.values), [(z, c * v) for z, v in self.tail])

    __rmul__ = __mul__

    def __neg__(self) -> "TreeFunction":
        return self * -1.0

    def to_dict(self) -> dict:
        edges = []
        for n, arr in enumerate(self.values):
            for k in range(arr.shape[0]):
                edges.append({"n": n, "k": k, "re": arr[k].real.tolist(), "im": arr[k].imag.tolist()})
        return {
            "tree": tree_to_dict(self.tree),
            "samples_per_edge": self.m,
            "edges": edges,
            "tail": [{"z": z.to_json(), "re": c.real, "im": c.imag} for z, c in self.tail],
        }


def sample_points(tree: TreeTopology, n: int, m: int) -> np.ndarray:
    """Arclength positions of the samples on generation ``n``, shape ``(p**n, m)``."""
    ends = tree.ends[n]
    starts = ends - tree.lengths[n]
    u = np.linspace(0.0, 1.0, m)
    return starts[:, None] + (ends - starts)[:, None] * u[None, :]


def from_callable(tree: TreeTopology, func: Callable, m: int) -> TreeFunction:
    """Sample ``func(t, n, k)`` where ``t`` is the array of arclengths on edge ``(n, k)``.

    ``k`` is passed as a column array so ``func`` may vectorise over edges.
    """
    vals = []
    for n in range(tree.depth + 1):
        t = sample_points(tree, n, m)
        k = np.arange(tree.p**n)[:, None]
        vals.append(np.broadcast_to(np.asarray(func(t, n, k), dtype=np.complex128), t.shape))
    return TreeFunction(tree, tuple(vals))


def from_radial(tree: TreeTopology, g: Callable, m: int) -> TreeFunction:
    """Radial function ``x -> g(|x|)``."""
    return from_callable(tree, lambda t, n, k: g(t), m)


def constant(tree: TreeTopology, c: complex, m: int = 2) -> TreeFunction:
    return from_callable(tree, lambda t, n, k: np.full(t.shape, c, dtype=np.complex128), m)


def random_tree_function(
    tree: TreeTopology,
    m: int,
    rng: np.random.Generator,
    *,
    root_value: complex | None = None,
    support_depth: int | None = None,
    decay: float = 1.0,
) -> TreeFunction:
    """Random continuous complex function.

    With ``support_depth = N`` every sample beyond generation ``N`` is zero and
    so are the generation-``N`` lower vertices, which makes the result
    compactly supported.  ``decay`` scales generation ``n`` by ``decay**n``.
    """
    p = tree.p
    vals = []
    for n in range(tree.depth + 1):
        shape = (p**n, m)
        a = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * decay**n
        if support_depth is not None and n > support_depth:
            a[:] = 0.0
        elif support_depth is not None and n == support_depth:
            a[:, -1] = 0.0
        if n == 0:
            if root_value is not None:
                a[0, 0] = root_value
        else:
            a[:, 0] = np.repeat(vals[-1][:, -1], p)
        vals.append(a)
    return TreeFunction(tree, tuple(vals))


def _gen_integrals(a: np.ndarray, h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-edge ``int |f|^2`` and ``int |f'|^2`` for sub-interval widths ``h``."""
    left, right = a[:, :-1], a[:, 1:]
    sq = (np.abs(left) ** 2 + (left * np.conj(right)).real + np.abs(right) ** 2).sum(axis=1)
    diff = (np.abs(right - left) ** 2).sum(axis=1)
    return h / 3.0 * sq, diff / h


def inner_l2(f: TreeFunction, g: TreeFunction) -> complex:
    """``<f, g> = sum_e w_e int f conj(g)`` of the interpolants (tails ignored)."""
    total = 0.0 + 0.0j
    for n in range(f.depth + 1):
        a, b = f.values[n], g.values[n]
        h = f.tree.lengths[n] / (f.m - 1)
        a0, a1, b0, b1 = a[:, :-1], a[:, 1:], b[:, :-1], b[:, 1:]
        s = (2 * a0 * np.conj(b0) + a0 * np.conj(b1) + a1 * np.conj(b0) + 2 * a1 * np.conj(b1)).sum(axis=1)
        total += np.sum(f.tree.weights[n] * h / 6.0 * s)
    return complex(total)


def norms(f: TreeFunction) -> NormReport:
    """Weighted L2 and H1 norms on the truncated tree."""
    l2sq = 0.0
    semisq = 0.0
    for n in range(f.depth + 1):
        h = f.tree.lengths[n] / (f.m - 1)
        sq, dsq = _gen_integrals(f.values[n], h)
        w = f.tree.weights[n]
        l2sq += float(np.sum(w * sq))
        semisq += float(np.sum(w * dsq))
    l2, semi = np.sqrt(l2sq), np.sqrt(semisq)
    ratio = float("nan")
    if abs(f.root_value) <= CONTINUITY_TOL and semi > 0:
        ratio = l2 / semi
    return NormReport(float(l2), float(semi), float(np.sqrt(l2sq + semisq)), float(ratio))


def vertex_values(f: TreeFunction, N: int) -> np.ndarray:
    """Values at the lower vertices ``X_{N,K}`` of generation ``N``, ``K`` ascending."""
    if not (0 <= N <= f.depth):
        raise DepthError(f"generation {N} outside 0..{f.depth}")
    return f.values[N][:, -1].copy()


def vertex_values_csv(f: TreeFunction, N: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "K", "re", "im"])
    for K, v in enumerate(vertex_values(f, N)):
        w.writerow([N, K, repr(float(v.real)), repr(float(v.imag))])
    return buf.getvalue()


def extend_by_constants(f: TreeFunction, N: int) -> TreeFunction:
    """``f`` on generations ``<= N``, frozen at the generation-``N`` vertex values below."""
    vv = vertex_values(f, N)
    p = f.tree.p
    vals = list(f.values[: N + 1])
    for n in range(N + 1, f.depth + 1):
        col = vv[np.arange(p**n) // p ** (n - N)]
        vals.append(np.repeat(col[:, None], f.m, axis=1))
    return TreeFunction(f.tree, tuple(vals), ())


def smoothstep_cutoff(t: np.ndarray) -> np.ndarray:
    u = np.clip((np.asarray(t, dtype=float) - CUTOFF_LO) / (CUTOFF_HI - CUTOFF_LO), 0.0, 1.0)
    return u * u * (3.0 - 2.0 * u)


CUTOFF_B = max(1.0, (1.5 / (CUTOFF_HI - CUTOFF_LO)) ** 2)
"""``max(||phi||_inf^2, ||phi'||_inf^2)`` for the smoothstep profile."""


def root_cutoff(f: TreeFunction) -> TreeFunction:
    """Multiply by ``phi(|x|)``, which is 0 below arclength 1/2 and 1 above 3/4."""
    vals = list(f.values)
    for n in range(f.depth + 1):
        starts = f.tree.ends[n] - f.tree.lengths[n]
        if np.all(starts >= CUTOFF_HI):
            break
        vals[n] = vals[n] * smoothstep_cutoff(sample_points(f.tree, n, f.m))
    return TreeFunction(f.tree, tuple(vals), f.tail)


def transport(f: TreeFunction, target: TreeTopology) -> TreeFunction:
    """Move ``f`` to ``target`` through the vertex-fixing, edgewise affine map.

    Samples sit on uniform per-edge grids, so the affine change of variable
    leaves the sample arrays unchanged; only the carrying tree differs.  Use
    a geometric ``target`` for the pullback and a perturbed one for the
    inverse.
    """
    src = f.tree
    if not src.same_shape(target) or src.params != target.params:
        raise ParameterError("transport needs trees with equal (p, ell, alpha, depth)")
    return TreeFunction(target, f.values, f.tail)


@dataclass(frozen=True)
class TransportReport:
    distortion: float
    l2_ratio: float
    h1_semi_ratio: float
    l2_bounds: tuple[float, float]
    h1_semi_bounds: tuple[float, float]

    @property
    def holds(self) -> bool:
        lo, hi = self.l2_bounds
        slo, shi = self.h1_semi_bounds
        eps = 1e-12
        return lo - eps <= self.l2_ratio <= hi + eps and slo - eps <= self.h1_semi_ratio <= shi + eps


def transport_report(f: TreeFunction, g: TreeFunction) -> TransportReport:
    """Squared-norm ratios ``||f||^2/||g||^2`` for ``f`` on a perturbed tree, ``g`` its pullback."""
    c = max(f.tree.distortion, g.tree.distortion)
    nf, ng = norms(f), norms(g)
    l2r = nf.l2**2 / ng.l2**2 if ng.l2 > 0 else float("nan")
    h1r = nf.h1_semi**2 / ng.h1_semi**2 if ng.h1_semi > 0 else float("nan")
    return TransportReport(c, l2r, h1r, (c**-2, c**2), (c**-4, c**4))


def is_compactly_supported(f: TreeFunction, tolerance: float = 0.0) -> int | None:
    """Smallest ``N`` such that ``f`` vanishes (within ``tolerance``) past generation ``N``.

    Returns ``None`` when the continuation beyond the truncation is not zero.
    """
    if f.tail:
        return None
    last = -1
    for n in range(f.depth, -1, -1):
        if np.max(np.abs(f.values[n])) > tolerance:
            last = n
            break
    if last == f.depth and np.max(np.abs(f.values[last][:, -1])) > tolerance:
        return None
    return max(last, 0)


def tree_function_from_dict(data: Mapping) -> TreeFunction:
    from .harmonic import SymmetryIndex

    tree = tree_from_dict(data["tree"])
    m = int(data["samples_per_edge"])
    vals = [np.zeros((tree.p**n, m), dtype=np.complex128) for n in range(tree.depth + 1)]
    for e in data["edges"]:
        vals[int(e["n"])][int(e["k"])] = np.asarray(e["re"]) + 1j * np.asarray(e["im"])
    tail = [(SymmetryIndex.from_json(r["z"]), complex(r["re"], r["im"])) for r in data.get("tail", [])]
    return TreeFunction(tree, tuple(vals), tail)


def gram_l2(functions) -> np.ndarray:
    """Matrix of ``<f_a, f_b>`` for functions sharing one tree (tails ignored)."""
    fs = list(functions)
    if not fs:
        return np.zeros((0, 0), dtype=np.complex128)
    tree, m = fs[0].tree, fs[0].m
    G = np.zeros((len(fs), len(fs)), dtype=np.complex128)
    for n in range(tree.depth + 1):
        X = np.stack([f.values[n] for f in fs])  # (F, E, m)
        scale = (tree.weights[n] * tree.lengths[n] / (m - 1) / 6.0)[None, :, None]
        X0, X1 = X[:, :, :-1], X[:, :, 1:]
        left0 = (X0 * scale).reshape(len(fs), -1)
        left1 = (X1 * scale).reshape(len(fs), -1)
        right0 = np.conj(2 * X0 + X1).reshape(len(fs), -1)
        right1 = np.conj(X0 + 2 * X1).reshape(len(fs), -1)
        G += left0 @ right0.T + left1 @ right1.T
    return G
