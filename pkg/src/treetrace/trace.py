"""Boundary trace of tree functions and its embedding into a multiscale domain.

``tau`` maps an H^1 function on the geometric tree to coefficients indexed
by :class:`~treetrace.harmonic.SymmetryIndex`.  The function is first cut off
near the root, then expanded in the orthonormal harmonic family ``phi_z``
(``a_z = <f', phi_z'>``), and each coefficient is scaled by the boundary
value of its profile.  ``identify`` turns such coefficients into a
piecewise-constant function on the domain; ``gamma`` composes the two and
compares with the vertex-value construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .approx import PiecewiseConstantFn
from .errors import DepthError, ParameterError
from .harmonic import (
    RAD,
    SymmetryIndex,
    F_infty,
    basis_function,
    energy_inner,
    norm_constant,
    require_gate,
    theta,
)
from .multiscale import Decomposition
from .tree import TreeParams, geometric_tree
from .treefunc import TreeFunction, extend_by_constants, root_cutoff, transport, vertex_values


def m_factor(params: TreeParams, z: SymmetryIndex) -> float:
    """Scale from ``a_z`` to the trace entry: ``F_inf`` for rad, ``p**(-n/2) F_inf_n`` otherwise."""
    if z.is_rad:
        return F_infty(params, z)
    return params.p ** (-z.nu / 2.0) * F_infty(params, z)


@dataclass(frozen=True, eq=False)
class TraceCoefficients:
    params: TreeParams
    entries: Mapping[SymmetryIndex, complex]

    def __post_init__(self) -> None:
        clean = {}
        for z, v in self.entries.items():
            z.validate(self.params.p)
            clean[z] = complex(v)
        object.__setattr__(self, "entries", dict(sorted(clean.items())))

    def __getitem__(self, z: SymmetryIndex) -> complex:
        return self.entries.get(z, 0.0 + 0.0j)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def max_nu(self) -> int:
        support = [z.nu for z, v in self.entries.items() if v != 0]
        return max(support, default=-1)

    def max_abs(self) -> float:
        return max((abs(v) for v in self.entries.values()), default=0.0)

    def norm_r(self, r: float) -> float:
        """``(sum_z p**(2 r nu(z)) |a_z|^2)**0.5`` with ``nu(rad) = -1``."""
        p = self.params.p
        return math.sqrt(sum(p ** (2 * r * z.nu) * abs(v) ** 2 for z, v in self.entries.items()))

    def _merge(self, other: "TraceCoefficients", sign: float) -> "TraceCoefficients":
        if other.params != self.params:
            raise ParameterError("coefficients belong to different parameters")
        out = dict(self.entries)
        for z, v in other.entries.items():
            out[z] = out.get(z, 0.0) + sign * v
        return TraceCoefficients(self.params, out)

    def __add__(self, other: "TraceCoefficients") -> "TraceCoefficients":
        return self._merge(other, 1.0)

    def __sub__(self, other: "TraceCoefficients") -> "TraceCoefficients":
        return self._merge(other, -1.0)

    def __mul__(self, c: complex) -> "TraceCoefficients":
        return TraceCoefficients(self.params, {z: complex(c) * v for z, v in self.entries.items()})

    __rmul__ = __mul__

    def to_json(self) -> str:
        rows = [{"z": z.to_json(), "re": v.real, "im": v.imag} for z, v in self.entries.items()]
        return json.dumps(rows)

    @classmethod
    def from_json(cls, params: TreeParams, text: str) -> "TraceCoefficients":
        rows = json.loads(text)
        return cls(params, {SymmetryIndex.from_json(r["z"]): complex(r["re"], r["im"]) for r in rows})


# ---------------------------------------------------------------- tau


def _character_sums(delta: np.ndarray, p: int, n: int, g: int) -> np.ndarray:
    """``sum_j theta_s**(-j) sum_{branch j} delta`` for every ``(k, s)``: shape ``(p**n, p-1)``."""
    block = delta.reshape(p**n, p, p ** (g - n - 1)).sum(axis=2)
    phases = np.conj(theta(p, np.arange(1, p)[None, :], np.arange(p)[:, None]))  # (j, s)
    return block @ phases


def harmonic_coefficients(f: TreeFunction) -> dict[SymmetryIndex, complex]:
    """``a_z = <f', phi_z'>`` for every ``z`` with ``nu(z) < depth``, tail included.

    On an edge of generation ``g`` the derivative of ``phi_z`` is constant,
    so each edge contributes its weight times that constant times the
    difference of the endpoint values of ``f``.
    """
    tree = f.tree
    params, p, D = tree.params, tree.p, tree.depth
    delta = [f.values[g][:, -1] - f.values[g][:, 0] for g in range(D + 1)]
    out: dict[SymmetryIndex, complex] = {}
    acc = sum(np.sum(delta[g]) * float(p) ** (-g) for g in range(D + 1))
    out[RAD] = norm_constant(params, -1) * complex(acc)
    for n in range(D):
        total = np.zeros((p**n, p - 1), dtype=np.complex128)
        for g in range(n + 1, D + 1):
            total += _character_sums(delta[g], p, n, g) * float(p) ** (-g)
        total *= norm_constant(params, n)
        for k in range(p**n):
            for s in range(1, p):
                out[SymmetryIndex(n, k, s)] = complex(total[k, s - 1])
    for z, c in f.tail:
        if z.nu < D:
            out[z] = out.get(z, 0.0) + c * energy_inner(params, z, z, from_generation=D + 1)
    return out


def tau(f: TreeFunction) -> TraceCoefficients:
    """Trace coefficients of ``f`` on the geometric tree.

    Past the truncation the function continues by constants plus its
    harmonic tail, so the entries with ``nu(z) >= depth`` vanish and the
    returned set is complete for that continuation.
    """
    tree = f.tree
    if not tree.is_geometric:
        raise ParameterError("tau acts on the geometric tree; use tau_perturbed")
    require_gate(tree.params)
    a = harmonic_coefficients(root_cutoff(f))
    return TraceCoefficients(tree.params, {z: m_factor(tree.params, z) * v for z, v in a.items()})


def tau_vertex(f: TreeFunction, N: int) -> TraceCoefficients:
    """``tau`` of the function frozen at its generation-``N`` vertex values."""
    return tau(extend_by_constants(f, N))


def tau_perturbed(f: TreeFunction) -> TraceCoefficients:
    """Trace on a perturbed tree, defined through the pullback to the geometric tree."""
    g = transport(f, geometric_tree(f.tree.params, f.tree.depth))
    return tau(g)


# ---------------------------------------------------------------- identification


def _check_dec(dec: Decomposition, params: TreeParams) -> None:
    if dec.p != params.p:
        raise ParameterError(f"decomposition has p={dec.p}, tree has p={params.p}")


def identify(coeffs: TraceCoefficients, dec: Decomposition, level: int | None = None) -> PiecewiseConstantFn:
    """``sum_z a_z I e_z`` with ``I e_rad = 1`` and ``I e_(n,k,s) = p**(n/2) sum_j theta_s**j 1_(n+1, pk+j)``."""
    params = coeffs.params
    _check_dec(dec, params)
    p = params.p
    need = coeffs.max_nu + 1
    L = need if level is None else level
    if L < need:
        raise DepthError(f"level {L} cannot hold entries with nu up to {need - 1}")
    if L > dec.depth:
        raise DepthError(f"decomposition depth {dec.depth} is below the required level {L}")
    out = np.full(p**L, coeffs[RAD], dtype=np.complex128)
    phases = theta(p, np.arange(1, p)[:, None], np.arange(p)[None, :])  # (s, j)
    by_level: dict[int, np.ndarray] = {}
    for z, v in coeffs.entries.items():
        if z.is_rad or v == 0:
            continue
        arr = by_level.setdefault(z.nu, np.zeros((p**z.nu, p - 1), dtype=np.complex128))
        arr[z.k, z.s - 1] = v
    for n, C in by_level.items():
        child = (C @ phases).reshape(-1) * p ** (n / 2.0)
        out += np.repeat(child, p ** (L - n - 1))
    return PiecewiseConstantFn(dec, L, out)


def coefficients_from_cells(values: np.ndarray, params: TreeParams) -> TraceCoefficients:
    """Inverse of :func:`identify` for a level-``N`` cell vector (``N = log_p len``).

    ``a_rad`` is the mean and ``a_(n,k,s) = p**(-n/2 - 1) sum_j theta_s**(-j) m_(n+1, pk+j)``
    with ``m`` the cell means one level below ``n``.
    """
    p = params.p
    v = np.asarray(values, dtype=np.complex128)
    N = round(math.log(v.shape[0], p))
    if p**N != v.shape[0]:
        raise ParameterError("cell vector length must be a power of p")
    out = {RAD: complex(v.mean())}
    phases = np.conj(theta(p, np.arange(1, p)[None, :], np.arange(p)[:, None]))  # (j, s)
    for n in range(N):
        means = v.reshape(p ** (n + 1), -1).mean(axis=1).reshape(p**n, p)
        C = (means @ phases) * p ** (-n / 2.0 - 1.0)
        for k in range(p**n):
            for s in range(1, p):
                out[SymmetryIndex(n, k, s)] = complex(C[k, s - 1])
    return TraceCoefficients(params, out)


def identify_inverse(g: PiecewiseConstantFn, params: TreeParams) -> TraceCoefficients:
    _check_dec(g.dec, params)
    return coefficients_from_cells(g.values, params)


# ---------------------------------------------------------------- gamma and lift


@dataclass(frozen=True)
class GammaResult:
    method_a: PiecewiseConstantFn
    method_b: PiecewiseConstantFn
    discrepancy: float


def gamma(f: TreeFunction, dec: Decomposition, N: int) -> GammaResult:
    """Embedded trace two ways: ``identify(tau(f))`` and the level-``N`` vertex values."""
    _check_dec(dec, f.tree.params)
    if N > f.depth or N > dec.depth:
        raise DepthError(f"N={N} exceeds tree depth {f.depth} or decomposition depth {dec.depth}")
    coeffs = tau(f)
    A = identify(coeffs, dec, level=max(coeffs.max_nu + 1, N))
    B = PiecewiseConstantFn(dec, N, vertex_values(f, N))
    return GammaResult(A, B, (A - B).l2())


def gamma_vertex(f: TreeFunction, dec: Decomposition, N: int) -> PiecewiseConstantFn:
    """Level-``N`` vertex-value function; valid on perturbed trees as well."""
    _check_dec(dec, f.tree.params)
    return PiecewiseConstantFn(dec, N, vertex_values(f, N))


def lift(g: PiecewiseConstantFn, params: TreeParams, depth: int | None = None, m: int = 2) -> TreeFunction:
    """A tree function whose embedded trace is ``g``.

    ``g`` is expanded in the images ``I e_z`` (``nu(z) < N``) and each term is
    replaced by ``phi_z`` divided by its trace factor.
    """
    require_gate(params)
    _check_dec(g.dec, params)
    depth = max(g.level, 0) if depth is None else depth
    if depth < g.level:
        raise DepthError("tree depth must be at least the level of g")
    tree = geometric_tree(params, depth)
    coeffs = identify_inverse(g, params)
    f = None
    for z, c in coeffs.entries.items():
        if c == 0:
            continue
        term = basis_function(z, tree, m) * (c / m_factor(params, z))
        f = term if f is None else f + term
    if f is None:
        f = basis_function(RAD, tree, m) * 0.0
    return f


def iter_entries(coeffs: TraceCoefficients) -> Iterable[tuple[SymmetryIndex, complex]]:
    return coeffs.entries.items()
