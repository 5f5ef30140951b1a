"""Radial and character decomposition on the geometric tree.

The Hilbert space splits into a radial part and, for every edge ``(n, k)``
and character ``1 <= s <= p-1``, a part supported below that edge in which
branch ``j`` carries the phase ``theta_s**j``.  Each part is unitarily
equivalent to a one-dimensional space with weight ``q(t) = (alpha*p)**n`` on
``(t_{n-1}, t_n)``.  The unit-energy harmonic profiles in those spaces lift
to the orthonormal family ``phi_z`` that spans the harmonic part of H^1.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ParameterError, RegimeError, SupportError
from .tree import TreeParams, TreeTopology
from .treefunc import TreeFunction


@dataclass(frozen=True, order=True)
class SymmetryIndex:
    """``rad`` (stored as ``n = -1``) or a triple ``(n, k, s)``."""

    n: int
    k: int = 0
    s: int = 0

    @property
    def is_rad(self) -> bool:
        return self.n == -1

    @property
    def nu(self) -> int:
        return self.n

    def validate(self, p: int) -> "SymmetryIndex":
        if self.is_rad:
            if self.k != 0 or self.s != 0:
                raise ParameterError("rad carries no (k, s)")
            return self
        if self.n < 0 or not (0 <= self.k < p**self.n) or not (1 <= self.s <= p - 1):
            raise ParameterError(f"invalid index ({self.n}, {self.k}, {self.s}) for p={p}")
        return self

    def to_json(self):
        return "rad" if self.is_rad else [self.n, self.k, self.s]

    @classmethod
    def from_json(cls, obj) -> "SymmetryIndex":
        if obj == "rad":
            return RAD
        n, k, s = (int(v) for v in obj)
        return cls(n, k, s)

    def __str__(self) -> str:
        return "rad" if self.is_rad else f"({self.n},{self.k},{self.s})"


RAD = SymmetryIndex(-1, 0, 0)


def triple(n: int, k: int, s: int) -> SymmetryIndex:
    if n < 0:
        raise ParameterError("triples need n >= 0")
    return SymmetryIndex(n, k, s)


def enumerate_indices(p: int, max_nu: int) -> list[SymmetryIndex]:
    """``rad`` followed by every triple with ``n <= max_nu`` in lexicographic order."""
    out = [RAD]
    for n in range(max_nu + 1):
        for k in range(p**n):
            for s in range(1, p):
                out.append(SymmetryIndex(n, k, s))
    return out


def theta(p: int, s: int, j) -> np.ndarray:
    """``exp(2 pi i s j / p)``."""
    return np.exp(2j * np.pi * s * np.asarray(j) / p)


# ---------------------------------------------------------------- gate, q


def gate(params: TreeParams) -> bool:
    ap = params.alpha * params.p
    return params.ell < ap < 1.0 / params.ell


def sigma(params: TreeParams) -> float:
    return math.log(params.alpha * params.p / params.ell) / (2.0 * math.log(params.p))


def require_gate(params: TreeParams) -> None:
    if not gate(params):
        raise RegimeError(
            f"gate ell < alpha*p < 1/ell fails: ell={params.ell}, alpha*p={params.alpha * params.p}"
        )


def _params(obj) -> TreeParams:
    return obj.params if isinstance(obj, TreeTopology) else obj


def generation_of(params: TreeParams, t) -> np.ndarray:
    """Generation ``n`` with ``t in (t_{n-1}, t_n]``."""
    t = np.asarray(t, dtype=float)
    ell = params.ell
    arg = np.clip(1.0 - t * (1.0 - ell), 1e-300, None)
    n = np.maximum(np.ceil(np.log(arg) / np.log(ell) - 1.0 - 1e-12), 0).astype(int)
    # Guard against rounding right at a vertex.
    tn = (1.0 - ell ** (n + 1)) / (1.0 - ell)
    n = np.where(t > tn, n + 1, n)
    tprev = (1.0 - ell**n) / (1.0 - ell)
    n = np.where((t <= tprev) & (n > 0), n - 1, n)
    return n


def weight_q(tree_or_params, t):
    """``q(t) = (alpha p)**n`` on ``(t_{n-1}, t_n)``."""
    params = _params(tree_or_params)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0) or np.any(t_arr >= params.height):
        raise ParameterError(f"t must lie in (0, L={params.height})")
    q = (params.alpha * params.p) ** generation_of(params, t_arr)
    return float(q) if np.ndim(t) == 0 else q


# ---------------------------------------------------------------- profiles


def decay_ratio(params: TreeParams) -> float:
    """``r = ell / (alpha p)``: per-generation energy ratio of the harmonic profiles."""
    return params.ell / (params.alpha * params.p)


def norm_constant(params: TreeParams, nu: int) -> float:
    """Normalisation ``c`` of the profile with start generation ``nu`` (``-1`` for rad)."""
    require_gate(params)
    p, ell, alpha = params.p, params.ell, params.alpha
    if nu == -1:
        return math.sqrt(1.0 - decay_ratio(params))
    return p**nu * (alpha / ell) ** (nu / 2.0) * math.sqrt((alpha * p - ell) / ell)


def profile_F_rad(params: TreeParams, t):
    require_gate(params)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(t_arr >= params.height):
        raise ParameterError("F_rad is defined on [0, L)")
    r = decay_ratio(params)
    ap = params.alpha * params.p
    n = generation_of(params, t_arr)
    start = (1.0 - params.ell**n) / (1.0 - params.ell)
    val = norm_constant(params, -1) * ((t_arr - start) / ap**n + (1.0 - r**n) / (1.0 - r))
    return float(val) if np.ndim(t) == 0 else val


def profile_F_n(params: TreeParams, n: int, t):
    require_gate(params)
    t_arr = np.asarray(t, dtype=float)
    tn = params.t(n)
    if np.any(t_arr < tn * (1 - 1e-15)) or np.any(t_arr >= params.height):
        raise ParameterError(f"F_{n} is defined on [t_n, L)")
    r = decay_ratio(params)
    ap = params.alpha * params.p
    g = np.maximum(generation_of(params, t_arr), n + 1)
    start = (1.0 - params.ell**g) / (1.0 - params.ell)
    # sum_{k=1}^{m-1} r^{n+k} with m = g - n
    partial = (r ** (n + 1) - r**g) / (1.0 - r)
    val = norm_constant(params, n) * ((t_arr - start) / ap**g + partial)
    val = np.where(t_arr <= tn, 0.0, val)
    return float(val) if np.ndim(t) == 0 else val


def F_infty(params: TreeParams, z) -> float:
    """Limit of the harmonic profile at the tree boundary."""
    require_gate(params)
    ap = params.alpha * params.p
    nu = z.nu if isinstance(z, SymmetryIndex) else int(z)
    if nu == -1:
        return math.sqrt(ap / (ap - params.ell))
    return math.sqrt(params.ell / (ap - params.ell) * (params.ell / params.alpha) ** nu)


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """One-dimensional profile on ``(t_start, L)``.

    ``values[i]`` holds ``m`` samples on ``[t_{g-1}, t_g]`` for generation
    ``g = start + 1 + i``.  Past the last sampled generation the profile
    continues with derivative ``tail_slope / q``.
    """

    params: TreeParams
    start: int
    values: tuple[np.ndarray, ...] = field(repr=False)
    tail_slope: complex = 0.0

    def __post_init__(self) -> None:
        if self.start < -1:
            raise ParameterError("start generation must be >= -1")
        vals = tuple(np.asarray(v, dtype=np.complex128) for v in self.values)
        if not vals:
            raise ParameterError("profile needs at least one generation of samples")
        m = vals[0].shape[0]
        if m < 2 or any(v.shape != (m,) for v in vals):
            raise ParameterError("profile samples must be 1-D arrays of equal length m >= 2")
        for a, b in zip(vals[:-1], vals[1:]):
            if abs(a[-1] - b[0]) > 1e-12 * max(1.0, abs(a[-1])):
                raise ParameterError("profile samples are discontinuous at a vertex")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "tail_slope", complex(self.tail_slope))

    @property
    def m(self) -> int:
        return self.values[0].shape[0]

    @property
    def depth(self) -> int:
        return self.start + len(self.values)

    def generations(self) -> range:
        return range(self.start + 1, self.depth + 1)

    def __add__(self, other: "RadialProfile") -> "RadialProfile":
        if other.start != self.start or other.depth != self.depth:
            raise SupportError("profiles have different supports")
        return RadialProfile(
            self.params,
            self.start,
            tuple(a + b for a, b in zip(self.values, other.values)),
            self.tail_slope + other.tail_slope,
        )

    def __mul__(self, c: complex) -> "RadialProfile":
        c = complex(c)
        return RadialProfile(self.params, self.start, tuple(c * a for a in self.values), c * self.tail_slope)

    __rmul__ = __mul__


def profile_from_callable(params: TreeParams, start: int, depth: int, func, m: int, tail_slope=0.0):
    vals = []
    for g in range(start + 1, depth + 1):
        t = np.linspace(params.t(g - 1), params.t(g), m)
        vals.append(np.asarray(func(t), dtype=np.complex128) * np.ones(m))
    return RadialProfile(params, start, tuple(vals), tail_slope)


def harmonic_profile(params: TreeParams, nu: int, depth: int, m: int = 2) -> RadialProfile:
    """Sampled ``F_rad`` (``nu = -1``) or ``F_nu``, with its exact harmonic continuation."""
    c = norm_constant(params, nu)
    if nu == -1:
        func = lambda t: profile_F_rad(params, t)
    else:
        func = lambda t: profile_F_n(params, nu, t)
    return profile_from_callable(params, nu, depth, func, m, tail_slope=c)


def profile_inner(F: RadialProfile, G: RadialProfile) -> complex:
    """``int F conj(G) w dt`` with ``w = q`` (rad) or ``p**-n q`` (start ``n``)."""
    if F.start != G.start or F.depth != G.depth or F.m != G.m:
        raise SupportError("profiles have different supports or grids")
    prm = F.params
    ap = prm.alpha * prm.p
    total = 0.0 + 0.0j
    for a, b, g in zip(F.values, G.values, F.generations()):
        h = prm.ell**g / (F.m - 1)
        a0, a1, b0, b1 = a[:-1], a[1:], b[:-1], b[1:]
        s = np.sum(2 * a0 * np.conj(b0) + a0 * np.conj(b1) + a1 * np.conj(b0) + 2 * a1 * np.conj(b1))
        total += ap**g * h / 6.0 * s
    if F.start >= 0:
        total *= float(prm.p) ** (-F.start)
    return complex(total)


def profile_energy(F: RadialProfile, include_tail: bool = True) -> float:
    """``int |F'|^2 w dt`` including the closed-form harmonic continuation."""
    prm = F.params
    ap = prm.alpha * prm.p
    total = 0.0
    for a, g in zip(F.values, F.generations()):
        h = prm.ell**g / (F.m - 1)
        total += ap**g * float(np.sum(np.abs(np.diff(a)) ** 2)) / h
    if include_tail and F.tail_slope != 0:
        r = decay_ratio(prm)
        # sum_{g > depth} (alpha p)^g ell^g |c|^2 / (alpha p)^{2g} = |c|^2 r^{depth+1}/(1-r)
        total += abs(F.tail_slope) ** 2 * r ** (F.depth + 1) / (1.0 - r)
    if F.start >= 0:
        total *= float(prm.p) ** (-F.start)
    return total


# ---------------------------------------------------------------- synth / analyze


def _subtree_block(z: SymmetryIndex, p: int, g: int) -> tuple[int, int]:
    m = g - z.n
    return z.k * p**m, (z.k + 1) * p**m


def _branch_phases(z: SymmetryIndex, p: int, g: int) -> np.ndarray:
    """Phase ``theta_s**j`` of each edge of the subtree block at generation ``g``."""
    m = g - z.n
    j = np.repeat(np.arange(p), p ** (m - 1))
    return theta(p, z.s, j)


def synth(z: SymmetryIndex, F: RadialProfile, tree: TreeTopology) -> TreeFunction:
    """Lift a profile to the tree: ``F(|x|)`` (rad) or ``theta_s**j F(|x|)`` on branch ``j``."""
    if not tree.is_geometric:
        raise ParameterError("synth acts on the geometric tree")
    p = tree.p
    z.validate(p)
    if F.start != z.nu:
        raise SupportError(f"profile starts at generation {F.start}, index {z} needs {z.nu}")
    if F.depth != tree.depth:
        raise SupportError(f"profile depth {F.depth} differs from tree depth {tree.depth}")
    if not z.is_rad and abs(F.values[0][0]) > 1e-12:
        raise SupportError(f"profile for {z} must vanish at t_{z.n}")
    if F.params != tree.params:
        raise ParameterError("profile and tree use different parameters")
    m = F.m
    vals = []
    for g in range(tree.depth + 1):
        a = np.zeros((p**g, m), dtype=np.complex128)
        if z.is_rad:
            a[:] = F.values[g][None, :]
        elif g > z.n:
            lo, hi = _subtree_block(z, p, g)
            a[lo:hi] = _branch_phases(z, p, g)[:, None] * F.values[g - z.n - 1][None, :]
        vals.append(a)
    tail = ()
    if F.tail_slope != 0:
        tail = ((z, F.tail_slope / norm_constant(tree.params, z.nu)),)
    return TreeFunction(tree, tuple(vals), tail)


def analyze(f: TreeFunction, z: SymmetryIndex) -> RadialProfile:
    """Profile of the orthogonal projection of ``f`` onto the ``z`` component."""
    tree = f.tree
    if not tree.is_geometric:
        raise ParameterError("analyze acts on the geometric tree")
    p = tree.p
    z.validate(p)
    if z.nu >= tree.depth:
        raise SupportError(f"index {z} has no support above depth {tree.depth}")
    vals = []
    for g in range(z.nu + 1, tree.depth + 1):
        if z.is_rad:
            vals.append(f.values[g].mean(axis=0))
        else:
            lo, hi = _subtree_block(z, p, g)
            block = f.values[g][lo:hi]
            phases = np.conj(_branch_phases(z, p, g))
            vals.append((phases[:, None] * block).sum(axis=0) / p ** (g - z.n))
    slope = 0.0
    coeff = f.tail_map.get(z, 0.0)
    if coeff != 0:
        slope = coeff * norm_constant(tree.params, z.nu)
    return RadialProfile(tree.params, z.nu, tuple(vals), slope)


def basis_function(z: SymmetryIndex, tree: TreeTopology, m: int = 2) -> TreeFunction:
    """``phi_z``: the lifted unit harmonic profile, exact continuation included."""
    return synth(z, harmonic_profile(tree.params, z.nu, tree.depth, m), tree)


# ---------------------------------------------------------------- Gram


def _characters(z: SymmetryIndex, p: int, g: int) -> np.ndarray:
    chi = np.zeros(p**g, dtype=np.complex128)
    if z.is_rad:
        chi[:] = 1.0
    elif g > z.n:
        lo, hi = _subtree_block(z, p, g)
        chi[lo:hi] = _branch_phases(z, p, g)
    return chi


def energy_inner(params: TreeParams, z: SymmetryIndex, w: SymmetryIndex, from_generation: int = 0) -> complex:
    """``<phi_z', phi_w'>`` restricted to generations ``>= from_generation``.

    On generation ``g`` the derivative of ``phi_z`` is ``c_z chi_z / (alpha p)**g``
    where ``chi_z`` is the branch character.  The character overlap at
    generation ``g`` is ``p**(g-g0)`` times its value at ``g0``, so the sum
    over ``g`` is a geometric series.
    """
    p = params.p
    g0 = max(z.nu, w.nu) + 1
    gs = max(g0, from_generation)
    overlap = np.vdot(_characters(w, p, g0), _characters(z, p, g0))
    if overlap == 0:
        return 0.0 + 0.0j
    r = decay_ratio(params)
    cz, cw = norm_constant(params, z.nu), norm_constant(params, w.nu)
    return complex(cz * cw * overlap * float(p) ** (-g0) * r**gs / (1.0 - r))


def basis_gram(params: TreeParams, zs: Sequence[SymmetryIndex], depth: int) -> np.ndarray:
    """Gram matrix ``G[a, b] = <phi_{z_a}', phi_{z_b}'>`` in closed form."""
    require_gate(params)
    for z in zs:
        z.validate(params.p)
        if z.nu >= depth:
            raise SupportError(f"index {z} needs nu < depth={depth}")
    n = len(zs)
    G = np.zeros((n, n), dtype=np.complex128)
    for a in range(n):
        for b in range(a, n):
            G[a, b] = energy_inner(params, zs[a], zs[b])
            G[b, a] = np.conj(G[a, b])
    return G


def gram_csv(zs: Iterable[SymmetryIndex], G: np.ndarray) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["row", "col", "re", "im"])
    zs = list(zs)
    for a, za in enumerate(zs):
        for b, zb in enumerate(zs):
            writer.writerow([str(za), str(zb), repr(float(G[a, b].real)), repr(float(G[a, b].imag))])
    return buf.getvalue()
