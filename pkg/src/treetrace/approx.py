"""Projections, approximation norms, Besov and Gagliardo norms on the unit box.

Functions are handled in two forms.  :class:`PiecewiseConstantFn` holds one
value per cell of a decomposition level.  :class:`SampledFn` holds values on
a uniform grid with ``p**K`` cells per axis and stands for the function that
is constant on each grid cell.  Every computation below is exact for that
piecewise-constant function, except the Monte Carlo Gagliardo path in
``d >= 2``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import kernels
from .errors import DepthError, ParameterError
from .multiscale import Decomposition, DiagnosticsReport, axis_levels, diagnostics


# ---------------------------------------------------------------- carriers


@dataclass(frozen=True, eq=False)
class PiecewiseConstantFn:
    dec: Decomposition
    level: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if not (0 <= self.level <= self.dec.depth):
            raise DepthError(f"level {self.level} outside 0..{self.dec.depth}")
        v = np.array(self.values, dtype=np.complex128).reshape(-1)
        if v.shape[0] != self.dec.p**self.level:
            raise ParameterError(f"expected {self.dec.p**self.level} values, got {v.shape[0]}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def l2(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.dec.volume(self.level)))

    def refine(self, level: int) -> "PiecewiseConstantFn":
        if level < self.level:
            raise ParameterError("refine cannot coarsen; use project_Pn")
        idx = np.arange(self.dec.p**level) // self.dec.p ** (level - self.level)
        return PiecewiseConstantFn(self.dec, level, self.values[idx])

    def _aligned(self, other: "PiecewiseConstantFn"):
        if other.dec.d != self.dec.d or other.dec.p != self.dec.p:
            raise ParameterError("functions live on different decompositions")
        lev = max(self.level, other.level)
        return self.refine(lev), other.refine(lev), lev

    def __add__(self, other: "PiecewiseConstantFn") -> "PiecewiseConstantFn":
        a, b, lev = self._aligned(other)
        return PiecewiseConstantFn(self.dec, lev, a.values + b.values)

    def __sub__(self, other: "PiecewiseConstantFn") -> "PiecewiseConstantFn":
        a, b, lev = self._aligned(other)
        return PiecewiseConstantFn(self.dec, lev, a.values - b.values)

    def __mul__(self, c: complex) -> "PiecewiseConstantFn":
        return PiecewiseConstantFn(self.dec, self.level, complex(c) * self.values)

    __rmul__ = __mul__

    def to_sampled(self) -> "SampledFn":
        d, p = self.dec.d, self.dec.p
        K = axis_levels(self.level, d)[0]
        levels = axis_levels(self.level, d)
        bm = self.dec.block_map(self.level)
        grid = self.values[bm]
        for a, na in enumerate(levels):
            if na < K:
                grid = np.repeat(grid, p ** (K - na), axis=a)
        return SampledFn(self.dec, grid)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["level", "k", "re", "im"])
        for k, v in enumerate(self.values):
            w.writerow([self.level, k, repr(float(v.real)), repr(float(v.imag))])
        return buf.getvalue()


@dataclass(frozen=True, eq=False)
class SampledFn:
    """Values on the uniform grid with ``p**K`` cells per axis (cell centres)."""

    dec: Decomposition
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=np.complex128)
        d, p = self.dec.d, self.dec.p
        if v.ndim != d or len(set(v.shape)) != 1:
            raise ParameterError(f"grid must be a {d}-dimensional cube of values")
        M = v.shape[0]
        K = round(math.log(M, p))
        if p**K != M:
            raise ParameterError(f"grid size {M} is not a power of p={p}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def K(self) -> int:
        return round(math.log(self.values.shape[0], self.dec.p))

    @property
    def resolved_level(self) -> int:
        """Finest decomposition level whose cells are unions of grid cells."""
        return self.dec.d * self.K

    def l2(self) -> float:
        return float(np.sqrt(np.mean(np.abs(self.values) ** 2)))

    def __add__(self, other: "SampledFn") -> "SampledFn":
        return SampledFn(self.dec, self.values + _as_sampled(other).values)

    def __sub__(self, other: "SampledFn") -> "SampledFn":
        return SampledFn(self.dec, self.values - _as_sampled(other).values)

    def __mul__(self, c: complex) -> "SampledFn":
        return SampledFn(self.dec, complex(c) * self.values)

    __rmul__ = __mul__


def sampled_from_callable(dec: Decomposition, func: Callable, K: int) -> SampledFn:
    """Sample ``func(x)`` at the centres of the ``p**K``-per-axis grid.

    ``func`` receives ``d`` coordinate arrays.
    """
    M = dec.p**K
    c = (np.arange(M) + 0.5) / M
    mesh = np.meshgrid(*([c] * dec.d), indexing="ij")
    return SampledFn(dec, np.asarray(func(*mesh), dtype=np.complex128) * np.ones(mesh[0].shape))


def indicator(dec: Decomposition, lo: Sequence[float], hi: Sequence[float], K: int) -> SampledFn:
    """Indicator of the box ``(lo, hi)``; exact when the box edges are grid lines."""
    return sampled_from_callable(
        dec,
        lambda *x: np.prod([(xa > l) & (xa < h) for xa, l, h in zip(x, lo, hi)], axis=0).astype(float),
        K,
    )


def _as_sampled(f) -> SampledFn:
    if isinstance(f, SampledFn):
        return f
    if isinstance(f, PiecewiseConstantFn):
        return f.to_sampled()
    raise ParameterError(f"unsupported function type {type(f).__name__}")


# ---------------------------------------------------------------- projections


def _level_means(g: SampledFn, n: int) -> np.ndarray:
    """Cell averages at level ``n`` in block layout ``(p**n_0, ..., p**n_{d-1})``."""
    p, d, K = g.dec.p, g.dec.d, g.K
    levels = axis_levels(n, d)
    arr = g.values
    # Refine axes where the level is finer than the grid.
    for a, na in enumerate(levels):
        if na > K:
            arr = np.repeat(arr, p ** (na - K), axis=a)
    shape = []
    for a, na in enumerate(levels):
        size = arr.shape[a]
        shape += [p**na, size // p**na]
    arr = arr.reshape(shape)
    return arr.mean(axis=tuple(range(1, 2 * d, 2)))


def _residual_sq(g: SampledFn, means: np.ndarray, n: int) -> float:
    """``||g - P_n g||^2`` computed directly (no Pythagorean cancellation)."""
    p, d, K = g.dec.p, g.dec.d, g.K
    levels = axis_levels(n, d)
    if any(na > K for na in levels):
        return 0.0
    shape = []
    bshape = []
    for a, na in enumerate(levels):
        shape += [p**na, g.values.shape[a] // p**na]
        bshape += [p**na, 1]
    diff = g.values.reshape(shape) - means.reshape(bshape)
    return float(np.mean(np.abs(diff) ** 2))


def _blocks_to_pcf(dec: Decomposition, n: int, means: np.ndarray) -> PiecewiseConstantFn:
    idx = dec.index[n]
    return PiecewiseConstantFn(dec, n, means[tuple(idx.T)])


def project_Pn(f, n: int) -> PiecewiseConstantFn:
    g = _as_sampled(f)
    if not (0 <= n <= g.dec.depth):
        raise DepthError(f"level {n} outside 0..{g.dec.depth}")
    return _blocks_to_pcf(g.dec, n, _level_means(g, n))


def detail_Qn(f, n: int) -> PiecewiseConstantFn:
    Pn = project_Pn(f, n)
    if n == 0:
        return Pn
    return Pn - project_Pn(f, n - 1)


@dataclass(frozen=True)
class ApproxNorm:
    a_r: float
    a_r_viaQ: float
    xi: np.ndarray
    zeta: np.ndarray
    p0: float

    @property
    def tail_xi(self) -> float:
        return float(self.xi[-1]) if self.xi.size else 0.0

    @property
    def tail_zeta(self) -> float:
        return float(self.zeta[-1]) if self.zeta.size else 0.0


def approx_norm(f, r: float, levels: int | None = None) -> ApproxNorm:
    """``A^r`` norm in the distance form and in the detail form.

    ``xi_n = p**(n r/d) ||f - P_n f||`` and ``zeta_n = p**(n r/d) ||Q_n f||``
    for ``n = 0 .. levels``.  By default ``levels`` is the grid's resolved
    level, past which both sequences vanish, so the sums are exact.
    """
    if r < 0:
        raise ParameterError("r must be >= 0")
    g = _as_sampled(f)
    p, d = g.dec.p, g.dec.d
    top = g.resolved_level if levels is None else levels
    xi, zeta = [], []
    prev = None
    p0 = 0.0
    for n in range(top + 1):
        means = _level_means(g, n)
        w = p ** (n * r / d)
        xi.append(w * math.sqrt(_residual_sq(g, means, n)))
        vol = g.dec.domain_volume / p**n
        if n == 0:
            p0 = float(np.sqrt(np.sum(np.abs(means) ** 2) * vol))
            q = p0
        else:
            up = np.repeat(prev, p, axis=(n - 1) % d)
            q = float(np.sqrt(np.sum(np.abs(means - up) ** 2) * vol))
        zeta.append(w * q)
        prev = means
    xi_a, zeta_a = np.array(xi), np.array(zeta)
    return ApproxNorm(
        float(np.sqrt(p0**2 + np.sum(xi_a**2))),
        float(np.sqrt(np.sum(zeta_a**2))),
        xi_a,
        zeta_a,
        p0,
    )


def approx_equivalence_constants(p: int, r: float, d: int) -> tuple[float, float]:
    """``(C1, C2)`` with ``a_viaQ <= C1 a_r`` and ``a_r <= C2 a_viaQ``."""
    c1 = p ** (r / d)
    c2 = max(1.0, (p ** (2 * r / d) - 1.0) ** -0.5) if r > 0 else math.inf
    return c1, c2


# ---------------------------------------------------------------- smoothness


def direction_set(d: int) -> np.ndarray:
    dirs = []
    for a in range(d):
        for sgn in (1.0, -1.0):
            e = np.zeros(d)
            e[a] = sgn
            dirs.append(e)
    if d > 1:
        for signs in np.ndindex(*(2,) * d):
            dirs.append(np.where(np.array(signs) == 0, 1.0, -1.0) / math.sqrt(d))
    return np.array(dirs)


RADII = (1.0, 0.5, 0.25)


def modulus_of_smoothness(f, t: float, radii: Sequence[float] = RADII, *, threads: int = 1) -> float:
    """``sup ||f(. + h) - f||`` over the overlap, with ``h`` from a fixed finite set."""
    if t <= 0:
        raise ParameterError("t must be positive")
    g = _as_sampled(f)
    dirs = direction_set(g.dec.d)
    shifts = np.concatenate([rad * t * dirs for rad in radii])
    psi = kernels.shift_energy(g.values, shifts, threads=threads)
    return float(np.sqrt(max(0.0, psi.max())))


@dataclass(frozen=True)
class NormResult:
    value: float
    tail: float = 0.0
    stderr: float = 0.0
    resolved: bool = True
    divergent: bool = False
    terms: np.ndarray | None = field(default=None, repr=False)


def besov_norm(f, s: float, J: int | None = None, *, threads: int = 1) -> NormResult:
    """``||f|| + ||(W_j)_{j<=J}||`` with ``W_j = p**(s j/d) w(f, p**(-j/d))``.

    ``J`` defaults to the decomposition depth.  The modulus values are made
    monotone in ``t`` by a running maximum from small to large ``t``, which
    is valid because the supremum over a larger ball dominates.  The last
    term is reported as the tail proxy.
    """
    if not (0 < s < 1):
        raise ParameterError("s must lie in (0, 1)")
    g = _as_sampled(f)
    p, d = g.dec.p, g.dec.d
    J = g.dec.depth if J is None else J
    dirs = direction_set(d)
    ts = p ** (-np.arange(J + 1) / d)
    shifts = np.concatenate([rad * t * dirs for t in ts for rad in RADII])
    psi = kernels.shift_energy(g.values, shifts, threads=threads).reshape(J + 1, -1)
    w = np.sqrt(np.maximum(psi.max(axis=1), 0.0))
    w = np.maximum.accumulate(w[::-1])[::-1]
    W = p ** (s * np.arange(J + 1) / d) * w
    seq = float(np.sqrt(np.sum(W**2)))
    tail = float(W[-1])
    divergent = bool(J >= 2 and W[-1] > 0 and W[-1] >= W[-2] * (1.0 - 1e-9))
    resolved = tail <= 0.01 * seq if seq > 0 else True
    return NormResult(g.l2() + seq, tail, 0.0, resolved, divergent, W)


@dataclass(frozen=True)
class GagliardoResult:
    squared: float
    stderr: float
    divergent: bool
    pairs: str
    samples: int = 0

    @property
    def value(self) -> float:
        return math.sqrt(self.squared) if math.isfinite(self.squared) else math.inf


def _has_jump(values: np.ndarray) -> bool:
    for a in range(values.ndim):
        if np.any(np.diff(values, axis=a) != 0):
            return True
    return False


def gagliardo_seminorm(
    f,
    s: float,
    *,
    pairs: str = "unordered",
    samples: int = 1_000_000,
    seed: int = 0,
    threads: int = 1,
) -> GagliardoResult:
    """Fractional seminorm ``int int |f(x)-f(y)|^2 / |x-y|^(d+2s)``.

    ``pairs="ordered"`` integrates over the full product of the domain with
    itself.  ``pairs="unordered"`` (the default) counts every unordered pair
    once and is half of it.  In one dimension the value is exact; otherwise a
    stratified Monte Carlo estimate with its standard error is returned.
    """
    if pairs not in ("ordered", "unordered"):
        raise ParameterError("pairs must be 'ordered' or 'unordered'")
    if not (0 < s < 1):
        raise ParameterError("s must lie in (0, 1)")
    g = _as_sampled(f)
    factor = 2.0 if pairs == "ordered" else 1.0
    if not _has_jump(g.values):
        return GagliardoResult(0.0, 0.0, False, pairs)
    if s >= 0.5:
        return GagliardoResult(math.inf, 0.0, True, pairs)
    d = g.dec.d
    if d == 1:
        M = g.values.shape[0]
        scale = (1.0 / M) ** (1.0 - 2.0 * s) / (2.0 * s * (1.0 - 2.0 * s))
        val = factor * scale * kernels.gagliardo_1d(g.values, s)
        return GagliardoResult(val, 0.0, False, pairs)
    est, err = _gagliardo_mc(g, s, samples, seed, threads)
    return GagliardoResult(0.5 * factor * est, 0.5 * factor * err, False, pairs, samples)


def _gagliardo_mc(g: SampledFn, s: float, samples: int, seed: int, threads: int) -> tuple[float, float]:
    """Ordered-pair seminorm via ``int |z|^(-d-2s) Psi(z) dz`` (polar form, ``d = 2`` rules).

    The radius is drawn with density proportional to ``r**(-2s)`` on
    ``(0, R)``, which cancels the singularity: near the origin
    ``Psi(z) = O(|z|)`` and the weight ``Psi / r`` stays bounded.  Radius and
    angle are stratified with two samples per stratum.
    """
    d = g.dec.d
    if d != 2:
        raise ParameterError("the Monte Carlo path is implemented for d = 2")
    R = math.sqrt(d)
    per = 2
    n_strata = max(1, samples // per)
    su = max(1, int(math.isqrt(n_strata)))
    st = max(1, n_strata // su)
    rng = np.random.default_rng(seed)
    iu, it = np.meshgrid(np.arange(su), np.arange(st), indexing="ij")
    iu = np.repeat(iu.reshape(-1), per)
    it = np.repeat(it.reshape(-1), per)
    u = (iu + rng.random(iu.shape)) / su
    ang = 2.0 * math.pi * (it + rng.random(it.shape)) / st
    b = 1.0 - 2.0 * s
    r = R * u ** (1.0 / b)
    shifts = np.stack([r * np.cos(ang), r * np.sin(ang)], axis=1)
    psi = kernels.shift_energy(g.values, shifts, threads=threads)
    y = 2.0 * math.pi * R**b / b * psi / r
    y = y.reshape(-1, per)
    means = y.mean(axis=1)
    var = y.var(axis=1, ddof=1)
    H = means.shape[0]
    est = float(means.mean())
    err = float(math.sqrt(np.sum(var / per)) / H)
    return est, err


# ---------------------------------------------------------------- reports


@dataclass(frozen=True)
class NormBundle:
    l2: float
    a_r: float
    a_r_viaQ: float
    besov: float
    gagliardo_semi: float
    r: float
    s: float
    besov_tail: float = 0.0
    besov_resolved: bool = True
    gagliardo_stderr: float = 0.0

    @property
    def gagliardo_norm(self) -> float:
        return self.l2 + self.gagliardo_semi


def norm_bundle(f, r: float, s: float | None = None, *, seed: int = 0, samples: int = 200_000, threads: int = 1) -> NormBundle:
    s = r if s is None else s
    g = _as_sampled(f)
    an = approx_norm(g, r)
    bs = besov_norm(g, s, threads=threads)
    gs = gagliardo_seminorm(g, s, seed=seed, samples=samples, threads=threads)
    return NormBundle(g.l2(), an.a_r, an.a_r_viaQ, bs.value, gs.value, r, s, bs.tail, bs.resolved, gs.stderr)


RATIO_KINDS = ("a_r/besov", "a_r/gagliardo", "besov/gagliardo")


@dataclass(frozen=True)
class EquivalenceReport:
    ids: tuple[str, ...]
    bundles: tuple[NormBundle, ...]
    ratios: dict

    def bracket(self, kind: str) -> tuple[float, float, float]:
        vals = np.asarray(self.ratios[kind])
        lo, hi = float(vals.min()), float(vals.max())
        return lo, hi, hi / lo

    def rows(self) -> list[dict]:
        out = []
        for i, (fid, b) in enumerate(zip(self.ids, self.bundles)):
            row = {"id": fid, "l2": b.l2, "a_r": b.a_r, "a_r_viaQ": b.a_r_viaQ, "besov": b.besov,
                   "gagliardo_norm": b.gagliardo_norm}
            for kind in RATIO_KINDS:
                row[kind] = float(self.ratios[kind][i])
            out.append(row)
        return out


def equivalence_report(
    family: Iterable, r: float, ids: Sequence[str] | None = None, *, seed: int = 0, threads: int = 1
) -> EquivalenceReport:
    if not (0 < r < 0.5):
        raise ParameterError("r must lie in (0, 1/2)")
    fam = list(family)
    ids = tuple(ids) if ids is not None else tuple(str(i) for i in range(len(fam)))
    bundles = tuple(norm_bundle(f, r, seed=seed + i, threads=threads) for i, f in enumerate(fam))
    ratios = {
        "a_r/besov": np.array([b.a_r / b.besov for b in bundles]),
        "a_r/gagliardo": np.array([b.a_r / b.gagliardo_norm for b in bundles]),
        "besov/gagliardo": np.array([b.besov / b.gagliardo_norm for b in bundles]),
    }
    return EquivalenceReport(ids, bundles, ratios)


def haar_function(dec: Decomposition, level: int, k: int = 0) -> PiecewiseConstantFn:
    """Unit-norm Haar detail living at ``level``: ``+c`` on child 0, ``-c`` on child 1 of cell ``(level-1, k)``."""
    if level < 1:
        raise ParameterError("Haar details start at level 1")
    p = dec.p
    vals = np.zeros(p**level, dtype=np.complex128)
    amp = math.sqrt(p**level / 2.0)
    vals[p * k] = amp
    vals[p * k + 1] = -amp
    return PiecewiseConstantFn(dec, level, vals)


# ---------------------------------------------------------------- proof constants


def projection_error_bound(diag: DiagnosticsReport, d: int, s: float, C0: float = 1.0, volume: float = 1.0) -> float:
    """``sqrt(B)`` with ``B = C0 c1^(d+2s) / |Omega|``: ``||f - P_n f|| <= sqrt(B) p^(-ns/d) [f]``."""
    return math.sqrt(C0 * diag.c1_observed ** (d + 2 * s) / volume)


def modulus_bound_constant(diag: DiagnosticsReport, C0: float = 1.0, volume: float = 1.0) -> float:
    """``C = max(2, (K+1) sqrt(C0 c2 / |Omega|))`` where ``K`` counts the cell itself."""
    K_with_self = diag.K_observed + 1
    return max(2.0, (K_with_self + 1) * math.sqrt(C0 * diag.c2_observed / volume))


def norm_rows(ids: Sequence[str], results: Sequence[dict]) -> str:
    """CSV with one row per (function id, norm kind)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id", "kind", "value", "tail", "stderr"])
    for fid, res in zip(ids, results):
        for kind, nr in sorted(res.items()):
            w.writerow([fid, kind, repr(float(nr.value)), repr(float(nr.tail)), repr(float(nr.stderr))])
    return buf.getvalue()
