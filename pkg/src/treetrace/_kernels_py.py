"""Pure numpy implementations of the hot kernels.

Both functions work on a function that is constant on the cells of the
uniform grid with ``M`` cells per axis over the unit box.
"""

from __future__ import annotations

import itertools

import numpy as np


def _shift_energy_one(values: np.ndarray, z: np.ndarray) -> float:
    M = values.shape[0]
    d = values.ndim
    pos = np.asarray(z, dtype=float) * M
    m = np.floor(pos).astype(np.int64)
    frac = pos - m
    total = 0.0
    for corner in itertools.product((0, 1), repeat=d):
        weight = 1.0
        src, dst = [], []
        for a in range(d):
            w = frac[a] if corner[a] else 1.0 - frac[a]
            weight *= w
            off = int(m[a] + corner[a])
            lo, hi = max(0, -off), min(M, M - off)
            if hi <= lo:
                weight = 0.0
                break
            src.append(slice(lo, hi))
            dst.append(slice(lo + off, hi + off))
        if weight == 0.0:
            continue
        diff = values[tuple(dst)] - values[tuple(src)]
        total += weight * float(np.sum(diff.real**2 + diff.imag**2))
    return total / M**d


def _shift_energy_by_cells(values: np.ndarray, shifts: np.ndarray) -> np.ndarray:
    """Vectorised over shifts; loops over grid cells (good for coarse grids)."""
    M = values.shape[0]
    d = values.ndim
    pos = shifts * M
    m = np.floor(pos).astype(np.int64)
    frac = pos - m
    out = np.zeros(shifts.shape[0])
    flat = values.reshape(-1)
    strides = np.array([M ** (d - 1 - a) for a in range(d)])
    for cell in itertools.product(range(M), repeat=d):
        cell = np.array(cell)
        v0 = values[tuple(cell)]
        for corner in itertools.product((0, 1), repeat=d):
            corner = np.array(corner)
            tgt = cell[None, :] + m + corner[None, :]
            ok = np.all((tgt >= 0) & (tgt < M), axis=1)
            w = np.prod(np.where(corner[None, :] == 1, frac, 1.0 - frac), axis=1)
            lin = np.where(ok, tgt @ strides, 0)
            diff = flat[lin] - v0
            out += np.where(ok, w * (diff.real**2 + diff.imag**2), 0.0)
    return out / M**d


def shift_energy(values: np.ndarray, shifts: np.ndarray) -> np.ndarray:
    """``||f(. + z) - f||^2`` over ``{x : x, x + z in (0,1)^d}`` for each row ``z``."""
    values = np.asarray(values, dtype=np.complex128)
    shifts = np.atleast_2d(np.asarray(shifts, dtype=float))
    # The path depends on the grid alone: choosing by the number of shifts
    # would let thread chunking switch paths and change the rounding.
    if values.size <= 64:
        return _shift_energy_by_cells(values, shifts)
    return np.array([_shift_energy_one(values, z) for z in shifts])


def pair_kernel(delta: np.ndarray, s: float) -> np.ndarray:
    """``2 delta^b - (delta+1)^b - (delta-1)^b`` with ``b = 1 - 2s``, free of cancellation."""
    b = 1.0 - 2.0 * s
    delta = np.asarray(delta, dtype=float)
    inv = 1.0 / delta
    with np.errstate(divide="ignore"):  # delta = 1 gives log1p(-1) = -inf, whose expm1 is the exact -1
        return -(delta**b) * (np.expm1(b * np.log1p(inv)) + np.expm1(b * np.log1p(-inv)))


def gagliardo_1d(values: np.ndarray, s: float) -> float:
    """``sum_{a<b} |v_a - v_b|^2 D(b - a)`` with ``D`` from :func:`pair_kernel`.

    ``delta = 1`` uses the limit form ``2 - 2^b`` since ``(delta-1)^b = 0``.
    """
    v = np.asarray(values, dtype=np.complex128)
    M = v.shape[0]
    b = 1.0 - 2.0 * s
    total = 0.0
    for delta in range(1, M):
        diff = v[delta:] - v[:-delta]
        S = float(np.sum(diff.real**2 + diff.imag**2))
        if S == 0.0:
            continue
        D = 2.0 - 2.0**b if delta == 1 else float(pair_kernel(delta, s))
        total += D * S
    return total
