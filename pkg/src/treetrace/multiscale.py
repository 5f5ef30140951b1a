"""Strongly balanced p-multiscale decompositions of the unit box.

Generation ``n + 1`` splits every generation-``n`` cell into ``p`` equal
slabs along axis ``n mod d`` (0-based), children ordered from low to high
coordinate.  Cells are stored through integer grid indices, so volumes and
nesting are exact.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AmbiguityError, DepthError, ParameterError


@dataclass(frozen=True)
class Cell:
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.hi, self.lo)))

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(np.subtract(self.hi, self.lo)))


def axis_levels(n: int, d: int) -> tuple[int, ...]:
    """Number of splits along each axis after ``n`` generations."""
    return tuple((n - a + d - 1) // d for a in range(d))


@dataclass(frozen=True, eq=False)
class Decomposition:
    d: int
    p: int
    depth: int
    index: tuple[np.ndarray, ...] = field(repr=False)
    domain_volume: float = 1.0

    def levels(self, n: int) -> tuple[int, ...]:
        return axis_levels(n, self.d)

    def _check_level(self, n: int) -> None:
        if not (0 <= n <= self.depth):
            raise DepthError(f"generation {n} outside 0..{self.depth}")

    def bounds(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """``(lo, hi)`` arrays of shape ``(p**n, d)``."""
        self._check_level(n)
        scale = np.array([float(self.p) ** -na for na in self.levels(n)])
        idx = self.index[n].astype(float)
        return idx * scale, (idx + 1.0) * scale

    def sides(self, n: int) -> np.ndarray:
        """Side lengths shared by every generation-``n`` cell, shape ``(d,)``.

        Taken from the split counts rather than ``hi - lo``, which loses a
        few ulps when ``1/p`` is not a binary fraction.
        """
        self._check_level(n)
        return np.array([float(self.p) ** -na for na in self.levels(n)])

    def cell(self, n: int, k: int) -> Cell:
        lo, hi = self.bounds(n)
        if not (0 <= k < self.p**n):
            raise ParameterError(f"cell index {k} outside 0..{self.p**n - 1}")
        return Cell(tuple(lo[k].tolist()), tuple(hi[k].tolist()))

    def volume(self, n: int) -> float:
        return self.domain_volume / self.p**n

    def block_map(self, n: int) -> np.ndarray:
        """Array of shape ``(p**n_0, ..., p**n_{d-1})`` holding the cell index ``k``."""
        self._check_level(n)
        shape = tuple(self.p**na for na in self.levels(n))
        out = np.empty(shape, dtype=np.int64)
        out[tuple(self.index[n].T)] = np.arange(self.p**n)
        return out

    def cell_of_point(self, x, n: int) -> int:
        self._check_level(n)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.d,):
            raise ParameterError(f"point must have {self.d} coordinates")
        if np.any(x <= 0) or np.any(x >= 1):
            raise ParameterError(f"point {x.tolist()} is not inside the open unit box")
        ids = []
        for a, na in enumerate(self.levels(n)):
            u = x[a] * self.p**na
            if na > 0 and abs(u - round(u)) <= 1e-12 * max(1.0, u):
                raise AmbiguityError(f"coordinate {x[a]!r} lies on a generation-{n} cell boundary")
            ids.append(int(math.floor(u)))
        return int(self.block_map(n)[tuple(ids)])

    def to_dict(self) -> dict:
        cells = []
        for n in range(self.depth + 1):
            lo, hi = self.bounds(n)
            for k in range(self.p**n):
                cells.append({"n": n, "k": k, "lo": lo[k].tolist(), "hi": hi[k].tolist()})
        return {"d": self.d, "p": self.p, "depth": self.depth, "domain_volume": self.domain_volume, "cells": cells}


def hypercube_decomposition(d: int, p: int, depth: int) -> Decomposition:
    if int(d) != d or d < 1:
        raise ParameterError(f"d must be a positive integer, got {d!r}")
    if int(p) != p or p < 2:
        raise ParameterError(f"p must be an integer >= 2, got {p!r}")
    if int(depth) != depth or depth < 0:
        raise ParameterError(f"depth must be a non-negative integer, got {depth!r}")
    d, p, depth = int(d), int(p), int(depth)
    index = [np.zeros((1, d), dtype=np.int64)]
    for n in range(depth):
        axis = n % d
        child = np.repeat(index[-1], p, axis=0)
        child[:, axis] = p * child[:, axis] + np.tile(np.arange(p), p**n)
        index.append(child)
    for arr in index:
        arr.setflags(write=False)
    return Decomposition(d, p, depth, tuple(index))


def interval_decomposition(p: int, depth: int) -> Decomposition:
    return hypercube_decomposition(1, p, depth)


def decomposition_from_dict(data: dict) -> Decomposition:
    return hypercube_decomposition(int(data["d"]), int(data["p"]), int(data["depth"]))


# ---------------------------------------------------------------- diagnostics


def _direction_set(d: int) -> np.ndarray:
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


@dataclass(frozen=True)
class DiagnosticsReport:
    c1: np.ndarray
    c2: np.ndarray
    K: np.ndarray
    volume_error: np.ndarray

    @property
    def c1_observed(self) -> float:
        return float(self.c1.max())

    @property
    def c2_observed(self) -> float:
        return float(self.c2.max())

    @property
    def K_observed(self) -> int:
        return int(self.K.max())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "c1", "c2", "K", "volume_error"])
        for n in range(len(self.c1)):
            w.writerow([n, repr(float(self.c1[n])), repr(float(self.c2[n])), int(self.K[n]), repr(float(self.volume_error[n]))])
        return buf.getvalue()


def _neighbour_counts(lo: np.ndarray, hi: np.ndarray, radius: float, chunk: int = 512) -> np.ndarray:
    n = lo.shape[0]
    counts = np.empty(n, dtype=np.int64)
    thr = radius * (1.0 + 1e-9)
    for start in range(0, n, chunk):
        a_lo, a_hi = lo[start : start + chunk, None, :], hi[start : start + chunk, None, :]
        gap = np.maximum(0.0, np.maximum(lo[None, :, :] - a_hi, a_lo - hi[None, :, :]))
        dist = np.sqrt((gap**2).sum(axis=2))
        counts[start : start + chunk] = (dist <= thr).sum(axis=1) - 1
    return counts


def diagnostics(dec: Decomposition, q_max: int = 8) -> DiagnosticsReport:
    """Per-generation regularity constants.

    ``c1[n]`` is ``max diam * p**(n/d)``; ``c2[n]`` is the largest value of
    ``|Q \\ (Q + h)| p**(n(d-1)/d) / |h|`` over the direction set and the radii
    ``p**(-n/d) 2**-q``, computed with the exact box formula; ``K[n]`` is the
    largest number of other cells within distance ``p**(-n/d)``.
    """
    d, p = dec.d, dec.p
    dirs = _direction_set(d)
    radii_unit = 2.0 ** -np.arange(q_max + 1)
    c1, c2, K, verr = [], [], [], []
    for n in range(dec.depth + 1):
        lo, hi = dec.bounds(n)
        side = hi - lo
        scale = p ** (n / d)
        c1.append(float(np.sqrt((side**2).sum(axis=1)).max() * scale))
        vols = side.prod(axis=1)
        target = dec.volume(n)
        verr.append(float(np.max(np.abs(vols - target)) / target))
        # every cell of a generation has the same shape
        shapes = [dec.sides(n)]
        h = (radii_unit[:, None, None] / scale) * dirs[None, :, :]
        hn = np.linalg.norm(h, axis=2)
        best = 0.0
        for s in shapes:
            overlap = np.prod(np.maximum(0.0, s[None, None, :] - np.abs(h)), axis=2)
            lost = s.prod() - overlap
            best = max(best, float((lost * p ** (n * (d - 1) / d) / hn).max()))
        c2.append(best)
        K.append(int(_neighbour_counts(lo, hi, p ** (-n / d)).max()))
    return DiagnosticsReport(np.array(c1), np.array(c2), np.array(K), np.array(verr))
