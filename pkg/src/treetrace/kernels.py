"""Backend selection for the numerical kernels.

The compiled extension is used when it imports; setting the environment
variable ``TREETRACE_PURE_PYTHON=1`` forces the numpy fallback.  Both
backends evaluate each shift independently, so splitting the work across
threads never changes the numbers.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _kernels_py

_compiled = None
if os.environ.get("TREETRACE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled  # type: ignore[no-redef]
    except ImportError:  # pragma: no cover - depends on the build
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"


def _shift_energy_serial(values: np.ndarray, shifts: np.ndarray, backend: str) -> np.ndarray:
    if backend == "cython" and _compiled is not None and values.ndim in (1, 2):
        v = np.ascontiguousarray(values, dtype=np.complex128)
        z = np.ascontiguousarray(shifts, dtype=np.float64)
        if values.ndim == 1:
            return _compiled.shift_energy_1d(v, z)
        return _compiled.shift_energy_2d(v, z)
    return _kernels_py.shift_energy(values, shifts)


def shift_energy(values, shifts, *, threads: int = 1, backend: str | None = None) -> np.ndarray:
    """``Psi(z) = int |f(x+z) - f(x)|^2 dx`` over ``x, x+z`` in the unit box.

    ``values`` has shape ``(M,) * d`` and holds the cell values of a function
    that is constant on the uniform grid; ``shifts`` has shape ``(S, d)``.
    """
    backend = backend or BACKEND
    values = np.asarray(values, dtype=np.complex128)
    shifts = np.atleast_2d(np.asarray(shifts, dtype=float))
    if shifts.shape[1] != values.ndim:
        raise ValueError(f"shifts must have {values.ndim} columns")
    if threads <= 1 or shifts.shape[0] < 2 * threads:
        return _shift_energy_serial(values, shifts, backend)
    chunks = np.array_split(shifts, threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda c: _shift_energy_serial(values, c, backend), chunks))
    return np.concatenate(parts)


def gagliardo_1d(values, s: float, *, backend: str | None = None) -> float:
    """Dimensionless pair sum ``sum_{a<b} |v_a - v_b|^2 D(b-a)``."""
    backend = backend or BACKEND
    v = np.ascontiguousarray(values, dtype=np.complex128)
    if backend == "cython" and _compiled is not None:
        return float(_compiled.gagliardo_1d(v, float(s)))
    return _kernels_py.gagliardo_1d(v, s)
