"""Configuration-driven experiments behind the command line.

A configuration is a JSON object with a ``kind`` and kind-specific fields.
Validation happens up front and reports the dotted path of the first bad
field.  Every run produces a :class:`ResultTable` whose column set is fixed
per kind and whose rows are sorted by the kind's key columns, so identical
configurations give byte-identical CSV.
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from . import acceptance
from .approx import equivalence_report, haar_function, indicator
from .errors import ConfigError, TreeTraceError
from .harmonic import SymmetryIndex, basis_function, gate, sigma
from .kernels import BACKEND
from .multiscale import diagnostics, hypercube_decomposition
from .trace import gamma, tau, tau_vertex
from .tree import TreeParams, geometric_tree

VERSION = "0.1.0"


@dataclass
class ResultTable:
    kind: str
    columns: tuple[str, ...]
    rows: list[tuple]
    metadata: dict = field(default_factory=dict)
    #: Run-dependent facts (timings); kept out of ``metadata`` so that the
    #: reproducible part of the sidecar only depends on config and seed.
    run_info: dict = field(default_factory=dict)

    def column(self, name: str) -> list:
        if name not in self.columns:
            raise ConfigError(f"column {name!r} not in table (have {', '.join(self.columns)})")
        i = self.columns.index(name)
        return [row[i] for row in self.rows]

    def to_csv(self) -> str:
        return _write_csv(self.columns, self.rows)


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(columns: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def emit_plot_data(table: ResultTable, x: str, ys: Sequence[str], *, log: bool = False) -> str:
    """Long-format CSV ``(x, series, value)`` for external plotting.

    With ``log=True`` the value column holds ``log10`` of each entry and
    rows whose value is not positive are dropped.
    """
    xs = table.column(x)
    series = [(y, table.column(y)) for y in ys]
    out = []
    for name, vals in series:
        for xv, yv in zip(xs, vals):
            yv = float(yv)
            if log:
                if not yv > 0:
                    continue
                yv = math.log10(yv)
            out.append((xv, name, yv))
    return _write_csv((x, "series", "log10_value" if log else "value"), out)


# ---------------------------------------------------------------- validation


_STEP = re.compile(r"([^.\[\]]+)|\[(\d+)\]")


def _get(cfg: Mapping, path: str, default: Any = ...):
    """Look up a dotted path such as ``function.terms[1].re``."""
    node: Any = cfg
    for key, idx in _STEP.findall(path):
        if idx:
            i = int(idx)
            found = isinstance(node, list) and i < len(node)
            nxt = node[i] if found else None
        else:
            found = isinstance(node, Mapping) and key in node
            nxt = node[key] if found else None
        if not found:
            if default is ...:
                raise ConfigError(f"{path}: required field is missing")
            return default
        node = nxt
    return node


def _int(cfg, path, default=..., lo=None, hi=None) -> int:
    v = _get(cfg, path, default)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{path}: expected an integer, got {v!r}")
    if lo is not None and v < lo:
        raise ConfigError(f"{path}: must be >= {lo}, got {v}")
    if hi is not None and v > hi:
        raise ConfigError(f"{path}: must be <= {hi}, got {v}")
    return v


def _float(cfg, path, default=..., check: Callable[[float], bool] | None = None, what: str = "") -> float:
    v = _get(cfg, path, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{path}: expected a finite number, got {v!r}")
    if check is not None and not check(float(v)):
        raise ConfigError(f"{path}: {what}, got {v!r}")
    return float(v)


def _params(cfg, prefix: str = "tree") -> TreeParams:
    p = _int(cfg, f"{prefix}.p", lo=2)
    ell = _float(cfg, f"{prefix}.ell", check=lambda x: 0 < x < 1, what="must lie in (0, 1)")
    alpha = _float(cfg, f"{prefix}.alpha", check=lambda x: x > 0, what="must be positive")
    return TreeParams(p, ell, alpha)


def _seed(cfg) -> int:
    return _int(cfg, "seed", lo=0, hi=2**64 - 1)


def _decomposition(cfg, p: int | None = None, depth: int | None = None):
    d = _int(cfg, "decomposition.d", 1, lo=1, hi=3)
    dp = _int(cfg, "decomposition.p", p if p is not None else ..., lo=2)
    if p is not None and dp != p:
        raise ConfigError(f"decomposition.p: must equal tree.p = {p}, got {dp}")
    ddepth = _int(cfg, "decomposition.depth", depth if depth is not None else ..., lo=0, hi=24)
    if dp ** (ddepth) > 2**24:
        raise ConfigError(f"decomposition.depth: {dp}**{ddepth} cells exceed the size limit")
    return hypercube_decomposition(d, dp, ddepth)


def _symmetry_index(obj, path: str, p: int) -> SymmetryIndex:
    try:
        z = SymmetryIndex.from_json(obj)
        z.validate(p)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: invalid symmetry index {obj!r} ({exc})") from None
    return z


# ---------------------------------------------------------------- kinds


def _gate_sweep(cfg, threads) -> ResultTable:
    p = _int(cfg, "tree.p", lo=2)
    ell = _float(cfg, "tree.ell", check=lambda x: 0 < x < 1, what="must lie in (0, 1)")
    start = _float(cfg, "alpha.start", check=lambda x: x > 0, what="must be positive")
    stop = _float(cfg, "alpha.stop", check=lambda x: x >= start, what="must be >= alpha.start")
    num = _int(cfg, "alpha.num", lo=1, hi=10**6)
    alphas = np.linspace(start, stop, num)
    rows = [(a, g, s) for a, g, s in acceptance.gate_sweep(p, ell, alphas)]
    lo, hi = ell / p, 1.0 / (ell * p)
    return ResultTable("gate-sweep", ("alpha", "gate", "sigma"), sorted(rows), {"gate_interval": [lo, hi]})


def _harmonic_function(cfg, params: TreeParams, depth: int, m: int):
    terms = _get(cfg, "function.terms")
    if not isinstance(terms, list) or not terms:
        raise ConfigError("function.terms: expected a non-empty list")
    parsed = []
    for i in range(len(terms)):
        at = f"function.terms[{i}]"
        z = _symmetry_index(_get(cfg, f"{at}.z"), f"{at}.z", params.p)
        c = complex(_float(cfg, f"{at}.re", 0.0), _float(cfg, f"{at}.im", 0.0))
        parsed.append((z, c))
    tree = geometric_tree(params, depth)
    f = None
    for z, c in parsed:
        term = basis_function(z, tree, m) * c
        f = term if f is None else f + term
    return f


def _trace_convergence(cfg, threads) -> ResultTable:
    params = _params(cfg)
    if not gate(params):
        raise ConfigError("tree: parameters violate ell < alpha*p < 1/ell")
    lo = _int(cfg, "levels.start", lo=0)
    hi = _int(cfg, "levels.stop", lo=lo, hi=20)
    m = _int(cfg, "samples_per_edge", 2, lo=2, hi=64)
    dec = _decomposition(cfg, params.p, hi)
    if dec.depth < hi:
        raise ConfigError(f"decomposition.depth: must be >= levels.stop = {hi}")
    f = _harmonic_function(cfg, params, hi, m)
    full = tau(f)
    sig = sigma(params)
    rows = []
    prev = None
    for N in range(lo, hi + 1):
        disc = gamma(f, dec, N).discrepancy
        coeff_err = (full - tau_vertex(f, N)).norm_r(sig)
        ratio = disc / prev if prev else math.nan
        rows.append((N, disc, coeff_err, ratio))
        prev = disc
    fit = acceptance.fitted_ratio([(r[0], r[1]) for r in rows if r[1] > 0]) if len(rows) > 1 else math.nan
    meta = {"fitted_ratio": fit, "predicted_ratio": params.ell / (params.alpha * params.p), "sigma": sig}
    return ResultTable("trace-convergence", ("N", "discrepancy", "coeff_error_sigma", "ratio"), rows, meta)


def _family(cfg, dec):
    kind = _get(cfg, "family.type")
    if kind == "haar":
        levels = _get(cfg, "family.levels")
        if not isinstance(levels, list) or not levels:
            raise ConfigError("family.levels: expected a non-empty list of integers")
        out = []
        for i, n in enumerate(levels):
            if isinstance(n, bool) or not isinstance(n, int) or not (1 <= n <= dec.depth):
                raise ConfigError(f"family.levels[{i}]: expected an integer in [1, {dec.depth}], got {n!r}")
            out.append((f"haar{n}", n, haar_function(dec, n)))
        return out
    if kind == "indicator":
        boxes = _get(cfg, "family.boxes")
        K = _int(cfg, "family.grid_level", lo=0, hi=max(0, 24 // dec.d))
        out = []
        for i in range(len(boxes) if isinstance(boxes, list) else 0):
            lo_, hi_ = _get(cfg, f"family.boxes[{i}].lo"), _get(cfg, f"family.boxes[{i}].hi")
            if len(lo_) != dec.d or len(hi_) != dec.d:
                raise ConfigError(f"family.boxes[{i}]: lo and hi need {dec.d} coordinates")
            out.append((f"box{i}", i, indicator(dec, lo_, hi_, K)))
        if not out:
            raise ConfigError("family.boxes: expected a non-empty list of {lo, hi} boxes")
        return out
    raise ConfigError(f"family.type: expected 'haar' or 'indicator', got {kind!r}")


def _norm_equivalence(cfg, threads) -> ResultTable:
    seed = _seed(cfg)
    p = _int(cfg, "decomposition.p", lo=2)
    dec = _decomposition(cfg, p)
    r = _float(cfg, "r", check=lambda x: 0 < x < 0.5, what="must lie in (0, 1/2)")
    fam = _family(cfg, dec)
    rep = equivalence_report([f for _, _, f in fam], r, [i for i, _, _ in fam], seed=seed, threads=threads)
    cols = ("id", "level", "l2", "a_r", "a_r_viaQ", "besov", "gagliardo_norm",
            "a_r/besov", "a_r/gagliardo", "besov/gagliardo")
    rows = []
    for (fid, lvl, _), row in zip(fam, rep.rows()):
        rows.append((fid, lvl) + tuple(row[c] for c in cols[2:]))
    rows.sort(key=lambda row: (row[1], row[0]))
    meta = {kind: dict(zip(("lo", "hi", "spread"), rep.bracket(kind)))
            for kind in ("a_r/besov", "a_r/gagliardo", "besov/gagliardo")}
    return ResultTable("norm-equivalence", cols, rows, {"brackets": meta, "r": r})


def _diagnostics(cfg, threads) -> ResultTable:
    p = _int(cfg, "decomposition.p", lo=2)
    dec = _decomposition(cfg, p)
    q_max = _int(cfg, "q_max", 8, lo=0, hi=30)
    rep = diagnostics(dec, q_max=q_max)
    rows = [(n, float(rep.c1[n]), float(rep.c2[n]), int(rep.K[n]), float(rep.volume_error[n]))
            for n in range(dec.depth + 1)]
    meta = {"c1_observed": rep.c1_observed, "c2_observed": rep.c2_observed, "K_observed": rep.K_observed}
    return ResultTable("diagnostics", ("n", "c1", "c2", "K", "volume_error"), rows, meta)


def _kernel_check(cfg, threads) -> ResultTable:
    from .treefunc import random_tree_function

    seed = _seed(cfg)
    params = _params(cfg)
    if not gate(params):
        raise ConfigError("tree: parameters violate ell < alpha*p < 1/ell")
    depth = _int(cfg, "tree.depth", lo=1, hi=12)
    count = _int(cfg, "corpus.count", lo=1, hi=10_000)
    m = _int(cfg, "corpus.samples_per_edge", 3, lo=2, hi=64)
    rng = np.random.default_rng(seed)
    tree = geometric_tree(params, depth)
    rows = []
    for i in range(count):
        N = int(rng.integers(0, depth))
        f = random_tree_function(tree, m, rng, root_value=0.0, support_depth=N)
        co = tau(f)
        rows.append((i, N, len(co), co.max_abs()))
    return ResultTable("kernel-check", ("id", "support_depth", "entries", "max_abs_entry"), rows,
                       {"max_abs_entry": max(r[3] for r in rows)})


def _acceptance(cfg, threads) -> ResultTable:
    crit = _get(cfg, "criterion")
    seed = _seed(cfg) if "seed" in cfg else None
    numbers = sorted(acceptance.CHECKS) if crit == "all" else None
    if numbers is None:
        if isinstance(crit, bool) or not isinstance(crit, int) or crit not in acceptance.CHECKS:
            raise ConfigError(f"criterion: expected 'all' or an integer in 1..{len(acceptance.CHECKS)}, got {crit!r}")
        numbers = [crit]
    rows, runtimes = [], {}
    for n in numbers:
        res = acceptance.run_check(n, seed=seed)
        runtimes[str(n)] = {"runtime_s": res.runtime, "budget_s": res.budget}
        for key, value in res.metrics.items():
            rows.append((n, res.name, res.passed, key, value))
    table = ResultTable("acceptance", ("criterion", "name", "passed", "metric", "value"), rows)
    table.run_info["timing"] = runtimes
    return table


KINDS: dict[str, tuple[Callable, str]] = {
    "trace-convergence": (_trace_convergence, "method A vs vertex values as N grows"),
    "norm-equivalence": (_norm_equivalence, "A^r, Besov and Gagliardo norms of a family"),
    "gate-sweep": (_gate_sweep, "gate flag and sigma over an alpha grid"),
    "diagnostics": (_diagnostics, "per-generation regularity constants of a decomposition"),
    "kernel-check": (_kernel_check, "trace of compactly supported random functions"),
    "acceptance": (_acceptance, "one acceptance criterion (or 'all') as a table"),
}

# Fields that only steer where output goes; they never reach the experiment.
_PLUMBING = {"kind", "name", "seed"}


def validate(cfg: Any) -> str:
    """Check a configuration without running it; returns the kind."""
    if not isinstance(cfg, Mapping):
        raise ConfigError("<root>: configuration must be a JSON object")
    kind = _get(cfg, "kind")
    if kind not in KINDS:
        raise ConfigError(f"kind: expected one of {', '.join(sorted(KINDS))}, got {kind!r}")
    name = cfg.get("name", kind)
    if not isinstance(name, str) or not name or "/" in name:
        raise ConfigError(f"name: expected a plain file stem, got {name!r}")
    _dry_run(cfg)
    return kind


def _dry_run(cfg) -> None:
    """Run the cheap validation prefix of each kind."""
    kind = cfg["kind"]
    if kind == "gate-sweep":
        _int(cfg, "tree.p", lo=2)
        _float(cfg, "tree.ell", check=lambda x: 0 < x < 1, what="must lie in (0, 1)")
        start = _float(cfg, "alpha.start", check=lambda x: x > 0, what="must be positive")
        _float(cfg, "alpha.stop", check=lambda x: x >= start, what="must be >= alpha.start")
        _int(cfg, "alpha.num", lo=1, hi=10**6)
    elif kind == "trace-convergence":
        params = _params(cfg)
        if not gate(params):
            raise ConfigError("tree: parameters violate ell < alpha*p < 1/ell")
        lo = _int(cfg, "levels.start", lo=0)
        hi = _int(cfg, "levels.stop", lo=lo, hi=20)
        _decomposition(cfg, params.p, hi)
        terms = _get(cfg, "function.terms")
        if not isinstance(terms, list) or not terms:
            raise ConfigError("function.terms: expected a non-empty list")
        for i in range(len(terms)):
            _symmetry_index(_get(cfg, f"function.terms[{i}].z"), f"function.terms[{i}].z", params.p)
    elif kind == "norm-equivalence":
        _seed(cfg)
        dec = _decomposition(cfg, _int(cfg, "decomposition.p", lo=2))
        _float(cfg, "r", check=lambda x: 0 < x < 0.5, what="must lie in (0, 1/2)")
        _get(cfg, "family.type")
        if cfg["family"]["type"] == "haar":
            _family(cfg, dec)
    elif kind == "diagnostics":
        _decomposition(cfg, _int(cfg, "decomposition.p", lo=2))
    elif kind == "kernel-check":
        _seed(cfg)
        params = _params(cfg)
        if not gate(params):
            raise ConfigError("tree: parameters violate ell < alpha*p < 1/ell")
        _int(cfg, "tree.depth", lo=1, hi=12)
        _int(cfg, "corpus.count", lo=1, hi=10_000)
    elif kind == "acceptance":
        crit = _get(cfg, "criterion")
        if crit != "all" and (isinstance(crit, bool) or crit not in acceptance.CHECKS):
            raise ConfigError(f"criterion: expected 'all' or an integer in 1..{len(acceptance.CHECKS)}, got {crit!r}")


def run(cfg: Mapping, *, threads: int = 1) -> ResultTable:
    kind = validate(cfg)
    try:
        table = KINDS[kind][0](cfg, threads)
    except ConfigError:
        raise
    except TreeTraceError as exc:
        raise ConfigError(f"<{kind}>: {exc}") from exc
    table.metadata = {
        "kind": kind,
        "name": cfg.get("name", kind),
        "seed": cfg.get("seed"),
        "version": VERSION,
        "config": {k: v for k, v in cfg.items() if k not in _PLUMBING},
        **table.metadata,
    }
    return table


def write_outputs(table: ResultTable, out_dir, *, threads: int, elapsed: float) -> tuple[str, str]:
    """Write ``<name>.csv`` and the ``<name>.json`` sidecar; returns both paths."""
    import pathlib

    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    name = table.metadata["name"]
    csv_path = out / f"{name}.csv"
    json_path = out / f"{name}.json"
    csv_path.write_bytes(table.to_csv().encode("utf-8"))
    sidecar = {
        "columns": list(table.columns),
        "row_count": len(table.rows),
        "metadata": table.metadata,
        "run": {
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "elapsed_s": elapsed,
            "backend": BACKEND,
            "threads": threads,
            **table.run_info,
        },
    }
    json_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True, default=_json_default) + "\n")
    return str(csv_path), str(json_path)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def timed_run(cfg: Mapping, *, threads: int = 1) -> tuple[ResultTable, float]:
    t0 = time.perf_counter()
    table = run(cfg, threads=threads)
    return table, time.perf_counter() - t0
