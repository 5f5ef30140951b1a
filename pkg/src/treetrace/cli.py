"""Command line: ``treetrace run | validate | list-experiments | plot-data``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import experiments
from .errors import ConfigError


def _load(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"<file>: cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"<file>: {path} is not valid JSON (line {exc.lineno}: {exc.msg})") from None


def _with_seed(cfg: dict, seed: int | None) -> dict:
    if seed is None:
        return cfg
    if seed < 0 or seed >= 2**64:
        raise ConfigError(f"--seed: must be an unsigned 64-bit integer, got {seed}")
    return {**cfg, "seed": seed}


def _threads(n: int) -> int:
    if n < 1:
        raise ConfigError(f"--threads: must be >= 1, got {n}")
    return n


def cmd_run(args) -> int:
    cfg = _with_seed(_load(args.config), args.seed)
    table, elapsed = experiments.timed_run(cfg, threads=_threads(args.threads))
    csv_path, json_path = experiments.write_outputs(table, args.out, threads=args.threads, elapsed=elapsed)
    print(f"wrote {csv_path} ({len(table.rows)} rows) and {json_path}")
    if table.kind == "acceptance":
        failed = sorted({row[0] for row in table.rows if not row[2]})
        if failed:
            print("failed criteria: " + ", ".join(str(n) for n in failed), file=sys.stderr)
            return 1
    return 0


def cmd_validate(args) -> int:
    cfg = _with_seed(_load(args.config), args.seed)
    kind = experiments.validate(cfg)
    print(f"ok: {args.config} ({kind})")
    return 0


def cmd_list(args) -> int:
    for kind, (_, blurb) in sorted(experiments.KINDS.items()):
        print(f"{kind:18s} {blurb}")
    return 0


def cmd_plot(args) -> int:
    with open(args.csv, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ConfigError(f"<file>: {args.csv} is empty")
        rows = [tuple(r) for r in reader]
    table = experiments.ResultTable("file", tuple(header), rows)
    text = experiments.emit_plot_data(table, args.x, args.y, log=args.log)
    if args.out:
        Path(args.out).write_bytes(text.encode("utf-8"))
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="treetrace", description="Trace experiments on weighted p-adic trees.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, out: bool):
        p.add_argument("--config", required=True, metavar="PATH", help="JSON experiment configuration")
        p.add_argument("--seed", type=int, default=None, metavar="U64", help="override the configured seed")
        if out:
            p.add_argument("--out", default="results", metavar="DIR", help="output directory (default: results)")
            p.add_argument("--threads", type=int, default=1, metavar="N", help="worker threads; never changes results")

    common(sub.add_parser("run", help="run an experiment and write CSV plus a JSON sidecar"), True)
    common(sub.add_parser("validate", help="check a configuration without running it"), False)
    sub.add_parser("list-experiments", help="list experiment kinds")
    pp = sub.add_parser("plot-data", help="reshape a result CSV into long (x, series, value) form")
    pp.add_argument("--csv", required=True, metavar="PATH")
    pp.add_argument("--x", required=True, metavar="COL")
    pp.add_argument("--y", required=True, nargs="+", metavar="COL")
    pp.add_argument("--log", action="store_true", help="log10-transform the values")
    pp.add_argument("--out", default=None, metavar="PATH")
    return ap


COMMANDS = {"run": cmd_run, "validate": cmd_validate, "list-experiments": cmd_list, "plot-data": cmd_plot}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
