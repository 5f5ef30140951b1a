import csv
import json
import shutil
import subprocess
from pathlib import Path

import pytest

from treetrace import cli, experiments
from treetrace.errors import ConfigError

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


GATE = {"kind": "gate-sweep", "name": "g", "tree": {"p": 2, "ell": 0.5}, "alpha": {"start": 0.1, "stop": 1.5, "num": 141}}
TRACE = {
    "kind": "trace-convergence", "name": "tc",
    "tree": {"p": 2, "ell": 0.5, "alpha": 0.5},
    "levels": {"start": 1, "stop": 8},
    "decomposition": {"d": 1, "p": 2, "depth": 8},
    "function": {"terms": [{"z": "rad", "re": 1.0}, {"z": [0, 0, 1], "re": 0.5, "im": -0.25}]},
}
NORMS = {
    "kind": "norm-equivalence", "name": "ne", "seed": 4,
    "decomposition": {"d": 2, "p": 2, "depth": 8}, "r": 0.25,
    "family": {"type": "indicator", "grid_level": 3, "boxes": [{"lo": [0, 0], "hi": [0.5, 1]}, {"lo": [0.25, 0.25], "hi": [0.75, 0.5]}]},
}


def test_run_writes_csv_and_sidecar(tmp_path, capsys):
    cfg = _write(tmp_path, GATE)
    assert cli.main(["run", "--config", cfg, "--out", str(tmp_path / "out")]) == 0
    rows = _rows(tmp_path / "out" / "g.csv")
    assert len(rows) == 141 and list(rows[0]) == ["alpha", "gate", "sigma"]
    assert {r["gate"] for r in rows} == {"true", "false"}
    side = json.loads((tmp_path / "out" / "g.json").read_text())
    assert side["row_count"] == 141 and side["metadata"]["kind"] == "gate-sweep"
    assert set(side["run"]) >= {"timestamp", "elapsed_s", "backend", "threads"}
    raw = (tmp_path / "out" / "g.csv").read_bytes()
    assert b"\r" not in raw


def test_gate_flips_at_the_interval_ends(tmp_path):
    cfg = dict(GATE, alpha={"start": 0.2, "stop": 1.05, "num": 18})
    table = experiments.run(cfg)
    flags = {round(a, 10): g for a, g, _ in table.rows}
    assert flags[0.25] is False and flags[0.3] is True
    assert flags[0.95] is True and flags[1.0] is False


@pytest.mark.parametrize("cfg", [TRACE, NORMS], ids=["trace", "norms"])
def test_same_config_and_seed_gives_identical_bytes(tmp_path, cfg):
    path = _write(tmp_path, cfg)
    outs = []
    for i, threads in enumerate((1, 1, 4)):
        out = tmp_path / f"o{i}"
        assert cli.main(["run", "--config", path, "--out", str(out), "--threads", str(threads)]) == 0
        outs.append((out / f"{cfg['name']}.csv").read_bytes())
        meta = json.loads((out / f"{cfg['name']}.json").read_text())["metadata"]
        if i == 0:
            first_meta = meta
        assert meta == first_meta
    assert outs[0] == outs[1] == outs[2]


def test_seed_flag_overrides_and_changes_output(tmp_path):
    box = dict(NORMS, family={"type": "indicator", "grid_level": 3, "boxes": [{"lo": [0, 0], "hi": [0.5, 1]}]})
    path = _write(tmp_path, box)
    cli.main(["run", "--config", path, "--out", str(tmp_path / "a"), "--seed", "1"])
    cli.main(["run", "--config", path, "--out", str(tmp_path / "b"), "--seed", "2"])
    a = _rows(tmp_path / "a" / "ne.csv")[0]
    b = _rows(tmp_path / "b" / "ne.csv")[0]
    assert a["a_r"] == b["a_r"]
    assert a["gagliardo_norm"] != b["gagliardo_norm"]
    assert json.loads((tmp_path / "a" / "ne.json").read_text())["metadata"]["seed"] == 1


def test_trace_convergence_ratio(tmp_path):
    table = experiments.run(TRACE)
    assert table.metadata["fitted_ratio"] == pytest.approx(0.5, rel=0.10)
    disc = table.column("discrepancy")
    assert all(b < a for a, b in zip(disc, disc[1:]))


def test_kernel_check_config(tmp_path):
    table = experiments.run(json.loads((CONFIGS / "kernel_check.json").read_text()))
    assert max(table.column("max_abs_entry")) < 1e-12


@pytest.mark.parametrize(
    "mutate,fragment",
    [
        (lambda c: c["tree"].update(ell=1.5), "tree.ell: must lie in (0, 1)"),
        (lambda c: c["tree"].pop("alpha"), "tree.alpha: required field is missing"),
        (lambda c: c["tree"].update(alpha=0.2), "tree: parameters violate"),
        (lambda c: c["function"]["terms"][1].update(z=[0, 3, 1]), "function.terms[1].z: invalid symmetry index"),
        (lambda c: c["levels"].update(stop=30), "levels.stop: must be <= 20"),
        (lambda c: c.update(kind="nope"), "kind: expected one of"),
        (lambda c: c.update(name="a/b"), "name: expected a plain file stem"),
    ],
)
def test_validate_reports_field_paths(tmp_path, capsys, mutate, fragment):
    cfg = json.loads(json.dumps(TRACE))
    mutate(cfg)
    assert cli.main(["validate", "--config", _write(tmp_path, cfg)]) == 2
    err = capsys.readouterr().err
    assert err.startswith("config error: ") and fragment in err


def test_missing_seed_is_an_error(tmp_path, capsys):
    cfg = {k: v for k, v in NORMS.items() if k != "seed"}
    path = _write(tmp_path, cfg)
    assert cli.main(["validate", "--config", path]) == 2
    assert "seed: required field is missing" in capsys.readouterr().err
    assert cli.main(["validate", "--config", path, "--seed", "9"]) == 0
    assert cli.main(["validate", "--config", path, "--seed", str(2**64)]) == 2


def test_bad_files(tmp_path, capsys):
    assert cli.main(["validate", "--config", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["validate", "--config", str(bad)]) == 2
    assert "not valid JSON" in capsys.readouterr().err


def test_threads_must_be_positive(tmp_path, capsys):
    assert cli.main(["run", "--config", _write(tmp_path, GATE), "--threads", "0", "--out", str(tmp_path)]) == 2


def test_list_experiments(capsys):
    assert cli.main(["list-experiments"]) == 0
    out = capsys.readouterr().out.split("\n")
    kinds = [line.split()[0] for line in out if line.strip()]
    assert kinds == sorted(experiments.KINDS)


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_configs_validate(path, capsys):
    assert cli.main(["validate", "--config", str(path)]) == 0


def test_plot_data(tmp_path, capsys):
    cfg = _write(tmp_path, TRACE)
    cli.main(["run", "--config", cfg, "--out", str(tmp_path)])
    out = tmp_path / "long.csv"
    assert cli.main(["plot-data", "--csv", str(tmp_path / "tc.csv"), "--x", "N", "--y", "discrepancy", "coeff_error_sigma",
                     "--log", "--out", str(out)]) == 0
    rows = _rows(out)
    assert list(rows[0]) == ["N", "series", "log10_value"]
    assert {r["series"] for r in rows} == {"discrepancy", "coeff_error_sigma"}
    assert len(rows) == 16
    assert cli.main(["plot-data", "--csv", str(tmp_path / "tc.csv"), "--x", "N", "--y", "nope"]) == 2
    assert "column 'nope' not in table" in capsys.readouterr().err


def test_plot_data_of_empty_table():
    table = experiments.ResultTable("x", ("a", "b"), [])
    assert experiments.emit_plot_data(table, "a", ["b"]) == "a,series,value\n"
    with pytest.raises(ConfigError):
        experiments.emit_plot_data(table, "a", ["c"])


def test_acceptance_kind_single_criterion(tmp_path):
    table = experiments.run({"kind": "acceptance", "criterion": 10})
    assert table.columns == ("criterion", "name", "passed", "metric", "value")
    assert all(row[2] for row in table.rows)
    assert "timing" in table.run_info and "timing" not in table.metadata


@pytest.mark.skipif(shutil.which("treetrace") is None, reason="console script not installed")
def test_console_script(tmp_path):
    out = subprocess.run(["treetrace", "validate", "--config", str(CONFIGS / "gate_sweep.json")],
                         capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("ok: ")
