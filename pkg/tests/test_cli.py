import copy
import csv
import json

import numpy as np
import pytest

from diffbounds import cli
from diffbounds.cli import EXAMPLE_CONFIGS, ConfigError, main, sweep


def _write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def _certify(**changes):
    cfg = copy.deepcopy(EXAMPLE_CONFIGS["certify"])
    cfg.update(changes)
    return cfg


def test_heat_run_passes(tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--config", str(_write(tmp_path, _certify())), "--out", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["overall_pass"] is True
    with open(out / "bounds.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0].keys()) == cli.BOUNDS_COLUMNS
    # measured-constant and analytic-constant rows for every norm
    assert len(rows) == 6
    for r in rows:
        pred = np.exp(-float(r["d"]) ** 2 / (4 * float(r["k"]) ** 2 * float(r["alpha"]) * float(r["t"])))
        assert float(r["predicted"]) == pytest.approx(pred, rel=1e-12)


def test_positive_c_is_assumption_failure(tmp_path, capsys):
    cfg = _certify(coefficients={"family": "constant", "params": {"alpha": 1.0, "c": 1.0}})
    out = tmp_path / "out"
    assert main(["run", "--config", str(_write(tmp_path, cfg)), "--out", str(out)]) == 3
    assert "assumption failure" in capsys.readouterr().err
    assert json.loads((out / "report.json").read_text())["overall_pass"] is False


def test_validate_subcommand(tmp_path):
    assert main(["validate", "--config", str(_write(tmp_path, _certify()))]) == 0
    bad = _certify(coefficients={"family": "constant", "params": {"alpha": 1.0, "c": 1.0}})
    assert main(["validate", "--config", str(_write(tmp_path, bad))]) == 3


@pytest.mark.parametrize("text", ["{not json", "[]", '{"scenario": "nope"}',
                                  json.dumps(_certify(norms=[3]))])
def test_malformed_config_exit_2(tmp_path, capsys, text):
    path = tmp_path / "bad.json"
    path.write_text(text)
    assert main(["run", "--config", str(path)]) == 2
    assert "config error" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["run", "--config", str(tmp_path / "absent.json")]) == 2


def test_deterministic_reports(tmp_path):
    path = _write(tmp_path, EXAMPLE_CONFIGS["tilted-inequality"])
    for name in ("a", "b"):
        assert main(["run", "--config", str(path), "--out", str(tmp_path / name), "--seed", "7"]) == 0
    for f in ("report.json", "bounds.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_examples_lists_and_writes(tmp_path, capsys):
    assert main(["examples", "--write", str(tmp_path)]) == 0
    listed = capsys.readouterr().out
    for name in cli.SCENARIOS:
        assert name in listed
        assert json.loads((tmp_path / f"{name}.json").read_text()) == EXAMPLE_CONFIGS[name]


def test_sweep_t_monotone(tmp_path):
    path = _write(tmp_path, _certify())
    ts = list(np.linspace(1e-4, 8e-4, 10))
    rows = [r for r in sweep(path, "t", ts) if r["scenario"] == "certify:theorem1" and r["p"] == "inf"]
    assert [r["value"] for r in rows] == ts
    assert all(r["validity"] for r in rows)
    pred = [r["predicted"] for r in rows]
    assert np.all(np.diff(pred) > 0)


def test_sweep_threads_preserve_order(tmp_path):
    path = _write(tmp_path, _certify())
    ts = [8e-4, 2e-4, 5e-4]
    serial = sweep(path, "t", ts)
    threaded = sweep(path, "t", ts, threads=3)
    assert serial == threaded


def test_sweep_N_converges(tmp_path):
    cfg = _certify(regions={"X": {"interval": [[0.0, 0.25]]}, "Y": {"interval": [[0.625, 1.0]]}},
                   times={"s": 0.0, "t": [0.02]}, solver={"dt": 1e-3})
    rows = sweep(_write(tmp_path, cfg), "N", [128, 256, 512])
    for p in (1, 2, "inf"):
        m = [r["measured"] for r in rows if r["scenario"] == "certify:theorem1" and r["p"] == p]
        assert abs(m[1] - m[0]) >= 1.5 * abs(m[2] - m[1])


def test_sweep_mu_rows(tmp_path):
    rows = sweep(_write(tmp_path, _certify()), "mu", [0.0, 1.0, 2.0])
    assert rows[0]["G"] == 0.0
    assert all(r["mu_star"] == rows[0]["mu_star"] for r in rows)


def test_sweep_empty_values(tmp_path):
    with pytest.raises(ConfigError):
        sweep(_write(tmp_path, _certify()), "t", [])
    assert main(["sweep", "--config", str(_write(tmp_path, _certify())), "--axis", "t",
                 "--values", ","]) == 2


def test_sweep_out_csv(tmp_path):
    out = tmp_path / "out"
    code = main(["sweep", "--config", str(_write(tmp_path, _certify())), "--axis", "t",
                 "--values", "0.0002,0.0004", "--out", str(out)])
    assert code == 0
    with open(out / "sweep_t.csv") as fh:
        assert len(list(csv.DictReader(fh))) == 12
