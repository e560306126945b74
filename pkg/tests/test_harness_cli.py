import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from jlps import cli
from jlps.harness import (
    ConfigError,
    EnsembleSpec,
    Recorder,
    build_config,
    case_rng,
    draw_sequence,
    ensemble,
    load_config,
    run_ordered,
    strip_run_info,
    summarize,
    verify_report,
)
from jlps.quadrature import NumericalFault

SMALL_IDENTITY = """
experiment = "identity"
params = [[0.0, 0.0]]
k_list = [1, 2]

[ensemble]
count = 6
support_max = 12
seed = 7

[options]
composition_levels = [64, 128]

[tolerances]
composition = 1e-4
"""


def _write(tmp_path, text, name="cfg.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


# -- config ----------------------------------------------------------------


def test_defaults_build_for_every_experiment():
    for name in ("identity", "kernels", "decay", "equivalence", "multiplier", "apweight"):
        cfg = build_config(name)
        assert cfg.experiment == name
        json.dumps(cfg.echo())


def test_overrides_merge_over_defaults():
    cfg = build_config("identity", {"ensemble": {"count": 3}, "tolerances": {"identity_rel": 1e-6}})
    assert cfg.ensemble.count == 3
    assert cfg.ensemble.support_max == 32
    assert cfg.tolerances["identity_rel"] == 1e-6
    assert cfg.tolerances["composition"] == 1e-6


@pytest.mark.parametrize(
    "raw",
    [
        {"bogus": 1},
        {"experiment": "kernels"},
        {"ensemble": {"count": 0}},
        {"ensemble": {"support_max": -1}},
        {"ensemble": {"distribution": "cauchy"}},
        {"ensemble": {"seed": 2**64}},
        {"ensemble": {"colour": "red"}},
        {"model": {"L_init": 128, "L_max": 64}},
        {"model": {"tol": 0.0}},
        {"params": [[-1.0, 0.0]]},
        {"k_list": [0]},
        {"p_list": [1.0]},
        {"weights": [{"kind": "power"}]},
        {"weights": [{"kind": "bumpy"}]},
        {"weights": [{"kind": "table", "path": "missing.csv"}]},
    ],
)
def test_invalid_configs_rejected(raw):
    with pytest.raises(ConfigError):
        build_config("identity", raw)


def test_unknown_experiment():
    with pytest.raises(ConfigError):
        build_config("nonsense")


def test_load_config_reports_bad_toml(tmp_path):
    with pytest.raises(ConfigError):
        load_config("identity", _write(tmp_path, "ensemble = [unclosed"))
    with pytest.raises(ConfigError):
        load_config("identity", tmp_path / "absent.toml")


def test_table_weight_path_is_relative_to_config(tmp_path):
    (tmp_path / "w.csv").write_text("n,w\n0,1\n1,2\n")
    cfg = load_config("equivalence", _write(tmp_path, 'weights = [{kind = "table", path = "w.csv"}]'))
    assert cfg.weights[0].values(2).tolist() == [1.0, 2.0]


# -- ensembles -------------------------------------------------------------


def test_case_streams_are_independent_of_order():
    a = [case_rng(5, i).standard_normal(3) for i in range(4)]
    b = [case_rng(5, i).standard_normal(3) for i in reversed(range(4))][::-1]
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a[0], a[1])


@given(st.integers(0, 2**64 - 1), st.integers(0, 40), st.sampled_from(["gaussian", "rademacher", "sparse"]))
def test_draw_sequence_shape(seed, smax, dist):
    f = draw_sequence(case_rng(seed, 0), smax, dist)
    assert 1 <= len(f) <= smax + 1
    assert f[-1] != 0
    if dist == "rademacher":
        assert set(np.abs(f)) == {1.0}


def test_ensemble_seed_changes_draws():
    e1 = ensemble(EnsembleSpec(count=5, seed=1))
    e2 = ensemble(EnsembleSpec(count=5, seed=2))
    assert len(e1) == 5
    assert any(len(a) != len(b) or not np.array_equal(a, b) for a, b in zip(e1, e2))


def test_run_ordered_keeps_order():
    assert run_ordered(lambda x: x * x, list(range(20)), threads=4) == [x * x for x in range(20)]


# -- checks ----------------------------------------------------------------


def test_summarize_aggregates():
    rec = Recorder()
    rec.check("mx", "max", "<", 1.0)
    rec.check("sl", "slope", "in", [-1.1, -0.9])
    rec.check("sp", "spread", "<=", 2.0, hard=False)
    rec.check("none", "max", "<", 1.0, hard=False)
    for v in (0.1, 0.5):
        rec.add("mx", v)
    for x in (1, 2, 4, 8):
        rec.add("sl", 3.0 / x, x=x)
    rec.add("sp", 1.0)
    rec.add("sp", 3.0)
    checks = {n: {"agg": c.agg, "op": c.op, "threshold": c.threshold, "hard": c.hard} for n, c in rec.checks.items()}
    s = summarize(rec.cases, checks)
    assert s["mx"]["value"] == 0.5 and s["mx"]["passed"]
    assert math.isclose(s["sl"]["value"], -1.0) and s["sl"]["passed"]
    assert s["sp"]["value"] == 3.0 and not s["sp"]["passed"]
    assert s["none"]["value"] is None and s["none"]["passed"]


def test_bad_check_definition():
    with pytest.raises(ValueError):
        Recorder().check("x", "median", "<", 1.0)


# -- CLI -------------------------------------------------------------------


def test_identity_run_writes_report(tmp_path):
    cfg = _write(tmp_path, SMALL_IDENTITY)
    out = tmp_path / "out"
    code = cli.main(["-q", "identity", "--config", str(cfg), "--out", str(out), "--plots"])
    assert code == 0
    report = json.loads((out / "identity_report.json").read_text())
    assert report["passed"]
    assert report["config"]["ensemble"]["seed"] == 7
    assert verify_report(report) == []
    assert list(out.glob("identity_*.csv"))
    assert list(out.glob("*.svg"))


def test_reports_deterministic_across_threads(tmp_path):
    cfg = _write(tmp_path, SMALL_IDENTITY)
    _, r1 = cli.run_experiment("identity", cfg, tmp_path / "a", threads=1)
    _, r2 = cli.run_experiment("identity", cfg, tmp_path / "b", threads=4)
    assert json.dumps(strip_run_info(r1), sort_keys=True) == json.dumps(strip_run_info(r2), sort_keys=True)
    assert r2["run_info"]["threads"] == 4


def test_seed_override(tmp_path):
    cfg = _write(tmp_path, SMALL_IDENTITY)
    _, r1 = cli.run_experiment("identity", cfg, tmp_path / "a", seed=99)
    _, r2 = cli.run_experiment("identity", cfg, tmp_path / "b")
    assert r1["config"]["ensemble"]["seed"] == 99
    assert r1["cases"] != r2["cases"]


def test_failing_tolerance_exits_one(tmp_path):
    cfg = _write(tmp_path, SMALL_IDENTITY + "identity_rel = 1e-30\n")
    assert cli.main(["-q", "identity", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1


def test_config_errors_exit_two(tmp_path):
    cfg = _write(tmp_path, "[ensemble]\ncount = 0\n")
    assert cli.main(["-q", "identity", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert cli.main(["-q", "identity", "--seed", "-1", "--out", str(tmp_path)]) == 2
    assert cli.main(["-q", "identity", "--threads", "0", "--out", str(tmp_path)]) == 2


def test_numerical_fault_exits_three(tmp_path, monkeypatch):
    def boom(cfg, rec, threads):
        raise NumericalFault("nonfinite eigenvalue")

    monkeypatch.setitem(cli.RUNNERS, "identity", boom)
    assert cli.main(["-q", "identity", "--out", str(tmp_path)]) == 3


def test_verify_detects_tampering(tmp_path, capsys):
    cfg = _write(tmp_path, SMALL_IDENTITY)
    out = tmp_path / "out"
    cli.main(["-q", "identity", "--config", str(cfg), "--out", str(out)])
    path = out / "identity_report.json"
    assert cli.main(["verify", str(path)]) == 0
    report = json.loads(path.read_text())
    name = next(iter(report["summary"]))
    report["summary"][name]["passed"] = not report["summary"][name]["passed"]
    path.write_text(json.dumps(report))
    assert cli.main(["verify", str(path)]) == 1
    assert "mismatch" in capsys.readouterr().out
