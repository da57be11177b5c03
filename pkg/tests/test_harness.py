import dataclasses
import json
import os
from pathlib import Path

import numpy as np
import pytest

from regretlab import algorithms, harness
from regretlab.cli import main
from regretlab.errors import ConfigError
from regretlab.harness import (
    CSV_COLUMNS,
    ExperimentConfig,
    ResultRow,
    emit,
    load_config,
    read_csv,
    read_json,
    run_experiment,
    sweep,
    worker_count,
)
from regretlab.metrics import BoundVerdict

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
GOLDEN = Path(__file__).resolve().parent / "golden" / "sweep100.csv"
EXPECTED_MINIMAL_HASH = "bd368d3ed4664f0a"
MINIMAL = {"learner": {"kind": "ftl"}, "adversary": {"suite": "quadratic", "T": 16, "d": 2}}


def golden_configs():
    """Four learners by 25 seeds at T = 16: 100 rows, no slope rows."""
    seeds = list(range(25))
    base = {"adversary": {"suite": "quadratic", "seeds": seeds, "T": 16, "d": 2},
            "set": {"kind": "box", "lower": -1, "upper": 1}}
    out = []
    for kind in ("ftl", "iol", "md", "rda"):
        tree = json.loads(json.dumps(base))
        tree["learner"] = {"kind": kind}
        out.append(ExperimentConfig.from_dict(tree))
    return out


# -- config ------------------------------------------------------------------


def test_minimal_config_runs_and_passes():
    rows = run_experiment(ExperimentConfig.from_dict(MINIMAL))
    assert len(rows) == 1
    (row,) = rows
    assert (row.learner, row.T, row.d, row.seed) == ("ftl", 16, 2, 0)
    names = [v.bound_name for v in row.verdicts]
    assert names == ["equivalence_regret", "equivalence_forward", "ftl_regret", "ftl_stability",
                     "ftl_forward_regret", "ftl_uniform_stability"]
    assert row.passed
    assert len(row.records()) == 6


def test_minimal_config_matches_direct_replay():
    from regretlab.algorithms import FTL, run
    from regretlab.metrics import diagnose

    cfg = ExperimentConfig.from_dict(MINIMAL)
    (row,) = run_experiment(cfg)
    rep = diagnose(run(FTL(), cfg.sequence(16, 0)))
    assert (row.regret, row.forward_regret, row.stability) == (rep.regret, rep.forward_regret, rep.stability)


def test_shipped_config_file_loads():
    cfg = load_config(str(CONFIGS / "ftl_quadratic.yaml"))
    assert cfg.tree["learner"]["kind"] == "ftl"
    assert cfg.horizons == [16]
    sweep_cfg = load_config(str(CONFIGS / "iol_approx_sweep.yaml"))
    assert sweep_cfg.horizons == [2 ** k for k in range(6, 13)]
    assert sweep_cfg.seeds == [0, 1, 2]


def test_overrides_are_applied_and_parsed():
    cfg = load_config(None, ["adversary.T=64", "learner.kind=iol", "mode.delta={kind: inverse_t, c: 2}",
                             "mode.kind=approx"])
    assert cfg.tree["adversary"]["T"] == 64
    assert cfg.tree["mode"]["delta"] == {"kind": "inverse_t", "c": 2}
    assert load_config(None, [], seed=7).seeds == [7]


@pytest.mark.parametrize("override, path", [
    ("adversary.T=-3", "adversary.T"),
    ("adversary.T=ten", "adversary.T"),
    ("learner.kind=sgd", "learner.kind"),
    ("learner.regime=weird", "learner.regime"),
    ("learner.typo=1", "learner.typo"),
    ("mode.kind=approx", "mode.delta"),
    ("set.kind=torus", "set"),
    ("bounds=[ftl_regret, nope]", "bounds[1]"),
    ("adversary.horizons={dyadic: [5]}", "adversary.horizons.dyadic"),
])
def test_config_errors_name_the_field(override, path):
    with pytest.raises(ConfigError, match=r"^" + path.replace("[", r"\[").replace("]", r"\]")):
        load_config(None, [override])


def test_override_without_equals_is_refused():
    with pytest.raises(ConfigError):
        load_config(None, ["adversary.T"])


def test_regime_premise_is_reported():
    with pytest.raises(ConfigError, match="strongly convex"):
        run_experiment(load_config(None, ["adversary.suite=linear"]))


def test_config_hash_is_pinned():
    # frozen once: the canonical JSON of the minimal config is platform independent
    cfg = ExperimentConfig.from_dict(MINIMAL)
    assert cfg.hash == ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))).hash
    assert cfg.hash == EXPECTED_MINIMAL_HASH
    assert cfg.with_updates(output={"path": "x.csv"}).hash == cfg.hash
    assert cfg.with_updates(adversary={"T": 17}).hash != cfg.hash


def test_config_round_trips_through_yaml(tmp_path):
    cfg = load_config(str(CONFIGS / "iol_approx_sweep.yaml"))
    p = tmp_path / "c.yaml"
    p.write_text(cfg.dumps())
    again = load_config(str(p))
    assert again.tree == cfg.tree and again.hash == cfg.hash


def test_worker_count_respects_cap(monkeypatch):
    monkeypatch.setenv("REGRETLAB_THREADS", "3")
    assert worker_count(10) == 3
    assert worker_count(2) == 2
    monkeypatch.setenv("REGRETLAB_THREADS", "0")
    assert worker_count(10) == 1


# -- output ------------------------------------------------------------------


def test_empty_rows_give_header_only():
    assert emit([]) == ",".join(CSV_COLUMNS) + "\n"
    assert json.loads(emit([], "json")) == []


def test_json_round_trip_is_bit_identical():
    (row,) = run_experiment(ExperimentConfig.from_dict(MINIMAL))
    recs = read_json(emit([row], "json"))
    assert recs == row.records()
    for got, want in zip(recs, row.records()):
        for c in ("regret", "bound_theoretical", "bound_empirical", "slack"):
            assert np.float64(got[c]).tobytes() == np.float64(want[c]).tobytes()


def test_csv_round_trip():
    (row,) = run_experiment(ExperimentConfig.from_dict(MINIMAL))
    assert read_csv(emit([row])) == row.records()


def test_non_finite_and_missing_values_render():
    row = ResultRow("h", "ftl", "exact", 0, 2, None, None, None, None,
                    [BoundVerdict("slope", 0.6, float("inf"))])
    text = emit([row])
    assert ",inf," in text
    rec = read_csv(text)[0]
    assert rec["seed"] is None and rec["regret"] is None and rec["pass"] is False


def test_emit_writes_file(tmp_path):
    p = tmp_path / "out.csv"
    text = emit(run_experiment(ExperimentConfig.from_dict(MINIMAL)), "csv", str(p))
    assert p.read_text() == text
    with pytest.raises(ConfigError):
        emit([], "xml")


def test_sweep_keeps_order_and_adds_slope_row():
    cfg = load_config(None, ["adversary.horizons=[8, 16, 32]", "adversary.seeds=[1, 2]"])
    rows = sweep([cfg, ExperimentConfig.from_dict(MINIMAL)])
    assert [(r.T, r.seed) for r in rows] == [(8, 1), (8, 2), (16, 1), (16, 2), (32, 1), (32, 2),
                                             (32, None), (16, 0)]
    assert rows[6].verdicts[0].bound_name.startswith("slope_regret")


def test_pool_and_serial_runs_agree(monkeypatch):
    cfg = load_config(None, ["adversary.seeds=[0, 1, 2]"])
    monkeypatch.setenv("REGRETLAB_THREADS", "1")
    serial = emit(run_experiment(cfg))
    monkeypatch.setenv("REGRETLAB_THREADS", "2")
    assert emit(run_experiment(cfg)) == serial


def test_hundred_row_sweep_matches_golden_file():
    rows = sweep(golden_configs())
    assert len(rows) == 100
    text = emit(rows)
    if os.environ.get("REGRETLAB_REGEN_GOLDEN"):
        GOLDEN.parent.mkdir(exist_ok=True)
        GOLDEN.write_text(text)
    assert text == GOLDEN.read_text()
    assert all(r.passed for r in rows)


# -- command line ------------------------------------------------------------


def test_cli_run_exits_zero(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["run", str(CONFIGS / "ftl_quadratic.yaml"), "--out", str(out), "--format", "json"]) == 0
    assert len(json.loads(out.read_text())) == 6
    assert main(["run", "--set", "adversary.T=8", "--seed", "3"]) == 0
    assert capsys.readouterr().out.startswith("config_hash,learner")


def test_cli_config_error_exits_two(capsys):
    assert main(["run", "--set", "adversary.d=zero"]) == 2
    assert "adversary.d" in capsys.readouterr().err


def test_cli_failing_bound_exits_one(monkeypatch, capsys):
    real = harness.check_bound

    def broken(traj, name, report=None, opt=None):
        v = real(traj, name, report, opt)
        return BoundVerdict(v.bound_name, -1.0, v.empirical_value) if name == "ftl_regret" else v

    monkeypatch.setenv("REGRETLAB_THREADS", "1")  # patches do not reach pool workers
    monkeypatch.setattr(harness, "check_bound", broken)
    assert main(["run", "--set", "adversary.T=8"]) == 1
    assert "FAIL ftl_regret" in capsys.readouterr().err


def test_cli_strict_truncation_exits_three(monkeypatch, capsys):
    real = algorithms.solve

    def truncating(obj, *args, **kw):
        w, cert = real(obj, *args, **kw)
        return w, dataclasses.replace(cert, status="Truncated", delta=cert.delta + 1.0)

    monkeypatch.setenv("REGRETLAB_THREADS", "1")
    monkeypatch.setattr(algorithms, "solve", truncating)
    assert main(["run", "--strict", "--set", "adversary.T=4"]) == 3
    assert "round 1" in capsys.readouterr().err
    # without --strict the run completes and reports the slack instead
    assert main(["run", "--set", "adversary.T=4"]) in (0, 1)


def test_cli_unknown_suite_is_rejected():
    with pytest.raises(SystemExit):
        main(["acceptance", "nonsense"])
