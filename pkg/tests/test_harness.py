"""Experiment harness tests.

Oracles: literal expected strings for the CSV float format, hand-computed
mean and confidence half-width for the summary lines, the per-app trial
runners themselves for seed-layout cross-checks, and byte comparison of
CSV files for worker-count independence.
"""

import csv
import dataclasses
import json
import math
import os

import numpy as np
import pytest

from manifold_ris import cli, fairness, harness, random_access
from manifold_ris.harness import (
    ConfigError,
    ExperimentConfig,
    app_columns,
    build_app_config,
    config_hash,
    run_experiment,
    run_sweep,
    summarize,
    write_csv,
)


SMALL_APP4 = {
    "n_h": 16, "beams_per_group": 2, "design_grid": 128,
    "design_iters": 120, "design_starts": 2, "design_refine_rounds": 1,
    "device_counts": (10, 20),
}

LIGHT_APP2 = {
    "outer_iters": 3, "power_iters": 120, "solver_iters": 40,
    "pso_swarm": 10, "pso_iters": 8, "schemes": ("cg",),
}


# ---------------------------------------------------------------------------
# Configuration and hashing


def test_config_rejects_unknown_app():
    with pytest.raises(ConfigError, match="unknown app"):
        ExperimentConfig(app="app9")


def test_config_rejects_bad_counts():
    with pytest.raises(ConfigError, match="trials"):
        ExperimentConfig(app="app1", trials=0)
    with pytest.raises(ConfigError, match="parallelism"):
        ExperimentConfig(app="app1", parallelism=0)


def test_unknown_parameter_names_field_and_app():
    with pytest.raises(ConfigError, match="'bogus_key' for app2"):
        build_app_config("app2", {"bogus_key": 3})
    with pytest.raises(ConfigError, match="'device_counts' for app1"):
        build_app_config("app1", {"device_counts": (4,)})


def test_invalid_value_error_names_field():
    with pytest.raises(ConfigError, match="tau_p"):
        build_app_config("app4", {"tau_p": 0})


def test_selftest_takes_no_parameters():
    with pytest.raises(ConfigError, match="'anything' for selftest"):
        build_app_config("selftest", {"anything": 1})


def test_app_config_lists_become_tuples():
    cfg, extras = build_app_config(
        "app4", {"sector_deg": [60.0, 120.0], "device_counts": [5, 10]})
    assert cfg.sector_deg == (60.0, 120.0)
    assert extras == {"device_counts": (5, 10)}


def test_config_hash_ignores_ordering_and_plumbing():
    a = ExperimentConfig(app="app2", params={"m": 32, "n": 50}, trials=3,
                         base_seed=9, parallelism=1, output_path="x.csv")
    b = ExperimentConfig(app="app2", params={"n": 50, "m": 32}, trials=3,
                         base_seed=9, parallelism=8, output_path="y.csv")
    assert config_hash(a) == config_hash(b)
    assert len(config_hash(a)) == 16
    assert all(c in "0123456789abcdef" for c in config_hash(a))


def test_config_hash_tracks_science_fields():
    base = ExperimentConfig(app="app2", params={"m": 32}, trials=3,
                            base_seed=9)
    for change in ({"trials": 4}, {"base_seed": 10},
                   {"params": {"m": 33}}, {"app": "app3", "params": {}}):
        other = dataclasses.replace(base, **change)
        assert config_hash(other) != config_hash(base)


# ---------------------------------------------------------------------------
# CSV format


def test_write_csv_formats(tmp_path):
    path = tmp_path / "fmt.csv"
    rows = [{"a": 0.145833333333333, "b": True, "c": 12, "d": "cg",
             "e": 1e-15}]
    write_csv(str(path), ("a", "b", "c", "d", "e"), rows)
    assert path.read_bytes() == b"a,b,c,d,e\r\n0.145833333,1,12,cg,1e-15\r\n"


def test_write_csv_missing_value_names_column(tmp_path):
    with pytest.raises(ValueError, match="'b'"):
        write_csv(str(tmp_path / "x.csv"), ("a", "b"), [{"a": 1.0}])


def test_app_columns_always_carry_version_and_hash():
    for app in harness.APPS:
        cols = app_columns(app)
        assert cols[0] == "schema_version"
        assert cols[1] == "config_hash"


# ---------------------------------------------------------------------------
# Summary


def test_summary_mean_and_half_width_by_hand():
    rows = [{"scheme": "cg", "p_ut_dbm": 1.0},
            {"scheme": "cg", "p_ut_dbm": 3.0}]
    lines = summarize("app2", rows)
    assert len(lines) == 1
    # mean 2, sample std sqrt(2), half-width 1.96*sqrt(2)/sqrt(2) = 1.96
    assert lines[0] == "p_ut_dbm[scheme=cg] mean=2 +-1.96 (n=2)"


def test_summary_single_row_has_zero_half_width():
    lines = summarize("app2", [{"scheme": "pso", "p_ut_dbm": 5.0}])
    assert lines[0].endswith("+-0 (n=1)")


# ---------------------------------------------------------------------------
# run_experiment


def test_single_trial_row_set():
    cfg = ExperimentConfig(app="app1", trials=1, output_path=None)
    res = run_experiment(cfg, quiet=True)
    assert not res.failures
    base = fairness.FairnessConfig()
    expected = (1 + len(base.baselines)) * len(base.p_max_dbm)
    assert len(res.rows) == expected
    assert {row["trial"] for row in res.rows} == {0}
    for row in res.rows:
        assert set(row) == set(res.columns)
        assert row["schema_version"] == harness.SCHEMA_VERSION
        assert row["config_hash"] == config_hash(cfg)


def test_parallel_runs_are_byte_identical(tmp_path):
    paths = []
    for workers in (1, 8):
        path = tmp_path / f"app1_p{workers}.csv"
        cfg = ExperimentConfig(app="app1", trials=2, base_seed=11,
                               parallelism=workers, output_path=str(path))
        res = run_experiment(cfg, quiet=True)
        assert not res.failures
        paths.append(path)
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_app4_parallel_and_seed_layout(tmp_path):
    path1 = tmp_path / "a4_serial.csv"
    path4 = tmp_path / "a4_pool.csv"
    cfg = ExperimentConfig(app="app4", params=SMALL_APP4, trials=3,
                           base_seed=5, output_path=str(path1))
    res = run_experiment(cfg, quiet=True)
    run_experiment(dataclasses.replace(cfg, parallelism=4,
                                       output_path=str(path4)), quiet=True)
    assert path1.read_bytes() == path4.read_bytes()

    app_cfg, _ = build_app_config(
        "app4", {k: v for k, v in SMALL_APP4.items()
                 if k != "device_counts"})
    direct = random_access.run_app4(
        app_cfg, seed=5, device_counts=SMALL_APP4["device_counts"], trials=3)
    assert len(direct) == len(res.rows)
    for mine, ref in zip(res.rows, direct):
        for key in random_access.CSV_COLUMNS:
            assert mine[key] == ref[key]


def test_rows_identical_across_base_seed_reuse():
    cfg = ExperimentConfig(app="app3", trials=1, base_seed=21,
                           output_path=None)
    first = run_experiment(cfg, quiet=True).rows
    second = run_experiment(cfg, quiet=True).rows
    assert first == second


def test_partial_failure_continues(monkeypatch):
    original = harness._execute_task

    def flaky(task):
        if task["trial"] == 1:
            raise RuntimeError("synthetic trial failure")
        return original(task)

    monkeypatch.setattr(harness, "_execute_task", flaky)
    cfg = ExperimentConfig(app="app1", trials=3, output_path=None)
    res = run_experiment(cfg, quiet=True)
    assert len(res.failures) == 1
    assert res.failures[0][0] == 1
    assert "synthetic trial failure" in res.failures[0][1]
    assert {row["trial"] for row in res.rows} == {0, 2}
    assert not res.ok


def test_selftest_passes_and_is_deterministic():
    cfg = ExperimentConfig(app="selftest", output_path=None)
    res = run_experiment(cfg, quiet=True)
    assert res.ok
    assert [row["check"] for row in res.rows] == [
        "manifold_point_feasibility", "manifold_tangency",
        "manifold_retraction_feasibility", "mask_fit_gradient",
        "solver_rayleigh_oracle"]
    assert all(row["passed"] for row in res.rows)
    again = run_experiment(cfg, quiet=True)
    assert res.rows == again.rows


def test_iter_records_long_format():
    cfg = ExperimentConfig(app="app4", params=SMALL_APP4, trials=2,
                           base_seed=3, output_path=None)
    res = run_experiment(cfg, quiet=True)
    records = list(harness.iter_records(cfg, res))
    assert len(records) == 2 * len(res.rows)
    by_metric = {}
    for rec in records:
        assert rec.config_hash == config_hash(cfg)
        by_metric.setdefault(rec.metric_name, []).append(rec)
    assert set(by_metric) == {"throughput", "sum_se_bpcu"}
    seeds = sorted({rec.seed for rec in records})
    assert seeds == [3, 4, 5, 6]
    extras = dict(records[0].extras)
    assert set(extras) == {"scheme", "device_count"}


# ---------------------------------------------------------------------------
# run_sweep


def test_sweep_scalar_values_multiply_rows(tmp_path):
    path = tmp_path / "sweep1.csv"
    cfg = ExperimentConfig(app="app1", trials=1, base_seed=2,
                           output_path=str(path))
    res = run_sweep(cfg, "p_max_dbm", [15, 20, 25, 30], quiet=True)
    base = fairness.FairnessConfig(p_max_dbm=(15.0,))
    per_value = 1 + len(base.baselines)
    assert len(res.rows) == 4 * per_value
    assert res.columns[-2:] == ("sweep_param", "sweep_value")
    for value in (15, 20, 25, 30):
        matching = [r for r in res.rows if r["sweep_value"] == value]
        assert len(matching) == per_value
        assert all(r["p_max_dbm"] == value for r in matching)
    with open(path, encoding="utf-8") as handle:
        rows = list(csv.DictReader(handle))
    assert len(rows) == len(res.rows)
    assert rows[0]["sweep_param"] == "p_max_dbm"


def test_sweep_uses_native_columns_when_present():
    cfg = ExperimentConfig(app="app2", params=LIGHT_APP2, trials=1,
                           base_seed=4, output_path=None)
    res = run_sweep(cfg, "n", [25, 50], quiet=True)
    assert "sweep_param" not in res.columns
    assert {row["sweep_axis"] for row in res.rows} == {"n"}
    assert {row["sweep_value"] for row in res.rows} == {25, 50}
    hashes = {row["sweep_value"]: row["config_hash"] for row in res.rows}
    assert hashes[25] != hashes[50]


def test_sweep_single_value_matches_plain_run():
    cfg = ExperimentConfig(app="app2", params=LIGHT_APP2, trials=1,
                           base_seed=6, output_path=None)
    swept = run_sweep(cfg, "n", [40], quiet=True)
    plain_cfg = dataclasses.replace(cfg, params={**LIGHT_APP2, "n": 40})
    plain = run_experiment(plain_cfg, quiet=True)
    assert len(swept.rows) == len(plain.rows)
    for srow, prow in zip(swept.rows, plain.rows):
        for key in ("scheme", "trial", "p_ut_dbm", "feasible"):
            assert srow[key] == prow[key]
        assert srow["sweep_axis"] == "n"
        assert srow["sweep_value"] == 40


def test_sweep_more_elements_never_need_more_power():
    cfg = ExperimentConfig(app="app2", params=LIGHT_APP2, trials=4,
                           base_seed=12, output_path=None)
    res = run_sweep(cfg, "n", [25, 50, 100], quiet=True)
    assert not res.failures
    means = {}
    for value in (25, 50, 100):
        vals = [row["p_ut_dbm"] for row in res.rows
                if row["sweep_value"] == value and row["scheme"] == "cg"]
        assert len(vals) == 4
        means[value] = float(np.mean(vals))
    assert means[25] >= means[50] - 0.2
    assert means[50] >= means[100] - 0.2


def test_sweep_rejects_bad_input():
    cfg = ExperimentConfig(app="app2", params=LIGHT_APP2, output_path=None)
    with pytest.raises(ConfigError, match="value"):
        run_sweep(cfg, "n", [], quiet=True)
    with pytest.raises(ConfigError, match="'not_a_param' for app2"):
        run_sweep(cfg, "not_a_param", [1], quiet=True)
    selftest = ExperimentConfig(app="selftest", output_path=None)
    with pytest.raises(ConfigError, match="sweep"):
        run_sweep(selftest, "n", [1], quiet=True)


# ---------------------------------------------------------------------------
# CLI


def _write_json(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


def test_cli_selftest_exit_zero(capsys):
    assert cli.main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert "solver_rayleigh_oracle" in out


def test_cli_app_run_writes_csv(tmp_path, capsys):
    config = _write_json(tmp_path, "cfg.json", {
        "params": dict(SMALL_APP4, device_counts=[10]), "trials": 2,
        "base_seed": 5})
    out_path = tmp_path / "cli.csv"
    code = cli.main(["app4", "--config", config, "--out", str(out_path)])
    assert code == 0
    assert "throughput[" in capsys.readouterr().out
    with open(out_path, encoding="utf-8") as handle:
        header = next(csv.reader(handle))
    assert tuple(header) == app_columns("app4")


def test_cli_flag_overrides_beat_config(tmp_path):
    config = _write_json(tmp_path, "cfg.json", {
        "app": "app1", "trials": 5, "base_seed": 1})
    out_path = tmp_path / "override.csv"
    code = cli.main(["app1", "--config", config, "--trials", "1",
                     "--seed", "3", "--out", str(out_path)])
    assert code == 0
    with open(out_path, encoding="utf-8") as handle:
        rows = list(csv.DictReader(handle))
    assert {row["trial"] for row in rows} == {"0"}
    expected = ExperimentConfig(app="app1", trials=1, base_seed=3)
    assert rows[0]["config_hash"] == config_hash(expected)


def test_cli_config_errors_exit_one(tmp_path, capsys):
    bad_param = _write_json(tmp_path, "bad.json", {"params": {"zzz": 1}})
    assert cli.main(["app1", "--config", bad_param]) == 1
    assert "zzz" in capsys.readouterr().err

    mismatch = _write_json(tmp_path, "mismatch.json", {"app": "app2"})
    assert cli.main(["app1", "--config", mismatch]) == 1

    not_json = tmp_path / "broken.json"
    not_json.write_text("{nope", encoding="utf-8")
    assert cli.main(["app1", "--config", str(not_json)]) == 1
    assert cli.main(["app1", "--config", str(tmp_path / "missing.json")]) == 1

    scalar = tmp_path / "scalar.json"
    scalar.write_text("[1, 2]", encoding="utf-8")
    assert cli.main(["app1", "--config", str(scalar)]) == 1

    unknown_field = _write_json(tmp_path, "field.json",
                                {"app": "app1", "zingers": 2})
    assert cli.main(["app1", "--config", unknown_field]) == 1


def test_cli_runtime_failure_exit_two(monkeypatch, tmp_path, capsys):
    original = harness._execute_task

    def flaky(task):
        if task["trial"] == 0:
            raise RuntimeError("boom")
        return original(task)

    monkeypatch.setattr(harness, "_execute_task", flaky)
    config = _write_json(tmp_path, "cfg.json", {"trials": 2})
    out_path = tmp_path / "partial.csv"
    code = cli.main(["app1", "--config", config, "--out", str(out_path)])
    assert code == 2
    assert "boom" in capsys.readouterr().out
    with open(out_path, encoding="utf-8") as handle:
        rows = list(csv.DictReader(handle))
    assert rows and {row["trial"] for row in rows} == {"1"}


def test_cli_sweep_parses_values(tmp_path):
    config = _write_json(tmp_path, "cfg.json", {
        "app": "app2", "params": LIGHT_APP2, "trials": 1, "base_seed": 2})
    out_path = tmp_path / "sweep.csv"
    code = cli.main(["sweep", "--config", config, "--param", "n",
                     "--values", "25,50", "--out", str(out_path)])
    assert code == 0
    with open(out_path, encoding="utf-8") as handle:
        rows = list(csv.DictReader(handle))
    assert {row["sweep_value"] for row in rows} == {"25", "50"}
    assert cli.main(["sweep", "--config", config, "--param", "n",
                     "--values", "25,,50"]) == 1
