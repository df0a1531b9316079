"""Run execution, sweeps, persistence, figures and the command line."""

import json

import numpy as np
import pytest
from click.testing import CliRunner

from qtf.cli import main
from qtf.config import config_hash, parse_config
from qtf.grid import read_snapshot
from qtf.report import load_diagnostics, render_run_report
from qtf.runner import parse_sweep_manifest, resolve_sweep_configs, run_single, run_sweep

BASE = {
    "domain": {"nx": 8, "ny": 8, "nz": 8},
    "dt": 0.01,
    "t_end": 0.05,
    "params": {"a": 1.0, "b": 0.5, "c": 1.0},
    "initial_condition": {"kind": "random_smooth", "seed": 3, "amplitude": 0.05},
}


def base_config(**overrides):
    doc = json.loads(json.dumps(BASE))
    doc.update(overrides)
    return parse_config(json.dumps(doc))


# ---------------------------------------------------------------------------
# single runs


def test_zero_initial_condition_stays_zero(tmp_path):
    cfg = base_config(initial_condition={"kind": "zero"})
    summary = run_single(cfg, output_dir=tmp_path, render_figures=False)
    assert summary["status"] == "ok"
    assert summary["final_kinetic"] == 0.0
    assert summary["final_q_l2"] == 0.0
    cols = load_diagnostics(tmp_path / "diagnostics.csv")
    assert np.all(cols["kinetic"] == 0.0)
    assert np.all(cols["q_l2"] == 0.0)


def test_run_single_outputs(tmp_path):
    cfg = base_config(snapshot_stride=5)
    summary = run_single(cfg, output_dir=tmp_path)
    assert summary["status"] == "ok"
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["config_hash"] == config_hash(cfg)
    assert manifest["status"] == "ok"
    assert manifest["wall_time_s"] > 0
    assert (tmp_path / "decay.png").exists()
    assert (tmp_path / "energy.png").exists()
    field, t, label = read_snapshot(tmp_path / "snapshot_000005.q.bin")
    assert label == "qtensor" and t == pytest.approx(0.05)
    assert field.domain.shape == (8, 8, 8)
    cols = load_diagnostics(tmp_path / "diagnostics.csv")
    assert len(cols["t"]) == 6  # initial record + 5 steps
    assert np.all(np.diff(cols["q_l2"]) <= 0.0)


def test_determinism_byte_identical_csv(tmp_path):
    cfg = base_config()
    run_single(cfg, output_dir=tmp_path / "a", render_figures=False)
    run_single(cfg, output_dir=tmp_path / "b", render_figures=False)
    a = (tmp_path / "a" / "diagnostics.csv").read_bytes()
    b = (tmp_path / "b" / "diagnostics.csv").read_bytes()
    assert a == b


def test_record_and_monitor_strides(tmp_path):
    cfg = base_config(t_end=0.1, record_stride=2, monitor_stride=2)
    summary = run_single(cfg, output_dir=tmp_path, render_figures=False)
    records = summary["records"]
    assert len(records) == 6  # initial + every other of 10 steps
    monitors = [r.monitor for r in records[1:]]
    assert sum(m == m for m in monitors) < len(monitors)  # some NaN (skipped)
    assert summary["max_monitor"] is not None


def test_picard_mode_run(tmp_path):
    cfg = base_config(mode="picard", picard={"window": 0.05, "tol": 1e-10, "max_iters": 20},
                      t_end=0.1)
    summary = run_single(cfg, output_dir=tmp_path, render_figures=False)
    assert summary["status"] == "ok"
    assert len(summary["picard"]) == 2
    for rep in summary["picard"]:
        assert rep["converged"]
        assert all(r < 1.0 for r in rep["ratios"])


def test_direct_and_picard_agree(tmp_path):
    direct = run_single(base_config(), render_figures=False)
    picard = run_single(
        base_config(mode="picard", picard={"window": 0.05, "tol": 1e-12, "max_iters": 20}),
        render_figures=False,
    )
    assert direct["final_q_l2"] == pytest.approx(picard["final_q_l2"], abs=1e-10)
    assert direct["final_kinetic"] == pytest.approx(picard["final_kinetic"], abs=1e-10)


def test_damping_warning_logged(caplog):
    cfg = base_config(params={"a": 0.1, "b": 1.0, "c": 1.0}, t_end=0.01)
    with caplog.at_level("WARNING", logger="qtf"):
        run_single(cfg, render_figures=False)
    assert any("damping" in rec.message for rec in caplog.records)


# ---------------------------------------------------------------------------
# sweeps


def sweep_manifest():
    return parse_sweep_manifest(json.dumps({
        "base": BASE,
        "axes": [{"path": "initial_condition.amplitude", "values": [0.01, 0.05]}],
    }))


def test_resolve_sweep_cartesian():
    manifest = sweep_manifest()
    configs = resolve_sweep_configs(manifest)
    assert len(configs) == 2
    amps = sorted(c.initial_condition["amplitude"] for c in configs)
    assert amps == [0.01, 0.05]


def test_sweep_limits_and_validation():
    from qtf.errors import ConfigError

    with pytest.raises(ConfigError):
        parse_sweep_manifest("{bad json")
    with pytest.raises(ConfigError, match="base"):
        parse_sweep_manifest(json.dumps({"axes": []}))
    big = parse_sweep_manifest(json.dumps({
        "base": BASE,
        "axes": [{"path": "dt", "values": list(np.linspace(0.001, 0.002, 101))},
                 {"path": "t_end", "values": list(np.linspace(0.1, 0.2, 101))}],
    }))
    with pytest.raises(ConfigError, match="limit"):
        resolve_sweep_configs(big)


def test_run_sweep_and_resume(tmp_path):
    manifest = run_sweep(sweep_manifest(), tmp_path)
    assert len(manifest.results) == 2
    assert all(r["status"] == "ok" for r in manifest.results.values())
    results_before = json.loads((tmp_path / "results.json").read_text())
    # wall times identify whether runs were re-executed on resume
    again = run_sweep(sweep_manifest(), tmp_path, resume=True)
    results_after = json.loads((tmp_path / "results.json").read_text())
    assert results_after == results_before
    assert len(again.results) == 2


def test_sweep_records_failures_and_continues(tmp_path):
    manifest = parse_sweep_manifest(json.dumps({
        "base": BASE,
        # dt far above the bulk stability limit at amplitude 5 keeps
        # rejecting even after halving; that run fails, the other passes
        "axes": [{"path": "initial_condition.amplitude", "values": [0.05, 40.0]}],
    }))
    result = run_sweep(manifest, tmp_path)
    statuses = sorted(r["status"] for r in result.results.values())
    assert statuses == ["failed", "ok"]


# ---------------------------------------------------------------------------
# CLI


def test_cli_simulate_and_report(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(BASE))
    runner = CliRunner()
    result = runner.invoke(main, ["simulate", "--config", str(cfg_path),
                                  "--out", str(tmp_path / "run")])
    assert result.exit_code == 0, result.output
    assert "status: ok" in result.output
    (tmp_path / "run" / "decay.png").unlink()
    report = runner.invoke(main, ["report", "--run", str(tmp_path / "run")])
    assert report.exit_code == 0, report.output
    assert (tmp_path / "run" / "decay.png").exists()


def test_cli_simulate_requires_output_dir(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(BASE))
    result = CliRunner().invoke(main, ["simulate", "--config", str(cfg_path)])
    assert result.exit_code == 1
    assert "output directory" in result.output


def test_cli_simulate_rejects_bad_config(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"domain": {"nx": 8, "ny": 8, "nz": 8}, "dt": 0.01,
                                    "t_end": 1.0, "params": {"xi": 0.5}}))
    result = CliRunner().invoke(main, ["simulate", "--config", str(cfg_path),
                                       "--out", str(tmp_path / "run")])
    assert result.exit_code == 1
    assert "error" in result.output


def test_cli_verify_passes():
    result = CliRunner().invoke(main, ["verify"])
    assert result.exit_code == 0, result.output
    assert "[FAIL]" not in result.output
    assert result.output.count("[PASS]") >= 5


def test_cli_sweep(tmp_path):
    manifest_path = tmp_path / "manifest.json"
    manifest_path.write_text(json.dumps({
        "base": BASE,
        "axes": [{"path": "initial_condition.seed", "values": [1, 2]}],
    }))
    result = CliRunner().invoke(main, ["sweep", "--manifest", str(manifest_path),
                                       "--out", str(tmp_path / "out")])
    assert result.exit_code == 0, result.output
    assert "ok: 2" in result.output


def test_report_helpers(tmp_path):
    cfg = base_config()
    run_single(cfg, output_dir=tmp_path, render_figures=False)
    paths = render_run_report(tmp_path)
    assert [p.name for p in paths] == ["decay.png", "energy.png"]
    assert render_run_report(tmp_path / "nonexistent") == []
