"""Single-run and sweep execution with reproducible manifests."""

from __future__ import annotations

import itertools
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .config import RunConfig, config_hash, config_to_dict, parse_config
from .coupled import picard_solve, step
from .diagnostics import (
    DiagnosticsWriter,
    damping_condition_check,
    decay_rate_fit,
    make_record,
)
from .errors import ConfigError, QtfError, StepRejected
from .grid import write_snapshot
from .initial import make_initial_state

__all__ = ["run_single", "SweepManifest", "parse_sweep_manifest", "run_sweep"]

log = logging.getLogger("qtf")

MAX_HALVINGS = 6
MAX_SWEEP_RUNS = 10_000


def _advance(state, dt, params, compute_monitor, depth=0):
    """One nominal step, recursively halving dt on stability rejections."""
    try:
        return step(state, dt, params, compute_monitor=compute_monitor)
    except StepRejected:
        if depth >= MAX_HALVINGS:
            raise
        mid, _ = _advance(state, dt / 2.0, params, False, depth + 1)
        return _advance(mid, dt / 2.0, params, compute_monitor, depth + 1)


def _write_state_snapshots(out_dir: Path, state, index: int) -> None:
    stem = out_dir / f"snapshot_{index:06d}"
    write_snapshot(stem.with_suffix(".u.bin"), state.u, state.t, "velocity")
    write_snapshot(stem.with_suffix(".q.bin"), state.Q, state.t, "qtensor")
    write_snapshot(stem.with_suffix(".p.bin"), state.p, state.t, "pressure")


def _fit_decay(records):
    series = [(r.t, r.q_lp_norms[2]) for r in records]
    tail = series[len(series) // 2 :]
    if len(tail) < 8 or any(v <= 0 for _, v in tail):
        return None
    return decay_rate_fit(tail)


def _summarize(records, status, picard_reports=None, failed_step=None):
    final = records[-1]
    summary = {
        "status": status,
        "steps_recorded": len(records),
        "final_t": final.t,
        "final_kinetic": final.kinetic,
        "final_lg_energy": final.lg_energy,
        "final_q_l2": final.q_lp_norms[2],
        "max_div_residual": max(r.div_residual for r in records),
        "max_monitor": max((r.monitor for r in records if r.monitor == r.monitor), default=None),
        "decay_rate": _fit_decay(records),
    }
    if picard_reports is not None:
        summary["picard"] = [
            {"iters": rep.iters, "deltas": rep.deltas, "ratios": rep.ratios,
             "converged": rep.converged}
            for rep in picard_reports
        ]
    if failed_step is not None:
        summary["failed_step"] = failed_step
    return summary


def run_single(config: RunConfig, output_dir=None, render_figures=True):
    """Execute a run to t_end; returns a summary dict (records included).

    With an output directory the diagnostics CSV, snapshots, manifest and
    report figures are written there; partial outputs are flushed and the
    manifest marked incomplete when a step fails.
    """
    out_dir = Path(output_dir or config.output_dir) if (output_dir or config.output_dir) else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    if not damping_condition_check(config.params):
        log.warning(
            "damping condition a*c >= 9/16 b^2 (a, c > 0) not satisfied: "
            "a=%g b=%g c=%g; Q-norm decay is not guaranteed",
            config.params.a, config.params.b, config.params.c,
        )

    t_start = time.perf_counter()
    state = make_initial_state(config.domain, config.initial_condition)
    nsteps = int(round(config.t_end / config.dt))
    records = [make_record(state.u, state.Q, state.p, state.t, config.params)]
    writer = DiagnosticsWriter(out_dir / "diagnostics.csv") if out_dir else None
    if writer:
        writer.write(records[0])
    if out_dir and config.snapshot_stride:
        _write_state_snapshots(out_dir, state, 0)

    status = "ok"
    failed_step = None
    picard_reports = None
    try:
        if config.mode == "direct":
            rec_count = 1
            for i in range(1, nsteps + 1):
                record_now = (i % config.record_stride == 0) or i == nsteps
                monitor_now = record_now and (rec_count % config.monitor_stride == 0)
                try:
                    state, rec = _advance(state, config.dt, config.params, monitor_now)
                except QtfError as exc:
                    status, failed_step = "failed", i
                    log.error("step %d failed: %s", i, exc)
                    break
                if record_now:
                    records.append(rec)
                    rec_count += 1
                    if writer:
                        writer.write(rec)
                if out_dir and config.snapshot_stride and i % config.snapshot_stride == 0:
                    _write_state_snapshots(out_dir, state, i)
        else:
            picard_reports = []
            window = config.picard.window
            steps_per_window = int(round(window / config.dt))
            nwindows = max(1, int(round(config.t_end / window)))
            step_index = 0
            for _ in range(nwindows):
                traj, report = picard_solve(
                    state, window, config.dt, config.params,
                    config.picard.tol, config.picard.max_iters,
                )
                picard_reports.append(report)
                if not report.converged:
                    status = "incomplete"
                    log.error("picard window at t=%g did not converge (delta=%g)",
                              state.t, report.deltas[-1])
                    break
                for m, st in enumerate(traj[1:], start=1):
                    step_index += 1
                    if step_index % config.record_stride == 0 or m == steps_per_window:
                        rec = make_record(st.u, st.Q, st.p, st.t, config.params,
                                          compute_monitor=len(records) % config.monitor_stride == 0)
                        records.append(rec)
                        if writer:
                            writer.write(rec)
                    if out_dir and config.snapshot_stride and step_index % config.snapshot_stride == 0:
                        _write_state_snapshots(out_dir, st, step_index)
                state = traj[-1]
    finally:
        if writer:
            writer.close()

    summary = _summarize(records, status, picard_reports, failed_step)
    if out_dir is not None:
        manifest = {
            "config": config_to_dict(config),
            "config_hash": config_hash(config),
            "status": status,
            "wall_time_s": time.perf_counter() - t_start,
            "summary": {k: v for k, v in summary.items() if k != "records"},
        }
        with open(out_dir / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
        if render_figures:
            from . import report
            report.render_run_report(out_dir)
    summary["records"] = records
    return summary


# ---------------------------------------------------------------------------
# sweeps

@dataclass
class SweepManifest:
    base: RunConfig
    axes: list = field(default_factory=list)  # [(field path, [values])]
    results: dict = field(default_factory=dict)  # hash -> {"status", "summary"}


def parse_sweep_manifest(text: str) -> SweepManifest:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"manifest is not valid JSON: {exc}") from exc
    for key in doc:
        if key not in ("base", "axes"):
            raise ConfigError(f"unknown key {key!r} in sweep manifest")
    if "base" not in doc:
        raise ConfigError("missing required key 'base'")
    base = parse_config(json.dumps(doc["base"]))
    axes = []
    for ax in doc.get("axes", []):
        for key in ax:
            if key not in ("path", "values"):
                raise ConfigError(f"unknown key {key!r} in sweep axis")
        axes.append((ax["path"], list(ax["values"])))
    return SweepManifest(base=base, axes=axes)


def _set_path(doc: dict, path: str, value) -> None:
    parts = path.split(".")
    cur = doc
    for part in parts[:-1]:
        cur = cur.setdefault(part, {})
    cur[parts[-1]] = value


def resolve_sweep_configs(manifest: SweepManifest) -> list[RunConfig]:
    """Cartesian product of the axes applied to the base config."""
    value_lists = [values for _, values in manifest.axes]
    total = 1
    for values in value_lists:
        total *= len(values)
    if total > MAX_SWEEP_RUNS:
        raise ConfigError(f"sweep would launch {total} runs (limit {MAX_SWEEP_RUNS})")
    configs = []
    for combo in itertools.product(*value_lists) if value_lists else [()]:
        doc = config_to_dict(manifest.base)
        for (path, _), value in zip(manifest.axes, combo):
            _set_path(doc, path, value)
        configs.append(parse_config(json.dumps(doc)))
    return configs


def _sweep_worker(args):
    config_json, run_dir = args
    config = parse_config(config_json)
    try:
        summary = run_single(config, output_dir=run_dir)
        summary.pop("records", None)
        return config_hash(config), {"status": summary["status"], "summary": summary}
    except QtfError as exc:
        return config_hash(config), {"status": "failed", "summary": {"error": str(exc)}}


def run_sweep(manifest: SweepManifest, sweep_dir, parallelism: int = 1,
              resume: bool = True) -> SweepManifest:
    """Execute every axis combination; failures are recorded, not raised.

    Completed hashes found in <sweep_dir>/results.json are skipped when
    resuming, so a finished sweep reruns nothing.
    """
    sweep_dir = Path(sweep_dir)
    sweep_dir.mkdir(parents=True, exist_ok=True)
    results_path = sweep_dir / "results.json"
    if resume and results_path.exists():
        manifest.results.update(json.loads(results_path.read_text()))

    configs = resolve_sweep_configs(manifest)
    pending = []
    for cfg in configs:
        h = config_hash(cfg)
        if resume and manifest.results.get(h, {}).get("status") == "ok":
            continue
        run_dir = sweep_dir / "runs" / h
        pending.append((json.dumps(config_to_dict(cfg)), str(run_dir)))

    if parallelism <= 1 or len(pending) <= 1:
        outcomes = [_sweep_worker(item) for item in pending]
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            outcomes = list(pool.map(_sweep_worker, pending))
    for h, result in outcomes:
        manifest.results[h] = result

    with open(results_path, "w") as fh:
        json.dump(manifest.results, fh, indent=2, sort_keys=True)
    return manifest
