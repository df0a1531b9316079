"""Command-line entry points: simulate, sweep, verify, report."""

from __future__ import annotations

import logging
import os
import sys
from pathlib import Path

import click

from .config import parse_config
from .errors import QtfError
from .runner import parse_sweep_manifest, run_single, run_sweep


def _set_threads(threads):
    # QTF_THREADS wins over --threads when both are present
    if "QTF_THREADS" not in os.environ and threads is not None:
        os.environ["QTF_THREADS"] = str(threads)


@click.group()
def main():
    """Desk-scale nematic liquid-crystal flow simulator."""
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", type=click.Path(), default=None,
              help="Output directory (overrides config output_dir).")
@click.option("--threads", type=int, default=None)
def simulate(config_path, out_dir, threads):
    """Run a single simulation from a JSON config file."""
    _set_threads(threads)
    try:
        config = parse_config(Path(config_path).read_text())
        if out_dir is None and config.output_dir is None:
            raise QtfError("no output directory: pass --out or set output_dir")
        summary = run_single(config, output_dir=out_dir)
    except QtfError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(f"status: {summary['status']}")
    click.echo(f"final t = {summary['final_t']:.6g}, "
               f"||Q||_L2 = {summary['final_q_l2']:.6g}, "
               f"kinetic = {summary['final_kinetic']:.6g}")
    if summary.get("decay_rate") is not None:
        click.echo(f"fitted Q decay rate: {summary['decay_rate']:.6g}")
    sys.exit(0 if summary["status"] == "ok" else 1)


@main.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--out", "sweep_dir", type=click.Path(), default=None,
              help="Sweep output directory (defaults to the manifest's directory).")
@click.option("--parallel", type=int, default=1)
@click.option("--resume/--no-resume", default=True)
@click.option("--threads", type=int, default=None)
def sweep(manifest_path, sweep_dir, parallel, resume, threads):
    """Run the Cartesian sweep described by a manifest file."""
    _set_threads(threads)
    try:
        manifest = parse_sweep_manifest(Path(manifest_path).read_text())
        if sweep_dir is None:
            sweep_dir = Path(manifest_path).resolve().parent / "sweep_out"
        manifest = run_sweep(manifest, sweep_dir, parallelism=parallel, resume=resume)
    except QtfError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    counts = {}
    for result in manifest.results.values():
        counts[result["status"]] = counts.get(result["status"], 0) + 1
    click.echo(", ".join(f"{k}: {v}" for k, v in sorted(counts.items())))
    sys.exit(0 if counts.get("failed", 0) == 0 else 1)


@main.command()
def verify():
    """Run the algebraic property suites; exit 0 iff all pass."""
    from .verify import run_verification

    results = run_verification()
    ok = True
    for name, passed, detail in results:
        click.echo(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
        ok = ok and passed
    sys.exit(0 if ok else 1)


@main.command()
@click.option("--run", "run_dir", required=True, type=click.Path(exists=True))
def report(run_dir):
    """Re-render the figures for an existing run directory."""
    from .report import render_run_report

    paths = render_run_report(run_dir)
    if not paths:
        click.echo("no diagnostics.csv found", err=True)
        sys.exit(1)
    for p in paths:
        click.echo(str(p))


if __name__ == "__main__":
    main()
