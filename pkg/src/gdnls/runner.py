"""Orchestration behind the CLI: building data from configs, runs, sweeps and exports."""

from __future__ import annotations

import csv
import itertools
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, serialize
from .data import (
    AdmissibilityReport,
    SolitonParams,
    admissible_datum,
    check_admissibility,
    regularity_indices,
    soliton_solution,
)
from .diagnostics import (
    BallVerdict,
    NormLedgerEntry,
    ball_monitor,
    ledger_entry,
    smoothing_norm,
    triple_norm,
)
from .errors import AdmissibilityError, EdgeDecayError, GdnlsError
from .evolution import EquationSpec, PicardConfig, StepperConfig, solve
from .grid import ComplexField, Grid, check_edge_decay
from . import storage

log = logging.getLogger(__name__)

OUTPUT_ROOT_ENV = "GDNLS_OUTPUT_ROOT"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ADMISSIBILITY = 2
EXIT_DYNAMICS = 3
EXIT_VERIFY_FAILED = 4


def build_grid(cfg: RunConfig) -> Grid:
    return Grid(cfg.grid.L, cfg.grid.n)


def build_equation(cfg: RunConfig) -> EquationSpec:
    return EquationSpec(cfg.equation.form, cfg.equation.alpha, cfg.equation.mu_complex)


def build_stepper(cfg: RunConfig) -> StepperConfig:
    s = cfg.stepper
    return StepperConfig(
        dt=s.dt,
        t_end=s.t_end,
        scheme=s.scheme,
        picard=PicardConfig(s.picard.window, s.picard.max_iters, s.picard.contraction_tol, s.picard.max_halvings),
        dealias=s.dealias,
        sample_every=cfg.diagnostics.cadence,
        escape_factor=s.escape_factor,
    )


def build_datum(cfg: RunConfig, grid: Grid | None = None) -> ComplexField:
    grid = grid or build_grid(cfg)
    p = cfg.initial_data.parameters
    kind = cfg.initial_data.kind
    if kind == "admissible":
        return admissible_datum(cfg.equation.alpha, p["c0"], grid)
    if kind == "soliton":
        params = SolitonParams(cfg.equation.alpha, p["omega"], p["c"], p["branch"])
        return soliton_solution(params, grid, 0.0)
    if kind == "gaussian":
        x = grid.x
        vals = p["amplitude"] * np.exp(-(((x - p["center"]) / p["width"]) ** 2)) * np.exp(1j * p["wavenumber"] * x)
        return ComplexField(grid, vals)
    u, _ = storage.read_snapshot(Path(p["path"]))
    if u.grid != grid:
        raise GdnlsError(f"snapshot grid {u.grid} does not match the configured grid {grid}")
    return u


def resolve_output(cfg: RunConfig, out: str | Path | None = None) -> Path:
    path = Path(out) if out is not None else Path(cfg.output.directory)
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not path.is_absolute():
        path = Path(root) / path
    return path


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


# -- check-data -------------------------------------------------------------------------------


def format_report(r: AdmissibilityReport) -> str:
    rows = [
        ("alpha", f"{r.alpha:g}"),
        ("m", str(r.m)),
        ("k", str(r.k)),
        ("s", f"{r.s:g}"),
        ("||u0||_{s,2}", f"{r.norm_sobolev:.6e}"),
        ("||<x>^m u0||_inf", f"{r.norm_winf:.6e}"),
        *[(f"||<x>^m d^{j} u0||_2", f"{v:.6e}") for j, v in enumerate(r.norms_wder, start=1)],
        ("delta_total", f"{r.delta_total:.6e}"),
        ("delta_budget", f"{r.delta_budget:g}"),
        ("lambda", f"{r.lambda_:.6e}"),
        ("mizohata_sup", f"{r.mizohata_sup:.6e}"),
        ("edge_ratio", f"{r.edge_ratio:.3e}"),
        ("verdict", r.reason()),
    ]
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)


def check_data(cfg: RunConfig, out: str | Path | None = None) -> tuple[AdmissibilityReport | None, int, str]:
    """Build the datum, test the hypotheses and persist ``admissibility.json``."""
    run_dir = resolve_output(cfg, out)
    run_dir.mkdir(parents=True, exist_ok=True)
    grid = build_grid(cfg)
    u0 = build_datum(cfg, grid)
    try:
        report = check_admissibility(u0, cfg.equation.alpha, cfg.diagnostics.delta_budget,
                                     cfg.equation.mu_complex, cfg.grid.edge_tol)
    except (EdgeDecayError, AdmissibilityError) as exc:
        msg = f"not admissible: {exc}"
        storage.write_json_atomic(run_dir / "admissibility.json", {"admissible": False, "error": str(exc)})
        return None, EXIT_ADMISSIBILITY, msg
    storage.write_json_atomic(run_dir / "admissibility.json", report.to_dict())
    return report, (EXIT_OK if report.admissible else EXIT_ADMISSIBILITY), format_report(report)


# -- simulate ---------------------------------------------------------------------------------------


@dataclass
class RunResult:
    config: RunConfig
    run_dir: Path
    ledger: list[NormLedgerEntry] = field(default_factory=list)
    verdict: BallVerdict | None = None
    admissibility: AdmissibilityReport | None = None
    metadata: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    exit_code: int = EXIT_OK

    @property
    def status(self) -> str:
        return self.metadata.get("status", "incomplete")


def _peak_position(u: ComplexField) -> float:
    """Location of max |u|^2, refined by a parabola through the three nodes around it."""
    a = np.abs(u.values) ** 2
    j = int(np.argmax(a))
    y0, y1, y2 = a[j - 1], a[j], a[(j + 1) % len(a)]
    den = y0 - 2 * y1 + y2
    off = 0.5 * (y0 - y2) / den if den != 0 else 0.0
    return float(u.grid.x[j] + off * u.grid.dx)


def _verdict_dict(v: BallVerdict | None) -> dict | None:
    if v is None:
        return None
    return {
        "valid": v.valid,
        "reason": v.reason,
        "exited": v.exited,
        "ball_exit_time": v.ball_exit_time,
        "lower_bound_exit_time": v.lower_bound_exit_time,
    }


def simulate(cfg: RunConfig, out: str | Path | None = None, hooks=()) -> RunResult:
    """Run one configuration, streaming the ledger to disk."""
    run_dir = resolve_output(cfg, out)
    (run_dir / storage.SNAPSHOT_DIR).mkdir(parents=True, exist_ok=True)
    result = RunResult(cfg, run_dir)
    manifest = {
        "status": "incomplete",
        "started": _now(),
        "version": __version__,
        "seed": cfg.seed,
        "files": {},
    }
    (run_dir / storage.CONFIG_ECHO).write_text(serialize(cfg))
    storage.write_json_atomic(run_dir / storage.MANIFEST, manifest)

    t_start = time.perf_counter()
    grid = build_grid(cfg)
    eq = build_equation(cfg)
    u0 = build_datum(cfg, grid)
    alpha = cfg.equation.alpha
    try:
        check_edge_decay(u0, cfg.grid.edge_tol)
    except EdgeDecayError as exc:
        manifest.update(status="rejected", exit_code=EXIT_ADMISSIBILITY, error=str(exc))
        storage.write_json_atomic(run_dir / storage.MANIFEST, manifest)
        result.metadata = {"status": "rejected", "message": str(exc)}
        result.exit_code = EXIT_ADMISSIBILITY
        return result

    if cfg.diagnostics.admissibility and 0 < alpha <= 1:
        result.admissibility = check_admissibility(u0, alpha, cfg.diagnostics.delta_budget,
                                                   eq.mu, cfg.grid.edge_tol)
        storage.write_json_atomic(run_dir / "admissibility.json", result.admissibility.to_dict())

    with_energy = cfg.diagnostics.energy if cfg.diagnostics.energy is not None else eq.is_hamiltonian
    snap_every = cfg.output.snapshot_every
    write_bin = "bin" in cfg.output.formats
    snapshots: list[tuple[int, float]] = []
    ref: dict[str, float] = {}
    writer = storage.LedgerWriter(run_dir / storage.LEDGER)

    def snapshot(i: int, t: float, u: ComplexField) -> None:
        storage.write_snapshot(run_dir / storage.SNAPSHOT_DIR / f"snap_{i:06d}.bin", u, t)
        snapshots.append((i, t))

    def record(t: float, u: ComplexField) -> None:
        i = len(result.ledger)
        entry = ledger_entry(u, t, alpha, with_energy)
        if i == 0:
            ref["delta0"], ref["lam"] = entry.total, entry.inf_weighted
        inside = entry.total <= 2 * ref["delta0"]
        lower = ref["lam"] > 0 and entry.inf_weighted >= ref["lam"] / 4
        result.ledger.append(entry)
        writer.write(entry, inside, lower)
        if write_bin and (i == 0 or (snap_every and i % snap_every == 0)):
            snapshot(i, t, u)

    try:
        traj = solve(u0, eq, build_stepper(cfg), [record, *hooks])
        if write_bin and snapshots and snapshots[-1][0] != len(traj) - 1:
            snapshot(len(traj) - 1, traj.times[-1], traj.final)
    except BaseException as exc:
        writer.close()
        manifest.update(status="incomplete", error=f"{type(exc).__name__}: {exc}",
                        ledger_rows=writer.rows)
        storage.write_json_atomic(run_dir / storage.MANIFEST, manifest)
        raise
    writer.close()
    result.timings["solve_seconds"] = time.perf_counter() - t_start

    meta = traj.metadata()
    m, k, s = regularity_indices(alpha)
    mixed = smoothing_norm(traj.times, traj.fields, grid, k + 1)
    meta["triple_norm"] = triple_norm(result.ledger, mixed)
    meta["mixed_smoothing_norm"] = mixed
    meta["tail_flags"] = sum(e.tail_flag for e in result.ledger)
    meta["weights"] = {"m": m, "k": k, "s": s}
    if cfg.initial_data.kind == "soliton":
        c = cfg.initial_data.parameters["c"]
        t_final = traj.times[-1]
        expected = (c * t_final + grid.L / 2) % grid.L - grid.L / 2
        meta["soliton_peak"] = _peak_position(traj.final)
        meta["soliton_peak_drift"] = abs(meta["soliton_peak"] - expected)
        meta["soliton_peak_tolerance"] = 2 * grid.dx
    result.metadata = meta

    if cfg.diagnostics.ball_monitor and result.ledger:
        result.verdict = ball_monitor(result.ledger, ref["lam"], ref["delta0"])

    result.exit_code = EXIT_OK if traj.ok else EXIT_DYNAMICS
    names = [storage.CONFIG_ECHO, storage.LEDGER, "admissibility.json"]
    names += [f"{storage.SNAPSHOT_DIR}/snap_{i:06d}.bin" for i, _ in snapshots]
    manifest.update(
        status="complete" if traj.ok else traj.status,
        finished=_now(),
        exit_code=result.exit_code,
        ledger_rows=writer.rows,
        snapshots=[{"index": i, "t": t, "file": f"{storage.SNAPSHOT_DIR}/snap_{i:06d}.bin"} for i, t in snapshots],
        scheme=meta,
        verdict=_verdict_dict(result.verdict),
        admissibility=result.admissibility.to_dict() if result.admissibility else None,
        timings=result.timings,
        files=storage.checksums(run_dir, names),
    )
    storage.write_json_atomic(run_dir / storage.MANIFEST, manifest)
    return result


# -- sweep ------------------------------------------------------------------------------------------

AXES = {
    "c0": "initial_data.parameters.c0",
    "alpha": "equation.alpha",
    "window": "stepper.picard.window",
    "T_w": "stepper.picard.window",
    "mu_phase": "equation.mu",
}

SUMMARY_COLUMNS = ("cell", "c0", "alpha", "window", "mu_phase", "m", "status", "exit_code",
                   "contraction_ok", "certified_window", "ball_exit_time", "lower_bound_exit_time")


def parse_axis(text: str) -> tuple[str, list[float]]:
    name, _, values = text.partition("=")
    name = name.strip()
    if name not in AXES or not values:
        raise GdnlsError(f"axis must look like NAME=v1,v2,... with NAME in {', '.join(AXES)}; got {text!r}")
    try:
        points = [float(v) for v in values.split(",") if v.strip()]
    except ValueError as exc:
        raise GdnlsError(f"non-numeric axis value in {text!r}") from exc
    if not points:
        raise GdnlsError(f"axis {name} has no points")
    return name, points


def _cell_config(template: RunConfig, assignment: dict[str, float], directory: Path) -> RunConfig:
    overrides = {"output.directory": str(directory)}
    for name, value in assignment.items():
        if name == "mu_phase":
            overrides[AXES[name]] = [math.cos(value), math.sin(value)]
        else:
            overrides[AXES[name]] = value
    return template.with_overrides(**overrides)


def _run_cell(args) -> dict:
    index, cfg, assignment = args
    row = {"cell": index, **{k: "" for k in ("c0", "alpha", "window", "mu_phase")}}
    for name, value in assignment.items():
        row["window" if name == "T_w" else name] = value
    row["c0"] = row["c0"] if row["c0"] != "" else cfg.initial_data.parameters.get("c0", "")
    row["alpha"] = row["alpha"] if row["alpha"] != "" else cfg.equation.alpha
    row["window"] = row["window"] if row["window"] != "" else cfg.stepper.picard.window
    row["m"] = regularity_indices(cfg.equation.alpha)[0]
    try:
        res = simulate(cfg, cfg.output.directory)
    except GdnlsError as exc:
        row.update(status="error", exit_code=EXIT_USAGE, contraction_ok="", certified_window="",
                   ball_exit_time="", lower_bound_exit_time="", error=str(exc))
        return row
    meta = res.metadata
    windows = meta.get("windows") or []
    row.update(
        status=res.status,
        exit_code=res.exit_code,
        contraction_ok=int(res.status != "contraction_failed") if windows else "",
        certified_window=meta.get("certified_window") if windows else "",
        ball_exit_time=res.verdict.ball_exit_time if res.verdict and res.verdict.ball_exit_time is not None else "",
        lower_bound_exit_time=(res.verdict.lower_bound_exit_time
                               if res.verdict and res.verdict.lower_bound_exit_time is not None else ""),
    )
    return row


def sweep(template: RunConfig, axes: dict[str, list[float]], out: str | Path | None = None,
          workers: int = 1) -> dict:
    """Run the cross product of axis values; one result directory per cell plus ``summary.csv``."""
    root = resolve_output(template, out)
    root.mkdir(parents=True, exist_ok=True)
    names = list(axes)
    jobs = []
    for index, values in enumerate(itertools.product(*(axes[n] for n in names))):
        assignment = dict(zip(names, values))
        jobs.append((index, _cell_config(template, assignment, root / f"cell_{index:03d}"), assignment))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_cell, jobs))
    else:
        rows = [_run_cell(job) for job in jobs]
    rows.sort(key=lambda r: r["cell"])
    with open(root / "summary.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    manifest = {
        "axes": axes,
        "cells": [{"cell": r["cell"], "directory": f"cell_{r['cell']:03d}", "status": r["status"],
                   "exit_code": r["exit_code"], **({"error": r["error"]} if "error" in r else {})} for r in rows],
        "summary": "summary.csv",
        "finished": _now(),
    }
    storage.write_json_atomic(root / "sweep.json", manifest)
    return manifest


def read_summary(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# -- export ---------------------------------------------------------------------------------------------


def export(run_dir: str | Path, what: str, out: str | Path | None = None) -> list[Path]:
    """Write tab-separated, plot-ready series from a run directory."""
    run_dir = Path(run_dir)
    manifest = storage.read_manifest(run_dir)
    dest = Path(out) if out is not None else run_dir / "export"
    dest.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if what == "ledger":
        ledger_path = run_dir / storage.LEDGER
        if not ledger_path.exists():
            raise GdnlsError(f"{run_dir} has no ledger")
        rows = storage.read_ledger(ledger_path)
        path = dest / "ledger.tsv"
        with open(path, "w") as fh:
            cols = list(rows[0]) if rows else []
            fh.write("\t".join(cols) + "\n")
            for row in rows:
                fh.write("\t".join("" if row[c] is None else repr(row[c]) if isinstance(row[c], float)
                                   else str(int(row[c])) for c in cols) + "\n")
        return [path]
    if what not in ("field", "spectrum"):
        raise GdnlsError(f"unknown export target {what!r}; use ledger, field or spectrum")
    snaps = manifest.get("snapshots") or []
    if not snaps:
        raise GdnlsError(f"{run_dir} has no field snapshots")
    for snap in snaps:
        u, t = storage.read_snapshot(run_dir / snap["file"])
        if what == "field":
            path = dest / f"field_{snap['index']:06d}.tsv"
            cols = np.column_stack([u.grid.x, np.abs(u.values), u.values.real, u.values.imag])
            header = f"# t={t!r}\nx\tabs\tre\tim"
        else:
            path = dest / f"spectrum_{snap['index']:06d}.tsv"
            order = np.argsort(u.grid.xi)
            cols = np.column_stack([u.grid.xi[order], np.abs(u.hat[order]) / u.grid.n])
            header = f"# t={t!r}\nxi\tabs_hat"
        np.savetxt(path, cols, delimiter="\t", header=header, comments="", fmt="%.17g")
        written.append(path)
    return written


def verify_report(results) -> dict:
    return {"passed": all(r.passed for r in results), "properties": [r.to_dict() for r in results]}


def write_verify(run_dir: Path, suite: str, results) -> Path:
    run_dir.mkdir(parents=True, exist_ok=True)
    path = run_dir / f"verify_{suite}.json"
    storage.write_json_atomic(path, verify_report(results))
    return path
