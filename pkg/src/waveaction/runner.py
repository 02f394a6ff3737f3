"""Execute scenarios and persist results in stable formats.

Outputs per run: a fixed-column diagnostics CSV, one snapshot file per
recorded step (re/im columns with grid metadata in the header), and a
manifest JSON with summary scalars.  All numbers are serialized with 17
significant digits so doubles round-trip exactly; every file is written
to a temporary name and atomically renamed.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .diagnostics import continuity_residual, hamilton_equations_residual
from .grids import Wavefunction, norm, quadrature
from .hamiltonian import chemical_potential, energy
from .propagation import Trajectory, ground_state_imaginary_time, propagate
from .scenario import (
    Scenario,
    build_config,
    build_grid,
    build_initial_state,
    build_plan,
    scenario_json,
)
from .variational import (
    action,
    box_sine_family,
    gaussian_family,
    gaussian_phase_family,
    lagrangian_reality_deviations,
    rayleigh_ritz_minimize,
    stationarity_test,
)

CSV_COLUMNS = (
    "step",
    "time",
    "norm",
    "energy",
    "continuity_sup",
    "continuity_l2",
    "action_simple_running",
    "action_standard_running",
    "hamilton_r1",
)

VERIFY_THRESHOLDS = {
    "norm_drift": 1e-10,
    "reality_max": 1e-6,
    "action_equivalence": 1e-8,
    "stationarity_slope_low": 1.85,
    "stationarity_slope_high": 2.15,
    "continuity_sup_max": 1e-4,
}

_FAMILIES = {
    "gaussian": gaussian_family,
    "gaussian-phase": gaussian_phase_family,
    "box-sine": box_sine_family,
}


@dataclass(frozen=True, eq=False)
class DiagnosticsRecord:
    """One row of the per-step diagnostics CSV."""

    step: int
    time: float
    norm: float
    energy: float
    continuity_sup: float
    continuity_l2: float
    action_simple_running: float
    action_standard_running: float
    hamilton_r1: float


@dataclass
class RunManifest:
    """Summary of one scenario run; every scalar also appears in the output files."""

    name: str
    task: str
    scenario_hash: str
    toolkit_version: str
    wall_time_s: float
    converged: bool
    summary: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "task": self.task,
            "scenario_hash": self.scenario_hash,
            "toolkit_version": self.toolkit_version,
            "wall_time_s": self.wall_time_s,
            "converged": self.converged,
            "summary": self.summary,
        }


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    tmp.replace(path)


def _write_csv(path: Path, columns, rows) -> None:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(str(v) if isinstance(v, int) else _fmt(v) for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def _write_snapshot(path: Path, psi: Wavefunction, step: int) -> None:
    g = psi.grid
    header = (
        f"# x_min={_fmt(g.x_min)} x_max={_fmt(g.x_max)} n_points={g.n_points} "
        f"boundary={g.boundary} dx={_fmt(g.dx)} time={_fmt(psi.time)} step={step}\n"
    )
    body = "re,im\n" + "\n".join(
        f"{_fmt(a.real)},{_fmt(a.imag)}" for a in psi.amplitudes
    )
    _atomic_write(path, header + body + "\n")


def _write_manifest(path: Path, manifest: RunManifest) -> None:
    _atomic_write(path, json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n")


def _hash_scenario(scenario: Scenario) -> str:
    return hashlib.sha256(scenario_json(scenario).encode()).hexdigest()


def _running_actions(cfg, traj: Trajectory):
    """Cumulative trapezoid integrals of both density integrals over the snapshots."""
    from .variational import _density_integrals  # shared assembly, single source

    simple, standard, times = _density_integrals(cfg, traj)
    simple = simple.real
    run_simple = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(times) * (simple[1:] + simple[:-1]))])
    run_standard = np.concatenate(
        [[0.0], np.cumsum(0.5 * np.diff(times) * (standard[1:] + standard[:-1]))]
    )
    return run_simple, run_standard


def _diagnostics_rows(cfg, traj: Trajectory, stride: int):
    states = traj.states
    times = traj.times
    rows = []
    if len(states) >= 3:
        run_simple, run_standard = _running_actions(cfg, traj)
    else:
        run_simple = run_standard = np.zeros(len(states))
    for i, (t, psi) in enumerate(zip(times, states)):
        if i == 0:
            cont_sup = cont_l2 = r1 = 0.0
        else:
            report = continuity_residual(cfg, states[i - 1], psi)
            cont_sup, cont_l2 = report.sup_norm, report.l2_norm
            r1, _ = hamilton_equations_residual(cfg, states[i - 1], psi)
        rows.append(
            DiagnosticsRecord(
                step=i * stride,
                time=float(t),
                norm=norm(psi),
                energy=energy(cfg, psi, float(t)),
                continuity_sup=cont_sup,
                continuity_l2=cont_l2,
                action_simple_running=float(run_simple[i]),
                action_standard_running=float(run_standard[i]),
                hamilton_r1=r1,
            )
        )
    return rows


def _run_propagation(scenario: Scenario, out_dir: Path, stride: Optional[int], quiet: bool):
    cfg = build_config(scenario)
    grid = build_grid(scenario)
    psi0 = build_initial_state(scenario, grid)
    plan = build_plan(scenario)
    if stride is not None:
        plan = replace(plan, record_stride=stride)
    norm_drift = {"max": 0.0}

    def watch_norm(step, t, psi):
        norm_drift["max"] = max(norm_drift["max"], abs(norm(psi) - 1.0))

    traj = propagate(cfg, psi0, plan, observers=[watch_norm])
    rows = _diagnostics_rows(cfg, traj, plan.record_stride)
    _write_csv(out_dir / "diagnostics.csv", CSV_COLUMNS, [_record_tuple(r) for r in rows])
    for row, (t, psi) in zip(rows, traj.snapshots):
        _write_snapshot(out_dir / f"snapshot_{row.step:08d}.csv", psi, row.step)
    summary = {
        "final_energy": rows[-1].energy,
        "final_norm": rows[-1].norm,
        "norm_drift": norm_drift["max"],
        "max_continuity_sup": max(r.continuity_sup for r in rows),
        "action_simple": rows[-1].action_simple_running,
        "action_standard": rows[-1].action_standard_running,
        "n_steps": plan.n_steps,
        "record_stride": plan.record_stride,
    }
    return cfg, traj, summary


def _record_tuple(r: DiagnosticsRecord):
    return (
        r.step,
        r.time,
        r.norm,
        r.energy,
        r.continuity_sup,
        r.continuity_l2,
        r.action_simple_running,
        r.action_standard_running,
        r.hamilton_r1,
    )


def run_scenario(
    scenario: Scenario, out_dir, stride: Optional[int] = None, quiet: bool = False
) -> RunManifest:
    """Execute one scenario, writing outputs under out_dir.

    Returns the manifest; convergence failures are flagged there (the CLI
    maps them to exit code 2), I/O errors propagate as OSError.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    task = scenario.task["kind"]
    converged = True
    summary: dict = {}

    if task in ("propagate", "gp-propagate"):
        cfg, traj, summary = _run_propagation(scenario, out_dir, stride, quiet)

    elif task == "verify":
        cfg, traj, summary = _run_propagation(scenario, out_dir, stride, quiet)
        s_simple = action(cfg, traj, "simple").value
        s_standard = action(cfg, traj, "standard").value
        reality = lagrangian_reality_deviations(cfg, traj)
        bump = _verify_bump(traj)
        slope = stationarity_test(cfg, traj, bump, scenario.task["epsilons"]).slope
        checks = {
            "norm_drift": {
                "value": summary["norm_drift"],
                "threshold": VERIFY_THRESHOLDS["norm_drift"],
                "passed": summary["norm_drift"] < VERIFY_THRESHOLDS["norm_drift"],
            },
            "reality_max": {
                "value": float(reality.max()),
                "threshold": VERIFY_THRESHOLDS["reality_max"],
                "passed": float(reality.max()) < VERIFY_THRESHOLDS["reality_max"],
            },
            "action_equivalence": {
                "value": abs(s_simple - s_standard),
                "threshold": VERIFY_THRESHOLDS["action_equivalence"],
                "passed": abs(s_simple - s_standard) < VERIFY_THRESHOLDS["action_equivalence"],
            },
            "stationarity_slope": {
                "value": slope,
                "threshold": [
                    VERIFY_THRESHOLDS["stationarity_slope_low"],
                    VERIFY_THRESHOLDS["stationarity_slope_high"],
                ],
                "passed": VERIFY_THRESHOLDS["stationarity_slope_low"]
                < slope
                < VERIFY_THRESHOLDS["stationarity_slope_high"],
            },
            "continuity_sup": {
                "value": summary["max_continuity_sup"],
                "threshold": VERIFY_THRESHOLDS["continuity_sup_max"],
                "passed": summary["max_continuity_sup"] < VERIFY_THRESHOLDS["continuity_sup_max"],
            },
        }
        summary["action_simple"] = s_simple
        summary["action_standard"] = s_standard
        summary["stationarity_slope"] = slope
        summary["checks"] = checks
        converged = all(c["passed"] for c in checks.values())

    elif task == "ground-state":
        cfg = build_config(scenario)
        grid = build_grid(scenario)
        psi0 = build_initial_state(scenario, grid)
        result = ground_state_imaginary_time(
            cfg,
            psi0,
            dtau=scenario.task["dtau"],
            tol=scenario.task["tol"],
            max_iter=scenario.task["max_iter"],
        )
        _write_csv(
            out_dir / "energy_history.csv",
            ("iteration", "energy"),
            list(enumerate(result.energy_history)),
        )
        _write_snapshot(out_dir / "ground_state.csv", result.state, result.iterations)
        converged = result.converged
        summary = {
            "final_energy": result.energy,
            "iterations": result.iterations,
            "final_norm": norm(result.state),
        }
        if scenario.interaction is not None:
            summary["chemical_potential"] = chemical_potential(cfg, result.state)

    elif task == "rayleigh-ritz":
        cfg = build_config(scenario)
        grid = build_grid(scenario)
        family = _FAMILIES[scenario.task["family"]]()
        result = rayleigh_ritz_minimize(
            cfg,
            family,
            scenario.task["initial_params"],
            grid=grid,
            max_iter=scenario.task["max_iter"],
        )
        _write_csv(
            out_dir / "energy_history.csv",
            ("evaluation", "energy"),
            list(enumerate(result.history)),
        )
        converged = result.converged
        summary = {
            "final_energy": result.energy,
            "parameters": {
                name: float(v) for name, v in zip(family.parameter_names, result.params)
            },
            "evaluations": len(result.history),
        }

    else:  # pragma: no cover - parse_scenario guarantees the enum
        raise ValueError(f"unknown task {task!r}")

    manifest = RunManifest(
        name=scenario.name,
        task=task,
        scenario_hash=_hash_scenario(scenario),
        toolkit_version=__version__,
        wall_time_s=time.perf_counter() - started,
        converged=converged,
        summary=summary,
    )
    _write_manifest(out_dir / "manifest.json", manifest)
    if not quiet:
        state = "ok" if converged else "NOT CONVERGED"
        print(f"[{scenario.name}] {task}: {state} ({manifest.wall_time_s:.2f}s) -> {out_dir}")
    return manifest


def _verify_bump(traj: Trajectory) -> Wavefunction:
    """Default stationarity envelope: a normalized central Gaussian bump."""
    grid = traj.grid
    span = grid.x_max - grid.x_min
    center = 0.5 * (grid.x_max + grid.x_min)
    width = span / 8.0
    amp = np.exp(-((grid.x - center) ** 2) / (2.0 * width**2))
    bump = Wavefunction(grid, amp)
    scale = np.sqrt(quadrature(grid, np.abs(bump.amplitudes) ** 2).real)
    return Wavefunction(grid, bump.amplitudes / scale)
