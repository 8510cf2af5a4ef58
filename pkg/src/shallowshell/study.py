"""Convergence study: flatten a shell family onto the plate and record it.

One row per homotopy parameter: geometric distance to the plate, final
energy, displacement norm, distance to the plate minimizer, solver residual,
iteration count, and the coercivity gap of the elasticity tensor.  The plate
row comes last and anchors the error column at exactly zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .config import StudyConfig
from .elasticity import positivity_gap
from .grid import v_norm
from .io import meta_line, write_displacement_csv, write_study_csv
from .solver import HomotopyStep, boundedness_certificate, homotopy_solve


class NonconvergenceError(RuntimeError):
    """A homotopy step failed to meet the residual criterion."""

    def __init__(self, t: float, residual: float, iterations: int):
        super().__init__(
            f"solve at t={t:g} did not converge "
            f"(residual {residual:.3e} after {iterations} iterations)"
        )
        self.t = t


@dataclass
class StudyRow:
    t: float
    c2_distance: float
    final_energy: float
    v_norm: float
    v_norm_err: float
    residual: float
    iterations: int
    positivity_gap: float


@dataclass
class StudyReport:
    rows: list[StudyRow]
    boundedness: float
    meta: str
    steps: list[HomotopyStep]

    def csv_path(self, cfg: StudyConfig) -> Path:
        return Path(cfg.out_dir) / f"{cfg.prefix}.csv"


def run_convergence_study(cfg: StudyConfig, write: bool = True) -> StudyReport:
    """Run the warm-started homotopy over cfg.t_list and report per-step rows.

    Raises NonconvergenceError (tagged with t) if any solve exhausts its
    iteration budget; writes the report CSV and per-step solutions under
    cfg.out_dir unless write=False.
    """
    grid = cfg.make_grid()
    material = cfg.material
    force = cfg.make_force(grid)
    immersion = cfg.make_immersion()

    steps = homotopy_solve(immersion, cfg.t_list, grid, material, force, cfg.solver)
    for step in steps:
        if not step.diagnostics.converged:
            raise NonconvergenceError(
                step.t, step.diagnostics.final_residual, step.diagnostics.iterations
            )

    plate_steps = [s for s in steps if s.t == 0.0]
    if not plate_steps:
        raise ValueError("study parameter list must contain the plate t=0")
    u_plate = plate_steps[0].u

    rows = []
    for step in steps:
        rows.append(
            StudyRow(
                t=step.t,
                c2_distance=step.c2_dist,
                final_energy=step.diagnostics.final_energy,
                v_norm=v_norm(grid, step.u),
                v_norm_err=v_norm(grid, step.u - u_plate),
                residual=step.diagnostics.final_residual,
                iterations=step.diagnostics.iterations,
                positivity_gap=positivity_gap(step.assembly.geometry, material),
            )
        )

    meta = meta_line(cfg.config_hash(), cfg.solver.seed)
    report = StudyReport(
        rows=rows,
        boundedness=boundedness_certificate(steps),
        meta=meta,
        steps=steps,
    )
    if write:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_study_csv(report.csv_path(cfg), rows, meta)
        for step in steps:
            write_displacement_csv(
                out / f"{cfg.prefix}_solution_t{step.t:g}.csv", grid, step.u, meta
            )
    return report
