"""
Orchestration behind the management commands. Each run writes into one output directory:

    config.cfg                 the effective configuration
    cell.mesh                  unit-cell mesh (mesh)
    cell/                      cell solution (cell, verify)
    eps<k>/domain.mesh         perforated mesh for eps = 1/k (mesh, micro)
    eps<k>/u.field, picard.csv micro solution and its Picard history (micro, verify)
    macro.mesh, macro.field    homogenized solution (macro, verify)
    picard_macro.csv
    convergence.csv            rate table (verify), convergence.gp with --gnuplot-script

Every artifact carries the config hash; a directory holding artifacts of another
configuration is refused.
"""

import logging
from pathlib import Path
from typing import Optional

from cells.io import read_cell_solution, write_cell_solution
from cells.models import CellSolution, ThetaMode
from cells.services import solve_cell
from correctors.models import ConvergenceReport
from correctors.services import rate_sweep
from fem.io import write_field
from geometry.io import write_mesh
from geometry.services import build_domain_mesh, build_perforated_domain_mesh, build_unit_cell_mesh, reciprocal
from macro.models import MacroProblem
from macro.services import solve_macro
from micro.exceptions import PicardNoConvergence
from micro.services import check_solution_properties, estimate_kappa, solve_micro
from runs.config import format_config
from runs.exceptions import MixedProvenance
from runs.models import RunConfig
from runs.writers import (
    check_provenance,
    write_convergence_csv,
    write_gnuplot_script,
    write_picard_csv,
)

logger = logging.getLogger(__name__)


def eps_directory(out: Path, epsilon: float) -> Path:
    return out / f"eps{reciprocal(epsilon)}"


def prepare_output(config: RunConfig, out=None) -> Path:
    out = Path(out or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    check_provenance(out, config.hash)
    (out / "config.cfg").write_text(f"# config_hash={config.hash}\n" + format_config(config))
    return out


def _cell_mesh(config: RunConfig):
    return build_unit_cell_mesh(config.geometry, 1.0 / config.h_ratio)


def _write_partial(exc: PicardNoConvergence, path: Path, config: RunConfig):
    write_picard_csv(exc.report, path, config.hash)
    logger.error(f"Partial Picard report written to {path}")


def run_mesh(config: RunConfig, out=None) -> Path:
    out = prepare_output(config, out)
    cell_mesh = _cell_mesh(config)
    write_mesh(cell_mesh, out / "cell.mesh", config.hash)
    for epsilon in config.eps:
        mesh = build_perforated_domain_mesh(epsilon, config.geometry, epsilon / config.h_ratio, cell_mesh=cell_mesh)
        write_mesh(mesh, eps_directory(out, epsilon) / "domain.mesh", config.hash)
    write_mesh(build_domain_mesh(config.macro_cells), out / "macro.mesh", config.hash)
    return out


def solve_config_cell(config: RunConfig) -> CellSolution:
    order = max(config.order, 1)
    return solve_cell(_cell_mesh(config), config.problem_spec().coefficients, order=order, theta_mode=ThetaMode.PURE)


def run_cell(config: RunConfig, out=None) -> CellSolution:
    """Cell functions, q and surface averages. Frozen second cell data needs the macro field and is left to verify."""
    out = prepare_output(config, out)
    if config.theta_mode is ThetaMode.FROZEN:
        logger.warning("cell writes the pure second cell functions; the frozen surface part is computed by verify")
    cell = solve_config_cell(config)
    write_cell_solution(cell, out / "cell", config.hash)
    return cell


def run_micro(config: RunConfig, out=None):
    """Micro solve for each eps of the configuration; stops at the first non-converging one."""
    out = prepare_output(config, out)
    spec = config.problem_spec()
    cell_mesh = _cell_mesh(config)
    results = []
    for epsilon in config.eps:
        directory = eps_directory(out, epsilon)
        mesh = build_perforated_domain_mesh(epsilon, config.geometry, epsilon / config.h_ratio, cell_mesh=cell_mesh)
        write_mesh(mesh, directory / "domain.mesh", config.hash)
        try:
            u, report = solve_micro(mesh, spec, config.picard_options(jobs=config.jobs))
        except PicardNoConvergence as exc:
            _write_partial(exc, directory / "picard.csv", config)
            raise
        write_field(u, directory / "u.field", config.hash)
        write_picard_csv(report, directory / "picard.csv", config.hash)
        check_solution_properties(u, mesh, spec)
        estimate_kappa(report, mesh, spec, u)
        results.append((u, report))
    return results


def run_macro(config: RunConfig, out=None):
    out = prepare_output(config, out)
    spec = config.problem_spec()
    cell = solve_config_cell(config)
    problem = MacroProblem.from_cell(build_domain_mesh(config.macro_cells), cell, spec, config.macro_mode)
    try:
        u, report = solve_macro(problem, config.picard_options(jobs=config.jobs))
    except PicardNoConvergence as exc:
        _write_partial(exc, out / "picard_macro.csv", config)
        raise
    write_mesh(problem.mesh, out / "macro.mesh", config.hash)
    write_field(u, out / "macro.field", config.hash)
    write_picard_csv(report, out / "picard_macro.csv", config.hash)
    return u, report


def load_cell(directory, config: RunConfig) -> CellSolution:
    cell, found = read_cell_solution(directory)
    if found != config.hash:
        raise MixedProvenance(Path(directory) / "tensor.txt", found or "-", config.hash)
    return cell


def run_verify(config: RunConfig, out=None, gnuplot: Optional[bool] = None, cell_dir=None) -> ConvergenceReport:
    """Full rate measurement; ``cell_dir`` reuses a cell solution written by the same configuration."""
    out = prepare_output(config, out)
    cell = load_cell(cell_dir, config) if cell_dir is not None else None
    try:
        report = rate_sweep(config.sweep_settings(), cell=cell)
    except PicardNoConvergence as exc:
        _write_partial(exc, out / "picard_failed.csv", config)
        raise
    if cell is None:
        write_cell_solution(report.cell, out / "cell", config.hash)
    if report.macro is not None:
        write_mesh(report.macro.mesh, out / "macro.mesh", config.hash)
        write_field(report.macro, out / "macro.field", config.hash)
        write_picard_csv(report.macro_report, out / "picard_macro.csv", config.hash)
    for row, picard in zip(report.rows, report.picard):
        write_picard_csv(picard, eps_directory(out, row.epsilon) / "picard.csv", config.hash)
    write_convergence_csv(report, out / "convergence.csv", config.hash)
    if config.gnuplot if gnuplot is None else gnuplot:
        write_gnuplot_script(report, out / "convergence.gp", "convergence.csv", config.hash)
    return report
