"""
Two-scale reconstruction u0 + m (eps u1 + eps^2 u2) on the perforated mesh, its error
against the microscopic solution, and the epsilon sweep that fits the rate.

u1 = -chi(x/eps) . grad u0 and u2 = theta(x/eps) : hess u0 (+ theta_s in frozen mode).
Cell functions are read at the unit-cell vertex each domain vertex was tiled from.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Tuple

import numpy as np

from cells.models import CellSolution, ThetaMode
from cells.services import solve_cell
from correctors.exceptions import CorrectorError, InsufficientPoints, MeshMismatch
from correctors.models import ConvergenceReport, ConvergenceRow, CutoffSpec, SweepSettings
from fem.assembly import field_gradients
from fem.models import Field
from fem.norms import h1_seminorm, l2_norm
from geometry.models import Mesh
from geometry.services import build_domain_mesh, build_perforated_domain_mesh, build_unit_cell_mesh
from macro.models import MacroProblem
from macro.services import ManufacturedMacro, RecoveredMacro, solve_macro
from micro.services import clamp, solve_micro

logger = logging.getLogger(__name__)


def distance_to_boundary(points: np.ndarray) -> np.ndarray:
    """Distance to the boundary of the unit square."""
    p = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    return np.minimum(np.minimum(p[:, 0], 1.0 - p[:, 0]), np.minimum(p[:, 1], 1.0 - p[:, 1]))


def build_cutoff(mesh: Mesh, epsilon: float, spec: Optional[CutoffSpec] = None) -> Field:
    spec = spec or CutoffSpec()
    cutoff = Field(mesh, spec.profile(distance_to_boundary(mesh.vertices), epsilon))
    slope = float(np.linalg.norm(field_gradients(mesh, cutoff.values[0]), axis=-1).max()) * epsilon
    # P1 interpolation across the corner diagonals can steepen the profile by sqrt(2)
    if slope > 1.5 * spec.gradient_bound:
        logger.warning(f"Cut-off gradient reaches {slope:.3f}/eps, above {spec.gradient_bound:g}/eps")
    return cutoff


def reconstruct(
    macro,
    cell: Optional[CellSolution],
    mesh: Mesh,
    epsilon: float,
    order: int = 1,
    cutoff: Optional[Field] = None,
) -> Field:
    """
    ``macro`` is a RecoveredMacro or ManufacturedMacro; ``cutoff`` None means m = 1 everywhere.
    The mesh must be tiled from ``cell.mesh``.
    """
    if abs(mesh.epsilon - epsilon) > 1e-12:
        raise CorrectorError(f"mesh was tiled for eps={mesh.epsilon:g}, not {epsilon:g}")
    points = mesh.vertices
    result = macro.values(points)
    if order == 0:
        return Field(mesh, result)
    if cell is None:
        raise CorrectorError("correctors of order >= 1 need the cell solution")
    if mesh.cell_hash != cell.mesh.hash or mesh.cell_vertex is None:
        raise MeshMismatch(
            f"perforated mesh was tiled from cell mesh {mesh.cell_hash}, the cell solution belongs to {cell.mesh.hash}"
        )
    if cell.n_species != macro.n_species:
        raise CorrectorError(f"cell solution has {cell.n_species} species, the macro field {macro.n_species}")
    lookup = mesh.cell_vertex
    correction = -np.einsum("nkv,nkv->nv", cell.chi[:, :, lookup], macro.gradient(points)) * epsilon
    if order >= 2:
        if not cell.has_theta:
            raise CorrectorError("second-order reconstruction needs the second cell functions")
        second = np.einsum("nklv,nklv->nv", cell.theta[:, :, :, lookup], macro.hessian(points))
        if cell.theta_surface is not None:
            second = second + cell.theta_surface[:, lookup]
        correction = correction + epsilon**2 * second
    m = 1.0 if cutoff is None else cutoff.values[0]
    return Field(mesh, result + m * correction)


def corrector_error(u_eps: Field, reconstruction: Field, mesh: Optional[Mesh] = None) -> Tuple[float, float]:
    """(H1-seminorm, L2) norms of the difference, exact for P1."""
    mesh = mesh or u_eps.mesh
    if reconstruction.mesh is not u_eps.mesh and reconstruction.mesh.hash != u_eps.mesh.hash:
        raise MeshMismatch("both fields must live on the same mesh")
    difference = u_eps.values - reconstruction.values
    return h1_seminorm(difference, mesh), l2_norm(difference, mesh)


def _frozen_values(macro, spec, point) -> list:
    """(u0*, F_i(u0*)) at the evaluation point, per species."""
    u_star = macro.values(np.asarray(point, dtype=np.float64).reshape(1, 2))[:, 0]
    positive = clamp(u_star)
    return [(float(u_star[i]), float(np.asarray(spec.fluxes[i](*positive)))) for i in range(spec.n_species)]


def solve_cells_and_macro(
    settings: SweepSettings, manufactured: Optional[ManufacturedMacro] = None, cell: Optional[CellSolution] = None
):
    """
    Cell problems once, macro problem once; returns (cell, macro field or None, macro
    evaluator, macro report). A given ``cell`` is reused instead of solved.
    """
    coefficients = settings.spec.coefficients
    frozen = settings.theta_mode is ThetaMode.FROZEN and settings.order >= 2
    if cell is None:
        cell_mesh = build_unit_cell_mesh(settings.geometry, settings.cell_h)
        order = max(settings.order, 1)
        cell = solve_cell(cell_mesh, coefficients, order=1 if frozen else order, theta_mode=ThetaMode.PURE)
    else:
        cell_mesh = cell.mesh
        if settings.order >= 2 and not frozen and not cell.has_theta:
            raise CorrectorError("the given cell solution has no second cell functions")
        if cell.n_species != settings.spec.n_species:
            raise CorrectorError(f"the given cell solution has {cell.n_species} species, not {settings.spec.n_species}")

    macro_field, macro_report = None, None
    if manufactured is not None:
        macro = manufactured
    else:
        problem = MacroProblem.from_cell(build_domain_mesh(settings.macro_cells), cell, settings.spec, settings.macro_mode)
        macro_field, macro_report = solve_macro(problem, settings.picard)
        macro = RecoveredMacro(macro_field)
    if frozen:
        cell = solve_cell(
            cell_mesh,
            coefficients,
            order=2,
            theta_mode=ThetaMode.FROZEN,
            frozen=_frozen_values(macro, settings.spec, settings.eval_point),
        )
    return cell, macro_field, macro, macro_report


def _measure(settings: SweepSettings, cell: CellSolution, macro, epsilon: float):
    h = epsilon / settings.h_ratio
    mesh = build_perforated_domain_mesh(epsilon, settings.geometry, h, cell_mesh=cell.mesh)
    u_eps, report = solve_micro(mesh, settings.spec, settings.picard, label=f"micro eps={epsilon:g}")
    cutoff = build_cutoff(mesh, epsilon, settings.cutoff)
    err_v, _ = corrector_error(u_eps, reconstruct(macro, cell, mesh, epsilon, settings.order, cutoff))
    err_uncut, _ = corrector_error(u_eps, reconstruct(macro, cell, mesh, epsilon, settings.order, None))
    _, err_l2 = corrector_error(u_eps, reconstruct(macro, cell, mesh, epsilon, 0))
    row = ConvergenceRow(epsilon=epsilon, h=h, order=settings.order, err_v=err_v, err_l2=err_l2, err_uncut=err_uncut)
    logger.info(
        f"eps={epsilon:g} h={h:g}: |u - rec|_V = {err_v:.4e}, uncut {err_uncut:.4e}, |u - u0|_L2 = {err_l2:.4e}"
    )
    return row, report, u_eps


def rate_sweep(
    settings: SweepSettings,
    manufactured: Optional[ManufacturedMacro] = None,
    keep_fields: bool = False,
    cell: Optional[CellSolution] = None,
) -> ConvergenceReport:
    """
    Error of the cut-off reconstruction for each eps (largest first) and its fitted log-log
    slope. Per-eps runs are independent and use up to ``settings.jobs`` threads.
    """
    eps_list = sorted(set(settings.eps_list), reverse=True)
    if len(eps_list) < 3:
        raise InsufficientPoints(len(eps_list))
    cell, macro_field, macro, macro_report = solve_cells_and_macro(settings, manufactured, cell)

    def run(epsilon):
        return _measure(settings, cell, macro, epsilon)

    if settings.jobs > 1:
        with ThreadPoolExecutor(max_workers=settings.jobs) as pool:
            results = list(pool.map(run, eps_list))
    else:
        results = [run(eps) for eps in eps_list]

    report = ConvergenceReport(
        order=settings.order,
        cutoff=settings.cutoff.convention,
        rows=[row for row, _, _ in results],
        picard=[picard for _, picard, _ in results],
        cell=cell,
        macro=macro_field,
        macro_report=macro_report,
        fields=[u for _, _, u in results] if keep_fields else [],
    )
    if report.degenerate:
        logger.warning("Errors sit at the solver floor; the rate fit is degenerate")
    else:
        logger.info(
            f"Fitted slopes (M={settings.order}, {settings.cutoff.convention.value} cut-off): "
            f"V {report.slope:.4f}, uncut {report.slope_uncut}, L2 {report.slope_l2}"
        )
    return report
