import logging
from typing import Optional, Sequence, Tuple

import numpy as np
from django.conf import settings

from cells.exceptions import SolvabilityViolation
from cells.models import CellSolution, ThetaMode
from fem.assembly import (
    assemble_boundary_mass,
    assemble_derivative_load,
    assemble_element_load,
    assemble_mass,
    assemble_stiffness,
    element_coefficient,
    field_gradients,
)
from fem.constraints import Constraints, LinearSystem
from fem.models import CoefficientSpec
from geometry.exceptions import GeometryError
from geometry.models import EdgeTag, Mesh

logger = logging.getLogger(__name__)


def _periodic(mesh: Mesh) -> Constraints:
    if not mesh.is_cell:
        raise GeometryError("cell problems need a unit-cell mesh with periodic pairs")
    return Constraints.build(mesh.n_vertices, periodic_pairs=mesh.periodic_pairs)


def _solve_zero_mean(mesh: Mesh, constraints: Constraints, matrix, rhs: np.ndarray, mass) -> np.ndarray:
    system = constraints.reduce(LinearSystem(matrix, rhs, mesh))
    solution = system.solve(singular=True)
    mean = np.sum(mass @ solution) / mesh.area
    return solution - mean


def _element_means(mesh: Mesh, values: np.ndarray) -> np.ndarray:
    return values[mesh.triangles].mean(axis=1)


def solve_chi(mesh: Mesh, d, constraints: Optional[Constraints] = None) -> np.ndarray:
    """
    chi_k, k = 1, 2, from: integral over Y1 of d grad chi_k . grad v = integral of d dv/dy_k
    for all periodic v, mean zero over Y1. Shape (2, nv).
    """
    constraints = constraints or _periodic(mesh)
    matrix = assemble_stiffness(mesh, d)
    mass = assemble_mass(mesh)
    d_t = element_coefficient(mesh, d)
    chi = np.stack(
        [_solve_zero_mean(mesh, constraints, matrix, assemble_derivative_load(mesh, d_t, k), mass) for k in range(2)]
    )
    return chi


def compute_q(mesh: Mesh, d, chi: np.ndarray) -> Tuple[np.ndarray, float]:
    """
    q_lk = integral over Y1 of d (delta_lk - d(chi_k)/dy_l), |Y| = 1. Returns the
    symmetrized tensor and the largest asymmetry |q_lk - q_kl| it removed.
    """
    d_t = element_coefficient(mesh, d)
    weight = mesh.triangle_areas * d_t
    grad = field_gradients(mesh, chi)  # (k, t, l)
    raw = np.eye(2) * weight.sum() - np.einsum("t,ktl->lk", weight, grad)
    asymmetry = float(np.abs(raw - raw.T).max())
    return 0.5 * (raw + raw.T), asymmetry


def compute_surface_averages(mesh: Mesh, a, b) -> Tuple[float, float]:
    if not np.any(mesh.edge_tags == EdgeTag.HOLE.value):
        return 0.0, 0.0
    ones = np.ones(mesh.n_vertices)
    surf_a = float(ones @ (assemble_boundary_mass(mesh, EdgeTag.HOLE, a) @ ones))
    surf_b = float(ones @ (assemble_boundary_mass(mesh, EdgeTag.HOLE, b) @ ones))
    return surf_a, surf_b


def _check_compatibility(residual: float, label: str):
    warn, fail = settings.HOMLAB["SOLVABILITY_WARN"], settings.HOMLAB["SOLVABILITY_FAIL"]
    if residual > fail:
        logger.error(f"Second cell problem {label}: compatibility residual {residual:.3e}")
        raise SolvabilityViolation(residual, fail)
    if residual > warn:
        logger.warning(f"Second cell problem {label}: compatibility residual {residual:.3e} above {warn:.1e}")


def solve_theta(
    mesh: Mesh,
    d,
    chi: np.ndarray,
    q: np.ndarray,
    constraints: Optional[Constraints] = None,
) -> np.ndarray:
    """
    theta_kl, shape (2, 2, nv), from

        integral of d grad theta_kl . grad v
            = integral of [d (delta_kl - d(chi_k)/dy_l) - q_kl / porosity] v + integral of d chi_k dv/dy_l

    periodic and mean zero. The right-hand side integrates to q_raw - q, which must vanish.
    """
    constraints = constraints or _periodic(mesh)
    matrix = assemble_stiffness(mesh, d)
    mass = assemble_mass(mesh)
    d_t = element_coefficient(mesh, d)
    grad = field_gradients(mesh, chi)
    porosity = mesh.area
    scale = max(float(np.abs(q).max()), np.finfo(float).tiny)
    theta = np.empty((2, 2, mesh.n_vertices))
    for k in range(2):
        chi_t = _element_means(mesh, chi[k])
        for l in range(2):
            volume = d_t * (float(k == l) - grad[k, :, l]) - q[l, k] / porosity
            rhs = assemble_element_load(mesh, volume) + assemble_derivative_load(mesh, d_t * chi_t, l)
            _check_compatibility(abs(rhs.sum()) / scale, f"theta_{k + 1}{l + 1}")
            theta[k, l] = _solve_zero_mean(mesh, constraints, matrix, rhs, mass)
    return theta


def solve_theta_surface(mesh: Mesh, d, a, b, u_star: float, flux_star: float, constraints=None) -> np.ndarray:
    """
    Scalar surface part for boundary data g = b F* - a u* frozen at one macroscopic point:
    integral of d grad theta_s . grad v = -(integral of g v over the hole) + (integral of g / |Y1|) (integral of v).
    """
    constraints = constraints or _periodic(mesh)
    ones = np.ones(mesh.n_vertices)
    boundary = flux_star * (assemble_boundary_mass(mesh, EdgeTag.HOLE, b) @ ones) - u_star * (
        assemble_boundary_mass(mesh, EdgeTag.HOLE, a) @ ones
    )
    mass = assemble_mass(mesh)
    rhs = -boundary + boundary.sum() / mesh.area * (mass @ ones)
    return _solve_zero_mean(mesh, constraints, assemble_stiffness(mesh, d), rhs, mass)


def solve_cell(
    mesh: Mesh,
    coefficients: CoefficientSpec,
    order: int = 1,
    theta_mode: ThetaMode = ThetaMode.PURE,
    frozen: Optional[Sequence[Tuple[float, float]]] = None,
) -> CellSolution:
    """
    All cell data for every species. ``order`` >= 2 adds the second cell functions; in
    frozen mode ``frozen[i] = (u*, F_i(u*))`` drives the surface part.
    """
    theta_mode = ThetaMode(theta_mode)
    if theta_mode is ThetaMode.FROZEN and order >= 2 and frozen is None:
        raise ValueError("frozen second cell problem needs the macroscopic values at the evaluation point")
    constraints = _periodic(mesh)
    chi, q, asymmetry, surf = [], [], [], []
    theta, theta_surface = [], []
    for i, c in enumerate(coefficients.species):
        chi_i = solve_chi(mesh, c.d, constraints)
        q_i, asym_i = compute_q(mesh, c.d, chi_i)
        if asym_i > 1e-8 * max(float(np.abs(q_i).max()), 1.0):
            logger.warning(f"Species {i + 1}: effective tensor asymmetry {asym_i:.3e} removed by symmetrization")
        chi.append(chi_i)
        q.append(q_i)
        asymmetry.append(asym_i)
        surf.append(compute_surface_averages(mesh, c.a, c.b))
        if order >= 2:
            theta.append(solve_theta(mesh, c.d, chi_i, q_i, constraints))
            if theta_mode is ThetaMode.FROZEN:
                u_star, flux_star = frozen[i]
                theta_surface.append(solve_theta_surface(mesh, c.d, c.a, c.b, u_star, flux_star, constraints))
        eigenvalues = np.linalg.eigvalsh(q_i)
        logger.info(
            f"Species {i + 1}: q = [[{q_i[0, 0]:.6f}, {q_i[0, 1]:.6f}], [{q_i[1, 0]:.6f}, {q_i[1, 1]:.6f}]] "
            f"(eigenvalues {eigenvalues[0]:.6f}, {eigenvalues[1]:.6f}), <a> = {surf[-1][0]:.6f}, <b> = {surf[-1][1]:.6f}"
        )
    surf = np.array(surf, dtype=np.float64).reshape(-1, 2)
    return CellSolution(
        mesh=mesh,
        chi=np.array(chi),
        q=np.array(q),
        asymmetry=np.array(asymmetry),
        surf_a=surf[:, 0],
        surf_b=surf[:, 1],
        theta=np.array(theta) if theta else None,
        theta_surface=np.array(theta_surface) if theta_surface else None,
        theta_mode=theta_mode,
    )
