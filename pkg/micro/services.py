"""
Picard iteration for the semi-linear reaction-diffusion system on the perforated domain.

One sweep solves N decoupled linear problems

    integral of d_i grad s_i . grad v = integral of R_i(u+) v + eps * integral over holes of (a_i u_i - b_i F_i(u+)) v

with u = 0 on the outer boundary, u+ = max(u, 0), and relaxes u <- omega s + (1 - omega) u.
The loop itself (``picard``) is shared with the homogenized solver.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Tuple

import numpy as np

from fem.assembly import assemble_boundary_mass, assemble_mass, assemble_stiffness
from fem.constraints import PreparedOperator
from fem.models import Field, ProblemSpec
from fem.norms import h1_seminorm, l2_norm, surface_l2_norm
from geometry.exceptions import GeometryError
from geometry.models import EdgeTag, Mesh
from micro.exceptions import PicardNoConvergence
from micro.models import KappaEstimate, PicardOptions, PicardReport, PropertyReport
from micro.signals import picard_step
from reactions.exceptions import EvalError
from reactions.lipschitz import estimate_lipschitz

logger = logging.getLogger(__name__)

Step = Callable[[np.ndarray], np.ndarray]


def _diverging(report: PicardReport) -> bool:
    residuals = report.residuals
    if not residuals or not np.isfinite(residuals[-1]):
        return True
    tail = [r for r in report.ratios[-3:] if r is not None]
    return residuals[-1] > residuals[0] or (len(tail) == 3 and min(tail) >= 1.0)


def picard(
    label: str,
    step: Step,
    mesh: Mesh,
    initial: np.ndarray,
    options: PicardOptions,
    sender: str = "micro",
) -> Tuple[np.ndarray, PicardReport]:
    """
    Relaxed fixed-point loop u <- omega step(u) + (1 - omega) u in the H1-seminorm.
    Stops when ||u^(n+1) - u^n|| <= tol ||u^(n+1)||.
    """
    report = PicardReport(
        label=label, omega=options.omega, tol=options.tol, mesh=mesh, keep_iterates=options.keep_iterates
    )
    u = np.array(initial, dtype=np.float64)
    if options.keep_iterates:
        report.iterates.append(u.copy())
    for n in range(1, options.max_iter + 1):
        try:
            new = options.omega * step(u) + (1.0 - options.omega) * u
        except EvalError as exc:
            logger.error(f"{label}: reaction evaluation failed in sweep {n}: {exc}", exc_info=True)
            raise PicardNoConvergence(report, diverging=True, values=u) from exc
        residual = h1_seminorm(new - u, mesh)
        report.residuals.append(residual)
        ratio = report.ratios[-1]
        picard_step.send(sender=sender, label=label, n=n, residual=residual, ratio=ratio)
        if not np.isfinite(residual) or not np.all(np.isfinite(new)):
            logger.error(f"{label}: non-finite iterate in sweep {n}")
            raise PicardNoConvergence(report, diverging=True, values=u)
        u = new
        if options.keep_iterates:
            report.iterates.append(u.copy())
        if residual <= options.tol * h1_seminorm(u, mesh):
            report.converged = True
            break

    if not report.converged:
        diverging = _diverging(report)
        logger.error(f"{label}: no convergence after {report.n} sweeps (residual {report.residuals[-1]:.3e})")
        raise PicardNoConvergence(report, diverging=diverging, values=u)
    kappa = report.kappa
    logger.info(
        f"{label}: converged in {report.n} sweeps, residual {report.residuals[-1]:.3e}"
        + (f", kappa {kappa:.4f}" if kappa is not None else "")
    )
    return u, report


def clamp(values: np.ndarray) -> np.ndarray:
    """Reaction inputs are extended by their value at zero for negative arguments."""
    return np.maximum(values, 0.0)


def solve_species(operators: List[PreparedOperator], loads: List[np.ndarray], jobs: int = 1) -> np.ndarray:
    """One linear solve per species; the solves are independent and may run on a thread pool."""
    pairs = list(zip(operators, loads))
    if jobs > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=min(jobs, len(pairs))) as pool:
            solutions = list(pool.map(lambda pair: pair[0].solve(pair[1]), pairs))
    else:
        solutions = [operator.solve(load) for operator, load in pairs]
    return np.stack(solutions)


class _MicroOperator:
    """Assembled pieces of one micro problem: per-species Dirichlet operators and boundary masses."""

    def __init__(self, mesh: Mesh, spec: ProblemSpec, jobs: int = 1):
        self.mesh = mesh
        self.spec = spec
        self.jobs = jobs
        self.mass = assemble_mass(mesh)
        self.operators = [
            PreparedOperator.dirichlet(mesh, assemble_stiffness(mesh, c.d)) for c in spec.coefficients.species
        ]
        self.robin = [
            (assemble_boundary_mass(mesh, EdgeTag.HOLE, c.a), assemble_boundary_mass(mesh, EdgeTag.HOLE, c.b))
            for c in spec.coefficients.species
        ]

    def rhs(self, u: np.ndarray) -> List[np.ndarray]:
        positive = clamp(u)
        eps = self.mesh.epsilon
        loads = []
        for i in range(self.spec.n_species):
            source = np.broadcast_to(self.spec.reactions[i](*positive), u[i].shape)
            flux = np.broadcast_to(self.spec.fluxes[i](*positive), u[i].shape)
            mass_a, mass_b = self.robin[i]
            loads.append(self.mass @ source + eps * (mass_a @ u[i] - mass_b @ flux))
        return loads

    def __call__(self, u: np.ndarray) -> np.ndarray:
        return solve_species(self.operators, self.rhs(u), self.jobs)


def solve_micro(
    mesh: Mesh, spec: ProblemSpec, options: Optional[PicardOptions] = None, label: Optional[str] = None
) -> Tuple[Field, PicardReport]:
    options = options or PicardOptions()
    if len(mesh.tagged_vertices(EdgeTag.EXTERIOR)) == 0:
        raise GeometryError("the microscopic problem needs a mesh with an outer (Dirichlet) boundary")
    label = label or f"micro eps={mesh.epsilon:g}"
    operator = _MicroOperator(mesh, spec, options.jobs)
    if options.initial is not None:
        initial = options.initial.values
        if initial.shape != (spec.n_species, mesh.n_vertices):
            raise ValueError(f"initial iterate of shape {initial.shape} does not fit this problem")
    else:
        initial = np.zeros((spec.n_species, mesh.n_vertices))
    logger.info(
        f"{label}: {spec.n_species} species, {mesh.n_vertices} vertices, omega={options.omega}, tol={options.tol:g}"
    )
    values, report = picard(label, operator, mesh, initial, options, sender="micro")
    return Field(mesh, values), report


def check_solution_properties(u: Field, mesh: Optional[Mesh] = None, spec: Optional[ProblemSpec] = None) -> PropertyReport:
    """Nodal extrema per species and the sup-norm ratio against the volume and surface L2 norms."""
    mesh = mesh or u.mesh
    if spec is not None and spec.n_species != u.n_species:
        raise ValueError(f"field has {u.n_species} species, the problem {spec.n_species}")
    report = PropertyReport(
        minimum=u.min(),
        maximum=u.max(),
        sup_norm=float(np.abs(u.values).max()),
        l2_volume=l2_norm(u.values, mesh),
        l2_surface=surface_l2_norm(u.values, mesh),
    )
    if not report.non_negative:
        logger.warning(f"Solution takes negative values: minima {report.minimum.tolist()}")
    logger.info(f"Solution range [{report.minimum.min():.6g}, {report.maximum.max():.6g}], ratio {report.ratio:.6g}")
    return report


def measure_poincare(mesh: Mesh, steps: int = 4) -> float:
    """
    C_p = max of ||v||_L2 / ||grad v||_L2 over a sine bump and ``steps`` steps of inverse
    iteration started from it, with v = 0 on the outer boundary.
    """
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    v = np.sin(np.pi * x) * np.sin(np.pi * y)
    v[mesh.tagged_vertices(EdgeTag.EXTERIOR)] = 0.0
    mass = assemble_mass(mesh)
    operator = PreparedOperator.dirichlet(mesh, assemble_stiffness(mesh))
    best = 0.0
    for _ in range(steps + 1):
        seminorm = h1_seminorm(v, mesh)
        if seminorm > 0:
            best = max(best, l2_norm(v, mesh) / seminorm)
        v = operator.solve(mass @ v)
        v /= max(float(np.abs(v).max()), np.finfo(float).tiny)
    return best


def estimate_kappa(
    report: PicardReport,
    mesh: Mesh,
    spec: ProblemSpec,
    u: Optional[Field] = None,
    samples: Optional[int] = None,
) -> KappaEstimate:
    """
    The measured contraction factor beside C_p / alpha * max L_i * N. Lipschitz constants
    are sampled on [0, upper]^N, upper covering the solution range.
    """
    upper = 1.0 if u is None else max(1.0, 1.25 * float(u.values.max()))
    lipschitz = estimate_lipschitz(spec.reactions, (0.0, upper), samples=samples, surface=spec.fluxes)
    estimate = KappaEstimate(
        kappa_hat=report.kappa,
        poincare=measure_poincare(mesh),
        alpha=min(c.alpha for c in spec.coefficients.species),
        lipschitz=lipschitz,
        n_species=spec.n_species,
    )
    report.kappa_inputs = estimate
    if estimate.immediate:
        logger.info(f"{report.label}: converged in {report.n} sweeps, no contraction factor measured")
    else:
        logger.info(
            f"{report.label}: kappa_hat {estimate.kappa_hat:.4g}, bound C_p/alpha*L*N = {estimate.bound:.4g} "
            f"(C_p {estimate.poincare:.4g}, alpha {estimate.alpha:g}, L {lipschitz.max_volume:.4g})"
        )
    if not estimate.consistent:
        logger.warning(f"{report.label}: kappa_hat {estimate.kappa_hat:.4g} >= 1 although the bound is below 1")
    return estimate
