import logging
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse

from fem.assembly import assemble_mass, assemble_stiffness, field_gradients
from fem.constraints import PreparedOperator
from fem.models import Field
from geometry.exceptions import GeometryError
from geometry.models import Mesh
from macro.models import MacroMode, MacroProblem
from micro.models import PicardOptions, PicardReport
from micro.services import clamp, picard, solve_species
from reactions.models import ReactionExpr
from reactions.nodes import VariableKind
from reactions.parser import parse

logger = logging.getLogger(__name__)

_HESSIAN_STEP = 1e-5


def solve_macro(
    problem: MacroProblem, options: Optional[PicardOptions] = None, label: Optional[str] = None
) -> Tuple[Field, PicardReport]:
    """Picard iteration on the homogenized system; same loop and stopping rule as the micro solver."""
    options = options or PicardOptions()
    mesh = problem.mesh
    label = label or f"macro {problem.mode.value}"
    mass = assemble_mass(mesh)
    operators = [PreparedOperator.dirichlet(mesh, assemble_stiffness(mesh, q)) for q in problem.q]
    with_surface = problem.mode is MacroMode.WITH_SURFACE

    def step(u: np.ndarray) -> np.ndarray:
        positive = clamp(u)
        loads = []
        for i in range(problem.n_species):
            source = problem.porosity * np.broadcast_to(problem.reactions[i](*positive), u[i].shape)
            if with_surface:
                flux = np.broadcast_to(problem.fluxes[i](*positive), u[i].shape)
                source = source + problem.surf_a[i] * u[i] - problem.surf_b[i] * flux
            loads.append(mass @ source)
        return solve_species(operators, loads, options.jobs)

    if options.initial is not None:
        initial = options.initial.values
    else:
        initial = np.zeros((problem.n_species, mesh.n_vertices))
    logger.info(f"{label}: {problem.n_species} species, {mesh.n_vertices} vertices, porosity {problem.porosity:.6f}")
    values, report = picard(label, step, mesh, initial, options, sender="macro")
    return Field(mesh, values), report


# ─── Derivative recovery ─────────────────────────────────────────────────────


def _averaging(mesh: Mesh) -> sparse.csr_matrix:
    """Row-normalized node <- element map with area weights."""
    nt = mesh.n_triangles
    incidence = sparse.csr_matrix(
        (np.repeat(mesh.triangle_areas, 3), (mesh.triangles.ravel(), np.repeat(np.arange(nt), 3))),
        shape=(mesh.n_vertices, nt),
    )
    weight = np.asarray(incidence.sum(axis=1)).ravel()
    return sparse.diags(1.0 / weight) @ incidence


def recover_gradient(values, mesh: Optional[Mesh] = None) -> np.ndarray:
    """Nodal gradients of P1 fields by area-weighted averaging, shape (..., 2, nv)."""
    if isinstance(values, Field):
        values, mesh = values.values, values.mesh
    values = np.asarray(values, dtype=np.float64)
    grads = field_gradients(mesh, values)
    lead = grads.shape[:-2]
    flat = np.moveaxis(grads, -2, 0).reshape(mesh.n_triangles, -1)
    nodal = (_averaging(mesh) @ flat).reshape((mesh.n_vertices,) + lead + (2,))
    return np.moveaxis(nodal, 0, -1)


def recover_hessian(values, mesh: Optional[Mesh] = None) -> np.ndarray:
    """Gradient recovery applied to the recovered gradient, symmetrized; shape (..., 2, 2, nv)."""
    if isinstance(values, Field):
        values, mesh = values.values, values.mesh
    hessian = recover_gradient(recover_gradient(values, mesh), mesh)
    return 0.5 * (hessian + np.swapaxes(hessian, -3, -2))


# ─── Evaluation at arbitrary points ──────────────────────────────────────────


def interpolate(mesh: Mesh, values: np.ndarray, points: np.ndarray) -> np.ndarray:
    """
    P1 values at ``points`` on the structured mesh of the unit square; ``values`` has shape
    (..., nv), the result (..., len(points)). Square (i, j) holds the lower triangle
    (v00, v10, v11) where s >= t and the upper one (v00, v11, v01) elsewhere.
    """
    n = mesh.grid
    if n is None or mesh.epsilon != 1.0:
        raise GeometryError("point evaluation needs the structured mesh of the unperforated square")
    values = np.asarray(values, dtype=np.float64)
    scaled = np.asarray(points, dtype=np.float64).reshape(-1, 2) * n
    i = np.clip(np.floor(scaled[:, 0]).astype(np.int64), 0, n - 1)
    j = np.clip(np.floor(scaled[:, 1]).astype(np.int64), 0, n - 1)
    s, t = scaled[:, 0] - i, scaled[:, 1] - j
    v00 = j * (n + 1) + i
    v10, v01 = v00 + 1, v00 + n + 1
    v11 = v01 + 1
    f00, f10, f01, f11 = values[..., v00], values[..., v10], values[..., v01], values[..., v11]
    lower = f00 + s * (f10 - f00) + t * (f11 - f10)
    upper = f00 + t * (f01 - f00) + s * (f11 - f01)
    return np.where(s >= t, lower, upper)


class RecoveredMacro:
    """A computed macro field with recovered first and second derivatives."""

    def __init__(self, field: Field):
        self.field = field
        self.mesh = field.mesh
        self.gradient_nodes = recover_gradient(field)
        self.hessian_nodes = recover_hessian(field)

    @property
    def n_species(self) -> int:
        return self.field.n_species

    def values(self, points: np.ndarray) -> np.ndarray:
        """(N, k)"""
        return interpolate(self.mesh, self.field.values, points)

    def gradient(self, points: np.ndarray) -> np.ndarray:
        """(N, 2, k)"""
        return interpolate(self.mesh, self.gradient_nodes, points)

    def hessian(self, points: np.ndarray) -> np.ndarray:
        """(N, 2, 2, k)"""
        return interpolate(self.mesh, self.hessian_nodes, points)


class ManufacturedMacro:
    """
    A prescribed macro field u(x1, x2) per species. The gradient is exact (forward mode);
    the Hessian takes central differences of the exact gradient.
    """

    def __init__(self, expressions: Union[str, ReactionExpr, Sequence[Union[str, ReactionExpr]]]):
        if isinstance(expressions, (str, ReactionExpr)):
            expressions = [expressions]
        self.expressions = tuple(
            e if isinstance(e, ReactionExpr) else parse(e, 2, VariableKind.SPACE) for e in expressions
        )
        for e in self.expressions:
            if e.kind is not VariableKind.SPACE:
                raise ValueError(f"manufactured fields are expressions in x1, x2, got {e}")

    @property
    def n_species(self) -> int:
        return len(self.expressions)

    def values(self, points: np.ndarray) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        return np.stack([np.broadcast_to(e(p[:, 0], p[:, 1]), (len(p),)) for e in self.expressions])

    def gradient(self, points: np.ndarray) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        return np.stack([np.broadcast_to(e.gradient(p[:, 0], p[:, 1]), (2, len(p))) for e in self.expressions])

    def hessian(self, points: np.ndarray) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        columns = []
        for axis in range(2):
            shift = np.zeros(2)
            shift[axis] = _HESSIAN_STEP
            columns.append((self.gradient(p + shift) - self.gradient(p - shift)) / (2 * _HESSIAN_STEP))
        hessian = np.stack(columns, axis=2)  # (N, k, l, points): d/dx_l of du/dx_k
        return 0.5 * (hessian + np.swapaxes(hessian, 1, 2))

    def field(self, mesh: Mesh) -> Field:
        return Field(mesh, self.values(mesh.vertices))
