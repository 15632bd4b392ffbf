import numpy as np

from fem.assembly import assemble_boundary_mass, assemble_mass, field_gradients
from fem.models import Field
from geometry.models import EdgeTag, Mesh


def _rows(field, mesh):
    if isinstance(field, Field):
        return field.values, field.mesh
    if mesh is None:
        raise TypeError("a mesh is required for raw nodal values")
    return np.atleast_2d(np.asarray(field, dtype=np.float64)), mesh


def h1_seminorm(field, mesh: Mesh = None) -> float:
    """(sum over species of the integral of |grad u_i|^2)^(1/2), exact for P1."""
    values, mesh = _rows(field, mesh)
    grad = field_gradients(mesh, values)
    return float(np.sqrt(np.sum(mesh.triangle_areas * np.sum(grad**2, axis=-1))))


def l2_norm(field, mesh: Mesh = None) -> float:
    values, mesh = _rows(field, mesh)
    mass = assemble_mass(mesh)
    return float(np.sqrt(max(sum(float(u @ (mass @ u)) for u in values), 0.0)))


def surface_l2_norm(field, mesh: Mesh = None, tag: EdgeTag = EdgeTag.HOLE) -> float:
    values, mesh = _rows(field, mesh)
    mass = assemble_boundary_mass(mesh, tag)
    return float(np.sqrt(max(sum(float(u @ (mass @ u)) for u in values), 0.0)))
