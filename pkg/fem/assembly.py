"""
Vectorized P1 assembly on triangle meshes.

Coefficients are sampled at element centroids (volume terms) or at the two Gauss
points of each edge (boundary terms). A coefficient is a number, a ReactionExpr in
the cell coordinates y = x/epsilon mod 1, or a callable mapping points (k, 2) to k
values. ``assemble_stiffness`` also takes a constant 2x2 tensor.
"""

import logging

import numpy as np
from scipy import sparse

from geometry.models import EdgeTag, Mesh
from reactions.evaluate import evaluate
from reactions.exceptions import EvalError
from reactions.models import ReactionExpr

logger = logging.getLogger(__name__)

_LOCAL_MASS = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
_GAUSS = 0.5 + np.array([-0.5, 0.5]) / np.sqrt(3.0)


def element_gradients(mesh: Mesh):
    """Gradients of the three barycentric basis functions, shape (nt, 3, 2), and element areas."""
    p = mesh.vertices[mesh.triangles]
    area = mesh.triangle_areas
    grads = np.empty((mesh.n_triangles, 3, 2))
    for i in range(3):
        edge = p[:, (i + 2) % 3] - p[:, (i + 1) % 3]
        grads[:, i, 0] = -edge[:, 1]
        grads[:, i, 1] = edge[:, 0]
    grads /= (2.0 * area)[:, None, None]
    return grads, area


def sample_coefficient(mesh: Mesh, coefficient, points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if isinstance(coefficient, ReactionExpr):
        y = mesh.cell_coordinates(points)
        values = evaluate(coefficient, (y[:, 0], y[:, 1]))
    elif callable(coefficient):
        values = coefficient(points)
    else:
        values = float(coefficient)
    values = np.array(np.broadcast_to(np.asarray(values, dtype=np.float64), (len(points),)))
    if not np.all(np.isfinite(values)):
        raise EvalError(f"coefficient {coefficient} is not finite at every sample point")
    return values


def _as_tensor(coefficient):
    if isinstance(coefficient, (ReactionExpr, int, float)) or callable(coefficient):
        return None
    tensor = np.asarray(coefficient, dtype=np.float64)
    if tensor.shape != (2, 2):
        return None
    if not np.all(np.isfinite(tensor)):
        raise EvalError(f"tensor coefficient {tensor.tolist()} is not finite")
    return tensor


def _scatter(mesh: Mesh, local: np.ndarray) -> sparse.csr_matrix:
    tri = mesh.triangles
    rows = np.broadcast_to(tri[:, :, None], local.shape).ravel()
    cols = np.broadcast_to(tri[:, None, :], local.shape).ravel()
    matrix = sparse.coo_matrix((local.ravel(), (rows, cols)), shape=(mesh.n_vertices,) * 2).tocsr()
    matrix.sum_duplicates()
    matrix.eliminate_zeros()
    return matrix


def assemble_stiffness(mesh: Mesh, coefficient=1.0) -> sparse.csr_matrix:
    """
    Matrix of the form (u, v) -> integral of c grad u . grad v. An isotropic tensor c*I goes
    through the scalar path, so it assembles bit-identically to the scalar c.
    """
    grads, area = element_gradients(mesh)
    tensor = _as_tensor(coefficient)
    if tensor is not None and tensor[0, 1] == 0.0 and tensor[1, 0] == 0.0 and tensor[0, 0] == tensor[1, 1]:
        coefficient, tensor = float(tensor[0, 0]), None
    if tensor is None:
        weight = area * sample_coefficient(mesh, coefficient, mesh.centroids)
        local = weight[:, None, None] * np.einsum("tik,tjk->tij", grads, grads)
    else:
        local = area[:, None, None] * np.einsum("tik,kl,tjl->tij", grads, tensor, grads)
    return _scatter(mesh, local)


def assemble_mass(mesh: Mesh, coefficient=None) -> sparse.csr_matrix:
    """Consistent P1 mass matrix, optionally weighted by a coefficient sampled at centroids."""
    weight = mesh.triangle_areas
    if coefficient is not None:
        weight = weight * sample_coefficient(mesh, coefficient, mesh.centroids)
    return _scatter(mesh, weight[:, None, None] * _LOCAL_MASS)


def assemble_boundary_mass(mesh: Mesh, tag: EdgeTag, weight=1.0) -> sparse.csr_matrix:
    """Edge mass matrix of the form (u, v) -> integral of w u v over the tagged edges, 2-point Gauss rule."""
    edges = mesh.edges(tag)
    n = mesh.n_vertices
    if len(edges) == 0:
        return sparse.csr_matrix((n, n))
    a, b = mesh.vertices[edges[:, 0]], mesh.vertices[edges[:, 1]]
    length = np.linalg.norm(b - a, axis=1)
    local = np.zeros((len(edges), 2, 2))
    for s in _GAUSS:
        w = sample_coefficient(mesh, weight, (1.0 - s) * a + s * b)
        phi = np.array([1.0 - s, s])
        local += (0.5 * length * w)[:, None, None] * np.outer(phi, phi)
    rows = np.broadcast_to(edges[:, :, None], local.shape).ravel()
    cols = np.broadcast_to(edges[:, None, :], local.shape).ravel()
    matrix = sparse.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    matrix.sum_duplicates()
    matrix.eliminate_zeros()
    return matrix


def assemble_element_load(mesh: Mesh, element_values: np.ndarray) -> np.ndarray:
    """Load vector of an element-wise constant function: integral over T of f_T phi_i = f_T |T| / 3."""
    share = np.repeat(mesh.triangle_areas * np.asarray(element_values, dtype=np.float64) / 3.0, 3)
    return np.bincount(mesh.triangles.ravel(), weights=share, minlength=mesh.n_vertices)


def assemble_derivative_load(mesh: Mesh, element_values: np.ndarray, axis: int) -> np.ndarray:
    """Load vector of v -> integral of w d(v)/dy_axis for an element-wise constant w."""
    grads, area = element_gradients(mesh)
    local = (area * np.asarray(element_values, dtype=np.float64))[:, None] * grads[:, :, axis]
    return np.bincount(mesh.triangles.ravel(), weights=local.ravel(), minlength=mesh.n_vertices)


def element_coefficient(mesh: Mesh, coefficient) -> np.ndarray:
    return sample_coefficient(mesh, coefficient, mesh.centroids)


def field_gradients(mesh: Mesh, values: np.ndarray) -> np.ndarray:
    """Element-constant gradients of P1 fields: (nt, 2) for one field, (N, nt, 2) for a stack."""
    grads, _ = element_gradients(mesh)
    values = np.asarray(values, dtype=np.float64)
    return np.einsum("...ti,tik->...tk", values[..., mesh.triangles], grads)
