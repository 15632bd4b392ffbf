"""
Homogeneous Dirichlet and periodic constraints by symmetric reduction.

A constraint set is a prolongation P (full <- reduced): each free unknown is the
class of vertices tied together by periodic pairs, and Dirichlet vertices have
no column. The reduced system is P^T A P y = P^T b and the full solution is P y.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from fem.exceptions import ConstraintConflict
from fem.solvers import solve_linear
from geometry.models import EdgeTag, Mesh

logger = logging.getLogger(__name__)

_CANCELLATION = 1e-13


@dataclass
class LinearSystem:
    matrix: sparse.csr_matrix
    rhs: np.ndarray
    mesh: Mesh


@dataclass(frozen=True, eq=False)
class Constraints:
    prolongation: sparse.csr_matrix
    dirichlet: np.ndarray
    masters: np.ndarray

    @classmethod
    def build(cls, n: int, dirichlet=(), periodic_pairs=None) -> "Constraints":
        dirichlet = np.unique(np.asarray(dirichlet, dtype=np.int64))
        pairs = np.empty((0, 2), dtype=np.int64) if periodic_pairs is None else np.asarray(periodic_pairs, np.int64)
        pairs = pairs.reshape(-1, 2)
        conflict = np.intersect1d(dirichlet, pairs[:, 1])
        if len(conflict):
            raise ConstraintConflict(
                f"{len(conflict)} vertex(es) are both Dirichlet and periodic slaves, e.g. vertex {conflict[0]}"
            )
        graph = sparse.coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
        _, labels = connected_components(graph, directed=False)
        fixed = np.zeros(n, dtype=bool)
        fixed[dirichlet] = True
        # a class containing a Dirichlet vertex is fixed as a whole
        fixed_labels = np.unique(labels[fixed])
        free = ~np.isin(labels, fixed_labels)
        root = np.full(labels.max() + 1, n, dtype=np.int64)
        np.minimum.at(root, labels, np.arange(n))
        masters = np.unique(root[labels[free]])
        column = np.full(n, -1, dtype=np.int64)
        column[masters] = np.arange(len(masters))
        rows = np.flatnonzero(free)
        prolongation = sparse.csr_matrix(
            (np.ones(len(rows)), (rows, column[root[labels[rows]]])), shape=(n, len(masters))
        )
        return cls(prolongation=prolongation, dirichlet=dirichlet, masters=masters)

    @property
    def size(self) -> int:
        return self.prolongation.shape[1]

    def reduce(self, system: LinearSystem) -> "ReducedSystem":
        p = self.prolongation
        matrix = (p.T @ system.matrix @ p).tocsr()
        matrix.sum_duplicates()
        matrix.eliminate_zeros()
        return ReducedSystem(
            matrix=matrix,
            rhs=p.T @ system.rhs,
            constraints=self,
            mesh=system.mesh,
            scale=float(np.linalg.norm(system.rhs)),
        )

    def restrict(self, values: np.ndarray) -> np.ndarray:
        """Master values of a full field."""
        return np.asarray(values)[self.masters]

    def expand(self, reduced: np.ndarray) -> np.ndarray:
        return self.prolongation @ reduced


@dataclass
class ReducedSystem:
    matrix: sparse.csr_matrix
    rhs: np.ndarray
    constraints: Constraints
    mesh: Optional[Mesh] = None
    scale: float = 0.0

    def solve(self, tol: Optional[float] = None, singular: bool = False) -> np.ndarray:
        """
        Full nodal solution. With ``singular`` the constants span the kernel (pure periodic
        problems): the right-hand side is projected onto their complement first. A reduced
        right-hand side that is round-off of the full one gives the zero solution.
        """
        rhs = self.rhs
        if singular:
            rhs = rhs - rhs.mean()
        if np.linalg.norm(rhs) <= _CANCELLATION * self.scale:
            rhs = np.zeros_like(rhs)
        return self.constraints.expand(solve_linear(self.matrix, rhs, tol=tol))


def apply_dirichlet(system: LinearSystem, tag: EdgeTag = EdgeTag.EXTERIOR) -> ReducedSystem:
    dirichlet = system.mesh.tagged_vertices(tag)
    return Constraints.build(system.mesh.n_vertices, dirichlet=dirichlet).reduce(system)


def apply_periodic(system: LinearSystem, periodic_pairs: Optional[np.ndarray] = None) -> ReducedSystem:
    pairs = system.mesh.periodic_pairs if periodic_pairs is None else periodic_pairs
    return Constraints.build(system.mesh.n_vertices, periodic_pairs=pairs).reduce(system)


def constrain(system: LinearSystem, dirichlet=(), periodic_pairs=None) -> ReducedSystem:
    return Constraints.build(system.mesh.n_vertices, dirichlet, periodic_pairs).reduce(system)


@dataclass(eq=False)
class PreparedOperator:
    """A constrained matrix reduced once and solved for many right-hand sides."""

    matrix: sparse.csr_matrix
    constraints: Constraints
    mesh: Mesh

    @classmethod
    def dirichlet(cls, mesh: Mesh, matrix, tag: EdgeTag = EdgeTag.EXTERIOR) -> "PreparedOperator":
        dirichlet = mesh.tagged_vertices(tag)
        if len(dirichlet) == 0:
            raise ConstraintConflict(f"mesh has no {EdgeTag(tag).value} vertices to hold the Dirichlet condition")
        constraints = Constraints.build(mesh.n_vertices, dirichlet=dirichlet)
        reduced = constraints.reduce(LinearSystem(matrix, np.zeros(mesh.n_vertices), mesh))
        return cls(matrix=reduced.matrix, constraints=constraints, mesh=mesh)

    def solve(self, rhs: np.ndarray, tol: Optional[float] = None) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=np.float64)
        system = ReducedSystem(
            matrix=self.matrix,
            rhs=self.constraints.prolongation.T @ rhs,
            constraints=self.constraints,
            mesh=self.mesh,
            scale=float(np.linalg.norm(rhs)),
        )
        return system.solve(tol)
