from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np

from cells.models import CellSolution
from fem.models import ProblemSpec
from geometry.models import EdgeTag, Mesh
from macro.exceptions import InvalidMacroProblem
from reactions.models import ReactionExpr


class MacroMode(str, Enum):
    VOLUME_ONLY = "volume_only"
    WITH_SURFACE = "with_surface"


@dataclass(eq=False)
class MacroProblem:
    """
    Homogenized system on the unperforated square:

        -div(q_i grad u_i) = porosity R_i(u+)                                  (volume_only)
        -div(q_i grad u_i) = porosity R_i(u+) + <a_i> u_i - <b_i> F_i(u+)       (with_surface)

    with u = 0 on the boundary and |Y| = 1.
    """

    mesh: Mesh
    q: np.ndarray
    porosity: float
    surf_a: np.ndarray
    surf_b: np.ndarray
    reactions: Tuple[ReactionExpr, ...]
    fluxes: Tuple[ReactionExpr, ...]
    mode: MacroMode = MacroMode.VOLUME_ONLY

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=np.float64).reshape(-1, 2, 2)
        n = len(self.q)
        self.surf_a = np.broadcast_to(np.asarray(self.surf_a, dtype=np.float64), (n,)).copy()
        self.surf_b = np.broadcast_to(np.asarray(self.surf_b, dtype=np.float64), (n,)).copy()
        self.reactions = tuple(self.reactions)
        self.fluxes = tuple(self.fluxes)
        self.mode = MacroMode(self.mode)
        if len(self.reactions) != n or len(self.fluxes) != n:
            raise InvalidMacroProblem(f"expected {n} reaction and flux expressions")
        if not 0.0 < self.porosity <= 1.0:
            raise InvalidMacroProblem(f"porosity must lie in (0, 1], got {self.porosity}")
        for i, q in enumerate(self.q, start=1):
            if not np.all(np.isfinite(q)) or not np.allclose(q, q.T, rtol=1e-12, atol=0.0):
                raise InvalidMacroProblem(f"effective tensor of species {i} is not symmetric: {q.tolist()}")
            if np.linalg.eigvalsh(q).min() <= 0:
                raise InvalidMacroProblem(f"effective tensor of species {i} is not positive definite: {q.tolist()}")
        if np.any(self.mesh.edge_tags == EdgeTag.HOLE.value):
            raise InvalidMacroProblem("the homogenized problem lives on the unperforated domain")

    @classmethod
    def from_cell(
        cls, mesh: Mesh, cell: CellSolution, spec: ProblemSpec, mode: MacroMode = MacroMode.VOLUME_ONLY
    ) -> "MacroProblem":
        return cls(
            mesh=mesh,
            q=cell.q,
            porosity=min(cell.porosity, 1.0),
            surf_a=cell.surf_a,
            surf_b=cell.surf_b,
            reactions=spec.reactions,
            fluxes=spec.fluxes,
            mode=mode,
        )

    @property
    def n_species(self) -> int:
        return len(self.q)
