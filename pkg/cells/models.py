from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from geometry.models import Mesh


class ThetaMode(str, Enum):
    PURE = "pure"
    FROZEN = "frozen"


@dataclass(eq=False)
class CellSolution:
    """
    Cell functions and effective data for N species on one unit-cell mesh.

    chi           (N, 2, nv)     first cell functions, mean zero over Y1
    q             (N, 2, 2)      symmetrized effective tensors
    asymmetry     (N,)           max |q_raw - q_raw^T| before symmetrization
    surf_a/surf_b (N,)           integrals of a_i, b_i over the hole boundary
    theta         (N, 2, 2, nv)  second cell functions, when requested
    theta_surface (N, nv)        scalar surface part of the second corrector (frozen mode)
    """

    mesh: Mesh
    chi: np.ndarray
    q: np.ndarray
    asymmetry: np.ndarray
    surf_a: np.ndarray
    surf_b: np.ndarray
    theta: Optional[np.ndarray] = None
    theta_surface: Optional[np.ndarray] = None
    theta_mode: ThetaMode = ThetaMode.PURE

    @property
    def n_species(self) -> int:
        return self.chi.shape[0]

    @property
    def porosity(self) -> float:
        """|Y1| / |Y| with |Y| = 1."""
        return self.mesh.area

    @property
    def has_theta(self) -> bool:
        return self.theta is not None
