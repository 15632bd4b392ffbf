from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from fem.models import Field
from fem.norms import h1_seminorm
from geometry.models import Mesh
from reactions.lipschitz import LipschitzEstimate


@dataclass(frozen=True)
class PicardOptions:
    tol: float = 1e-8
    max_iter: int = 200
    omega: float = 0.8
    jobs: int = 1
    keep_iterates: bool = False
    initial: Optional[Field] = None

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be at least 1, got {self.max_iter}")
        if not 0.0 < self.omega <= 1.0:
            raise ValueError(f"relaxation omega must lie in (0, 1], got {self.omega}")
        if self.jobs < 1:
            raise ValueError(f"jobs must be at least 1, got {self.jobs}")


@dataclass(frozen=True)
class KappaEstimate:
    """Measured contraction next to the bound C_p / alpha * max L_i * N."""

    kappa_hat: Optional[float]
    poincare: float
    alpha: float
    lipschitz: LipschitzEstimate
    n_species: int

    @property
    def bound(self) -> float:
        return self.poincare / self.alpha * self.lipschitz.max_volume * self.n_species

    @property
    def immediate(self) -> bool:
        """Converged before three sweeps, so no contraction factor was measured."""
        return self.kappa_hat is None

    @property
    def consistent(self) -> bool:
        if self.kappa_hat is None or self.bound >= 1.0:
            return True
        return self.kappa_hat < 1.0


@dataclass(eq=False)
class PicardReport:
    """
    History of one Picard run. ``residuals[n - 1]`` is ||u^n - u^(n-1)||_V, so the
    first entry is ||u^1 - u^0||. With ``keep_iterates`` every u^n, n >= 0, is stored.
    """

    label: str
    omega: float
    tol: float
    mesh: Optional[Mesh] = None
    residuals: List[float] = field(default_factory=list)
    converged: bool = False
    keep_iterates: bool = False
    iterates: List[np.ndarray] = field(default_factory=list)
    kappa_inputs: Optional[KappaEstimate] = None

    @property
    def n(self) -> int:
        return len(self.residuals)

    @property
    def ratios(self) -> List[Optional[float]]:
        """ratios[k] = residuals[k] / residuals[k - 1]; None where undefined."""
        ratios = [None]
        for previous, current in zip(self.residuals, self.residuals[1:]):
            ratios.append(current / previous if previous > 0 else None)
        return ratios[: self.n]

    @property
    def kappa(self) -> Optional[float]:
        """Geometric mean of the successive residual ratios, from three sweeps on."""
        ratios = [r for r in self.ratios if r is not None]
        if self.n < 3 or not ratios:
            return None
        if min(ratios) == 0.0:
            return 0.0
        return float(np.exp(np.mean(np.log(ratios))))

    def tail_bound(self, n: int) -> Optional[float]:
        """kappa^n / (1 - kappa) * ||u^1 - u^0||_V, the Cauchy tail of a contraction."""
        kappa = self.kappa
        if kappa is None or kappa >= 1.0 or not self.residuals:
            return None
        return kappa**n / (1.0 - kappa) * self.residuals[0]

    def distances_to_final(self) -> List[float]:
        """||u^n - u^final||_V for every kept iterate."""
        if not self.iterates or self.mesh is None:
            raise ValueError("iterates were not kept for this run")
        final = self.iterates[-1]
        return [h1_seminorm(u - final, self.mesh) for u in self.iterates]

    def decay_excess(self, start: int = 2) -> Optional[float]:
        """max over n >= start of residual_n / (kappa^(n - start) residual_start); 1 means exact geometric decay."""
        kappa = self.kappa
        if not kappa or self.n <= start or self.residuals[start - 1] == 0.0:
            return None
        base = self.residuals[start - 1]
        return max(self.residuals[n - 1] / (kappa ** (n - start) * base) for n in range(start, self.n + 1))

    def rows(self):
        return [(n, residual, ratio) for n, residual, ratio in zip(range(1, self.n + 1), self.residuals, self.ratios)]


@dataclass(frozen=True)
class PropertyReport:
    minimum: np.ndarray
    maximum: np.ndarray
    sup_norm: float
    l2_volume: float
    l2_surface: float

    @property
    def ratio(self) -> float:
        """||u||_inf / (1 + ||u||_L2(volume) + ||u||_L2(surface))."""
        return self.sup_norm / (1.0 + self.l2_volume + self.l2_surface)

    @property
    def non_negative(self) -> bool:
        return bool(np.all(self.minimum >= -1e-8))
