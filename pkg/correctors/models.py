import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from cells.models import CellSolution, ThetaMode
from fem.models import Field, ProblemSpec
from geometry.models import CellGeometry
from macro.models import MacroMode
from micro.models import PicardOptions, PicardReport

# errors at or below this are solver noise, not a rate
DEGENERATE_FLOOR = 1e-10


class CutoffConvention(str, Enum):
    STANDARD = "standard"
    PAPER = "paper"


@dataclass(frozen=True)
class CutoffSpec:
    """
    Cut-off m in s = dist(x, boundary of the square) / (width * eps). Both conventions
    vanish on the boundary and equal 1 for s >= 1:

        standard  piecewise linear, m = s
        paper     smooth, m = f(s) / (f(s) + f(1 - s)) with f(t) = exp(-1/t)

    ``width`` is the transition band in units of eps.
    """

    convention: CutoffConvention = CutoffConvention.STANDARD
    width: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "convention", CutoffConvention(self.convention))
        if not 0.0 < self.width <= 2.0:
            raise ValueError(f"cut-off band width must lie in (0, 2] eps, got {self.width}")

    @property
    def gradient_bound(self) -> float:
        """Largest eps |grad m| of the exact profile."""
        steepest = 2.0 if self.convention is CutoffConvention.PAPER else 1.0
        return steepest / self.width

    def profile(self, distance: np.ndarray, epsilon: float) -> np.ndarray:
        s = np.clip(np.asarray(distance, dtype=np.float64) / (self.width * epsilon), 0.0, 1.0)
        if self.convention is CutoffConvention.PAPER:
            rising, falling = _bump_tail(s), _bump_tail(1.0 - s)
            return rising / (rising + falling)
        return s


def _bump_tail(t: np.ndarray) -> np.ndarray:
    # exp(-1/t) for t > 0, 0 otherwise; smooth at t = 0
    return np.where(t > 0.0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)


@dataclass(frozen=True)
class SweepSettings:
    """Everything one rate measurement needs."""

    geometry: CellGeometry
    spec: ProblemSpec
    eps_list: Tuple[float, ...] = (1 / 4, 1 / 8, 1 / 16, 1 / 32)
    order: int = 1
    h_ratio: int = 8
    cutoff: CutoffSpec = field(default_factory=CutoffSpec)
    macro_mode: MacroMode = MacroMode.VOLUME_ONLY
    macro_cells: int = 128
    theta_mode: ThetaMode = ThetaMode.PURE
    eval_point: Tuple[float, float] = (0.5, 0.5)
    picard: PicardOptions = field(default_factory=PicardOptions)
    jobs: int = 1

    def __post_init__(self):
        if self.order not in (0, 1, 2):
            raise ValueError(f"expansion order must be 0, 1 or 2, got {self.order}")
        if self.h_ratio < 4:
            raise ValueError(f"h_ratio must be at least 4 (h <= eps/4), got {self.h_ratio}")

    @property
    def cell_h(self) -> float:
        return 1.0 / self.h_ratio


@dataclass(frozen=True)
class ConvergenceRow:
    epsilon: float
    h: float
    order: int
    err_v: float
    err_l2: float
    err_uncut: float


def fit_slope(epsilons, errors) -> Optional[float]:
    """Least-squares slope of log(error) against log(eps); None when an error sits at the noise floor."""
    errors = np.asarray(errors, dtype=np.float64)
    if len(errors) < 2 or np.any(errors <= DEGENERATE_FLOOR):
        return None
    slope, _ = np.polyfit(np.log(epsilons), np.log(errors), 1)
    return float(slope)


@dataclass(eq=False)
class ConvergenceReport:
    order: int
    cutoff: CutoffConvention
    rows: List[ConvergenceRow] = field(default_factory=list)
    picard: List[PicardReport] = field(default_factory=list)
    cell: Optional[CellSolution] = None
    macro: Optional[Field] = None
    macro_report: Optional[PicardReport] = None
    fields: List[Field] = field(default_factory=list)

    def __post_init__(self):
        eps = [row.epsilon for row in self.rows]
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError(f"epsilon values must be strictly decreasing, got {eps}")
        for row in self.rows:
            values = (row.err_v, row.err_l2, row.err_uncut)
            if not all(math.isfinite(v) and v >= 0.0 for v in values):
                raise ValueError(f"errors must be finite and non-negative, got {values} at eps={row.epsilon}")

    @property
    def epsilons(self) -> List[float]:
        return [row.epsilon for row in self.rows]

    @property
    def slope(self) -> Optional[float]:
        return fit_slope(self.epsilons, [row.err_v for row in self.rows])

    @property
    def slope_l2(self) -> Optional[float]:
        return fit_slope(self.epsilons, [row.err_l2 for row in self.rows])

    @property
    def slope_uncut(self) -> Optional[float]:
        return fit_slope(self.epsilons, [row.err_uncut for row in self.rows])

    @property
    def degenerate(self) -> bool:
        return self.slope is None
