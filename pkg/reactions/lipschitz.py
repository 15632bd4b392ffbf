import itertools
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from django.conf import settings
from scipy.stats import qmc

from reactions.evaluate import eval_gradient
from reactions.models import ReactionExpr

logger = logging.getLogger(__name__)

Box = Tuple[Tuple[float, float], ...]

# all corners are evaluated up to this many variables
_MAX_CORNER_DIM = 10


@dataclass(frozen=True)
class LipschitzEstimate:
    """Sampled Lipschitz constants: ``volume`` for each R_i, ``surface`` for each F_i. Not a certified bound."""

    volume: Tuple[float, ...]
    surface: Tuple[float, ...]
    box: Box
    samples: int

    def __post_init__(self):
        for value in self.volume + self.surface:
            if not (math.isfinite(value) and value >= 0.0):
                raise ValueError(f"Lipschitz estimates are finite and non-negative, got {value}")

    @property
    def max_volume(self) -> float:
        return max(self.volume, default=0.0)

    @property
    def max_surface(self) -> float:
        return max(self.surface, default=0.0)

    @property
    def value(self) -> float:
        return max(self.max_volume, self.max_surface)


def _normalize_box(box, dimension: int) -> Box:
    box = np.asarray(box, dtype=np.float64)
    if box.shape == (2,):
        box = np.tile(box, (dimension, 1))
    if box.shape != (dimension, 2) or not np.all(np.isfinite(box)) or np.any(box[:, 0] > box[:, 1]):
        raise ValueError(f"expected {dimension} bounded intervals (lo <= hi), got {box.tolist()}")
    return tuple((float(lo), float(hi)) for lo, hi in box)


def sample_points(box: Box, samples: int) -> np.ndarray:
    """Box corners followed by the first 2^m unscrambled Sobol points (2^m >= samples), shape (count, dim)."""
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    dimension = len(box)
    m = max(0, math.ceil(math.log2(max(samples, 1))))
    unit = qmc.Sobol(d=dimension, scramble=False).random_base2(m)
    if dimension <= _MAX_CORNER_DIM:
        corners = np.array(list(itertools.product((0.0, 1.0), repeat=dimension)))
        unit = np.vstack([corners, unit])
    return lo + unit * (hi - lo)


def _sup_gradient(expr: ReactionExpr, points: np.ndarray) -> float:
    if expr.is_constant:
        return 0.0
    grad = eval_gradient(expr, points.T)
    return float(np.abs(grad).sum(axis=0).max())


def estimate_lipschitz(
    expressions: Union[ReactionExpr, Sequence[ReactionExpr]],
    box,
    samples: Optional[int] = None,
    surface: Sequence[ReactionExpr] = (),
) -> LipschitzEstimate:
    """
    L = max of ||grad||_1 over quasi-random points of ``box`` (one interval, or one per
    variable). ``surface`` expressions are sampled on the same points.
    """
    if isinstance(expressions, ReactionExpr):
        expressions = (expressions,)
    expressions = tuple(expressions)
    surface = tuple(surface)
    everything = expressions + surface
    dimension = max((e.arity for e in everything), default=1)
    samples = samples or settings.HOMLAB["LIPSCHITZ_SAMPLES"]
    box = _normalize_box(box, dimension)
    points = sample_points(box, samples)
    estimate = LipschitzEstimate(
        volume=tuple(_sup_gradient(e, points[:, : e.arity]) for e in expressions),
        surface=tuple(_sup_gradient(e, points[:, : e.arity]) for e in surface),
        box=box,
        samples=len(points),
    )
    logger.debug(f"Lipschitz estimate over {len(points)} points: volume={estimate.volume} surface={estimate.surface}")
    return estimate
