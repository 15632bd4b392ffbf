from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from fem.exceptions import FieldError
from geometry.models import CellGeometry, Mesh
from reactions.evaluate import evaluate
from reactions.exceptions import EvalError
from reactions.models import ReactionExpr
from reactions.nodes import VariableKind
from reactions.parser import parse


@dataclass(eq=False)
class Field:
    """Nodal P1 values, one row per species."""

    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[None, :]
        if values.ndim != 2 or values.shape[1] != self.mesh.n_vertices:
            raise FieldError(
                f"field of shape {values.shape} does not fit a mesh with {self.mesh.n_vertices} vertices"
            )
        if not np.all(np.isfinite(values)):
            raise FieldError("field contains non-finite values")
        self.values = values

    @classmethod
    def zeros(cls, mesh: Mesh, n_species: int = 1) -> "Field":
        return cls(mesh, np.zeros((n_species, mesh.n_vertices)))

    @property
    def n_species(self) -> int:
        return self.values.shape[0]

    def species(self, i: int) -> np.ndarray:
        return self.values[i]

    def min(self) -> np.ndarray:
        return self.values.min(axis=1)

    def max(self) -> np.ndarray:
        return self.values.max(axis=1)


@dataclass(frozen=True)
class SpeciesCoefficients:
    """d, a, b of one species as expressions in y1, y2, and the ellipticity floor alpha."""

    d: ReactionExpr
    a: ReactionExpr
    b: ReactionExpr
    alpha: float = 1e-3

    def __post_init__(self):
        for name in ("d", "a", "b"):
            expr = getattr(self, name)
            if expr.kind is not VariableKind.CELL:
                raise ValueError(f"coefficient {name} must be an expression in y1, y2")


def _grid(samples: int) -> np.ndarray:
    s = (np.arange(samples) + 0.5) / samples
    gx, gy = np.meshgrid(s, s)
    return np.column_stack([gx.ravel(), gy.ravel()])


@dataclass(frozen=True)
class CoefficientSpec:
    species: Tuple[SpeciesCoefficients, ...]

    def __post_init__(self):
        object.__setattr__(self, "species", tuple(self.species))

    def __len__(self):
        return len(self.species)

    def __getitem__(self, i) -> SpeciesCoefficients:
        return self.species[i]

    def violations(self, geometry: CellGeometry, samples: int = 64) -> List[str]:
        """Ellipticity d >= alpha > 0 on a sample grid of Y; a, b >= 0 on sampled hole-boundary points."""
        problems = []
        grid = _grid(samples)
        rim = geometry.boundary_samples(4 * samples)
        for i, c in enumerate(self.species, start=1):
            if not c.alpha > 0:
                problems.append(f"alpha{i} = {c.alpha} must be positive")
            try:
                d_min = float(evaluate(c.d, grid.T).min())
            except EvalError as exc:
                problems.append(f"d{i} cannot be evaluated on Y: {exc}")
            else:
                if d_min < c.alpha:
                    problems.append(f"d{i} = {c.d} drops to {d_min:g}, below alpha{i} = {c.alpha:g} (ellipticity)")
            if len(rim) == 0:
                continue
            for name in ("a", "b"):
                try:
                    low = float(evaluate(getattr(c, name), rim.T).min())
                except EvalError as exc:
                    problems.append(f"{name}{i} cannot be evaluated on the hole boundary: {exc}")
                    continue
                if low < 0:
                    problems.append(f"{name}{i} = {getattr(c, name)} is negative ({low:g}) on the hole boundary")
        return problems


@dataclass(frozen=True)
class ProblemSpec:
    """
    Coefficients and reactions of the N-species system. ``reactions[i]`` is R_i over
    u1..uN, ``fluxes[i]`` is the surface reaction F_i, which may only read u_i.
    """

    coefficients: CoefficientSpec
    reactions: Tuple[ReactionExpr, ...]
    fluxes: Tuple[ReactionExpr, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "reactions", tuple(self.reactions))
        object.__setattr__(self, "fluxes", tuple(self.fluxes))
        n = len(self.coefficients)
        if n < 1:
            raise ValueError("at least one species is required")
        if len(self.reactions) != n or (self.fluxes and len(self.fluxes) != n):
            raise ValueError(f"expected {n} reaction and flux expressions")
        if not self.fluxes:
            object.__setattr__(self, "fluxes", tuple(parse("0", n) for _ in range(n)))

    @property
    def n_species(self) -> int:
        return len(self.coefficients)

    def violations(self, geometry: CellGeometry, samples: int = 64) -> List[str]:
        problems = self.coefficients.violations(geometry, samples)
        for i, flux in enumerate(self.fluxes, start=1):
            if flux.indices - {i}:
                problems.append(f"F{i} = {flux} may only depend on u{i}")
        return problems
