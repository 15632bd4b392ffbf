from dataclasses import dataclass, replace
from typing import Tuple

from cells.models import ThetaMode
from correctors.models import CutoffConvention, CutoffSpec, SweepSettings
from fem.models import CoefficientSpec, ProblemSpec, SpeciesCoefficients
from geometry.models import CellGeometry, HoleShape
from macro.models import MacroMode
from micro.models import PicardOptions
from reactions.nodes import VariableKind
from reactions.parser import parse


@dataclass(frozen=True)
class SpeciesConfig:
    """Expression texts of one species: d, a, b in y1, y2; R, F in u1..uN."""

    d: str = "1"
    a: str = "0"
    b: str = "0"
    R: str = "0"
    F: str = "0"
    alpha: float = 1e-3


@dataclass(frozen=True)
class RunConfig:
    hole_shape: HoleShape = HoleShape.DISK
    hole_radius: float = 0.25
    eps: Tuple[float, ...] = (1 / 4, 1 / 8, 1 / 16, 1 / 32)
    h_ratio: int = 8
    macro_cells: int = 128
    eval_point: Tuple[float, float] = (0.5, 0.5)
    species: Tuple[SpeciesConfig, ...] = (SpeciesConfig(),)
    tol: float = 1e-8
    max_iter: int = 200
    omega: float = 0.8
    cutoff: CutoffConvention = CutoffConvention.STANDARD
    macro_mode: MacroMode = MacroMode.VOLUME_ONLY
    order: int = 1
    theta_mode: ThetaMode = ThetaMode.PURE
    jobs: int = 1
    output_dir: str = "out"
    gnuplot: bool = False

    @property
    def n_species(self) -> int:
        return len(self.species)

    @property
    def geometry(self) -> CellGeometry:
        return CellGeometry(self.hole_shape, self.hole_radius)

    @property
    def hash(self) -> str:
        from runs.config import config_hash

        return config_hash(self)

    def with_overrides(self, **changes) -> "RunConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def problem_spec(self) -> ProblemSpec:
        n = self.n_species
        coefficients = CoefficientSpec(
            [
                SpeciesCoefficients(
                    parse(s.d, 2, VariableKind.CELL),
                    parse(s.a, 2, VariableKind.CELL),
                    parse(s.b, 2, VariableKind.CELL),
                    s.alpha,
                )
                for s in self.species
            ]
        )
        return ProblemSpec(
            coefficients,
            [parse(s.R, n) for s in self.species],
            [parse(s.F, n) for s in self.species],
        )

    def picard_options(self, **changes) -> PicardOptions:
        return PicardOptions(tol=self.tol, max_iter=self.max_iter, omega=self.omega, **changes)

    def sweep_settings(self) -> SweepSettings:
        return SweepSettings(
            geometry=self.geometry,
            spec=self.problem_spec(),
            eps_list=tuple(self.eps),
            order=self.order,
            h_ratio=self.h_ratio,
            cutoff=CutoffSpec(self.cutoff),
            macro_mode=self.macro_mode,
            macro_cells=self.macro_cells,
            theta_mode=self.theta_mode,
            eval_point=tuple(self.eval_point),
            picard=self.picard_options(),
            jobs=self.jobs,
        )
