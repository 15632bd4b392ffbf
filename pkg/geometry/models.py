import hashlib
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Optional

import numpy as np

from geometry.exceptions import GeometryError


class HoleShape(str, Enum):
    DISK = "disk"
    SQUARE = "square"
    NONE = "none"


class EdgeTag(str, Enum):
    HOLE = "HOLE"
    EXTERIOR = "EXTERIOR"


MAX_DISK_RADIUS = 0.4


@dataclass(frozen=True)
class CellGeometry:
    """Unit cell Y = (0,1)^2 with one centred hole Y0; ``hole_radius`` is the half-side for squares.

    Disk radii stop at MAX_DISK_RADIUS: the sector mesher cannot keep elements shape-regular
    across a thinner ligament. Square holes take any half-side below 0.5.
    """

    hole_shape: HoleShape = HoleShape.DISK
    hole_radius: float = 0.25

    def __post_init__(self):
        try:
            shape = HoleShape(self.hole_shape)
        except ValueError:
            raise GeometryError(f"unknown hole shape {self.hole_shape!r}")
        radius = float(self.hole_radius)
        if not np.isfinite(radius) or radius < 0.0:
            raise GeometryError(f"hole size must be a non-negative number, got {self.hole_radius!r}")
        if radius >= 0.5:
            raise GeometryError(f"hole of size {radius} touches the cell boundary")
        if shape is HoleShape.DISK and radius > MAX_DISK_RADIUS:
            raise GeometryError(f"disk radius {radius} exceeds {MAX_DISK_RADIUS}; the ligament is too thin to mesh")
        if shape is HoleShape.NONE:
            radius = 0.0
        object.__setattr__(self, "hole_shape", shape)
        object.__setattr__(self, "hole_radius", radius)

    @property
    def has_hole(self) -> bool:
        return self.hole_shape is not HoleShape.NONE and self.hole_radius > 0.0

    @property
    def pore_area(self) -> float:
        """Analytic |Y1|."""
        if not self.has_hole:
            return 1.0
        if self.hole_shape is HoleShape.DISK:
            return 1.0 - np.pi * self.hole_radius**2
        return 1.0 - (2.0 * self.hole_radius) ** 2

    @property
    def hole_perimeter(self) -> float:
        if not self.has_hole:
            return 0.0
        if self.hole_shape is HoleShape.DISK:
            return 2.0 * np.pi * self.hole_radius
        return 8.0 * self.hole_radius

    def boundary_samples(self, count: int = 256) -> np.ndarray:
        """Points on the hole boundary, used to sample surface coefficients."""
        if not self.has_hole:
            return np.empty((0, 2))
        s = np.arange(count) / count
        r = self.hole_radius
        if self.hole_shape is HoleShape.DISK:
            angle = 2.0 * np.pi * s
            return 0.5 + r * np.column_stack([np.cos(angle), np.sin(angle)])
        # walk the square perimeter counter-clockwise from the lower-left corner
        t = 4.0 * s
        side = np.floor(t).astype(int)
        frac = t - side
        corners = np.array([[-r, -r], [r, -r], [r, r], [-r, r], [-r, -r]])
        return 0.5 + corners[side] + frac[:, None] * (corners[side + 1] - corners[side])

    def describe(self) -> str:
        return f"{self.hole_shape.value} {self.hole_radius!r}"


@dataclass(frozen=True)
class QualityReport:
    min_angle: float
    max_aspect: float
    area: float


@dataclass(eq=False)
class Mesh:
    """
    P1 triangulation of the perforated cell Y1 (epsilon = 1, periodic pairs set)
    or of the perforated domain (epsilon = 1/k, EXTERIOR tags on the outer square).

    ``cell_vertex`` and ``cell_hash`` are set on tiled meshes and give, for every
    vertex, the unit-cell vertex it was copied from.  ``grid`` is the number of
    cells per side for structured meshes of the unperforated square.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    edge_tags: np.ndarray
    periodic_pairs: np.ndarray = field(default_factory=lambda: np.empty((0, 2), dtype=np.int64))
    epsilon: float = 1.0
    geometry: CellGeometry = field(default_factory=CellGeometry)
    h: float = 0.0
    cell_vertex: Optional[np.ndarray] = None
    cell_hash: Optional[str] = None
    grid: Optional[int] = None

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=np.float64).reshape(-1, 2)
        self.triangles = np.ascontiguousarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        self.boundary_edges = np.ascontiguousarray(self.boundary_edges, dtype=np.int64).reshape(-1, 2)
        self.edge_tags = np.asarray(self.edge_tags, dtype="<U8").reshape(-1)
        self.periodic_pairs = np.ascontiguousarray(self.periodic_pairs, dtype=np.int64).reshape(-1, 2)
        if self.cell_vertex is not None:
            self.cell_vertex = np.ascontiguousarray(self.cell_vertex, dtype=np.int64)
        if len(self.edge_tags) != len(self.boundary_edges):
            raise GeometryError("every boundary edge needs exactly one tag")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def is_cell(self) -> bool:
        return len(self.periodic_pairs) > 0

    @cached_property
    def hash(self) -> str:
        digest = hashlib.sha256()
        digest.update(self.vertices.tobytes())
        digest.update(self.triangles.tobytes())
        return digest.hexdigest()

    @cached_property
    def triangle_areas(self) -> np.ndarray:
        """Signed areas; positive for counter-clockwise triangles."""
        p = self.vertices[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @property
    def area(self) -> float:
        return float(self.triangle_areas.sum())

    @property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    def edges(self, tag: EdgeTag) -> np.ndarray:
        return self.boundary_edges[self.edge_tags == EdgeTag(tag).value]

    def tagged_vertices(self, tag: EdgeTag) -> np.ndarray:
        return np.unique(self.edges(tag))

    def cell_coordinates(self, points: np.ndarray) -> np.ndarray:
        """Periodic cell coordinates y = x/epsilon mod 1."""
        return np.mod(np.asarray(points) / self.epsilon, 1.0)
