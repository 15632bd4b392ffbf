import logging
import math
from typing import Optional

import numpy as np
from django.conf import settings
from scipy import sparse

from geometry.exceptions import GeometryError, QualityFailure, TilingError
from geometry.models import CellGeometry, EdgeTag, HoleShape, Mesh, QualityReport

logger = logging.getLogger(__name__)


# ─── Helpers ────────────────────────────────────────────────────────────────


def _segments(length: float, h: float) -> int:
    return max(1, math.ceil(length / h - 1e-9))


def _axis(h: float, half_side: float = 0.0) -> np.ndarray:
    """
    Grid coordinates of [0, 1], with breakpoints on the faces of a centred square hole.

    Spacing never exceeds the hole width or the ligament beside it, so every piece is cut
    into steps between spacing / 2 and spacing and grid rectangles keep aspect ratio <= 2.
    """
    if half_side <= 0.0:
        return np.linspace(0.0, 1.0, _segments(1.0, h) + 1)
    a, b = 0.5 - half_side, 0.5 + half_side
    spacing = min(h, b - a, a)
    pieces = [np.linspace(0.0, a, _segments(a, spacing) + 1)]
    pieces.append(np.linspace(a, b, _segments(b - a, spacing) + 1)[1:])
    pieces.append(np.linspace(b, 1.0, _segments(1.0 - b, spacing) + 1)[1:])
    return np.concatenate(pieces)


def _tensor_grid(xs: np.ndarray, ys: np.ndarray, keep=None):
    """Right-triangle tiling of the tensor grid xs × ys; vertex (i, j) has index j*len(xs) + i."""
    nx, ny = len(xs) - 1, len(ys) - 1
    gx, gy = np.meshgrid(xs, ys)
    vertices = np.column_stack([gx.ravel(), gy.ravel()])
    i, j = np.meshgrid(np.arange(nx), np.arange(ny))
    v00 = (j * (nx + 1) + i).ravel()
    v10, v01 = v00 + 1, v00 + nx + 1
    v11 = v01 + 1
    if keep is not None:
        mask = keep.ravel()
        v00, v10, v01, v11 = v00[mask], v10[mask], v01[mask], v11[mask]
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    triangles = np.stack([lower, upper], axis=1).reshape(-1, 3)
    return vertices, triangles


def _compact(vertices: np.ndarray, triangles: np.ndarray):
    used = np.unique(triangles)
    index = np.full(len(vertices), -1, dtype=np.int64)
    index[used] = np.arange(len(used))
    return vertices[used], index[triangles]


def _orient(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    p = vertices[triangles]
    e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    flipped = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0] < 0
    triangles = triangles.copy()
    triangles[flipped] = triangles[flipped][:, [0, 2, 1]]
    return triangles


def _disk_cell(radius: float, h: float):
    """
    Pore space of a unit cell with a centred disk hole.

    The cell is cut into four sectors by its diagonals; each sector is a
    structured grid blended between a quarter of the hole and one cell face.
    Face vertices sit at the same parameter values on opposite faces, so the
    faces match exactly.  Layers are graded geometrically so that elements
    stay close to square between the short arc and the long face.
    """
    m = _segments(1.0, h)
    arc = 0.5 * np.pi * radius
    mean_length = math.sqrt((0.5 - radius) * (math.sqrt(0.5) - radius))
    layers = max(1, round(m * mean_length * math.log(1.0 / arc) / (1.0 - arc)))
    k = np.arange(layers + 1) / layers
    t = (arc ** (1.0 - k) - arc) / (1.0 - arc)
    s = np.arange(m + 1) / m
    ones, zeros = np.ones_like(s), np.zeros_like(s)

    def ray(corner):
        direction = np.sign(np.asarray(corner) - 0.5) / math.sqrt(2.0)
        start = 0.5 + radius * direction
        points = start + t[:, None] * (np.asarray(corner, dtype=float) - start)
        points[0], points[-1] = start, corner
        return points

    rays = {corner: ray(corner) for corner in [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]}
    sectors = [
        (np.column_stack([ones, s]), -0.25 * np.pi, 0.5 * np.pi, (1.0, 0.0), (1.0, 1.0)),
        (np.column_stack([s, ones]), 0.75 * np.pi, -0.5 * np.pi, (0.0, 1.0), (1.0, 1.0)),
        (np.column_stack([zeros, s]), 1.25 * np.pi, -0.5 * np.pi, (0.0, 0.0), (0.0, 1.0)),
        (np.column_stack([s, zeros]), 1.25 * np.pi, 0.5 * np.pi, (0.0, 0.0), (1.0, 0.0)),
    ]
    points, triangles = [], []
    for face, start, sweep, first_corner, last_corner in sectors:
        angle = start + sweep * s
        hole = 0.5 + radius * np.column_stack([np.cos(angle), np.sin(angle)])
        grid = hole[:, None, :] + t[None, :, None] * (face - hole)[:, None, :]
        grid[:, 0] = hole
        grid[:, -1] = face
        grid[0] = rays[first_corner]
        grid[-1] = rays[last_corner]
        base = sum(len(p) for p in points)
        idx = base + np.arange((m + 1) * (layers + 1)).reshape(m + 1, layers + 1)
        a, b = idx[:-1, :-1].ravel(), idx[1:, :-1].ravel()
        c, d = idx[1:, 1:].ravel(), idx[:-1, 1:].ravel()
        flat = grid.reshape(-1, 2)
        short_ac = np.linalg.norm(flat[a - base] - flat[c - base], axis=1) <= np.linalg.norm(
            flat[b - base] - flat[d - base], axis=1
        )
        split_ac = np.stack([np.column_stack([a, b, c]), np.column_stack([a, c, d])], axis=1)
        split_bd = np.stack([np.column_stack([a, b, d]), np.column_stack([b, c, d])], axis=1)
        triangles.append(np.where(short_ac[:, None, None], split_ac, split_bd).reshape(-1, 3))
        points.append(flat)
    points = np.concatenate(points)
    triangles = np.concatenate(triangles)
    # every diagonal ray belongs to two sectors; merge the bit-identical copies
    _, first, inverse = np.unique(points, axis=0, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    vertices = points[first[order]]
    return vertices, rank[inverse.reshape(-1)][triangles]


def boundary_edge_list(triangles: np.ndarray) -> np.ndarray:
    """Edges used by exactly one triangle, oriented as in that triangle."""
    edges = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    keys = np.sort(edges, axis=1)
    _, first, counts = np.unique(keys, axis=0, return_index=True, return_counts=True)
    return edges[np.sort(first[counts == 1])]


def _on_cell_face(vertices: np.ndarray, edges: np.ndarray) -> np.ndarray:
    p, q = vertices[edges[:, 0]], vertices[edges[:, 1]]
    on_face = np.zeros(len(edges), dtype=bool)
    for axis in (0, 1):
        for value in (0.0, 1.0):
            on_face |= (p[:, axis] == value) & (q[:, axis] == value)
    return on_face


def _periodic_pairs(vertices: np.ndarray) -> np.ndarray:
    """(master, slave) pairs: x = 0 against x = 1, then y = 0 against y = 1."""
    pairs = []
    for axis in (0, 1):
        other = 1 - axis
        low = np.flatnonzero(vertices[:, axis] == 0.0)
        high = np.flatnonzero(vertices[:, axis] == 1.0)
        low = low[np.argsort(vertices[low, other], kind="stable")]
        partner = {vertices[v, other]: v for v in high}
        if len(low) != len(high) or len(partner) != len(high):
            raise GeometryError("opposite cell faces carry different vertex sets")
        for v in low:
            slave = partner.get(vertices[v, other])
            if slave is None:
                raise GeometryError(f"no periodic partner for face vertex {v}")
            pairs.append((v, slave))
    return np.array(pairs, dtype=np.int64).reshape(-1, 2)


def _min_angles(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    p = vertices[triangles]
    angles = []
    for k in range(3):
        u = p[:, (k + 1) % 3] - p[:, k]
        v = p[:, (k + 2) % 3] - p[:, k]
        cross = np.abs(u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])
        angles.append(np.degrees(np.arctan2(cross, np.einsum("ij,ij->i", u, v))))
    return np.min(angles, axis=0)


def laplacian_smooth(vertices: np.ndarray, triangles: np.ndarray, fixed: np.ndarray, passes: int = 1):
    """Move every free vertex to the mean of its neighbours; a pass that would invert a triangle is dropped."""
    n = len(vertices)
    rows = triangles[:, [0, 1, 2, 1, 2, 0]].ravel()
    cols = triangles[:, [1, 2, 0, 0, 1, 2]].ravel()
    adjacency = sparse.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n)).tocsr()
    adjacency.data[:] = 1.0
    degree = np.asarray(adjacency.sum(axis=1)).ravel()
    free = np.ones(n, dtype=bool)
    free[fixed] = False
    for _ in range(passes):
        moved = vertices.copy()
        moved[free] = (adjacency @ vertices)[free] / degree[free, None]
        p = moved[triangles]
        e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        if np.any(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0] <= 0):
            logger.warning("Smoothing pass would invert a triangle; keeping previous positions")
            break
        vertices = moved
    return vertices


# ─── Quality ────────────────────────────────────────────────────────────────


def mesh_quality(mesh: Mesh) -> QualityReport:
    p = mesh.vertices[mesh.triangles]
    lengths = np.stack([np.linalg.norm(p[:, (k + 1) % 3] - p[:, k], axis=1) for k in range(3)], axis=1)
    longest = lengths.max(axis=1)
    area = np.maximum(np.abs(mesh.triangle_areas), np.finfo(float).eps * longest**2)
    area = np.where(area > 0, area, np.finfo(float).tiny)
    aspect = np.sqrt(3.0) * longest**2 / (4.0 * area)
    min_angle = _min_angles(mesh.vertices, mesh.triangles)
    min_angle = np.where(mesh.triangle_areas > 0, min_angle, 0.0)
    return QualityReport(
        min_angle=float(min_angle.min()),
        max_aspect=float(min(aspect.max(), np.finfo(float).max)),
        area=float(mesh.triangle_areas.sum()),
    )


def check_quality(mesh: Mesh, floor: Optional[float] = None) -> QualityReport:
    floor = settings.HOMLAB["QUALITY_FLOOR"] if floor is None else floor
    report = mesh_quality(mesh)
    if report.min_angle < floor:
        raise QualityFailure(report.min_angle, floor)
    return report


# ─── Builders ───────────────────────────────────────────────────────────────


def build_unit_cell_mesh(geom: CellGeometry, h: float, quality_floor: Optional[float] = None) -> Mesh:
    """Mesh of the pore space Y1 with HOLE edges and face-to-face periodic pairs."""
    if not 0.0 < h <= 0.25:
        raise GeometryError(f"target edge length must lie in (0, 0.25], got {h}")
    floor = settings.HOMLAB["QUALITY_FLOOR"] if quality_floor is None else quality_floor
    grid = None
    if not geom.has_hole:
        axis = _axis(h)
        vertices, triangles = _tensor_grid(axis, axis)
        grid = len(axis) - 1
    elif geom.hole_shape is HoleShape.SQUARE:
        axis = _axis(h, geom.hole_radius)
        centers = 0.5 * (axis[:-1] + axis[1:])
        inside = np.abs(centers - 0.5) < geom.hole_radius
        keep = ~(inside[None, :] & inside[:, None])
        vertices, triangles = _compact(*_tensor_grid(axis, axis, keep))
    else:
        vertices, triangles = _disk_cell(geom.hole_radius, h)
    triangles = _orient(vertices, triangles)

    edges = boundary_edge_list(triangles)
    hole_edges = edges[~_on_cell_face(vertices, edges)]
    if geom.has_hole and len(hole_edges) == 0:
        raise GeometryError("hole boundary was not resolved by the mesh")

    min_angle = _min_angles(vertices, triangles).min()
    if min_angle < floor:
        passes = settings.HOMLAB["SMOOTHING_PASSES"]
        logger.info(f"Cell mesh min angle {min_angle:.2f} deg below {floor}; smoothing ({passes} passes)")
        vertices = laplacian_smooth(vertices, triangles, np.unique(edges), passes)

    mesh = Mesh(
        vertices=vertices,
        triangles=triangles,
        boundary_edges=hole_edges,
        edge_tags=np.full(len(hole_edges), EdgeTag.HOLE.value),
        periodic_pairs=_periodic_pairs(vertices),
        epsilon=1.0,
        geometry=geom,
        h=h,
        grid=grid,
    )
    report = check_quality(mesh, floor)
    logger.info(
        f"Unit cell mesh ({geom.describe()}, h={h:g}): {mesh.n_vertices} vertices, "
        f"{mesh.n_triangles} triangles, min angle {report.min_angle:.1f} deg, area {report.area:.6f}"
    )
    return mesh


def reciprocal(epsilon: float) -> int:
    """k with epsilon = 1/k; TilingError otherwise."""
    if not epsilon > 0:
        raise TilingError(f"epsilon must be positive, got {epsilon}")
    k = round(1.0 / epsilon)
    if k < 1 or abs(k * epsilon - 1.0) > 1e-9:
        raise TilingError(f"1/epsilon must be a positive integer, got epsilon = {epsilon}")
    return k


def build_perforated_domain_mesh(
    epsilon: float,
    geom: CellGeometry,
    h: float,
    cell_mesh: Optional[Mesh] = None,
) -> Mesh:
    """
    Tile the unit square Omega with k×k copies of the epsilon-scaled cell mesh.

    Vertices on shared tile faces are merged by lattice position, never by
    coordinates, and keep the coordinates of the first tile that created them.
    """
    k = reciprocal(epsilon)
    epsilon = 1.0 / k
    if h > epsilon / 4 * (1.0 + 1e-12):
        raise GeometryError(f"h = {h} is coarser than epsilon/4 = {epsilon / 4}")
    cell = cell_mesh if cell_mesh is not None else build_unit_cell_mesh(geom, h / epsilon)
    if not cell.is_cell:
        raise TilingError("tiling needs a unit-cell mesh with periodic pairs")

    cv = cell.vertices
    offset = np.column_stack([cv[:, 0] == 1.0, cv[:, 1] == 1.0]).astype(np.int64)
    lookup = {tuple(p): v for v, p in enumerate(cv)}
    root = np.array([lookup[(0.0 if x == 1.0 else x, 0.0 if y == 1.0 else y)] for x, y in cv])

    span = k + 1
    tiles = [(i, j) for j in range(k) for i in range(k)]
    keys = np.stack(
        [root * span * span + (i + offset[:, 0]) * span + (j + offset[:, 1]) for i, j in tiles]
    )
    coords = np.stack([epsilon * cv + epsilon * np.array([i, j], dtype=np.float64) for i, j in tiles])

    _, first, inverse = np.unique(keys.ravel(), return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    ids = rank[inverse.reshape(-1)].reshape(keys.shape)
    vertices = coords.reshape(-1, 2)[first[order]]
    cell_vertex = np.tile(np.arange(len(cv)), len(tiles))[first[order]]
    triangles = np.concatenate([ids[t][cell.triangles] for t in range(len(tiles))])

    edges = boundary_edge_list(triangles)
    nv = len(cv)
    hole_keys = np.sort(cell.edges(EdgeTag.HOLE), axis=1) @ np.array([nv, 1])
    edge_keys = np.sort(cell_vertex[edges], axis=1) @ np.array([nv, 1])
    tags = np.where(np.isin(edge_keys, hole_keys), EdgeTag.HOLE.value, EdgeTag.EXTERIOR.value)

    mesh = Mesh(
        vertices=vertices,
        triangles=triangles,
        boundary_edges=edges,
        edge_tags=tags,
        epsilon=epsilon,
        geometry=cell.geometry,
        h=cell.h / k,
        cell_vertex=cell_vertex,
        cell_hash=cell.hash,
        grid=cell.grid if k == 1 else None,
    )
    logger.info(
        f"Perforated domain mesh (epsilon=1/{k}): {k * k} tiles, {mesh.n_vertices} vertices, "
        f"{mesh.n_triangles} triangles"
    )
    return mesh


def build_domain_mesh(cells: int) -> Mesh:
    """Structured mesh of the unperforated unit square with EXTERIOR tags."""
    if cells < 4:
        raise GeometryError(f"macro grid needs at least 4 cells per side, got {cells}")
    return build_perforated_domain_mesh(1.0, CellGeometry(HoleShape.NONE, 0.0), 1.0 / cells)
