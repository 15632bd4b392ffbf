"""
Plain-text mesh files.

    META
    epsilon <float>
    hole <shape> <size>
    h <float>
    hash <sha256>
    cell_hash <sha256 | ->
    grid <int | ->
    config_hash <sha256 | ->
    VERTICES <n>
    <index> <x> <y>
    TRIANGLES <n>
    <v0> <v1> <v2>
    EDGES <n>
    <v0> <v1> <HOLE|EXTERIOR>
    PERIODIC <n>
    <master> <slave>
    CELLMAP <n>            (tiled meshes only)
    <cell vertex>

Floats are written with repr(), which reads back to the identical double.
"""

import logging
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from geometry.exceptions import MeshFormatError
from geometry.models import CellGeometry, Mesh

logger = logging.getLogger(__name__)

_MISSING = "-"


def format_mesh(mesh: Mesh, config_hash: Optional[str] = None) -> str:
    lines = [
        "META",
        f"epsilon {mesh.epsilon!r}",
        f"hole {mesh.geometry.describe()}",
        f"h {float(mesh.h)!r}",
        f"hash {mesh.hash}",
        f"cell_hash {mesh.cell_hash or _MISSING}",
        f"grid {mesh.grid if mesh.grid is not None else _MISSING}",
        f"config_hash {config_hash or _MISSING}",
        f"VERTICES {mesh.n_vertices}",
    ]
    lines += [f"{i} {x!r} {y!r}" for i, (x, y) in enumerate(mesh.vertices.tolist())]
    lines.append(f"TRIANGLES {mesh.n_triangles}")
    lines += [f"{a} {b} {c}" for a, b, c in mesh.triangles.tolist()]
    lines.append(f"EDGES {len(mesh.boundary_edges)}")
    lines += [f"{a} {b} {tag}" for (a, b), tag in zip(mesh.boundary_edges.tolist(), mesh.edge_tags)]
    lines.append(f"PERIODIC {len(mesh.periodic_pairs)}")
    lines += [f"{a} {b}" for a, b in mesh.periodic_pairs.tolist()]
    if mesh.cell_vertex is not None:
        lines.append(f"CELLMAP {len(mesh.cell_vertex)}")
        lines += [str(v) for v in mesh.cell_vertex.tolist()]
    return "\n".join(lines) + "\n"


def write_mesh(mesh: Mesh, path, config_hash: Optional[str] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_mesh(mesh, config_hash))
    logger.debug(f"Wrote mesh {mesh.hash[:12]} to {path}")
    return path


def _section(lines, position, name):
    header = lines[position].split()
    if len(header) != 2 or header[0] != name:
        raise MeshFormatError(f"line {position + 1}: expected '{name} <count>', got {lines[position]!r}")
    count = int(header[1])
    body = lines[position + 1 : position + 1 + count]
    if len(body) != count:
        raise MeshFormatError(f"section {name} is truncated")
    return body, position + 1 + count


def read_mesh(path) -> Tuple[Mesh, Optional[str]]:
    """Returns the mesh and the config hash recorded with it."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != "META":
        raise MeshFormatError(f"{path}: missing META section")
    meta = {}
    position = 1
    while position < len(lines) and not lines[position].startswith("VERTICES"):
        key, _, value = lines[position].partition(" ")
        meta[key] = value
        position += 1
    try:
        shape, size = meta["hole"].split()
        body, position = _section(lines, position, "VERTICES")
        vertices = np.array([[float(x) for x in row.split()[1:]] for row in body]).reshape(-1, 2)
        body, position = _section(lines, position, "TRIANGLES")
        triangles = np.array([[int(v) for v in row.split()] for row in body], dtype=np.int64)
        body, position = _section(lines, position, "EDGES")
        edges = np.array([[int(v) for v in row.split()[:2]] for row in body], dtype=np.int64)
        tags = [row.split()[2] for row in body]
        body, position = _section(lines, position, "PERIODIC")
        pairs = np.array([[int(v) for v in row.split()] for row in body], dtype=np.int64)
        cell_vertex = None
        if position < len(lines):
            body, position = _section(lines, position, "CELLMAP")
            cell_vertex = np.array([int(v) for v in body], dtype=np.int64)
        mesh = Mesh(
            vertices=vertices,
            triangles=triangles,
            boundary_edges=edges,
            edge_tags=tags,
            periodic_pairs=pairs,
            epsilon=float(meta["epsilon"]),
            geometry=CellGeometry(shape, float(size)),
            h=float(meta["h"]),
            cell_vertex=cell_vertex,
            cell_hash=None if meta["cell_hash"] == _MISSING else meta["cell_hash"],
            grid=None if meta["grid"] == _MISSING else int(meta["grid"]),
        )
    except (KeyError, ValueError, IndexError) as exc:
        raise MeshFormatError(f"{path}: malformed mesh file ({exc})") from exc
    if mesh.hash != meta.get("hash"):
        raise MeshFormatError(f"{path}: stored hash does not match the mesh contents")
    config_hash = meta.get("config_hash")
    return mesh, None if config_hash in (None, _MISSING) else config_hash
