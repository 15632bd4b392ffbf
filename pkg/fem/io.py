"""
Plain-text field files.

    FIELD <mesh hash> <N>
    config_hash <sha256 | ->
    <u_1> ... <u_N>        (one line per vertex)
"""

import logging
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from fem.exceptions import FieldFormatError
from fem.models import Field
from geometry.models import Mesh

logger = logging.getLogger(__name__)

_MISSING = "-"


def format_field(field: Field, config_hash: Optional[str] = None) -> str:
    lines = [f"FIELD {field.mesh.hash} {field.n_species}", f"config_hash {config_hash or _MISSING}"]
    lines += [" ".join(repr(v) for v in row) for row in field.values.T.tolist()]
    return "\n".join(lines) + "\n"


def write_field(field: Field, path, config_hash: Optional[str] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_field(field, config_hash))
    logger.debug(f"Wrote {field.n_species}-species field to {path}")
    return path


def read_field(path, mesh: Mesh) -> Tuple[Field, Optional[str]]:
    """Field on ``mesh`` and the config hash it was written with; the mesh hash must match."""
    lines = Path(path).read_text().splitlines()
    try:
        magic, mesh_hash, count = lines[0].split()
        key, config_hash = lines[1].split()
        n = int(count)
    except (IndexError, ValueError) as exc:
        raise FieldFormatError(f"{path}: malformed FIELD header") from exc
    if magic != "FIELD" or key != "config_hash":
        raise FieldFormatError(f"{path}: not a field file")
    if mesh_hash != mesh.hash:
        raise FieldFormatError(f"{path}: written for mesh {mesh_hash[:12]}, not {mesh.hash[:12]}")
    body = lines[2:]
    if len(body) != mesh.n_vertices:
        raise FieldFormatError(f"{path}: {len(body)} value lines for {mesh.n_vertices} vertices")
    try:
        values = np.array([[float(v) for v in row.split()] for row in body]).reshape(mesh.n_vertices, n)
    except ValueError as exc:
        raise FieldFormatError(f"{path}: {exc}") from exc
    return Field(mesh, values.T), None if config_hash == _MISSING else config_hash
