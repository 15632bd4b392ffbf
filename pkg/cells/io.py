"""
A cell solution is a directory:

    cell.mesh     the unit-cell mesh (geometry.io format)
    chi.field     2N components: chi_1^1 chi_1^2 chi_2^1 ...
    theta.field   4N components theta_i^11 theta_i^12 theta_i^21 theta_i^22, then N surface parts in frozen mode
    tensor.txt    effective data:

        CELL <mesh hash> <N> <none | pure | frozen>
        config_hash <sha256 | ->
        TENSOR <i>
        <q11> <q12> <q21> <q22>
        asymmetry <float>
        surface <a> <b>
"""

import logging
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from cells.exceptions import CellFormatError
from cells.models import CellSolution, ThetaMode
from fem.exceptions import FieldFormatError
from fem.io import read_field, write_field
from fem.models import Field
from geometry.io import read_mesh, write_mesh

logger = logging.getLogger(__name__)

_MISSING = "-"


def format_tensor(solution: CellSolution, config_hash: Optional[str] = None) -> str:
    theta = solution.theta_mode.value if solution.has_theta else "none"
    lines = [f"CELL {solution.mesh.hash} {solution.n_species} {theta}", f"config_hash {config_hash or _MISSING}"]
    for i in range(solution.n_species):
        lines.append(f"TENSOR {i + 1}")
        lines.append(" ".join(repr(v) for v in solution.q[i].ravel().tolist()))
        lines.append(f"asymmetry {float(solution.asymmetry[i])!r}")
        lines.append(f"surface {float(solution.surf_a[i])!r} {float(solution.surf_b[i])!r}")
    return "\n".join(lines) + "\n"


def write_cell_solution(solution: CellSolution, directory, config_hash: Optional[str] = None) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    mesh = solution.mesh
    write_mesh(mesh, directory / "cell.mesh", config_hash)
    write_field(Field(mesh, solution.chi.reshape(-1, mesh.n_vertices)), directory / "chi.field", config_hash)
    if solution.has_theta:
        rows = [solution.theta.reshape(-1, mesh.n_vertices)]
        if solution.theta_surface is not None:
            rows.append(solution.theta_surface)
        write_field(Field(mesh, np.vstack(rows)), directory / "theta.field", config_hash)
    (directory / "tensor.txt").write_text(format_tensor(solution, config_hash))
    logger.info(f"Wrote cell solution for {solution.n_species} species to {directory}")
    return directory


def read_cell_solution(directory) -> Tuple[CellSolution, Optional[str]]:
    directory = Path(directory)
    mesh, config_hash = read_mesh(directory / "cell.mesh")
    lines = (directory / "tensor.txt").read_text().splitlines()
    try:
        magic, mesh_hash, count, theta_mode = lines[0].split()
        n = int(count)
        q, asymmetry, surf = [], [], []
        for i in range(n):
            block = lines[2 + 4 * i : 6 + 4 * i]
            if block[0] != f"TENSOR {i + 1}":
                raise CellFormatError(f"{directory}: expected 'TENSOR {i + 1}', got {block[0]!r}")
            q.append([float(v) for v in block[1].split()])
            asymmetry.append(float(block[2].split()[1]))
            surf.append([float(v) for v in block[3].split()[1:]])
    except (IndexError, ValueError) as exc:
        raise CellFormatError(f"{directory}: malformed tensor.txt ({exc})") from exc
    if magic != "CELL" or mesh_hash != mesh.hash:
        raise CellFormatError(f"{directory}: tensor.txt does not belong to cell.mesh")
    try:
        chi, _ = read_field(directory / "chi.field", mesh)
        theta = theta_surface = None
        if theta_mode != "none":
            values, _ = read_field(directory / "theta.field", mesh)
            theta = values.values[: 4 * n].reshape(n, 2, 2, -1)
            if theta_mode == ThetaMode.FROZEN.value:
                theta_surface = values.values[4 * n :]
    except FieldFormatError as exc:
        raise CellFormatError(str(exc)) from exc
    surf = np.array(surf).reshape(n, 2)
    solution = CellSolution(
        mesh=mesh,
        chi=chi.values.reshape(n, 2, -1),
        q=np.array(q).reshape(n, 2, 2),
        asymmetry=np.array(asymmetry),
        surf_a=surf[:, 0],
        surf_b=surf[:, 1],
        theta=theta,
        theta_surface=theta_surface,
        theta_mode=ThetaMode.PURE if theta_mode == "none" else ThetaMode(theta_mode),
    )
    return solution, config_hash
