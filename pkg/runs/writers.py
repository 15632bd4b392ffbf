"""
CSV reports and the optional gnuplot script. Every file starts with ``# config_hash=<sha256>``.
"""

import logging
import re
from pathlib import Path
from typing import Iterator, Optional

from correctors.models import ConvergenceReport
from micro.models import PicardReport
from runs.exceptions import MixedProvenance

logger = logging.getLogger(__name__)

_HASH = re.compile(r"config_hash[ =](\S+)")
_ARTIFACTS = ("*.mesh", "*.field", "*.txt", "*.csv", "*.cfg")


def _number(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


def _slope(value: Optional[float]) -> str:
    return "degenerate" if value is None else f"{value:.6f}"


def format_picard_csv(report: PicardReport, config_hash: str) -> str:
    lines = [f"# config_hash={config_hash}", f"# label={report.label}", "n,residual,ratio"]
    for n, residual, ratio in report.rows():
        lines.append(f"{n},{_number(residual)},{_number(ratio)}")
    lines.append(f"converged={'true' if report.converged else 'false'}")
    kappa = report.kappa
    lines.append(f"kappa={_slope(kappa) if kappa is not None else 'none'}")
    return "\n".join(lines) + "\n"


def write_picard_csv(report: PicardReport, path, config_hash: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_picard_csv(report, config_hash))
    logger.debug(f"Wrote {report.n} Picard rows to {path}")
    return path


def format_convergence_csv(report: ConvergenceReport, config_hash: str) -> str:
    lines = [f"# config_hash={config_hash}", f"# cutoff={report.cutoff.value}", "epsilon,h,M,err_Veps,err_L2,err_uncut"]
    lines += [
        f"{row.epsilon!r},{row.h!r},{row.order},{row.err_v!r},{row.err_l2!r},{row.err_uncut!r}" for row in report.rows
    ]
    lines += [
        f"slope={_slope(report.slope)}",
        f"slope_L2={_slope(report.slope_l2)}",
        f"slope_uncut={_slope(report.slope_uncut)}",
    ]
    return "\n".join(lines) + "\n"


def write_convergence_csv(report: ConvergenceReport, path, config_hash: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_convergence_csv(report, config_hash))
    logger.info(f"Wrote convergence table ({len(report.rows)} rows) to {path}")
    return path


GNUPLOT_TEMPLATE = """# config_hash={config_hash}
set datafile separator ","
set logscale xy
set key left top
set xlabel "epsilon"
set ylabel "error"
set title "M = {order}, {cutoff} cut-off"
ref(x) = {reference!r} * sqrt(x)
plot "{csv}" every ::1::{last} using 1:4 with linespoints title "|u - rec|_V", \\
     "{csv}" every ::1::{last} using 1:5 with linespoints title "|u - u0|_L2", \\
     ref(x) with lines dashtype 2 title "eps^(1/2)"
"""


def write_gnuplot_script(report: ConvergenceReport, path, csv_name: str, config_hash: str) -> Path:
    """Log-log plot of both error columns with a reference eps^(1/2) line through the first row."""
    path = Path(path)
    first = report.rows[0]
    reference = first.err_v / first.epsilon**0.5 if first.err_v > 0 else 1.0
    path.write_text(
        GNUPLOT_TEMPLATE.format(
            config_hash=config_hash,
            order=report.order,
            cutoff=report.cutoff.value,
            reference=reference,
            last=len(report.rows),
            csv=csv_name,
        )
    )
    return path


def artifact_hashes(directory) -> Iterator[tuple]:
    """(path, config hash) for every artifact under ``directory`` whose header names one."""
    directory = Path(directory)
    for pattern in _ARTIFACTS:
        for path in sorted(directory.rglob(pattern)):
            with path.open() as handle:
                head = [next(handle, "") for _ in range(12)]
            for line in head:
                match = _HASH.search(line)
                if match and match.group(1) != "-":
                    yield path, match.group(1)
                    break


def check_provenance(directory, config_hash: str) -> None:
    """MixedProvenance if any artifact under ``directory`` was written by another configuration."""
    for path, found in artifact_hashes(directory):
        if found != config_hash:
            raise MixedProvenance(path, found, config_hash)
