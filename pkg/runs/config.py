"""
Run configuration files: one ``section.key = value`` per line, ``#`` starts a comment.
The schema and defaults are documented in docs/formats.md. Syntax errors raise
ConfigError with the line number; semantic errors raise ValidationError.
"""

import hashlib
import logging
import re
from pathlib import Path
from typing import Dict, Tuple

from django import forms
from django.conf import settings
from django.core.exceptions import ValidationError

from cells.models import ThetaMode
from correctors.models import CutoffConvention
from geometry.models import HoleShape
from macro.models import MacroMode
from runs.exceptions import ConfigError
from runs.forms import GeometryForm, OutputForm, SolverForm, SpeciesForm, format_eps_list
from runs.models import RunConfig, SpeciesConfig

logger = logging.getLogger(__name__)

SECTIONS = {
    "geometry": ("hole_shape", "hole_radius", "eps", "h_ratio", "macro_cells", "eval_point"),
    "solver": ("tol", "max_iter", "omega", "cutoff", "macro_mode", "order", "theta_mode", "jobs"),
    "output": ("directory", "gnuplot"),
}
SPECIES_KEYS = ("d", "a", "b", "R", "F", "alpha")

_LINE = re.compile(r"^(?P<section>[a-z]+)\.(?P<key>[A-Za-z_]+\d*)\s*=\s*(?P<value>.*?)\s*$")
_SPECIES_KEY = re.compile(r"^(?P<name>d|a|b|R|F|alpha)(?P<index>[1-9]\d*)$")


def defaults() -> RunConfig:
    return RunConfig(
        macro_cells=settings.HOMLAB["MACRO_CELLS"],
        jobs=settings.HOMLAB["JOBS"],
        output_dir=str(settings.HOMLAB["OUTPUT_DIR"]),
    )


def parse_lines(text: str) -> Dict[str, Tuple[str, int]]:
    """``section.key`` -> (raw value, line number). Unknown keys and duplicates are syntax errors."""
    entries = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        match = _LINE.match(line)
        if match is None:
            raise ConfigError(f"expected 'section.key = value', got {raw.strip()!r}", number)
        section, key, value = match["section"], match["key"], match["value"]
        if section == "species":
            if key != "count" and not _SPECIES_KEY.match(key):
                raise ConfigError(f"unknown species key {key!r}", number)
        elif section not in SECTIONS:
            raise ConfigError(f"unknown section {section!r}", number)
        elif key not in SECTIONS[section]:
            raise ConfigError(f"unknown key {section}.{key}", number)
        name = f"{section}.{key}"
        if name in entries:
            raise ConfigError(f"{name} is already set on line {entries[name][1]}", number)
        if not value:
            raise ConfigError(f"{name} has no value", number)
        entries[name] = (value, number)
    return entries


def _messages(form: forms.Form, prefix: str, entries) -> list:
    messages = []
    for name, errors in form.errors.items():
        key = f"{prefix}.{name}" if name != "__all__" else prefix
        line = entries.get(key, (None, None))[1]
        where = f"{key} (line {line})" if line else key
        messages += [f"{where}: {error}" for error in errors]
    return messages


def build_config(entries: Dict[str, Tuple[str, int]]) -> RunConfig:
    """Validated RunConfig from parsed entries, defaults filling the gaps."""
    base = defaults()
    raw = {name: value for name, (value, _) in entries.items()}

    def get(name, fallback):
        return raw.get(name, fallback)

    geometry = GeometryForm(
        {
            "hole_shape": get("geometry.hole_shape", base.hole_shape.value),
            "hole_radius": get("geometry.hole_radius", repr(base.hole_radius)),
            "eps": get("geometry.eps", format_eps_list(base.eps)),
            "h_ratio": get("geometry.h_ratio", str(base.h_ratio)),
            "macro_cells": get("geometry.macro_cells", str(base.macro_cells)),
            "eval_point": get("geometry.eval_point", ", ".join(repr(v) for v in base.eval_point)),
        }
    )
    solver = SolverForm(
        {
            "tol": get("solver.tol", repr(base.tol)),
            "max_iter": get("solver.max_iter", str(base.max_iter)),
            "omega": get("solver.omega", repr(base.omega)),
            "cutoff": get("solver.cutoff", base.cutoff.value),
            "macro_mode": get("solver.macro_mode", base.macro_mode.value),
            "order": get("solver.order", str(base.order)),
            "theta_mode": get("solver.theta_mode", base.theta_mode.value),
            "jobs": get("solver.jobs", str(base.jobs)),
        }
    )
    output = OutputForm(
        {
            "directory": get("output.directory", base.output_dir),
            "gnuplot": get("output.gnuplot", "true" if base.gnuplot else "false"),
        }
    )

    messages = []
    for form, prefix in ((geometry, "geometry"), (solver, "solver"), (output, "output")):
        if not form.is_valid():
            messages += _messages(form, prefix, entries)

    try:
        count = forms.IntegerField(min_value=1).clean(get("species.count", "1"))
    except ValidationError as exc:
        line = entries.get("species.count", (None, None))[1]
        raise ValidationError([f"species.count (line {line}): {m}" for m in exc.messages])
    for name, (_, line) in entries.items():
        match = _SPECIES_KEY.match(name.split(".", 1)[1]) if name.startswith("species.") else None
        if match and int(match["index"]) > count:
            messages.append(f"{name} (line {line}): species.count is {count}")

    template = SpeciesConfig()
    species = []
    for i in range(1, count + 1):
        form = SpeciesForm(
            {key: get(f"species.{key}{i}", str(getattr(template, key))) for key in SPECIES_KEYS},
            index=i,
            count=count,
        )
        if form.is_valid():
            species.append(SpeciesConfig(**{key: form.cleaned_data[key] for key in SPECIES_KEYS}))
        else:
            for key, errors in form.errors.items():
                line = entries.get(f"species.{key}{i}", (None, None))[1]
                where = f"species.{key}{i}" + (f" (line {line})" if line else "")
                messages += [f"{where}: {error}" for error in errors]
    if messages:
        raise ValidationError(messages)

    config = RunConfig(
        hole_shape=HoleShape(geometry.cleaned_data["hole_shape"]),
        hole_radius=geometry.cleaned_data["geometry"].hole_radius,
        eps=geometry.cleaned_data["eps"],
        h_ratio=geometry.cleaned_data["h_ratio"],
        macro_cells=geometry.cleaned_data["macro_cells"],
        eval_point=geometry.cleaned_data["eval_point"],
        species=tuple(species),
        tol=solver.cleaned_data["tol"],
        max_iter=solver.cleaned_data["max_iter"],
        omega=solver.cleaned_data["omega"],
        cutoff=CutoffConvention(solver.cleaned_data["cutoff"]),
        macro_mode=MacroMode(solver.cleaned_data["macro_mode"]),
        order=solver.cleaned_data["order"],
        theta_mode=ThetaMode(solver.cleaned_data["theta_mode"]),
        jobs=solver.cleaned_data["jobs"],
        output_dir=output.cleaned_data["directory"],
        gnuplot=output.cleaned_data["gnuplot"],
    )
    problems = config.problem_spec().violations(config.geometry)
    if problems:
        raise ValidationError(problems)
    return config


def parse_config(text: str) -> RunConfig:
    return build_config(parse_lines(text))


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"configuration file {path} does not exist")
    config = parse_config(path.read_text())
    logger.info(f"Loaded {path} ({config.n_species} species, config {config.hash[:12]})")
    return config


def format_config(config: RunConfig) -> str:
    """Every key in canonical order; parse_config(format_config(c)) == c."""
    lines = [
        f"geometry.hole_shape = {config.hole_shape.value}",
        f"geometry.hole_radius = {config.hole_radius!r}",
        f"geometry.eps = {format_eps_list(config.eps)}",
        f"geometry.h_ratio = {config.h_ratio}",
        f"geometry.macro_cells = {config.macro_cells}",
        f"geometry.eval_point = {config.eval_point[0]!r}, {config.eval_point[1]!r}",
        f"species.count = {config.n_species}",
    ]
    for i, s in enumerate(config.species, start=1):
        lines += [f"species.{key}{i} = {getattr(s, key)}" for key in ("d", "a", "b", "R", "F")]
        lines.append(f"species.alpha{i} = {s.alpha!r}")
    lines += [
        f"solver.tol = {config.tol!r}",
        f"solver.max_iter = {config.max_iter}",
        f"solver.omega = {config.omega!r}",
        f"solver.cutoff = {config.cutoff.value}",
        f"solver.macro_mode = {config.macro_mode.value}",
        f"solver.order = {config.order}",
        f"solver.theta_mode = {config.theta_mode.value}",
        f"solver.jobs = {config.jobs}",
        f"output.directory = {config.output_dir}",
        f"output.gnuplot = {'true' if config.gnuplot else 'false'}",
    ]
    return "\n".join(lines) + "\n"


def save_config(config: RunConfig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_config(config))
    return path


def config_hash(config: RunConfig) -> str:
    """SHA-256 of the canonical text without the output.* and solver.jobs lines."""
    text = "".join(
        line + "\n"
        for line in format_config(config).splitlines()
        if not line.startswith(("output.", "solver.jobs"))
    )
    return hashlib.sha256(text.encode()).hexdigest()
