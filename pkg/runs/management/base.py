"""
Shared surface of the toolkit commands: option parsing, config loading with overrides,
and the mapping of failures to exit codes (1 configuration, 2 solver failure).
"""

import logging

from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from cells.exceptions import SolvabilityViolation
from correctors.models import CutoffConvention
from fem.exceptions import NoConvergence
from homlab.exceptions import HomlabError
from macro.models import MacroMode
from micro.exceptions import PicardNoConvergence
from runs.config import load_config
from runs.forms import parse_eps_list

logger = logging.getLogger(__name__)

CONFIG_ERROR = 1
SOLVER_ERROR = 2


class ToolkitCommand(BaseCommand):
    def add_arguments(self, parser):
        parser.add_argument("--config", required=True, help="run configuration file (section.key = value)")
        parser.add_argument("--out", help="output directory, overrides output.directory")
        parser.add_argument("--eps", help="comma list of eps values, e.g. 1/4,1/8,1/16")
        parser.add_argument("--order", type=int, choices=(0, 1, 2), help="expansion order M")
        parser.add_argument("--jobs", type=int, help="worker threads")
        parser.add_argument("--cutoff", choices=[c.value for c in CutoffConvention])
        parser.add_argument("--macro-mode", choices=[m.value for m in MacroMode])

    def load(self, options):
        config = load_config(options["config"])
        eps = parse_eps_list(options["eps"]) if options.get("eps") else None
        jobs = options.get("jobs")
        if jobs is not None and jobs < 1:
            raise ValidationError("--jobs must be at least 1")
        return config.with_overrides(
            eps=eps,
            order=options.get("order"),
            jobs=jobs,
            cutoff=CutoffConvention(options["cutoff"]) if options.get("cutoff") else None,
            macro_mode=MacroMode(options["macro_mode"]) if options.get("macro_mode") else None,
            output_dir=options.get("out"),
        )

    def run(self, config, options):
        raise NotImplementedError

    def handle(self, *args, **options):
        try:
            config = self.load(options)
            return self.run(config, options)
        except (PicardNoConvergence, NoConvergence, SolvabilityViolation) as exc:
            logger.error(f"Solver failed: {exc}")
            raise CommandError(str(exc), returncode=SOLVER_ERROR) from exc
        except ValidationError as exc:
            raise CommandError("; ".join(exc.messages), returncode=CONFIG_ERROR) from exc
        except (HomlabError, ValueError, OSError) as exc:
            raise CommandError(str(exc), returncode=CONFIG_ERROR) from exc
