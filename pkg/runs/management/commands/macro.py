from runs.management.base import ToolkitCommand
from runs.services import run_macro


class Command(ToolkitCommand):
    help = "Solve the homogenized problem on the unperforated square"

    def run(self, config, options):
        u, report = run_macro(config, config.output_dir)
        self.stdout.write(f"{report.label}: {report.n} sweeps, max u0 = {u.values.max():.6g}")
        self.stdout.write(self.style.SUCCESS(f"Macro solution written to {config.output_dir}"))
