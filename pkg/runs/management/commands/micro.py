from runs.management.base import ToolkitCommand
from runs.services import run_micro


class Command(ToolkitCommand):
    help = "Solve the microscopic problem on the perforated domain for every eps"

    def run(self, config, options):
        for epsilon, (u, report) in zip(config.eps, run_micro(config, config.output_dir)):
            kappa = report.kappa
            self.stdout.write(
                f"eps={epsilon:g}: {report.n} sweeps, max u = {u.values.max():.6g}"
                + (f", kappa {kappa:.4f}" if kappa is not None else "")
            )
        self.stdout.write(self.style.SUCCESS(f"Micro solutions written to {config.output_dir}"))
