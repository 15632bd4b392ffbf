from runs.management.base import ToolkitCommand
from runs.services import run_verify


class Command(ToolkitCommand):
    help = "Measure the corrector convergence rate over the eps list and write convergence.csv"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--gnuplot-script", action="store_true", help="also write convergence.gp")
        parser.add_argument("--cell", help="reuse a cell solution directory written by the same configuration")

    def run(self, config, options):
        report = run_verify(
            config,
            config.output_dir,
            gnuplot=True if options.get("gnuplot_script") else None,
            cell_dir=options.get("cell"),
        )
        for row in report.rows:
            self.stdout.write(f"eps={row.epsilon:g}  err_V={row.err_v:.6e}  err_L2={row.err_l2:.6e}")
        slope = report.slope
        self.stdout.write(f"slope={slope:.6f}" if slope is not None else "slope=degenerate")
