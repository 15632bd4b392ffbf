from runs.management.base import ToolkitCommand
from runs.services import run_mesh


class Command(ToolkitCommand):
    help = "Write the unit-cell mesh, the perforated domain mesh for every eps and the macro grid"

    def run(self, config, options):
        out = run_mesh(config, config.output_dir)
        self.stdout.write(self.style.SUCCESS(f"Meshes for {len(config.eps)} eps values written to {out}"))
