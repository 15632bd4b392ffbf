import numpy as np

from runs.management.base import ToolkitCommand
from runs.services import run_cell


class Command(ToolkitCommand):
    help = "Solve the cell problems and write chi, theta and the effective tensors"

    def run(self, config, options):
        cell = run_cell(config, config.output_dir)
        for i, q in enumerate(cell.q, start=1):
            self.stdout.write(f"q{i} = {np.array2string(q, precision=6)}")
        self.stdout.write(self.style.SUCCESS(f"Cell solution written to {config.output_dir}/cell"))
