import tempfile
from pathlib import Path

from django.conf import settings
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from cells.models import ThetaMode
from correctors.models import CutoffConvention
from geometry.models import HoleShape
from macro.models import MacroMode
from runs.config import config_hash, format_config, load_config, parse_config, parse_lines, save_config
from runs.exceptions import ConfigError
from runs.models import RunConfig, SpeciesConfig


class ParseLinesTests(SimpleTestCase):
    def test_comments_and_blank_lines(self):
        entries = parse_lines("# header\n\ngeometry.hole_shape = square  # inline\nspecies.R1 = u1 + 1\n")
        self.assertEqual(entries["geometry.hole_shape"], ("square", 3))
        self.assertEqual(entries["species.R1"], ("u1 + 1", 4))

    def test_syntax_errors_carry_the_line(self):
        cases = {
            "geometry.hole_shape = disk\nnot a setting\n": 2,
            "solver.tol = 1e-8\nsolver.speed = 3\n": 2,
            "mesh.h = 0.1\n": 1,
            "species.R1 = 1\n\nspecies.R1 = 2\n": 3,
            "species.K1 = 1\n": 1,
            "solver.tol =\n": 1,
        }
        for text, line in cases.items():
            with self.subTest(text=text):
                with self.assertRaises(ConfigError) as ctx:
                    parse_lines(text)
                self.assertEqual(ctx.exception.line, line)
                self.assertIn(f"line {line}", str(ctx.exception))


class LoadConfigTests(SimpleTestCase):
    def test_minimal_config_takes_defaults(self):
        config = parse_config("species.count = 1\n")
        self.assertEqual(config.hole_shape, HoleShape.DISK)
        self.assertEqual(config.hole_radius, 0.25)
        self.assertEqual(config.eps, (1 / 4, 1 / 8, 1 / 16, 1 / 32))
        self.assertEqual(config.h_ratio, 8)
        self.assertEqual(config.macro_cells, settings.HOMLAB["MACRO_CELLS"])
        self.assertEqual(config.species, (SpeciesConfig(),))
        self.assertEqual(config.cutoff, CutoffConvention.STANDARD)
        self.assertEqual(config.macro_mode, MacroMode.VOLUME_ONLY)
        self.assertEqual(config.order, 1)
        self.assertEqual(config.omega, 0.8)

    def test_negative_diffusion_violates_ellipticity(self):
        with self.assertRaises(ValidationError) as ctx:
            parse_config("species.d1 = -1\n")
        self.assertTrue(any("ellipticity" in m for m in ctx.exception.messages))

    def test_eps_must_be_reciprocal_integers(self):
        with self.assertRaises(ValidationError) as ctx:
            parse_config("geometry.eps = 1/3, 0.3\n")
        self.assertTrue(any("0.3" in m and "1/3" not in m for m in ctx.exception.messages))
        self.assertEqual(parse_config("geometry.eps = 1/3, 0.25\n").eps, (1 / 3, 1 / 4))

    def test_semantic_errors_name_key_and_line(self):
        with self.assertRaises(ValidationError) as ctx:
            parse_config("species.count = 1\nsolver.omega = 1.5\n")
        self.assertTrue(any(m.startswith("solver.omega (line 2)") for m in ctx.exception.messages))

    def test_rejected_values(self):
        cases = [
            "species.count = 0\n",
            "species.count = 2\nspecies.F1 = u2\n",
            "species.alpha1 = 0\n",
            "species.R1 = u1 +\n",
            "species.R1 = u2\n",
            "species.d3 = 1\n",
            "geometry.hole_radius = 0.5\n",
            "geometry.h_ratio = 2\n",
            "geometry.eval_point = 0.5\n",
            "solver.order = 3\n",
            "solver.order = 1\nsolver.theta_mode = frozen\n",
            "solver.cutoff = smooth\n",
            "species.a1 = -1\n",
        ]
        for text in cases:
            with self.subTest(text=text):
                with self.assertRaises(ValidationError):
                    parse_config(text)

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            load_config("/nonexistent/run.cfg")

    def test_shipped_catalog_loads(self):
        paths = sorted(Path(settings.HOMLAB["CATALOG_DIR"]).glob("*.cfg"))
        self.assertEqual(
            [p.stem for p in paths], ["benchmark", "contraction", "coupled", "laminate", "nonlinear", "trivial"]
        )
        for path in paths:
            with self.subTest(path=path.name):
                self.assertIsInstance(load_config(path), RunConfig)
        nonlinear = load_config(Path(settings.HOMLAB["CATALOG_DIR"]) / "nonlinear.cfg")
        self.assertEqual(nonlinear.n_species, 2)
        self.assertEqual(nonlinear.species[0].R, "u1*u2 - u1^2")


class CanonicalFormTests(SimpleTestCase):
    def test_save_then_load_is_identity(self):
        config = RunConfig(
            hole_shape=HoleShape.SQUARE,
            hole_radius=0.2,
            eps=(1 / 3, 1 / 6, 1 / 12),
            h_ratio=6,
            macro_cells=48,
            eval_point=(0.25, 0.75),
            species=(
                SpeciesConfig(d="2 + cos(y1)", a="0.1", b="0.2", R="-u1*u2", F="u1/(1 + u1)", alpha=0.5),
                SpeciesConfig(R="1 - u2", F="max(u2, 0.1)"),
            ),
            tol=1e-9,
            max_iter=50,
            omega=0.6,
            cutoff=CutoffConvention.PAPER,
            macro_mode=MacroMode.WITH_SURFACE,
            order=2,
            theta_mode=ThetaMode.FROZEN,
            jobs=3,
            output_dir="out/square",
            gnuplot=True,
        )
        with tempfile.TemporaryDirectory() as tmp:
            path = save_config(config, Path(tmp) / "run.cfg")
            self.assertEqual(load_config(path), config)
        self.assertEqual(format_config(parse_config(format_config(config))), format_config(config))

    def test_hash_tracks_what_a_run_computes(self):
        config = parse_config("species.R1 = 1\n")
        self.assertEqual(config.hash, config_hash(parse_config("species.R1 = 1\n")))
        self.assertEqual(len(config.hash), 64)
        self.assertEqual(config.hash, config.with_overrides(output_dir="elsewhere", jobs=4).hash)
        self.assertNotEqual(config.hash, parse_config("species.R1 = 2\n").hash)
        self.assertNotEqual(config.hash, config.with_overrides(order=0).hash)

    def test_sweep_settings(self):
        config = parse_config("geometry.eps = 1/4, 1/8, 1/16\nsolver.order = 2\nsolver.cutoff = paper\n")
        sweep = config.sweep_settings()
        self.assertEqual(sweep.eps_list, (1 / 4, 1 / 8, 1 / 16))
        self.assertEqual(sweep.order, 2)
        self.assertEqual(sweep.cutoff.convention, CutoffConvention.PAPER)
        self.assertEqual(sweep.cell_h, 1 / 8)
        self.assertEqual(sweep.picard.omega, 0.8)
