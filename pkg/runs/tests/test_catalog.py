from pathlib import Path

from django.conf import settings
from django.test import SimpleTestCase

from geometry.services import build_perforated_domain_mesh
from micro.services import estimate_kappa, solve_micro
from runs.config import load_config

CATALOG = Path(settings.HOMLAB["CATALOG_DIR"])


def solve_coarsest(config):
    epsilon = max(config.eps)
    mesh = build_perforated_domain_mesh(epsilon, config.geometry, epsilon / config.h_ratio)
    spec = config.problem_spec()
    u, report = solve_micro(mesh, spec, config.picard_options())
    return mesh, spec, u, report


class CatalogContractionTests(SimpleTestCase):
    def test_measured_contraction_respects_the_bound(self):
        for path in sorted(CATALOG.glob("*.cfg")):
            with self.subTest(config=path.name):
                mesh, spec, u, report = solve_coarsest(load_config(path))
                self.assertTrue(report.converged)
                estimate = estimate_kappa(report, mesh, spec, u)
                if estimate.bound < 1.0 and not estimate.immediate:
                    self.assertLess(estimate.kappa_hat, 1.0)
                self.assertTrue(estimate.consistent)

    def test_coupled_species_are_both_nonzero(self):
        mesh, spec, u, report = solve_coarsest(load_config(CATALOG / "coupled.cfg"))
        self.assertTrue(report.converged)
        self.assertIsNotNone(report.kappa)
        self.assertLess(report.kappa, 1.0)
        for species in range(2):
            self.assertGreater(u.values[species].max(), 1e-4)
        self.assertGreaterEqual(u.values.min(), -1e-8)
        # u2 is u1 passed through one more inverse Laplacian
        self.assertLess(u.values[1].max(), 2.0 * u.values[0].max())
        self.assertLess(estimate_kappa(report, mesh, spec, u).bound, 1.0)
