import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase, tag

from cells.io import read_cell_solution, write_cell_solution
from cells.models import ThetaMode
from cells.services import (
    compute_q,
    compute_surface_averages,
    solve_cell,
    solve_chi,
    solve_theta,
    solve_theta_surface,
)
from fem.assembly import assemble_mass
from fem.models import CoefficientSpec, SpeciesCoefficients
from geometry.models import CellGeometry, HoleShape
from geometry.services import build_unit_cell_mesh
from reactions.nodes import VariableKind
from reactions.parser import parse

PLAIN = CellGeometry(HoleShape.NONE, 0.0)
DISK = CellGeometry(HoleShape.DISK, 0.25)
LAMINATE = "1 + 0.5*sin(6.283185307179586*y1)"


def cell_expr(text):
    return parse(text, 2, VariableKind.CELL)


def mean_over_pore(mesh, values):
    return float(np.sum(assemble_mass(mesh) @ values) / mesh.area)


def grid_means(text, samples=2000):
    s = (np.arange(samples) + 0.5) / samples
    y1, y2 = np.meshgrid(s, s)
    values = cell_expr(text)(y1, y2)
    return 1.0 / np.mean(1.0 / values), np.mean(values)


class FirstCellProblemTests(SimpleTestCase):
    def test_constant_coefficient_without_hole(self):
        mesh = build_unit_cell_mesh(PLAIN, 1 / 8)
        chi = solve_chi(mesh, 2.5)
        np.testing.assert_array_equal(chi, 0.0)
        q, asymmetry = compute_q(mesh, 2.5, chi)
        np.testing.assert_allclose(q, 2.5 * np.eye(2), atol=1e-8)
        self.assertEqual(asymmetry, 0.0)

    def test_laminate_against_harmonic_and_arithmetic_means(self):
        mesh = build_unit_cell_mesh(PLAIN, 1 / 64)
        d = cell_expr(LAMINATE)
        chi = solve_chi(mesh, d)
        q, _ = compute_q(mesh, d, chi)
        self.assertLess(abs(q[0, 0] - np.sqrt(0.75)) / np.sqrt(0.75), 0.01)
        self.assertLess(abs(q[1, 1] - 1.0), 0.01)
        self.assertLessEqual(abs(q[0, 1]), 0.005)
        # chi^1 is constant along y2, chi^2 vanishes
        columns = chi[0].reshape(65, 65)
        self.assertLess(np.ptp(columns, axis=0).max(), 1e-7)
        self.assertLess(np.abs(chi[1]).max(), 1e-7)

    def test_mean_zero(self):
        mesh = build_unit_cell_mesh(DISK, 1 / 16)
        chi = solve_chi(mesh, cell_expr("1 + 0.3*cos(6.283185307179586*y2)"))
        for k in range(2):
            self.assertLess(abs(mean_over_pore(mesh, chi[k])), 1e-8)

    def test_voigt_reuss_bounds(self):
        mesh = build_unit_cell_mesh(PLAIN, 1 / 32)
        profiles = [
            LAMINATE,
            "2 + cos(6.283185307179586*y2)",
            "1 + 0.5*sin(6.283185307179586*y1)*sin(6.283185307179586*y2)",
        ]
        for text in profiles:
            with self.subTest(profile=text):
                harmonic, arithmetic = grid_means(text)
                d = cell_expr(text)
                q, _ = compute_q(mesh, d, solve_chi(mesh, d))
                low, high = np.linalg.eigvalsh(q)
                self.assertGreaterEqual(low, harmonic * 0.99)
                self.assertLessEqual(high, arithmetic * 1.01)

    def test_disk_hole_is_isotropic_and_below_porosity(self):
        mesh = build_unit_cell_mesh(DISK, 1 / 16)
        q, _ = compute_q(mesh, 1.0, solve_chi(mesh, 1.0))
        self.assertLess(abs(q[0, 0] - q[1, 1]), 1e-3)
        self.assertLess(abs(q[0, 1]), 1e-3)
        self.assertGreater(q[0, 0], 0.6)
        self.assertLess(q[0, 0], mesh.area)

    def test_tensor_shrinks_with_hole_radius(self):
        values = []
        for radius in (0.1, 0.2, 0.3):
            mesh = build_unit_cell_mesh(CellGeometry(HoleShape.DISK, radius), 1 / 16)
            q, _ = compute_q(mesh, 1.0, solve_chi(mesh, 1.0))
            values.append(np.linalg.eigvalsh(q).max())
        self.assertGreater(values[0], values[1])
        self.assertGreater(values[1], values[2])

    def test_scaling_the_coefficient(self):
        mesh = build_unit_cell_mesh(DISK, 1 / 16)
        d, scaled = cell_expr(LAMINATE), cell_expr(f"3*({LAMINATE})")
        chi, chi_scaled = solve_chi(mesh, d), solve_chi(mesh, scaled)
        np.testing.assert_allclose(chi_scaled, chi, atol=1e-8)
        np.testing.assert_allclose(
            compute_q(mesh, scaled, chi_scaled)[0], 3 * compute_q(mesh, d, chi)[0], rtol=1e-8, atol=1e-12
        )

    def test_self_convergence(self):
        tensors = []
        for h in (1 / 8, 1 / 16, 1 / 32):
            mesh = build_unit_cell_mesh(DISK, h)
            tensors.append(compute_q(mesh, 1.0, solve_chi(mesh, 1.0))[0])
        self.assertGreater(np.abs(tensors[0] - tensors[1]).max(), np.abs(tensors[1] - tensors[2]).max())


class SurfaceAverageTests(SimpleTestCase):
    def test_disk_perimeter(self):
        mesh = build_unit_cell_mesh(DISK, 1 / 64)
        surf_a, surf_b = compute_surface_averages(mesh, cell_expr("1"), cell_expr("0"))
        self.assertLess(abs(surf_a - 2 * np.pi * 0.25) / (2 * np.pi * 0.25), 0.01)
        self.assertEqual(surf_b, 0.0)

    def test_square_perimeter_is_exact(self):
        mesh = build_unit_cell_mesh(CellGeometry(HoleShape.SQUARE, 0.25), 1 / 16)
        surf_a, _ = compute_surface_averages(mesh, cell_expr("1"), cell_expr("1"))
        self.assertAlmostEqual(surf_a, 2.0, places=12)

    def test_no_hole(self):
        mesh = build_unit_cell_mesh(PLAIN, 1 / 8)
        self.assertEqual(compute_surface_averages(mesh, cell_expr("1"), cell_expr("1")), (0.0, 0.0))


class SecondCellProblemTests(SimpleTestCase):
    def test_vanishes_without_hole_for_constant_coefficient(self):
        mesh = build_unit_cell_mesh(PLAIN, 1 / 8)
        chi = solve_chi(mesh, 1.0)
        q, _ = compute_q(mesh, 1.0, chi)
        np.testing.assert_allclose(solve_theta(mesh, 1.0, chi, q), 0.0, atol=1e-12)

    def test_disk_hole_gives_nonzero_mean_free_theta(self):
        mesh = build_unit_cell_mesh(DISK, 1 / 16)
        chi = solve_chi(mesh, 1.0)
        q, _ = compute_q(mesh, 1.0, chi)
        theta = solve_theta(mesh, 1.0, chi, q)
        self.assertGreater(np.abs(theta).max(), 1e-4)
        for k in range(2):
            for l in range(2):
                self.assertLess(abs(mean_over_pore(mesh, theta[k, l])), 1e-8)

    def test_surface_part(self):
        mesh = build_unit_cell_mesh(DISK, 1 / 16)
        zero = solve_theta_surface(mesh, 1.0, cell_expr("0"), cell_expr("0"), 0.3, 0.1)
        np.testing.assert_array_equal(zero, 0.0)
        theta_s = solve_theta_surface(mesh, 1.0, cell_expr("1"), cell_expr("0.5"), 0.3, 0.1)
        self.assertGreater(np.abs(theta_s).max(), 1e-5)
        self.assertLess(abs(mean_over_pore(mesh, theta_s)), 1e-8)


class CellSolutionTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        species = SpeciesCoefficients(cell_expr("1"), cell_expr("0.1"), cell_expr("0.1"))
        self.coefficients = CoefficientSpec([species, species])

    def test_frozen_mode_needs_values(self):
        mesh = build_unit_cell_mesh(DISK, 1 / 8)
        with self.assertRaises(ValueError):
            solve_cell(mesh, self.coefficients, order=2, theta_mode=ThetaMode.FROZEN)

    def test_written_twice_byte_identical_and_read_back(self):
        mesh = build_unit_cell_mesh(DISK, 1 / 8)
        solution = solve_cell(mesh, self.coefficients, order=2, theta_mode="frozen", frozen=[(0.2, 0.1), (0.0, 0.0)])
        self.assertEqual(solution.theta.shape, (2, 2, 2, mesh.n_vertices))
        first = write_cell_solution(solution, Path(self.tmp.name) / "a", "abc")
        again = write_cell_solution(
            solve_cell(mesh, self.coefficients, order=2, theta_mode="frozen", frozen=[(0.2, 0.1), (0.0, 0.0)]),
            Path(self.tmp.name) / "b",
            "abc",
        )
        for name in ("cell.mesh", "chi.field", "theta.field", "tensor.txt"):
            self.assertEqual((first / name).read_bytes(), (again / name).read_bytes())

        loaded, config_hash = read_cell_solution(first)
        self.assertEqual(config_hash, "abc")
        np.testing.assert_array_equal(loaded.q, solution.q)
        np.testing.assert_array_equal(loaded.chi, solution.chi)
        np.testing.assert_array_equal(loaded.theta, solution.theta)
        np.testing.assert_array_equal(loaded.theta_surface, solution.theta_surface)
        np.testing.assert_array_equal(loaded.surf_a, solution.surf_a)
        self.assertIs(loaded.theta_mode, ThetaMode.FROZEN)


@tag("slow")
class DiskTensorExtrapolationTests(SimpleTestCase):
    def test_richardson_value(self):
        values = []
        for h in (1 / 32, 1 / 64, 1 / 128):
            mesh = build_unit_cell_mesh(DISK, h)
            q, _ = compute_q(mesh, 1.0, solve_chi(mesh, 1.0))
            self.assertLess(abs(q[0, 0] - q[1, 1]), 1e-3)
            values.append(0.5 * (q[0, 0] + q[1, 1]))
        # P1 energy and the inscribed polygon both overestimate q, at second order in h
        self.assertGreater(values[0], values[1])
        self.assertGreater(values[1], values[2])
        self.assertGreater(values[0] - values[1], 2.0 * (values[1] - values[2]))
        extrapolated = values[2] - (values[1] - values[2]) / 3.0
        self.assertGreater(extrapolated, 0.6)
        self.assertLess(extrapolated, 1.0 - np.pi / 16)
