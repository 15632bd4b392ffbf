import numpy as np
from django.test import SimpleTestCase

from fem.assembly import (
    assemble_boundary_mass,
    assemble_derivative_load,
    assemble_element_load,
    assemble_mass,
    assemble_stiffness,
    element_gradients,
)
from fem.constraints import LinearSystem, apply_dirichlet
from fem.norms import h1_seminorm
from geometry.models import CellGeometry, EdgeTag, HoleShape, Mesh
from geometry.services import build_domain_mesh, build_unit_cell_mesh
from reactions.exceptions import EvalError
from reactions.nodes import VariableKind
from reactions.parser import parse

LAMINATE = "1 + 0.5*sin(6.283185307179586*y1)"


def right_triangle():
    return Mesh(
        vertices=[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        triangles=[[0, 1, 2]],
        boundary_edges=np.empty((0, 2)),
        edge_tags=[],
    )


class StiffnessTests(SimpleTestCase):
    def test_unit_right_triangle(self):
        matrix = assemble_stiffness(right_triangle()).toarray()
        np.testing.assert_array_equal(matrix, 0.5 * np.array([[2, -1, -1], [-1, 1, 0], [-1, 0, 1]]))

    def test_scales_with_constant_coefficient(self):
        mesh = build_unit_cell_mesh(CellGeometry(HoleShape.DISK, 0.25), 1 / 8)
        np.testing.assert_allclose(
            assemble_stiffness(mesh, 3.5).toarray(), 3.5 * assemble_stiffness(mesh).toarray(), rtol=1e-14, atol=1e-14
        )

    def test_symmetric_and_deterministic(self):
        mesh = build_unit_cell_mesh(CellGeometry(HoleShape.DISK, 0.2), 1 / 16)
        d = parse(LAMINATE, 2, VariableKind.CELL)
        first, second = assemble_stiffness(mesh, d), assemble_stiffness(mesh, d)
        self.assertEqual(abs(first - first.T).max(), 0.0)
        np.testing.assert_array_equal(first.indptr, second.indptr)
        np.testing.assert_array_equal(first.indices, second.indices)
        np.testing.assert_array_equal(first.data, second.data)

    def test_energy_bounded_below_by_ellipticity_floor(self):
        mesh = build_unit_cell_mesh(CellGeometry(HoleShape.DISK, 0.25), 1 / 16)
        matrix = assemble_stiffness(mesh, parse(LAMINATE, 2, VariableKind.CELL))
        rng = np.random.default_rng(3)
        for _ in range(10):
            x = rng.standard_normal(mesh.n_vertices)
            self.assertGreaterEqual(x @ (matrix @ x), 0.5 * h1_seminorm(x, mesh) ** 2 * (1 - 1e-12))

    def test_isotropic_tensor_matches_scalar_bit_for_bit(self):
        mesh = build_domain_mesh(8)
        tensor, scalar = assemble_stiffness(mesh, 2.0 * np.eye(2)), assemble_stiffness(mesh, 2.0)
        np.testing.assert_array_equal(tensor.indices, scalar.indices)
        np.testing.assert_array_equal(tensor.data, scalar.data)

    def test_anisotropic_tensor_energy(self):
        mesh = build_domain_mesh(8)
        matrix = assemble_stiffness(mesh, np.diag([2.0, 0.5]))
        x, y = mesh.vertices.T
        self.assertAlmostEqual(x @ (matrix @ x), 2.0, places=12)
        self.assertAlmostEqual(y @ (matrix @ y), 0.5, places=12)

    def test_non_finite_coefficient(self):
        with self.assertRaises(EvalError):
            assemble_stiffness(build_domain_mesh(4), lambda points: np.full(len(points), np.nan))


class MassTests(SimpleTestCase):
    def test_row_sums_give_area(self):
        mesh = build_unit_cell_mesh(CellGeometry(HoleShape.DISK, 0.25), 1 / 16)
        self.assertAlmostEqual(assemble_mass(mesh).sum(), mesh.area, places=12)

    def test_hole_perimeter(self):
        mesh = build_unit_cell_mesh(CellGeometry(HoleShape.DISK, 0.25), 1 / 64)
        total = assemble_boundary_mass(mesh, EdgeTag.HOLE).sum()
        self.assertLess(abs(total - 2 * np.pi * 0.25) / (2 * np.pi * 0.25), 0.01)

    def test_square_hole_perimeter_is_exact(self):
        mesh = build_unit_cell_mesh(CellGeometry(HoleShape.SQUARE, 0.25), 1 / 16)
        self.assertAlmostEqual(assemble_boundary_mass(mesh, EdgeTag.HOLE).sum(), 2.0, places=12)

    def test_zero_weight(self):
        mesh = build_unit_cell_mesh(CellGeometry(HoleShape.DISK, 0.25), 1 / 8)
        self.assertEqual(assemble_boundary_mass(mesh, EdgeTag.HOLE, 0.0).nnz, 0)

    def test_exterior_edges_of_square(self):
        self.assertAlmostEqual(assemble_boundary_mass(build_domain_mesh(8), EdgeTag.EXTERIOR).sum(), 4.0, places=12)

    def test_loads(self):
        mesh = build_domain_mesh(4)
        self.assertAlmostEqual(assemble_element_load(mesh, 2.0).sum(), 2.0, places=12)
        # integral of d(v)/dy1 vanishes for v = 1
        self.assertAlmostEqual(assemble_derivative_load(mesh, np.ones(mesh.n_triangles), 0).sum(), 0.0, places=12)
        grads, area = element_gradients(mesh)
        np.testing.assert_allclose(area.sum(), 1.0)


class PoissonTests(SimpleTestCase):
    def test_center_value_against_fourier_series(self):
        m, n = np.meshgrid(np.arange(1, 100, 2), np.arange(1, 100, 2))
        terms = np.sin(m * np.pi / 2) * np.sin(n * np.pi / 2) / (m * n * (m**2 + n**2))
        oracle = 16 / np.pi**4 * terms.sum()
        self.assertAlmostEqual(oracle, 0.07367, delta=5e-5)

        mesh = build_domain_mesh(64)
        system = LinearSystem(assemble_stiffness(mesh), assemble_mass(mesh) @ np.ones(mesh.n_vertices), mesh)
        u = apply_dirichlet(system).solve()
        center = 32 * 65 + 32
        np.testing.assert_array_equal(mesh.vertices[center], [0.5, 0.5])
        self.assertAlmostEqual(u[center], oracle, delta=5e-4)
        np.testing.assert_array_equal(u[mesh.tagged_vertices(EdgeTag.EXTERIOR)], 0.0)
        self.assertGreaterEqual(u.min(), -1e-12)

    def test_gradient_error_decays_linearly(self):
        errors = []
        for cells in (8, 16, 32):
            mesh = build_domain_mesh(cells)
            x, y = mesh.vertices.T
            f = 2 * np.pi**2 * np.sin(np.pi * x) * np.sin(np.pi * y)
            system = LinearSystem(assemble_stiffness(mesh), assemble_mass(mesh) @ f, mesh)
            u = apply_dirichlet(system).solve()
            grads, area = element_gradients(mesh)
            uh = np.einsum("ti,tik->tk", u[mesh.triangles], grads)
            cx, cy = mesh.centroids.T
            exact = np.pi * np.column_stack(
                [np.cos(np.pi * cx) * np.sin(np.pi * cy), np.sin(np.pi * cx) * np.cos(np.pi * cy)]
            )
            errors.append(np.sqrt(np.sum(area * np.sum((uh - exact) ** 2, axis=1))))
        self.assertGreater(errors[0] / errors[1], 1.6)
        self.assertGreater(errors[1] / errors[2], 1.6)
