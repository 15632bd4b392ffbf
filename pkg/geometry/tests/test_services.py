import numpy as np
from django.test import SimpleTestCase
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from geometry.exceptions import GeometryError, QualityFailure, TilingError
from geometry.models import MAX_DISK_RADIUS, CellGeometry, EdgeTag, HoleShape, Mesh
from geometry.services import (
    build_domain_mesh,
    build_perforated_domain_mesh,
    build_unit_cell_mesh,
    check_quality,
    mesh_quality,
)

DISK = CellGeometry(HoleShape.DISK, 0.25)
SQUARE = CellGeometry(HoleShape.SQUARE, 0.25)
PLAIN = CellGeometry(HoleShape.NONE, 0.0)


class CellGeometryTests(SimpleTestCase):
    def test_hole_touching_boundary_is_rejected(self):
        with self.assertRaises(GeometryError):
            CellGeometry(HoleShape.DISK, 0.5)

    def test_disk_radius_is_capped(self):
        self.assertEqual(CellGeometry(HoleShape.DISK, MAX_DISK_RADIUS).hole_radius, MAX_DISK_RADIUS)
        with self.assertRaises(GeometryError):
            CellGeometry(HoleShape.DISK, 0.45)
        self.assertEqual(CellGeometry(HoleShape.SQUARE, 0.49).hole_radius, 0.49)

    def test_shape_from_text(self):
        self.assertIs(CellGeometry("square", 0.1).hole_shape, HoleShape.SQUARE)

    def test_boundary_samples_lie_on_the_hole(self):
        points = DISK.boundary_samples(64)
        np.testing.assert_allclose(np.linalg.norm(points - 0.5, axis=1), 0.25)


class UnitCellMeshTests(SimpleTestCase):
    def test_no_hole_area_is_exact(self):
        mesh = build_unit_cell_mesh(PLAIN, 1 / 8)
        self.assertAlmostEqual(mesh.area, 1.0, places=14)
        self.assertEqual(len(mesh.boundary_edges), 0)
        self.assertEqual(mesh.grid, 8)

    def test_square_hole_area_is_exact(self):
        mesh = build_unit_cell_mesh(SQUARE, 1 / 8)
        self.assertAlmostEqual(mesh.area, 0.75, places=12)
        lengths = np.linalg.norm(np.diff(mesh.vertices[mesh.edges(EdgeTag.HOLE)], axis=1)[:, 0], axis=1)
        self.assertAlmostEqual(lengths.sum(), 2.0, places=12)

    def test_disk_area_close_to_analytic(self):
        mesh = build_unit_cell_mesh(DISK, 1 / 32)
        self.assertLessEqual(abs(mesh.area - 0.80365), 0.01)

    def test_disk_area_error_shrinks_with_h(self):
        errors = [abs(build_unit_cell_mesh(DISK, h).area - DISK.pore_area) for h in (1 / 8, 1 / 16, 1 / 32)]
        self.assertGreater(errors[0], errors[1])
        self.assertGreater(errors[1], errors[2])

    def test_hole_vertices_on_circle(self):
        mesh = build_unit_cell_mesh(DISK, 1 / 16)
        hole = mesh.vertices[mesh.tagged_vertices(EdgeTag.HOLE)]
        np.testing.assert_allclose(np.linalg.norm(hole - 0.5, axis=1), 0.25, atol=1e-12)

    def test_generated_meshes_respect_quality_floor(self):
        for radius in (0.1, 0.25, 0.3):
            for h in (1 / 8, 1 / 16, 1 / 32):
                mesh = build_unit_cell_mesh(CellGeometry(HoleShape.DISK, radius), h)
                self.assertGreaterEqual(mesh_quality(mesh).min_angle, 20.0)
                self.assertTrue(np.all(mesh.triangle_areas > 0))

    def test_admissible_radius_extremes_mesh_above_the_floor(self):
        for h in (1 / 4, 1 / 8, 1 / 16, 1 / 32):
            for radius in (0.01, MAX_DISK_RADIUS):
                with self.subTest(shape="disk", radius=radius, h=h):
                    mesh = build_unit_cell_mesh(CellGeometry(HoleShape.DISK, radius), h)
                    self.assertGreaterEqual(mesh_quality(mesh).min_angle, 20.0)

    def test_small_and_wide_square_holes_mesh_above_the_floor(self):
        for h in (1 / 4, 1 / 16, 0.07, 1 / 32):
            for half_side in (0.01, 0.25, 0.49):
                with self.subTest(half_side=half_side, h=h):
                    mesh = build_unit_cell_mesh(CellGeometry(HoleShape.SQUARE, half_side), h)
                    self.assertGreaterEqual(mesh_quality(mesh).min_angle, 26.5)
                    self.assertAlmostEqual(mesh.area, 1.0 - 4.0 * half_side**2, places=12)
                    shift = mesh.vertices[mesh.periodic_pairs[:, 1]] - mesh.vertices[mesh.periodic_pairs[:, 0]]
                    self.assertTrue(np.all(np.abs(shift).sum(axis=1) == 1.0))

    def test_periodic_pairs_differ_by_unit_vector(self):
        mesh = build_unit_cell_mesh(DISK, 1 / 16)
        shift = mesh.vertices[mesh.periodic_pairs[:, 1]] - mesh.vertices[mesh.periodic_pairs[:, 0]]
        unit = np.all(shift == [1.0, 0.0], axis=1) | np.all(shift == [0.0, 1.0], axis=1)
        self.assertTrue(np.all(unit))

    def test_periodic_pairing_is_a_face_bijection(self):
        mesh = build_unit_cell_mesh(DISK, 1 / 16)
        for axis in (0, 1):
            pairs = [
                (m, s) for m, s in mesh.periodic_pairs.tolist() if mesh.vertices[s, axis] == 1.0
                and mesh.vertices[m, axis] == 0.0
            ]
            forward = dict(pairs)
            backward = {s: m for m, s in pairs}
            self.assertEqual(len(forward), len(backward))
            for master in forward:
                self.assertEqual(backward[forward[master]], master)

    def test_fold_count_on_structured_grid(self):
        mesh = build_unit_cell_mesh(PLAIN, 1 / 8)
        slaves = np.unique(mesh.periodic_pairs[:, 1])
        self.assertEqual(len(slaves), 2 * 8 + 1)

    def test_rejects_coarse_h(self):
        with self.assertRaises(GeometryError):
            build_unit_cell_mesh(DISK, 0.5)


class PerforatedDomainTests(SimpleTestCase):
    def test_sixteen_holes_at_quarter(self):
        mesh = build_perforated_domain_mesh(1 / 4, DISK, 1 / 32)
        hole = mesh.edges(EdgeTag.HOLE)
        graph = coo_matrix((np.ones(len(hole)), (hole[:, 0], hole[:, 1])), shape=(mesh.n_vertices,) * 2)
        _, labels = connected_components(graph, directed=False)
        self.assertEqual(len(np.unique(labels[np.unique(hole)])), 16)
        self.assertLessEqual(abs(mesh.area - 0.80365), 0.01)

    def test_single_tile_reproduces_cell(self):
        cell = build_unit_cell_mesh(DISK, 1 / 8)
        mesh = build_perforated_domain_mesh(1.0, DISK, 1 / 8, cell_mesh=cell)
        np.testing.assert_array_equal(mesh.vertices, cell.vertices)
        np.testing.assert_array_equal(mesh.triangles, cell.triangles)
        self.assertEqual(len(mesh.periodic_pairs), 0)
        self.assertGreater(len(mesh.edges(EdgeTag.EXTERIOR)), 0)
        self.assertEqual(len(mesh.edges(EdgeTag.HOLE)), len(cell.edges(EdgeTag.HOLE)))

    def test_tile_vertices_are_scaled_copies(self):
        epsilon = 1 / 8
        cell = build_unit_cell_mesh(DISK, 1 / 8)
        mesh = build_perforated_domain_mesh(epsilon, DISK, epsilon / 8, cell_mesh=cell)
        per_tile = cell.n_triangles
        for t in range(64):
            j, i = divmod(t, 8)
            tile = mesh.triangles[t * per_tile : (t + 1) * per_tile]
            expected = epsilon * cell.vertices[cell.triangles] + epsilon * np.array([i, j], dtype=float)
            np.testing.assert_array_equal(mesh.vertices[tile], expected)

    def test_exterior_edges_on_outer_square(self):
        mesh = build_perforated_domain_mesh(1 / 4, SQUARE, 1 / 32)
        points = mesh.vertices[mesh.tagged_vertices(EdgeTag.EXTERIOR)]
        distance = np.minimum(np.minimum(points[:, 0], 1 - points[:, 0]), np.minimum(points[:, 1], 1 - points[:, 1]))
        self.assertLess(distance.max(), 1e-12)
        self.assertEqual(mesh.cell_hash, build_unit_cell_mesh(SQUARE, 1 / 8).hash)

    def test_non_reciprocal_epsilon(self):
        with self.assertRaises(TilingError):
            build_perforated_domain_mesh(0.3, DISK, 0.03)

    def test_domain_mesh_is_structured(self):
        mesh = build_domain_mesh(16)
        self.assertEqual(mesh.grid, 16)
        self.assertEqual(mesh.n_vertices, 17 * 17)
        self.assertAlmostEqual(mesh_quality(mesh).min_angle, 45.0, places=10)


class QualityTests(SimpleTestCase):
    def test_right_triangle_tiling(self):
        report = mesh_quality(build_unit_cell_mesh(PLAIN, 1 / 4))
        self.assertAlmostEqual(report.min_angle, 45.0, places=10)
        self.assertTrue(np.isfinite(report.max_aspect))

    def test_degenerate_triangle_fails(self):
        mesh = Mesh(
            vertices=[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [2.0, 0.0]],
            triangles=[[0, 1, 2], [0, 1, 3]],
            boundary_edges=np.empty((0, 2)),
            edge_tags=[],
        )
        report = mesh_quality(mesh)
        self.assertTrue(np.isfinite(report.max_aspect))
        with self.assertRaises(QualityFailure):
            check_quality(mesh, 20.0)
