import numpy as np
import pytest

from src.core.pareto import (
    BoxDomain,
    BrokenLine,
    EmpiricalFront,
    closest_point_on_broken_line,
    dominated_by_any,
    dominates,
    dominates_any,
    extract_front,
    hypervolume,
    ideal_nadir,
    nondominated_mask,
    weakly_dominates,
)
from src.errors import DimensionError, EmptySetError, GeometryError


def brute_force_mask(points):
    n = len(points)
    mask = np.ones(n, dtype=bool)
    for i in range(n):
        for k in range(n):
            if k != i and (dominates(points[k], points[i]) or (k < i and np.all(points[k] == points[i]))):
                mask[i] = False
    return mask


class TestDominance:
    def test_strict_dominance(self):
        assert dominates([1, 2], [2, 3])
        assert dominates([1, 2], [1, 3])
        assert not dominates([1, 2], [1, 2])
        assert not dominates([1, 3], [2, 2])

    def test_weak_dominance_accepts_equality(self):
        assert weakly_dominates([1, 2], [1, 2])
        assert not weakly_dominates([1, 3], [1, 2])

    def test_length_mismatch_raises(self):
        with pytest.raises(DimensionError):
            dominates([1, 2], [1, 2, 3])
        with pytest.raises(DimensionError):
            dominated_by_any([[0, 0]], [1, 1, 1])

    def test_order_properties_on_random_triples(self):
        rng = np.random.default_rng(5)
        for _ in range(2000):
            a, b, c = np.round(rng.random((3, 2)), 1)
            assert not dominates(a, a)
            assert not (dominates(a, b) and dominates(b, a))
            if dominates(a, b) and dominates(b, c):
                assert dominates(a, c)

    def test_any_helpers(self):
        pts = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert dominated_by_any(pts, [0.5, 1.5])
        assert not dominated_by_any(pts, [0.5, 0.5])
        assert not dominated_by_any(pts, [0.0, 1.0])
        assert dominates_any([0.0, 0.5], pts)
        assert not dominated_by_any(np.zeros((0, 2)), [0.0, 0.0])


class TestFront:
    def test_extract_front_example(self):
        front = extract_front([[1, 3], [2, 2], [3, 1], [2, 3]])
        assert front.points.tolist() == [[1, 3], [2, 2], [3, 1]]
        assert front.indices.tolist() == [0, 1, 2]

    def test_duplicates_kept_once(self):
        front = extract_front([[1, 1], [1, 1], [0, 2]])
        assert len(front) == 2
        assert front.indices.tolist() == [0, 2]

    def test_empty_raises(self):
        with pytest.raises(EmptySetError):
            extract_front(np.zeros((0, 2)))

    @pytest.mark.parametrize("m", [2, 3])
    def test_mask_matches_brute_force(self, m):
        rng = np.random.default_rng(m)
        pts = np.round(rng.random((60, m)), 1)
        np.testing.assert_array_equal(nondominated_mask(pts), brute_force_mask(pts))

    def test_extraction_is_idempotent(self):
        rng = np.random.default_rng(9)
        for m in (2, 3):
            front = extract_front(np.round(rng.random((80, m)), 2))
            again = extract_front(front.points)
            np.testing.assert_array_equal(again.points, front.points)

    def test_source_designs_follow_points(self):
        ys = np.array([[1.0, 3.0], [3.0, 3.0], [3.0, 1.0]])
        xs = np.array([[0.1], [0.2], [0.3]])
        front = extract_front(ys, xs)
        assert front.source_designs.ravel().tolist() == [0.1, 0.3]

    def test_ideal_nadir(self):
        ideal, nadir = ideal_nadir([[1, 3], [2, 2], [3, 1]])
        assert ideal.tolist() == [1, 1]
        assert nadir.tolist() == [3, 3]
        with pytest.raises(EmptySetError):
            ideal_nadir(np.zeros((0, 2)))


class TestHypervolume:
    def test_single_point(self):
        assert hypervolume([[0, 0]], [1, 1]) == pytest.approx(1.0)

    def test_staircase(self):
        assert hypervolume([[0, 1], [1, 0]], [2, 2]) == pytest.approx(3.0)

    def test_two_point_union(self):
        assert hypervolume([[0.25, 0.75], [0.75, 0.25]], [1.0, 1.0]) == pytest.approx(0.3125)

    def test_monotone_in_the_front(self):
        rng = np.random.default_rng(4)
        ref = np.array([1.0, 1.0])
        for _ in range(200):
            front = extract_front(rng.random((6, 2))).points
            base = hypervolume(front, ref)
            new = rng.random(2)
            if dominated_by_any(front, new):
                assert hypervolume(np.vstack([front, new]), ref) == pytest.approx(base, abs=1e-15)
            else:
                assert hypervolume(np.vstack([front, new]), ref) >= base - 1e-15

    def test_points_outside_box_ignored(self):
        assert hypervolume([[3, 0]], [2, 2]) == 0.0
        assert hypervolume(np.zeros((0, 2)), [1, 1]) == 0.0

    def test_two_objectives_against_monte_carlo(self):
        rng = np.random.default_rng(3)
        pts = rng.random((8, 2))
        ref = np.array([1.0, 1.0])
        samples = rng.random((400_000, 2))
        covered = np.zeros(samples.shape[0], dtype=bool)
        for p in pts:
            covered |= np.all(samples >= p, axis=1)
        estimate = covered.mean()
        se = covered.std() / np.sqrt(samples.shape[0])
        assert abs(hypervolume(pts, ref) - estimate) <= 3 * se + 1e-12

    def test_three_objectives_monte_carlo(self):
        value = hypervolume([[0.0, 0.0, 0.0]], [1.0, 1.0, 1.0], n_samples=20_000)
        assert value == pytest.approx(1.0)


class TestGeometry:
    def test_box_domain_validation(self):
        with pytest.raises(GeometryError):
            BoxDomain([0.0, 1.0], [1.0, 1.0])
        box = BoxDomain.unit(3)
        assert box.dim == 3
        assert box.contains([0.5, 0.5, 1.0])
        assert not box.contains([0.5, 1.2, 0.0])

    def test_broken_line_arc_length(self):
        line = BrokenLine.through([0, 0], [1, 0], [1, 1])
        assert line.length == pytest.approx(2.0)
        np.testing.assert_allclose(line.point_at(1.5), [1.0, 0.5])
        np.testing.assert_allclose(line.point_at([0.0, 3.0]), [[0, 0], [1, 1]])

    def test_repeated_vertices_dropped(self):
        line = BrokenLine.through([0, 0], [0, 0], [1, 1])
        assert line.vertices.shape == (2, 2)
        with pytest.raises(GeometryError):
            BrokenLine.through([1, 1], [1, 1])

    def test_closest_point_on_segment(self):
        line = BrokenLine.through([0, 0], [2, 0])
        proj = closest_point_on_broken_line(line, [[1, 1]])
        np.testing.assert_allclose(proj.point, [1, 0])
        assert proj.arc_length == pytest.approx(1.0)
        assert proj.distance == pytest.approx(1.0)

    def test_ties_go_to_smaller_arc_length(self):
        line = BrokenLine.through([0, 0], [2, 0])
        proj = closest_point_on_broken_line(line, [[0.5, 1.0], [1.5, 1.0]])
        assert proj.arc_length == pytest.approx(0.5)

    def test_three_vertex_line_against_dense_discretization(self):
        rng = np.random.default_rng(13)
        for _ in range(5):
            line = BrokenLine.through(*rng.random((3, 2)))
            targets = rng.random((10, 2))
            proj = closest_point_on_broken_line(line, targets)
            dense = line.point_at(np.linspace(0.0, line.length, 100_000))
            best = min(np.linalg.norm(dense - t, axis=1).min() for t in targets)
            assert proj.distance <= best + 1e-12
            assert proj.distance == pytest.approx(best, abs=1e-3)
            assert np.linalg.norm(targets - proj.point, axis=1).min() == pytest.approx(proj.distance, abs=1e-12)

    def test_empty_targets(self):
        with pytest.raises(EmptySetError):
            closest_point_on_broken_line(BrokenLine.through([0, 0], [1, 1]), EmpiricalFront(np.zeros((0, 2))))
