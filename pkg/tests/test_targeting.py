import numpy as np
import pytest

from src.core.gp import GPConfig, fit_multi
from src.core.pareto import (
    BoxDomain,
    BrokenLine,
    EmpiricalFront,
    closest_point_on_broken_line,
    dominated_by_any,
    extract_front,
)
from src.core.search import lhs
from src.core.targeting import (
    SimulatedFronts,
    adapt_reference,
    adapt_reference_detailed,
    center_anchor,
    estimate_center,
    estimate_front,
    estimate_ideal_nadir,
    simulate_fronts,
)
from src.errors import EmptySetError, GeometryError
from tests.conftest import build_models


def random_front(rng, n=10):
    return extract_front(rng.random((n, 2)))


def staircase_front(rng, n=10):
    """n mutually non-dominated points: f1 increasing, f2 decreasing."""
    f1 = np.sort(rng.choice(1000, size=n, replace=False)) / 1000.0
    f2 = np.sort(rng.choice(1000, size=n, replace=False))[::-1] / 1000.0
    return EmpiricalFront(np.column_stack([f1, f2]))


class TestCenter:
    def test_symmetric_front(self):
        front = EmpiricalFront(np.array([[0.0, 1.0], [0.5, 0.5], [1.0, 0.0]]))
        center = estimate_center(front, [0.0, 0.0], [1.0, 1.0])
        assert center.tolist() == [0.5, 0.5]

    def test_center_lies_on_segment(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            front = staircase_front(rng, n=int(rng.integers(2, 12)))
            ideal, nadir = front.points.min(axis=0), front.points.max(axis=0)
            center = estimate_center(front, ideal, nadir)
            t = (center - ideal) / (nadir - ideal)
            assert t[0] == pytest.approx(t[1])
            assert 0.0 <= t[0] <= 1.0

    def test_anchor_invariant_under_affine_rescaling(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            front = random_front(rng, n=12)
            ideal = front.points.min(axis=0) - 0.1 * rng.random(2)
            nadir = front.points.max(axis=0) + 0.1 * rng.random(2)
            scale = rng.uniform(0.1, 10.0, 2)
            shift = rng.uniform(-5.0, 5.0, 2)
            original = center_anchor(front, ideal, nadir)
            rescaled = center_anchor(EmpiricalFront(front.points * scale + shift), ideal * scale + shift,
                                     nadir * scale + shift)
            assert original.crossing and rescaled.crossing
            assert original.index == rescaled.index

    def test_projection_when_segment_misses_staircase(self):
        front = EmpiricalFront(np.array([[2.0, 2.0]]))
        anchor = center_anchor(front, [0.0, 0.0], [1.0, 1.0])
        assert not anchor.crossing
        np.testing.assert_allclose(anchor.center, [1.0, 1.0])

    def test_degenerate_segment(self):
        with pytest.raises(GeometryError):
            estimate_center(EmpiricalFront(np.array([[0.5, 0.5]])), [1.0, 1.0], [1.0, 1.0])

    def test_empty_front(self):
        with pytest.raises(EmptySetError):
            estimate_center(EmpiricalFront(np.zeros((0, 2))), [0.0, 0.0], [1.0, 1.0])


class TestAdaptReference:
    def test_dominating_reference_moves_onto_front(self):
        front = EmpiricalFront(np.array([[0.5, 0.5]]))
        r = np.array([0.5, 0.5]) - 1e-3
        update = adapt_reference_detailed(r, front, [0.0, 0.0], [1.0, 1.0])
        assert update.case == 'dominating'
        np.testing.assert_allclose(update.point, [0.5, 0.5], atol=1e-3 + 1e-6)
        assert not dominated_by_any(front, update.point)

    def test_dominated_reference_moves_toward_ideal(self):
        front = EmpiricalFront(np.array([[0.2, 0.8], [0.5, 0.5], [0.8, 0.2]]))
        update = adapt_reference_detailed([0.9, 0.9], front, [0.0, 0.0], [1.0, 1.0])
        assert update.case == 'dominated'
        assert not dominated_by_any(front, update.point)
        assert np.all(update.point <= 0.9)

    def test_nondominated_reference(self):
        front = EmpiricalFront(np.array([[0.2, 0.8], [0.8, 0.2]]))
        update = adapt_reference_detailed([0.3, 0.3], front, [0.0, 0.0], [1.0, 1.0])
        assert update.case == 'nondominated'
        assert not dominated_by_any(front, update.point)

    def test_result_never_dominated(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            front = random_front(rng, n=int(rng.integers(1, 8)))
            ideal = front.points.min(axis=0) - rng.random(2) * 0.2
            nadir = front.points.max(axis=0) + rng.random(2) * 0.2
            r = rng.uniform(-0.5, 1.5, 2)
            assert not dominated_by_any(front, adapt_reference(r, front, ideal, nadir))

    def test_result_lies_on_the_line(self):
        """R-hat stays on the broken line Ideal-R-Nadir, repaired or not."""
        rng = np.random.default_rng(11)
        for _ in range(300):
            front = staircase_front(rng, n=int(rng.integers(2, 8)))
            ideal = front.points.min(axis=0) - rng.random(2) * 0.2
            nadir = front.points.max(axis=0) + rng.random(2) * 0.2
            r = rng.uniform(-0.3, 1.3, 2)
            point = adapt_reference(r, front, ideal, nadir)
            line = BrokenLine.through(ideal, r, nadir)
            assert closest_point_on_broken_line(line, point[None, :]).distance <= 1e-9

    def test_ideal_estimate_clipped_to_front(self):
        front = EmpiricalFront(np.array([[0.2, 0.8], [0.8, 0.2]]))
        # an Ideal estimate dominated by the front would start the line inside the dominated region
        point = adapt_reference([1.0, 1.0], front, [0.5, 0.5], [1.2, 1.2])
        assert not dominated_by_any(front, point)


class TestSimulation:
    def test_simulated_fronts_shapes(self, quadratic_models):
        models, xs = quadratic_models
        sims = simulate_fronts(models, BoxDomain.unit(1), n_sims=15, n_points=50, seed=3)
        assert len(sims) == 15
        assert sims.sim_points.shape == (53, 1)
        assert all(front.m == 2 for front in sims.fronts)

    def test_near_zero_sd_reproduces_empirical_front(self, quadratic, quadratic_models):
        models, xs = quadratic_models
        empirical = extract_front(quadratic.evaluate(xs), xs)
        sims = simulate_fronts(models, BoxDomain.unit(1), n_sims=10, n_points=0, seed=0)
        for front in sims.fronts:
            np.testing.assert_allclose(np.sort(front.points, axis=0), np.sort(empirical.points, axis=0), atol=1e-4)

    def test_seeded_simulation_is_reproducible(self, quadratic_models):
        models, _ = quadratic_models
        a = simulate_fronts(models, BoxDomain.unit(1), n_sims=5, n_points=20, seed=9)
        b = simulate_fronts(models, BoxDomain.unit(1), n_sims=5, n_points=20, seed=9)
        for fa, fb in zip(a.fronts, b.fronts):
            np.testing.assert_array_equal(fa.points, fb.points)

    def test_ideal_nadir_medians(self):
        fronts = SimulatedFronts(fronts=[EmpiricalFront(np.array([[0.0, 1.0], [1.0, 0.0]])),
                                         EmpiricalFront(np.array([[0.2, 0.9], [0.9, 0.2]])),
                                         EmpiricalFront(np.array([[0.4, 2.0], [3.0, 0.4]]))],
                                 sim_points=np.zeros((0, 1)))
        ideal, nadir = estimate_ideal_nadir(fronts)
        np.testing.assert_allclose(ideal, [0.2, 0.2])
        np.testing.assert_allclose(nadir, [1.0, 1.0])

    def test_no_fronts(self):
        with pytest.raises(EmptySetError):
            estimate_ideal_nadir(SimulatedFronts(fronts=[], sim_points=np.zeros((0, 1))))

    def test_models_interpolate_their_data(self):
        xs = np.array([[0.1], [0.6]])
        models = build_models(xs, np.array([[0.0, 1.0], [1.0, 0.0]]))
        means, _ = models.predict(xs)
        np.testing.assert_allclose(means, [[0.0, 1.0], [1.0, 0.0]], atol=1e-10)

    def test_fitted_models_end_to_end(self, quadratic):
        """Maximum-likelihood models on a Latin hypercube simulate fronts from an int seed."""
        domain = BoxDomain.unit(1)
        xs = lhs(5, domain, seed=2)
        models = fit_multi(xs, quadratic.evaluate(xs), GPConfig(n_starts=3, seed=1), domain)
        sims = simulate_fronts(models, domain, n_sims=3, n_points=10, seed=0)
        assert len(sims) == 3
        assert sims.sim_points.shape == (15, 1)
        ideal, nadir = estimate_ideal_nadir(sims)
        assert np.all(ideal <= nadir)

    def test_seed_sequence_accepted(self, quadratic_models):
        models, _ = quadratic_models
        seed = np.random.SeedSequence(4)
        a = models.simulate(np.array([[0.2], [0.7]]), 4, seed)
        b = models.simulate(np.array([[0.2], [0.7]]), 4, np.random.SeedSequence(4))
        assert a.shape == (2, 4, 2)
        np.testing.assert_array_equal(a, b)

    def test_ideal_varies_under_moderate_uncertainty(self, quadratic_models):
        models, _ = quadratic_models
        sims = simulate_fronts(models, BoxDomain.unit(1), n_sims=30, n_points=100, seed=5)
        assert np.all(sims.ideals.std(axis=0) > 0)


class TestFrontEstimates:
    def test_ordered_estimates(self, quadratic_models, quadratic):
        models, xs = quadratic_models
        sims = simulate_fronts(models, BoxDomain.unit(1), n_sims=20, n_points=50, seed=1)
        estimates = estimate_front(extract_front(quadratic.evaluate(xs), xs), sims)
        assert np.all(estimates.ideal_hat <= estimates.nadir_hat)
        assert np.all(np.isfinite(estimates.center_hat))

    def test_degenerate_center_is_nan(self):
        front = EmpiricalFront(np.array([[0.5, 0.5]]))
        sims = SimulatedFronts(fronts=[front, front], sim_points=np.zeros((0, 1)))
        estimates = estimate_front(front, sims)
        np.testing.assert_array_equal(estimates.ideal_hat, [0.5, 0.5])
        assert np.all(np.isnan(estimates.center_hat))
