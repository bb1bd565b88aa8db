import math

import numpy as np
import pytest
from scipy import stats

from convexmc import densities, geometry, samplers, spectral
from convexmc.errors import DomainViolation, NoAcceptedPoints, PointOutside


class ForcedRng:
    """Stub generator returning a fixed uniform value."""

    def __init__(self, value):
        self.value = value

    def random(self):
        return self.value


class ExplodingKernel:
    descriptor = {"sampler": "exploding"}

    def step(self, x, rng):
        raise AssertionError("inner kernel must not be invoked")


def grid_box_integral(fn, half_width, dim, points_per_axis=512):
    """Midpoint-rule average of fn over the box, used as a local oracle."""
    axis = (np.arange(points_per_axis) + 0.5) / points_per_axis
    axis = -half_width + 2 * half_width * axis
    grids = np.meshgrid(*([axis] * dim), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    return float(np.mean(fn(pts)))


class TestHitAndRun:
    def test_d1_single_step_uniform(self):
        body = geometry.box(1.0, dim=1)
        rng = np.random.default_rng(101)
        start = np.array([0.3])
        samples = np.array(
            [samplers.hit_and_run_step(body, start, rng)[0] for _ in range(5_000)]
        )
        result = stats.kstest(samples, stats.uniform(loc=-1, scale=2).cdf)
        assert result.pvalue > 0.01

    def test_d2_ball_preserves_radial_law(self):
        body = geometry.ball(1.0, dim=2)
        rng = np.random.default_rng(103)
        n = 20_000
        radii = np.empty(n)
        for i in range(n):
            x = geometry.uniform_in_ball(2, 1.0, rng)
            y = samplers.hit_and_run_step(body, x, rng)
            radii[i] = np.linalg.norm(y)
        # equal-probability radial bins for the uniform disk: edges sqrt(k/K)
        edges = np.sqrt(np.arange(21) / 20)
        counts, _ = np.histogram(radii, bins=edges)
        assert stats.chisquare(counts).pvalue > 0.01

    def test_closure_on_box(self):
        body = geometry.box(1.0, dim=3)
        rng = np.random.default_rng(107)
        x = np.zeros(3)
        for _ in range(200_000):
            x = samplers.hit_and_run_step(body, x, rng)
            assert np.max(np.abs(x)) <= 1.0

    def test_start_outside(self):
        body = geometry.ball(1.0, dim=2)
        with pytest.raises(PointOutside):
            samplers.hit_and_run_step(body, np.array([1.5, 0.0]), np.random.default_rng(1))


class TestMHStep:
    def test_constant_density_always_accepts(self):
        body = geometry.box(1.0, dim=2)
        rho = densities.constant_density(2)
        pair = samplers.symmetric_pair(lambda x, rng: x + 0.1 * rng.standard_normal(2))
        rng = np.random.default_rng(109)
        x = np.zeros(2)
        for _ in range(200):
            decision, x = samplers.mh_step(pair, rho, x, rng)
            assert decision.alpha == 1.0
            assert decision.accepted

    def test_zero_forward_density_accepts(self):
        rho = densities.constant_density(1)
        pair = samplers.ProposalPair(
            sample=lambda x, rng: x, log_density=lambda x, y: -math.inf
        )
        assert samplers.acceptance_probability(pair, rho, np.zeros(1), np.ones(1)) == 1.0

    def test_gaussian_ratio(self):
        rho = densities.gaussian_density(0.5, dim=2)
        pair = samplers.symmetric_pair(lambda x, rng: x)
        alpha = samplers.acceptance_probability(
            pair, rho, np.zeros(2), np.array([1.0, 0.0])
        )
        assert alpha == pytest.approx(math.exp(-0.5))

    def test_uphill_moves_always_accepted(self):
        rho = densities.gaussian_density(1.0, dim=2)
        pair = samplers.symmetric_pair(lambda x, rng: x)
        alpha = samplers.acceptance_probability(
            pair, rho, np.array([1.0, 0.0]), np.zeros(2)
        )
        assert alpha == 1.0

    def test_domain_violation(self):
        rho = densities.constant_density(1)
        pair = samplers.ProposalPair(
            sample=lambda x, rng: x + 1.0,
            log_density=lambda x, y: -math.inf if y[0] > 0.5 else 0.0,
        )
        with pytest.raises(DomainViolation):
            samplers.mh_step(pair, rho, np.zeros(1), np.random.default_rng(2))

    def test_alpha_scale_invariant_bit_for_bit(self):
        rho = densities.gaussian_density(0.8, dim=2)
        scaled = densities.rescale_to_bounded(rho, 5.0, sup_norm=1.0)
        pair = samplers.symmetric_pair(lambda x, rng: x)
        rng = np.random.default_rng(113)
        for _ in range(100):
            x = geometry.uniform_in_ball(2, 1.0, rng)
            y = geometry.uniform_in_ball(2, 1.0, rng)
            a1 = samplers.acceptance_probability(pair, rho, x, y)
            a2 = samplers.acceptance_probability(pair, scaled, x, y)
            assert a1 == a2


class TestIndependentMH:
    def test_constant_density_is_iid_uniform(self):
        body = geometry.box(1.0, dim=2)
        rho = densities.constant_density(2)
        rng = np.random.default_rng(127)
        x = np.zeros(2)
        moved = 0
        xs = []
        for _ in range(4_000):
            y = samplers.independent_mh_step(body, rho, x, rng)
            moved += not np.array_equal(y, x)
            x = y
            xs.append(x[0])
        assert moved == 4_000
        sigma = (1 / math.sqrt(3)) / math.sqrt(4_000)
        assert abs(np.mean(xs)) <= 3 * sigma

    def test_acceptance_rate_from_mode(self):
        body = geometry.box(1.0, dim=2)
        rho = densities.gaussian_density(0.5, dim=2)
        rng = np.random.default_rng(131)
        mode = np.zeros(2)
        n = 20_000
        accepted = sum(
            not np.array_equal(samplers.independent_mh_step(body, rho, mode, rng), mode)
            for _ in range(n)
        )
        expected = grid_box_integral(
            lambda pts: np.exp(-0.5 * np.sum(pts**2, axis=1)), 1.0, 2
        )
        sigma = math.sqrt(expected * (1 - expected) / n)
        assert abs(accepted / n - expected) <= 3 * sigma

    def test_long_run_second_moment(self):
        body = geometry.box(1.0, dim=2)
        rho = densities.gaussian_density(0.5, dim=2)
        reference = grid_box_integral(
            lambda pts: np.sum(pts**2, axis=1) * np.exp(-0.5 * np.sum(pts**2, axis=1)),
            1.0,
            2,
        ) / grid_box_integral(
            lambda pts: np.exp(-0.5 * np.sum(pts**2, axis=1)), 1.0, 2
        )
        rng = np.random.default_rng(137)
        chain_means = []
        for _ in range(16):
            x, _ = geometry.uniform_in_body(body, rng)
            vals = []
            for step in range(2_550):
                x = samplers.independent_mh_step(body, rho, x, rng)
                if step >= 50:
                    vals.append(float(x @ x))
            chain_means.append(np.mean(vals))
        chain_means = np.array(chain_means)
        stderr = chain_means.std(ddof=1) / math.sqrt(len(chain_means))
        assert abs(chain_means.mean() - reference) <= 3 * stderr


class TestBallWalk:
    def test_delta_rule(self):
        assert samplers.ball_walk_delta(1.0, 3) == 0.5

    def test_stay_rate_and_uniform_law(self):
        # delta=2 from the origin of B_1: half the proposals leave, the rest
        # are accepted uniformly on [-1, 1]
        rho = densities.constant_density(1)
        rng = np.random.default_rng(139)
        origin = np.zeros(1)
        n = 10_000
        outputs = np.array(
            [samplers.ball_walk_mh_step(rho, 2.0, origin, rng)[0] for _ in range(n)]
        )
        stays = np.sum(outputs == 0.0)
        assert abs(stays / n - 0.5) <= 3 * math.sqrt(0.25 / n)
        moved = outputs[outputs != 0.0]
        assert stats.kstest(moved, stats.uniform(loc=-1, scale=2).cdf).pvalue > 0.01

    def test_rejected_boundary_mass_keeps_state(self):
        rho = densities.constant_density(1)
        x = np.array([0.95])
        rng = np.random.default_rng(149)
        seen_stay = False
        for _ in range(200):
            y = samplers.ball_walk_mh_step(rho, 0.5, x, rng)
            assert abs(y[0]) <= 1.0
            seen_stay = seen_stay or y[0] == 0.95
        assert seen_stay

    def test_closure(self):
        rho = densities.gaussian_density(1.0, dim=2)
        rng = np.random.default_rng(151)
        x = np.zeros(2)
        for _ in range(200_000):
            x = samplers.ball_walk_mh_step(rho, 0.5, x, rng)
            assert float(x @ x) <= 1.0

    def test_state_outside_raises(self):
        rho = densities.constant_density(2)
        with pytest.raises(PointOutside):
            samplers.ball_walk_mh_step(
                rho, 0.5, np.array([1.2, 0.0]), np.random.default_rng(3)
            )


class TestLazy:
    def test_forced_stay_skips_inner(self):
        x = np.array([0.25, -0.5])
        out = samplers.lazy_step(ExplodingKernel(), x, ForcedRng(0.2))
        assert out is x

    def test_stay_rate(self):
        body = geometry.ball(1.0, dim=2)
        inner = samplers.HitAndRunKernel(body)
        lazy = samplers.LazyKernel(inner)
        rng = np.random.default_rng(157)
        x = np.zeros(2)
        n = 20_000
        stays = 0
        for _ in range(n):
            y = lazy.step(x, rng)
            stays += y is x or np.array_equal(y, x)
            x = y
        assert abs(stays / n - 0.5) <= 3 * math.sqrt(0.25 / n)

    def test_double_lazy_stay_rate(self):
        body = geometry.ball(1.0, dim=2)
        double = samplers.LazyKernel(samplers.LazyKernel(samplers.HitAndRunKernel(body)))
        rng = np.random.default_rng(163)
        x = np.zeros(2)
        n = 20_000
        stays = 0
        for _ in range(n):
            y = double.step(x, rng)
            stays += y is x or np.array_equal(y, x)
            x = y
        assert abs(stays / n - 0.75) <= 3 * math.sqrt(0.1875 / n)


class TestRejectionBaseline:
    def test_ball_in_ball_acceptance(self):
        unit = geometry.ball(1.0, dim=2)
        body = geometry.oracle_body(unit.membership, dim=2, outer_radius=2.0)
        rng = np.random.default_rng(167)
        result = samplers.rejection_baseline(body, lambda x: x[0], 4_000, rng)
        sigma = math.sqrt(0.25 * 0.75 / 4_000)
        assert abs(result.acceptance_rate - 0.25) <= 3 * sigma

    def test_full_ball_accepts_everything(self):
        body = geometry.ball(2.0, dim=2)
        rng = np.random.default_rng(173)
        result = samplers.rejection_baseline(body, lambda x: 1.0, 500, rng)
        assert result.acceptance_rate == 1.0
        assert result.estimate == 1.0

    def test_no_accepted_points(self):
        body = geometry.oracle_body(lambda x: False, dim=2, outer_radius=2.0)
        with pytest.raises(NoAcceptedPoints):
            samplers.rejection_baseline(body, lambda x: 1.0, 100, np.random.default_rng(4))


class TestDeterminism:
    @pytest.mark.parametrize("seed", [0, 42])
    def test_identical_seed_identical_trajectory(self, seed):
        body = geometry.box(1.0, dim=2)
        rho = densities.gaussian_density(0.5, dim=2)
        kernel = samplers.IndependentMHKernel(body, rho)

        def trajectory():
            rng = np.random.default_rng(seed)
            x = np.zeros(2)
            return [kernel.step(x, rng).copy() for _ in range(200)]

        first, second = trajectory(), trajectory()
        for a, b in zip(first, second):
            np.testing.assert_array_equal(a, b)

    def test_trajectory_scale_invariant(self):
        body = geometry.box(1.0, dim=2)
        rho = densities.gaussian_density(0.5, dim=2)
        scaled = densities.rescale_to_bounded(rho, math.e, sup_norm=1.0)

        def run(density):
            rng = np.random.default_rng(14)
            x = np.zeros(2)
            out = []
            for _ in range(300):
                x = samplers.independent_mh_step(body, density, x, rng)
                out.append(x.copy())
            return np.array(out)

        np.testing.assert_array_equal(run(rho), run(scaled))


class TestDetailedBalanceSmoke:
    """Bin one transition from stationarity into a 20-cell grid; reversible
    kernels give a symmetric expected flow matrix."""

    @staticmethod
    def assert_flow_symmetric(flows):
        for i in range(flows.shape[0]):
            for j in range(i + 1, flows.shape[1]):
                diff = abs(flows[i, j] - flows[j, i])
                noise = math.sqrt(flows[i, j] + flows[j, i] + 1.0)
                assert diff <= 4.0 * noise, (i, j, flows[i, j], flows[j, i])

    def test_hit_and_run_d1(self):
        body = geometry.box(1.0, dim=1)
        rng = np.random.default_rng(179)
        n = 200_000
        starts = rng.uniform(-1.0, 1.0, size=n)
        flows = np.zeros((20, 20))
        for s in starts:
            y = samplers.hit_and_run_step(body, np.array([s]), rng)[0]
            i = min(int((s + 1) * 10), 19)
            j = min(int((y + 1) * 10), 19)
            flows[i, j] += 1
        self.assert_flow_symmetric(flows)

    def test_ball_walk_gaussian_d1(self):
        rho = densities.gaussian_density(1.0, dim=1)
        rng = np.random.default_rng(181)
        n = 200_000
        # stationarity-distributed starts by rejection from the uniform law
        starts = []
        while len(starts) < n:
            cand = rng.uniform(-1.0, 1.0, size=4 * (n - len(starts)))
            keep = rng.random(cand.size) < np.exp(-cand * cand)
            starts.extend(cand[keep].tolist())
        flows = np.zeros((20, 20))
        for s in starts[:n]:
            y = samplers.ball_walk_mh_step(rho, 0.7, np.array([s]), rng)[0]
            i = min(int((s + 1) * 10), 19)
            j = min(int((y + 1) * 10), 19)
            flows[i, j] += 1
        self.assert_flow_symmetric(flows)


class TestFiniteChainKernel:
    def test_empirical_transition_frequencies(self):
        chain = spectral.two_state_chain(0.3, 0.3)
        kernel = samplers.FiniteChainKernel(chain)
        rng = np.random.default_rng(191)
        n = 20_000
        moves = sum(kernel.step(0, rng) == 1 for _ in range(n))
        assert abs(moves / n - 0.3) <= 3 * math.sqrt(0.3 * 0.7 / n)

    def test_stationary_init(self):
        chain = spectral.build_chain([[0.5, 0.5], [0.25, 0.75]])
        init = samplers.FiniteChainKernel(chain).stationary_init()
        rng = np.random.default_rng(193)
        n = 30_000
        ones = sum(init(rng) == 1 for _ in range(n))
        assert abs(ones / n - 2 / 3) <= 3 * math.sqrt((2 / 9) / n)
