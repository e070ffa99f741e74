import json

import jsonschema
import numpy as np
import pytest
from scipy.stats import norm

from safebounds import (
    AbstractionError,
    AffineGaussianSystem,
    HyperRect,
    IntervalAbstraction,
    UniformGrid,
    build_imc,
    build_imdp,
    build_mc,
    kernel_lipschitz_bound,
    suggested_partition,
)
from safebounds.kernel import transition_bounds, transition_prob

from conftest import SAFE

SCHEMA = json.load(open(__file__.rsplit("/", 2)[0] + "/docs/schemas/abstraction.schema.json"))


class TestBuildImdp:
    def test_walk_grid(self, walk_system, grid20):
        imc = build_imdp(walk_system, grid20)
        assert imc.n_states == 21 and imc.n_actions == 1
        assert imc.hi[0, 19, 20] == pytest.approx(0.5, abs=1e-6)
        assert imc.hi[0, 0, 20] == pytest.approx(0.5, abs=1e-6)

    def test_one_cell_grid_complements(self, walk_system):
        imc = build_imdp(walk_system, UniformGrid(SAFE, [1]))
        assert imc.n_states == 2
        assert imc.lo[0, 0, 0] == pytest.approx(1 - imc.hi[0, 0, 1], abs=1e-15)
        assert imc.hi[0, 0, 0] == pytest.approx(1 - imc.lo[0, 0, 1], abs=1e-15)

    def test_unsafe_row_absorbing(self, controlled_system):
        imdp = build_imdp(controlled_system, UniformGrid(SAFE, [10]))
        assert imdp.n_actions == 3
        expect = np.zeros(11)
        expect[10] = 1.0
        for a in range(3):
            np.testing.assert_array_equal(imdp.lo[a, 10], expect)
            np.testing.assert_array_equal(imdp.hi[a, 10], expect)

    def test_entries_match_kernel(self, controlled_system):
        g = UniformGrid(SAFE, [8])
        imdp = build_imdp(controlled_system, g, prune_threshold=0.0)
        for a in range(3):
            for i in range(8):
                for j in range(8):
                    iv = transition_bounds(controlled_system, a, g.cell_of(i), g.cell_of(j))
                    assert imdp.lo[a, i, j] == pytest.approx(iv.lo, abs=1e-15)
                    assert imdp.hi[a, i, j] == pytest.approx(iv.hi, abs=1e-15)

    def test_row_sum_invariant_2d(self):
        s = AffineGaussianSystem(A=[[0.9, 0.3], [-0.2, 0.8]], sigma=[0.2, 0.1])
        imdp = build_imdp(s, UniformGrid(HyperRect([-1, -1], [1, 1]), [6, 5]))
        assert np.all(imdp.lo.sum(axis=2) <= 1 + 1e-9)
        assert np.all(imdp.hi.sum(axis=2) >= 1 - 1e-9)

    def test_dimension_mismatch(self, walk_system):
        with pytest.raises(ValueError):
            build_imdp(walk_system, UniformGrid(HyperRect([0, 0], [1, 1]), [2, 2]))

    def test_check_flags_infeasible_row(self):
        lo = np.array([[0.6, 0.6], [0.0, 1.0]])
        hi = np.array([[0.7, 0.7], [0.0, 1.0]])
        with pytest.raises(AbstractionError):
            IntervalAbstraction(lo, hi).check()


class TestPruning:
    def test_pruned_mass_folded_into_unsafe(self, walk_system):
        g = UniformGrid(SAFE, [40])
        tau = 1e-6
        raw = build_imdp(walk_system, g, prune_threshold=0.0)
        pr = build_imdp(walk_system, g, prune_threshold=tau)
        pruned = raw.hi[0, :40, :40] < tau
        assert pruned.any()
        np.testing.assert_array_equal(pr.lo[0, :40, :40][pruned], 0.0)
        np.testing.assert_array_equal(pr.hi[0, :40, :40][pruned], tau)
        folded = np.where(pruned, raw.hi[0, :40, :40], 0.0).sum(axis=1)
        assert np.all(folded <= 41 * tau)
        np.testing.assert_allclose(pr.hi[0, :40, 40], np.minimum(1, raw.hi[0, :40, 40] + folded), atol=1e-15)

    def test_pruned_still_contains_mc(self, walk_system):
        g = UniformGrid(SAFE, [40])
        imc = build_imc(walk_system, g, prune_threshold=1e-4)
        mc = build_mc(walk_system, g)
        assert np.all(mc.probs >= imc.lo - 1e-9) and np.all(mc.probs <= imc.hi + 1e-9)


class TestSerialization:
    def test_round_trip(self, controlled_system, tmp_path):
        g = UniformGrid(SAFE, [12])
        imdp = build_imdp(controlled_system, g, prune_threshold=1e-9)
        d = imdp.to_dict()
        jsonschema.validate(d, SCHEMA)
        path = tmp_path / "abs.json"
        imdp.save(path)
        back = IntervalAbstraction.load(path)
        np.testing.assert_array_equal(back.lo, imdp.lo)
        np.testing.assert_array_equal(back.hi, imdp.hi)
        assert back.action_map == imdp.action_map

    def test_triples_sorted_and_sparse(self, walk_system, grid100):
        imc = build_imdp(walk_system, grid100)
        keys = [tuple(t[:3]) for t in imc.to_dict()["triples"]]
        assert keys == sorted(keys)
        kept = ~((imc.lo == 0) & (imc.hi <= imc.prune_threshold))
        # safe rows keep their unpruned entries; the unsafe row keeps only its self-loop
        assert len(keys) == kept[0, :100].sum() + 1
        assert len(keys) < 0.6 * 101 * 101


class TestBuildMc:
    def test_center_self_transition(self, walk_system, grid20):
        mc = build_mc(walk_system, grid20)
        i = grid20.locate([-0.05])
        assert mc.probs[0, i, i] == pytest.approx(norm.cdf(0.5) - norm.cdf(-0.5), abs=1e-5)

    def test_rows_sum_to_one(self, controlled_system):
        mc = build_mc(controlled_system, UniformGrid(SAFE, [30]), policy=np.zeros((1, 30), int) + 2)
        np.testing.assert_allclose(mc.probs.sum(axis=2), 1.0, atol=1e-9)
        assert mc.probs[0, 30, 30] == 1.0

    def test_rows_are_exact_kernel(self, walk_system, grid20):
        mc = build_mc(walk_system, grid20)
        c = grid20.centers()[5]
        for j in range(20):
            assert mc.probs[0, 5, j] == pytest.approx(transition_prob(walk_system, 0, c, grid20.cell_of(j)), abs=1e-15)

    def test_mc_inside_imc_2d(self):
        s = AffineGaussianSystem(A=[[0.9, 0.3], [-0.2, 0.8]], sigma=[0.2, 0.1])
        g = UniformGrid(HyperRect([-1, -1], [1, 1]), [5, 6])
        imc, mc = build_imc(s, g), build_mc(s, g)
        assert np.all(mc.probs >= imc.lo - 1e-9) and np.all(mc.probs <= imc.hi + 1e-9)


class TestPolicies:
    def test_time_varying_shares_table(self, controlled_system):
        g = UniformGrid(SAFE, [10])
        pol = np.array([[2] * 10, [0] * 10, [2] * 5 + [0] * 5])
        imc = build_imc(controlled_system, g, pol)
        assert imc.action_map == (0, 2)
        assert imc.lo.shape == (2, 11, 11)
        np.testing.assert_array_equal(imc.step_actions(1), np.zeros(10))
        lo, _ = imc.rows(imc.step_actions(2))
        full = build_imdp(controlled_system, g)
        np.testing.assert_array_equal(lo[:5], full.lo[2, :5])
        np.testing.assert_array_equal(lo[5:10], full.lo[0, 5:10])

    def test_wrong_policy_width(self, controlled_system):
        with pytest.raises(ValueError):
            build_imc(controlled_system, UniformGrid(SAFE, [10]), np.zeros((2, 9), int))


def test_refinement_nests_intervals(walk_system):
    coarse_g, fine_g = UniformGrid(SAFE, [10]), UniformGrid(SAFE, [20])
    coarse = build_imc(walk_system, coarse_g, prune_threshold=0.0)
    fine = build_imc(walk_system, fine_g, prune_threshold=0.0)
    for child in range(20):
        parent = child // 2
        # same targets at coarse level: sum over fine targets inside each coarse target
        for j in range(10):
            iv = transition_bounds(walk_system, 0, fine_g.cell_of(child), coarse_g.cell_of(j))
            assert iv.lo >= coarse.lo[0, parent, j] - 1e-9
            assert iv.hi <= coarse.hi[0, parent, j] + 1e-9
        assert fine.hi[0, child, 20] <= coarse.hi[0, parent, 10] + 1e-9
        assert fine.lo[0, child, 20] >= coarse.lo[0, parent, 10] - 1e-9


class TestLipschitz:
    def test_walk_value(self, walk_system):
        assert kernel_lipschitz_bound(walk_system) == pytest.approx(3.98942, abs=1e-5)

    def test_flat_kernel(self):
        assert kernel_lipschitz_bound(AffineGaussianSystem(A=[[1.0]], sigma=[1e9])) < 1e-8

    def test_zero_dynamics(self):
        assert kernel_lipschitz_bound(AffineGaussianSystem(A=[[0.0]], sigma=[0.1])) == 0.0

    def test_is_sound(self):
        s = AffineGaussianSystem(A=[[0.8, -0.5], [0.3, 0.6]], sigma=[0.2, 0.3])
        L = kernel_lipschitz_bound(s)
        rng = np.random.default_rng(0)
        tgt = HyperRect([-0.2, -0.1], [0.3, 0.5])
        for _ in range(500):
            x, y = rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2)
            dp = abs(transition_prob(s, 0, x, tgt) - transition_prob(s, 0, y, tgt))
            assert dp <= L * np.max(np.abs(x - y)) + 1e-12


class TestSuggestedPartition:
    def test_formula(self):
        assert suggested_partition(3.98942, 10, 0.5, 2.0, 1) == 161

    def test_large_epsilon(self):
        assert suggested_partition(3.98942, 10, 1000.0, 2.0, 1) <= 2

    def test_exponent(self):
        assert suggested_partition(1.0, 1, 1.0, 2.0, 2) == 5

    @pytest.mark.parametrize("eps", [0.0, -1.0])
    def test_nonpositive_epsilon(self, eps):
        with pytest.raises(ValueError):
            suggested_partition(1.0, 1, eps, 2.0, 1)
