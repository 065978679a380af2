import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import spearmanr

import oracles
from xlingsim.errors import ValidationError
from xlingsim.ranking import average_ranks, critical_rho, p_value, spearman, stars


class TestSpearman:
    def test_monotone(self):
        assert spearman([1, 2, 3], [10, 20, 30]).rho == 1.0

    def test_reversed(self):
        assert spearman([1, 2, 3], [3, 2, 1]).rho == -1.0

    def test_hand_case_exact(self):
        # ranks differ by d = (-2, 1, 1): 1 - 6*6/(3*8) = -0.5
        assert spearman([1, 2, 3], [3, 1, 2]).rho == -0.5

    def test_tie_handling_average_ranks(self):
        np.testing.assert_array_equal(average_ranks([1, 1, 2]), [1.5, 1.5, 3.0])
        got = spearman([1, 1, 2], [1, 2, 3]).rho
        want = oracles.naive_spearman_rho([1, 1, 2], [1, 2, 3])
        assert got == pytest.approx(want, abs=1e-15)

    def test_length_mismatch(self):
        with pytest.raises(ValidationError, match="length mismatch"):
            spearman([1, 2, 3], [1, 2])

    def test_too_small(self):
        with pytest.raises(ValidationError, match="at least 3"):
            spearman([1, 2], [1, 2])

    def test_zero_variance(self):
        with pytest.raises(ValidationError, match="undefined correlation"):
            spearman([5, 5, 5], [1, 2, 3])

    def test_significant_flag_tracks_p(self):
        r = spearman(list(range(30)), list(range(30)), method="t_approx")
        assert r.significant and r.p_value == 0.0

    @given(st.integers(0, 2**31 - 1), st.integers(5, 40))
    @settings(max_examples=40, deadline=None)
    def test_matches_scipy(self, seed, n):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal(n)
        y = rng.standard_normal(n)
        got = spearman(x, y, method="permutation").rho
        want = spearmanr(x, y).statistic
        assert got == pytest.approx(want, abs=1e-12)

    @given(st.integers(0, 2**31 - 1))
    @settings(max_examples=25, deadline=None)
    def test_invariant_under_increasing_transforms(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.uniform(-2, 2, 15)
        y = rng.uniform(-2, 2, 15)
        base = spearman(x, y).rho
        assert spearman(np.exp(x), y).rho == pytest.approx(base, abs=1e-12)
        assert spearman(x, y ** 3).rho == pytest.approx(base, abs=1e-12)

    def test_antisymmetry_without_ties(self, rng):
        x = rng.standard_normal(25)
        y = rng.standard_normal(25)
        assert spearman(x, -y).rho == pytest.approx(-spearman(x, y).rho, abs=1e-15)


class TestPValue:
    def test_detection_threshold_at_n30(self):
        # the smallest detectable effect at n=30 sits right at rho ~ 0.361
        assert p_value(0.361, 30, "t_approx") == pytest.approx(0.050, abs=0.002)

    def test_zero_rho_is_one(self):
        assert p_value(0.0, 30, "t_approx") == 1.0
        assert p_value(0.0, 12, "permutation") == pytest.approx(1.0, abs=0.01)

    def test_perfect_rho_flagged(self):
        with pytest.warns(UserWarning, match="p = 0 exactly"):
            assert p_value(1.0, 10, "t_approx") == 0.0

    def test_exact_permutation_agrees_with_t_at_n5(self):
        # |rho| = 1 on 5 points: both routes call it significant at 0.05
        exact = p_value(1.0, 5, "permutation")
        assert exact == pytest.approx(2 / 120)
        with pytest.warns(UserWarning):
            t_p = p_value(1.0, 5, "t_approx")
        assert (exact < 0.05) and (t_p < 0.05)

    def test_monotone_in_abs_rho(self):
        ps = [p_value(r, 25, "t_approx") for r in (0.1, 0.3, 0.5, 0.7, 0.9)]
        assert all(a > b for a, b in zip(ps, ps[1:]))

    def test_exact_enumeration_matches_montecarlo(self):
        # same statistic, two estimators: MC with 1e5 draws tracks exact to ~1e-2
        exact = p_value(0.6, 7, "permutation")
        mc = _mc_reference(0.6, 7, seed=7)
        assert exact == pytest.approx(mc, abs=0.01)

    def test_t_approx_needs_n4(self):
        with pytest.raises(ValidationError, match="n >= 4"):
            p_value(0.5, 3, "t_approx")

    def test_unknown_method(self):
        with pytest.raises(ValidationError, match="unknown p-value method"):
            p_value(0.5, 10, "bootstrap")


def _mc_reference(rho, n, seed):
    rng = np.random.default_rng(seed)
    base = np.arange(1, n + 1, dtype=float)
    base -= base.mean()
    ss = base @ base
    hits = 0
    draws = 100_000
    for _ in range(draws):
        perm = rng.permutation(base)
        if abs(perm @ base / ss) >= abs(rho) - 1e-12:
            hits += 1
    return (1 + hits) / (1 + draws)


class TestCriticalRho:
    def test_reproduces_n30_threshold(self):
        assert critical_rho(30, 0.05) == pytest.approx(0.361, abs=0.005)

    def test_monotone_decreasing_in_n(self):
        assert critical_rho(132, 0.05) < critical_rho(30, 0.05)

    def test_matches_bisection_over_p_value(self):
        # independent coarse-grid bisection oracle
        lo, hi = 0.0, 1.0
        for _ in range(40):
            mid = (lo + hi) / 2
            if p_value(mid, 10, "t_approx") <= 0.05:
                hi = mid
            else:
                lo = mid
        assert critical_rho(10, 0.05) == pytest.approx(hi, abs=1e-3)

    def test_boundary_p_is_alpha(self):
        r = critical_rho(30, 0.05)
        assert p_value(r, 30, "t_approx") <= 0.05
        assert p_value(r - 1e-6, 30, "t_approx") > 0.05


class TestStars:
    @pytest.mark.parametrize("p,expect", [
        (0.0005, "***"), (0.005, "**"), (0.03, "*"), (0.05, ""), (0.2, ""),
    ])
    def test_thresholds(self, p, expect):
        assert stars(p) == expect


@pytest.fixture
def rng():
    return np.random.default_rng(7)
