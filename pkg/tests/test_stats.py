"""Multi-group test statistics.

Properties checked: identical groups give a null statistic and a p-value
of 1; the variation decomposition term F_n is nonnegative; Wilks and
Pillai statistics are invariant under a common invertible linear map of
the coordinates; degenerate inputs raise typed errors.
"""

import numpy as np
import pytest

from spdstats.errors import DegenerateGroupError, ShapeError, SingularScatterError
from spdstats.metrics import AIRM, EUCLIDEAN
from spdstats.sample import ConnectomeSample, rspdnorm
from spdstats.stats import (
    DEFAULT_TEST_CONFIG,
    frechet_anova,
    log_wilks_lambda,
    pillais_trace,
    riem_anova,
)
from spdstats.supersample import SuperSample

from helpers import random_spd_stack


def _gauss_groups(seeds, n, p, dispersion=1.0, metric=AIRM):
    groups = []
    for seed in seeds:
        sam = rspdnorm(n, np.eye(p), dispersion * np.eye(p * (p + 1) // 2), metric, seed=seed)
        sam.compute_unvec()
        sam.compute_conns()
        groups.append(sam)
    return SuperSample(groups, metric)


class TestFrechetAnova:
    def test_identical_groups_null(self):
        rng = np.random.default_rng(0)
        stack = random_spd_stack(rng, 8, 3, cond_max=16)
        g1 = ConnectomeSample.from_connectomes(stack, AIRM)
        g2 = ConnectomeSample.from_connectomes(stack.copy(), AIRM)
        res = frechet_anova(SuperSample([g1, g2]), n_permutations=49, seed=1)
        assert abs(res.f_n) < 1e-6
        assert abs(res.u_n) < 1e-10
        assert res.p_permutation > 0.9

    def test_f_n_nonnegative(self):
        ss = _gauss_groups([1, 2, 3], n=12, p=3)
        res = frechet_anova(ss, n_permutations=9, seed=0)
        assert res.f_n >= -1e-10
        assert res.u_n >= -1e-12
        assert len(res.group_variations) == 3
        assert res.p_asymptotic is None

    def test_separated_groups_significant(self):
        groups = []
        for scale, seed in ((1.0, 0), (6.0, 1)):
            sam = rspdnorm(20, scale * np.eye(3), 0.05 * np.eye(6), AIRM, seed=seed)
            sam.compute_unvec()
            sam.compute_conns()
            groups.append(sam)
        res = frechet_anova(SuperSample(groups, AIRM), n_permutations=99, seed=0)
        assert res.p_permutation <= 0.01 + 1e-12

    def test_single_permutation_p_bounds(self):
        ss = _gauss_groups([4, 5], n=6, p=2)
        res = frechet_anova(ss, n_permutations=1, seed=0)
        assert res.p_permutation in (0.5, 1.0)
        assert res.n_permutations == 1

    def test_requires_two_groups(self):
        ss = _gauss_groups([0], n=6, p=2)
        with pytest.raises(ShapeError):
            frechet_anova(ss, n_permutations=9)

    def test_requires_two_per_group(self):
        g1 = ConnectomeSample.from_connectomes(np.stack([np.eye(2)]), AIRM)
        g2 = ConnectomeSample.from_connectomes(np.stack([np.eye(2), 2 * np.eye(2)]), AIRM)
        with pytest.raises(ShapeError):
            frechet_anova(SuperSample([g1, g2]), n_permutations=9)

    def test_degenerate_group_raises(self):
        a = np.diag([2.0, 3.0])
        g1 = ConnectomeSample.from_connectomes(np.stack([a, a, a]), AIRM)
        g2 = ConnectomeSample.from_connectomes(np.stack([np.eye(2), 2 * np.eye(2), np.eye(2)]), AIRM)
        with pytest.raises(DegenerateGroupError):
            frechet_anova(SuperSample([g1, g2]), n_permutations=9)

    def test_deterministic_in_seed(self):
        ss = _gauss_groups([6, 7], n=8, p=3)
        r1 = frechet_anova(ss, n_permutations=19, seed=5)
        r2 = frechet_anova(ss, n_permutations=19, seed=5)
        assert r1.p_permutation == r2.p_permutation
        assert r1.t_n == r2.t_n


class TestScatterStatistics:
    def test_wilks_invariance_under_linear_map(self):
        # statistics built from |W|, |T| and solve(T, B) are unchanged by a
        # common invertible map y = A x of the pooled coordinates
        ss = _gauss_groups([0, 1, 2], n=10, p=2)
        ss.compute_grand_mean(DEFAULT_TEST_CONFIG)
        w, b, t = ss.compute_scatters()
        rng = np.random.default_rng(3)
        a = rng.standard_normal((3, 3)) + 3 * np.eye(3)

        def wilks(w_, t_):
            sw = np.linalg.slogdet(w_)
            st = np.linalg.slogdet(t_)
            return sw[1] - st[1]

        def pillai(b_, t_):
            return np.trace(np.linalg.solve(t_, b_))

        np.testing.assert_allclose(
            wilks(a @ w @ a.T, a @ t @ a.T), wilks(w, t), atol=1e-8
        )
        np.testing.assert_allclose(
            pillai(a @ b @ a.T, a @ t @ a.T), pillai(b, t), atol=1e-8
        )

    def test_statistics_match_scatter_formulas(self):
        ss = _gauss_groups([4, 5], n=12, p=2)
        ss.compute_grand_mean(DEFAULT_TEST_CONFIG)
        w, b, t = ss.compute_scatters()
        lw = log_wilks_lambda(ss)
        want = np.linalg.slogdet(w)[1] - np.linalg.slogdet(t)[1]
        np.testing.assert_allclose(lw, want, atol=1e-10)
        pt = pillais_trace(ss)
        np.testing.assert_allclose(pt, np.trace(np.linalg.solve(t, b)), atol=1e-10)

    def test_pillai_range(self):
        ss = _gauss_groups([6, 7, 8], n=10, p=2)
        ss.compute_grand_mean(DEFAULT_TEST_CONFIG)
        pt = pillais_trace(ss)
        assert 0.0 <= pt <= min(ss.k - 1, ss.d) + 1e-12

    def test_log_wilks_nonpositive(self):
        ss = _gauss_groups([9, 10], n=12, p=3)
        ss.compute_grand_mean(DEFAULT_TEST_CONFIG)
        assert log_wilks_lambda(ss) <= 1e-12


class TestRiemAnova:
    def test_null_p_value_moderate(self):
        ss = _gauss_groups([11, 12], n=15, p=3)
        res = riem_anova(ss, stat="log-wilks", n_iterations=99, seed=0)
        assert res.p_value > 0.05
        assert res.n_iterations == 99
        assert res.stat == "log-wilks"

    def test_alternative_rejected(self):
        groups = []
        for scale, seed in ((1.0, 0), (5.0, 1)):
            sam = rspdnorm(15, scale * np.eye(3), 0.05 * np.eye(6), AIRM, seed=seed)
            sam.compute_unvec()
            sam.compute_conns()
            groups.append(sam)
        ss = SuperSample(groups, AIRM)
        for stat in ("log-wilks", "pillai"):
            res = riem_anova(ss, stat=stat, n_iterations=99, seed=0)
            assert res.p_value <= 0.01 + 1e-12

    def test_identical_groups_p_one(self):
        rng = np.random.default_rng(13)
        stack = random_spd_stack(rng, 10, 2, cond_max=16)
        g1 = ConnectomeSample.from_connectomes(stack, AIRM)
        g2 = ConnectomeSample.from_connectomes(stack.copy(), AIRM)
        res = riem_anova(SuperSample([g1, g2]), stat="pillai", n_iterations=49, seed=0)
        assert res.p_value > 0.9

    def test_unknown_stat(self):
        ss = _gauss_groups([14, 15], n=6, p=2)
        with pytest.raises(ShapeError):
            riem_anova(ss, stat="roy", n_iterations=9)

    def test_singular_scatter_raises_with_hint(self):
        # d = 6 coordinates but only 4 observations: T is rank deficient
        ss = _gauss_groups([16, 17], n=2, p=3)
        with pytest.raises(SingularScatterError) as exc:
            riem_anova(ss, stat="log-wilks", n_iterations=9, seed=0)
        assert "pca_dim" in str(exc.value)

    def test_pca_dim_remediation(self):
        ss = _gauss_groups([16, 17], n=2, p=3)
        res = riem_anova(ss, stat="log-wilks", n_iterations=9, seed=0, pca_dim=2)
        assert np.isfinite(res.statistic)
        assert 0.0 < res.p_value <= 1.0

    def test_pca_dim_bounds(self):
        ss = _gauss_groups([18, 19], n=6, p=2)
        with pytest.raises(ShapeError):
            riem_anova(ss, n_iterations=9, pca_dim=0)
        with pytest.raises(ShapeError):
            riem_anova(ss, n_iterations=9, pca_dim=99)

    def test_deterministic_in_seed(self):
        ss = _gauss_groups([20, 21], n=8, p=2)
        r1 = riem_anova(ss, n_iterations=29, seed=4)
        r2 = riem_anova(ss, n_iterations=29, seed=4)
        assert r1.p_value == r2.p_value
