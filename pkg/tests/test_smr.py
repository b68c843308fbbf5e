import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from smreg.errors import DegenerateSpectrumError, DivergenceError, SingularMatrixError
from smreg.iterative import hb_invert
from smreg.matrix import Spectrum, direct_inverse, hermitian_eig, kappa
from smreg.smr import (
    RankOneUpdate,
    default_theorem2_xi,
    list_regularize,
    lowcomplexity_update,
    select_alpha,
    sm_recover,
    theorem1_update,
    theorem2_update,
)
from smreg.spectral import psi_singular_values, xi_thresholds

from conftest import hermitian_with_spectrum, random_wishart


def eig_oracle(a):
    """Singular values via numpy, non-increasing."""
    return np.linalg.svd(a, compute_uv=False)


def spec_of(rng, values):
    a = hermitian_with_spectrum(rng, values)
    return a, hermitian_eig(a)


class TestRankOneUpdate:
    def test_apply(self):
        upd = RankOneUpdate([1, 0], [2, 0], "theorem1", xi=2.0)
        np.testing.assert_allclose(upd.apply(np.diag([3.0, 1.0])), np.diag([1.0, 1.0]))

    def test_zero_b(self):
        with pytest.raises(ValueError):
            RankOneUpdate([0, 0], [1, 0], "theorem1")

    def test_lowcomplexity_needs_unit_b(self):
        with pytest.raises(ValueError, match="unit-norm"):
            RankOneUpdate([2, 0], [1, 0], "lowcomplexity")

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            RankOneUpdate([1, 0], [1, 0, 0], "theorem1")

    def test_non_finite(self):
        with pytest.raises(ValueError):
            RankOneUpdate([1, np.nan], [1, 0], "theorem1")

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            RankOneUpdate([1], [1], "woodbury")


class TestTheorem1:
    def test_example(self, rng):
        a, spec = spec_of(rng, [10.0, 3.0, 1.0])
        upd = theorem1_update(spec, 8.0)
        np.testing.assert_allclose(eig_oracle(upd.apply(a)), [3.0, 2.0, 1.0], atol=1e-12)
        assert kappa(a) == pytest.approx(10.0)
        assert kappa(upd.apply(a)) == pytest.approx(3.0)

    def test_zero_xi(self, rng):
        a, spec = spec_of(rng, [10.0, 3.0, 1.0])
        assert kappa(theorem1_update(spec, 0.0).apply(a)) == pytest.approx(10.0)

    def test_boundary(self, rng):
        a, spec = spec_of(rng, [10.0, 3.0, 1.0])
        assert kappa(theorem1_update(spec, 7.0).apply(a)) == pytest.approx(3.0)

    def test_default_xi_is_midpoint(self, rng):
        _, spec = spec_of(rng, [10.0, 3.0, 1.0])
        assert theorem1_update(spec).xi == pytest.approx(8.0)

    def test_other_values_untouched(self, rng):
        values = [9.0, 4.0, 2.5, 1.0, 0.3]
        a, spec = spec_of(rng, values)
        new = np.sort(np.linalg.eigvalsh(theorem1_update(spec, 6.0).apply(a)))[::-1]
        np.testing.assert_allclose(new, [4.0, 3.0, 2.5, 1.0, 0.3], atol=1e-12)

    def test_converse(self, rng):
        a, spec = spec_of(rng, [10.0, 3.0, 1.0])
        for xi in (0.5, 5.0, 9.5, 14.0, 30.0):
            assert kappa(theorem1_update(spec, xi).apply(a)) > 3.0


class TestTheorem2:
    def test_example(self, rng):
        a, spec = spec_of(rng, [1.0, 0.02, 0.01])
        sv = eig_oracle(theorem2_update(spec, 0.05).apply(a))
        np.testing.assert_allclose(sv, [1.0, *psi_singular_values((0.02, 0.01), 0.05)], atol=1e-12)
        assert sv[0] / sv[-1] == pytest.approx(1 / 0.0152493781, rel=1e-6)

    def test_zero_xi(self, rng):
        a, spec = spec_of(rng, [1.0, 0.02, 0.01])
        np.testing.assert_allclose(eig_oracle(theorem2_update(spec, 0.0).apply(a)), [1, 0.02, 0.01],
                                   atol=1e-14)

    def test_degenerate_pair(self):
        spec = Spectrum(np.array([2.0, 1.0, 1.0]), np.eye(3))
        with pytest.raises(DegenerateSpectrumError):
            theorem2_update(spec, 0.5)

    def test_needs_three_values(self):
        with pytest.raises(ValueError):
            theorem2_update(Spectrum(np.array([2.0, 1.0]), np.eye(2)))

    def test_leading_unchanged_and_trailing_grow(self, rng):
        for _ in range(50):
            n = int(rng.integers(3, 10))
            values = np.sort(rng.uniform(0.01, 5.0, n))[::-1]
            a, spec = spec_of(rng, values)
            t1, _ = xi_thresholds(spec.values[-2:])
            xi = t1 * rng.uniform(1.01, 3.0)
            sv = eig_oracle(theorem2_update(spec, xi).apply(a))
            s0, s1 = psi_singular_values(spec.values[-2:], xi)
            expected = np.sort(np.concatenate([spec.values[:-2], [s0, s1]]))[::-1]
            np.testing.assert_allclose(sv, expected, atol=1e-10)
            assert s0 > spec.values[-2] and s1 > spec.values[-1]

    def test_cap_keeps_sigma0_below_lambda0(self, rng):
        for _ in range(100):
            values = np.sort(rng.uniform(0.01, 1.0, 6))[::-1]
            xi = rng.uniform(0, values[0] / 2)
            s0, _ = psi_singular_values(values[-2:], xi)
            assert s0 < values[0] + 1e-12

    def test_default_xi(self, rng):
        _, spec = spec_of(rng, [10.0, 0.2, 0.1])
        t1, _ = xi_thresholds((0.2, 0.1))
        assert default_theorem2_xi(spec) == pytest.approx(1.5 * t1)

    def test_default_xi_capped(self, rng):
        _, spec = spec_of(rng, [0.5, 0.45, 0.4])
        assert default_theorem2_xi(spec) == pytest.approx(0.99 * 0.25)

    def test_small_xi_barely_moves_leading_values(self, rng):
        values = np.array([10.0, 6.0, 3.0, 1.0, 0.5, 0.2])
        a, spec = spec_of(rng, values)
        xi = values[0] / 200
        new = np.sort(np.linalg.eigvalsh(theorem2_update(spec, xi).apply(a)))[::-1]
        assert np.all(np.abs(new[:4] - values[:4]) < xi)


class TestLowComplexity:
    def test_unit_b_and_c(self, rng):
        a = random_wishart(rng, 6)
        upd = lowcomplexity_update(a, 0.1, column=2)
        assert np.linalg.norm(upd.b) == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(upd.c, (a - 0.1 * np.eye(6)) @ upd.b, atol=1e-14)
        assert upd.source_column == 2 and upd.alpha == 0.1

    def test_scaled_identity(self):
        with pytest.raises(SingularMatrixError, match="another column"):
            lowcomplexity_update(0.5 * np.eye(3), 0.5)

    def test_bad_column(self):
        with pytest.raises(IndexError):
            lowcomplexity_update(np.eye(3), 0.1, column=3)

    def test_rank_one_dominant(self, rng):
        # alpha near the floor eigenvalue 0.05, far below ||A||_F^2 / N = 50
        n = 8
        for _ in range(50):
            u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            u /= np.linalg.norm(u)
            a = 20.0 * np.outer(u, u.conj()) + 0.05 * np.eye(n)
            upd = lowcomplexity_update(a, 0.04)
            assert abs(np.vdot(upd.b, u)) > 0.99
            assert kappa(upd.apply(a)) < kappa(a) / 10

    def test_rayleigh_majority_improves(self, rng):
        better = 0
        for _ in range(100):
            h = (rng.standard_normal((64, 64)) + 1j * rng.standard_normal((64, 64))) / np.sqrt(2)
            h *= np.sqrt(64 / np.sum(np.abs(h) ** 2))
            a = h @ h.conj().T
            col = int(rng.integers(64))
            sv_a = eig_oracle(a)
            sv_b = eig_oracle(lowcomplexity_update(a, 1.0, col).apply(a))
            better += sv_b[0] / sv_b[-1] < sv_a[0] / sv_a[-1]
        assert better > 50


class TestSelectAlpha:
    def test_rayleigh(self):
        assert select_alpha(np.eye(4), "symmetric-rayleigh") == 1.0

    def test_los(self, rng):
        a = random_wishart(rng, 8)
        alpha = select_alpha(a, "los-dominated")
        assert alpha == 0.1
        assert alpha < np.sum(np.abs(a) ** 2) / 8

    def test_unknown(self):
        with pytest.raises(ValueError):
            select_alpha(np.eye(2), "urban")


class TestSmRecover:
    def test_hand_example(self):
        upd = RankOneUpdate([1, 0], [1, 0], "theorem1", xi=1.0)
        np.testing.assert_allclose(sm_recover(np.diag([0.5, 1.0]), upd), np.diag([1 / 3, 1.0]))

    def test_zero_c(self, rng):
        x = random_wishart(rng, 4)
        upd = RankOneUpdate(np.ones(4), np.zeros(4), "theorem1")
        np.testing.assert_array_equal(sm_recover(x, upd), x)

    def test_singular(self):
        upd = RankOneUpdate([1, 0], [-1, 0], "theorem1")
        with pytest.raises(SingularMatrixError):
            sm_recover(np.eye(2), upd)

    def test_random_theorem1(self, rng):
        a, spec = spec_of(rng, np.sort(rng.uniform(0.1, 5, 8))[::-1])
        upd = theorem1_update(spec)
        x, trace = hb_invert(upd.apply(a), tol=1e-10)
        assert trace.converged
        assert np.linalg.norm(a @ sm_recover(x, upd) - np.eye(8)) < 1e-6

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 12), st.integers(0, 2**32 - 1), st.sampled_from([0.1, 1.0]))
    def test_round_trip_bound(self, n, seed, alpha):
        r = np.random.default_rng(seed)
        a = random_wishart(r, n)
        upd = lowcomplexity_update(a, alpha, int(r.integers(n)))
        tol = 1e-10
        x, trace = hb_invert(upd.apply(a), tol=tol)
        if not trace.converged:
            return
        err = np.linalg.norm(a @ sm_recover(x, upd) - np.eye(n))
        assert err <= 10 * np.sqrt(tol) * n

    def test_matches_direct(self, rng):
        a = random_wishart(rng, 10)
        upd = lowcomplexity_update(a, 1.0)
        x = direct_inverse(upd.apply(a))
        np.testing.assert_allclose(sm_recover(x, upd), direct_inverse(a), atol=1e-10)


class TestListRegularize:
    def test_single_candidate(self):
        a = np.array([[2.0 + 0j]])
        res = list_regularize(a, 0.5)
        assert res.winner == 0 and len(res.traces) == 1
        np.testing.assert_allclose(res.inverse, [[0.5]])

    def test_single_candidate_matches_plain_path(self):
        a = np.array([[2.0 + 0j]])
        upd = lowcomplexity_update(a, 0.5)
        x, _ = hb_invert(upd.apply(a))
        np.testing.assert_allclose(list_regularize(a, 0.5).inverse, sm_recover(x, upd))

    def test_winner_has_smallest_residual(self, rng):
        a = random_wishart(rng, 12)
        res = list_regularize(a, 1.0)
        finals = [t.residuals[-1] for t in res.traces]
        assert finals[res.winner] == min(finals)
        assert finals.index(min(finals)) == res.winner
        assert np.linalg.norm(a @ res.inverse - np.eye(12)) < 1e-4

    def test_candidates_match_independent_runs(self, rng):
        a = random_wishart(rng, 6)
        res = list_regularize(a, 1.0, iter_budget=5, tol=0.0)
        for col in (0, 3, 5):
            upd = lowcomplexity_update(a, 1.0, col)
            _, trace = hb_invert(upd.apply(a), max_iter=5, tol=0.0)
            np.testing.assert_allclose(res.traces[col].residuals, trace.residuals, rtol=1e-9)

    def test_lowest_index_on_ties(self):
        # every column of 2I gives the same candidate up to a permutation
        res = list_regularize(2.0 * np.eye(4) + 0j, 1.0, iter_budget=3, tol=0.0)
        assert res.winner == 0

    def test_fixed_budget(self, rng):
        res = list_regularize(random_wishart(rng, 8), 1.0, iter_budget=4, tol=0.0)
        assert all(t.iterations == 4 for t in res.traces)

    def test_winner_never_slower_than_column_zero(self, rng):
        wins = 0
        for _ in range(100):
            h = (rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))) / np.sqrt(2)
            h *= np.sqrt(16 / np.sum(np.abs(h) ** 2))
            a = h @ h.conj().T
            res = list_regularize(a, 1.0)
            _, col0 = hb_invert(lowcomplexity_update(a, 1.0, 0).apply(a))
            wins += res.traces[res.winner].iterations <= col0.iterations
        assert wins >= 90

    def test_all_diverge(self, monkeypatch):
        import smreg.smr as smr_mod
        monkeypatch.setattr(smr_mod, "_batched_gershgorin", lambda mats: np.full(len(mats), 50.0))
        with pytest.raises(DivergenceError, match="all 3"):
            list_regularize(np.diag([3.0, 2.0, 1.0]) + 0j, 0.1)
