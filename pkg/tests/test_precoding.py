import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from smreg.config import SimulationConfig
from smreg.iterative import hb_invert
from smreg.matrix import direct_inverse, hermitian_eig
from smreg.methods import invert
from smreg.precoding import (
    CONSTELLATION,
    count_symbol_errors,
    lmmse_precoder,
    make_channel,
    qam_demap,
    qam_map,
    simulate_ser,
    zf_precoder,
)
from smreg.spectral import condition_number, residual_model

from conftest import random_wishart


def brute_force_demap(z):
    return np.argmin(np.abs(np.asarray(z)[:, None] - CONSTELLATION[None, :]), axis=1)


def small_config(**kw):
    base = dict(M=16, N=4, channel="rayleigh", antennas_per_user=4, power_grid_db=(10.0, 30.0),
                methods=("exact",), trials=2, max_trials=4, symbols_per_trial=200)
    base.update(kw)
    return SimulationConfig(**base)


class TestQam:
    def test_unit_energy(self):
        assert np.mean(np.abs(CONSTELLATION) ** 2) == pytest.approx(1.0, abs=1e-12)

    def test_corner_magnitude(self):
        assert np.max(np.abs(CONSTELLATION)) == pytest.approx(math.sqrt(98 / 42), rel=1e-12)

    def test_distinct_grid(self):
        pts = CONSTELLATION * math.sqrt(42)
        assert len({(round(p.real), round(p.imag)) for p in pts}) == 64
        assert set(np.round(pts.real).astype(int)) == set(range(-7, 8, 2))

    def test_gray_neighbours_differ_in_one_bit(self):
        d_min = 2 / math.sqrt(42)
        for i in range(64):
            for j in range(i + 1, 64):
                if abs(abs(CONSTELLATION[i] - CONSTELLATION[j]) - d_min) < 1e-12:
                    assert bin(i ^ j).count("1") == 1

    def test_round_trip(self):
        idx = np.arange(64)
        np.testing.assert_array_equal(qam_demap(qam_map(idx)), idx)

    @pytest.mark.parametrize("a, b", [(0, 1), (0, 8), (63, 62), (27, 19)])
    def test_midpoint_tie_goes_to_lowest(self, a, b):
        pa, pb = CONSTELLATION[a], CONSTELLATION[b]
        if abs(abs(pa - pb) - 2 / math.sqrt(42)) > 1e-12:
            pytest.skip("not neighbours")
        assert qam_demap([(pa + pb) / 2])[0] == min(a, b)

    def test_centre_of_four(self):
        # equidistant from four points: the lowest of them wins
        z = 0j
        cands = np.flatnonzero(np.abs(np.abs(CONSTELLATION - z) - math.sqrt(2 / 42)) < 1e-12)
        assert qam_demap([z])[0] == cands.min()

    @settings(max_examples=300)
    @given(st.floats(-3, 3), st.floats(-3, 3))
    def test_matches_brute_force(self, re, im):
        z = complex(re, im)
        d = np.sort(np.abs(z - CONSTELLATION))
        if d[1] - d[0] < 1e-9:
            return
        assert qam_demap([z])[0] == brute_force_demap([z])[0]

    @pytest.mark.parametrize("bad", [[64], [-1], [1.5]])
    def test_out_of_range(self, bad):
        with pytest.raises(ValueError):
            qam_map(np.array(bad))


class TestZf:
    def test_identity_channel(self):
        res = zf_precoder(np.eye(4), np.eye(4))
        np.testing.assert_allclose(res.W, np.eye(4) / 2)
        assert res.method == "zf"

    def test_unit_norm(self, rng):
        h = make_channel(small_config(), 3).H
        res = zf_precoder(h, direct_inverse(h @ h.conj().T))
        assert np.linalg.norm(res.W) == pytest.approx(1.0, abs=1e-12)

    def test_exact_inverse_is_interference_free(self):
        h = make_channel(small_config(M=128, N=16, channel="elaa-los", antennas_per_user=8), 0).H
        e = h @ zf_precoder(h, direct_inverse(h @ h.conj().T)).W
        c = np.trace(e) / 16
        assert np.linalg.norm(e - c * np.eye(16)) < 1e-8 * abs(c)
        # equal post-equalization SNR across streams
        np.testing.assert_allclose(np.abs(np.diag(e)), abs(c), rtol=1e-8)

    def test_short_hb_leaves_interference(self):
        h = make_channel(small_config(M=128, N=16, channel="elaa-los", antennas_per_user=8), 0).H
        a = h @ h.conj().T
        x, _ = hb_invert(a, max_iter=10, tol=0)
        e = h @ zf_precoder(h, x).W
        c = np.trace(e) / 16
        assert np.linalg.norm(e - c * np.eye(16)) > abs(c)


class TestLmmse:
    def test_zero_ratio_is_zf(self, rng):
        h = make_channel(small_config(), 1).H
        zf = zf_precoder(h, direct_inverse(h @ h.conj().T))
        np.testing.assert_allclose(lmmse_precoder(h, 0.0).W, zf.W, atol=1e-12)

    def test_matched_filter_limit(self):
        h = make_channel(small_config(), 1).H
        mf = h.conj().T / np.linalg.norm(h)
        np.testing.assert_allclose(lmmse_precoder(h, 1e9).W, mf, atol=1e-8)
        np.testing.assert_allclose(lmmse_precoder(h, math.inf).W, mf)

    def test_regularization_improves_conditioning(self, rng):
        a = random_wishart(rng, 8)
        k = condition_number(hermitian_eig(a))
        assert condition_number(hermitian_eig(a + 0.1 * np.eye(8))) < k

    def test_iterative_inner_inverse(self):
        h = make_channel(small_config(), 2).H
        res = lmmse_precoder(h, 0.5, lambda m: invert(m, "smr", tol=1e-14))
        np.testing.assert_allclose(res.W, lmmse_precoder(h, 0.5).W, atol=1e-6)
        assert res.inverse_source == "smr" and res.iterations_used > 0

    def test_negative_ratio(self):
        with pytest.raises(ValueError):
            lmmse_precoder(np.eye(2), -1.0)


class TestSymbolErrors:
    def setup_method(self):
        r = np.random.default_rng(7)
        self.idx = r.integers(0, 64, (4, 5000))
        self.noise = (r.standard_normal((4, 5000)) + 1j * r.standard_normal((4, 5000))) / math.sqrt(2)
        self.h = make_channel(small_config(), 0).H
        self.w = zf_precoder(self.h, direct_inverse(self.h @ self.h.conj().T)).W

    def test_noise_free(self):
        assert count_symbol_errors(self.h, self.w, 1.0, self.idx, self.noise, 0.0) == 0

    def test_zero_power(self):
        errors = count_symbol_errors(self.h, self.w, 0.0, self.idx, self.noise, 1.0)
        n = self.idx.size
        p = 63 / 64
        assert abs(errors / n - p) < 4 * math.sqrt(p * (1 - p) / n)

    def test_high_power(self):
        assert count_symbol_errors(self.h, self.w, 1e8, self.idx, self.noise, 1.0) == 0


class TestSimulateSer:
    def test_noise_free(self):
        curves = simulate_ser(small_config(n0=0.0), workers=1)
        assert all(p.ser == 0 for p in curves["exact"].points)

    def test_exact_has_zero_iterations(self):
        curves = simulate_ser(small_config(), workers=1)
        assert all(p.mean_iterations == 0 for p in curves["exact"].points)

    def test_zero_power(self):
        cfg = small_config(power_grid_db=(-math.inf,), trials=5, max_trials=5)
        p = simulate_ser(cfg, workers=1)["exact"].points[0]
        q = 63 / 64
        assert abs(p.ser - q) < 4 * math.sqrt(q * (1 - q) / p.symbols)

    def test_points_sorted_and_bounded(self):
        cfg = small_config(power_grid_db=(30.0, 0.0, 15.0))
        pts = simulate_ser(cfg, workers=1)["exact"].points
        assert [p.pt_db for p in pts] == [0.0, 15.0, 30.0]
        assert all(0 <= p.ser <= 1 for p in pts)

    def test_monotone_in_power(self):
        cfg = small_config(power_grid_db=tuple(range(0, 41, 5)), trials=20, max_trials=20)
        ser = [p.ser for p in simulate_ser(cfg, workers=1)["exact"].points]
        # later points may only exceed earlier ones within Monte-Carlo noise
        for lo, hi in zip(ser, ser[1:]):
            assert hi <= lo + 3 * math.sqrt(max(lo, 1e-4) / (20 * 4 * 200))

    def test_lmmse_not_worse_than_zf(self):
        grid = (10.0, 20.0, 30.0)
        zf = simulate_ser(small_config(power_grid_db=grid, trials=20, max_trials=20), 1)["exact"]
        mm = simulate_ser(small_config(power_grid_db=grid, trials=20, max_trials=20,
                                       precoder="lmmse"), 1)["exact"]
        n = 20 * 4 * 200
        for a, b in zip(mm.points, zf.points):
            assert a.ser <= b.ser + 3 * math.sqrt(max(b.ser, 1e-4) / n)

    def test_auto_extension(self):
        cfg = small_config(power_grid_db=(0.0, 60.0), trials=2, max_trials=6, min_errors=100)
        low, high = simulate_ser(cfg, workers=1)["exact"].points
        assert low.trials == 2 and low.errors >= 100
        assert high.trials == 6 and high.errors == 0

    def test_shared_symbols_across_methods(self):
        cfg = small_config(methods=("exact", "hb@40"), power_grid_db=(20.0,))
        curves = simulate_ser(cfg, workers=1)
        assert curves["exact"].points[0].errors == curves["hb@40"].points[0].errors

    def test_worker_count_does_not_matter(self):
        cfg = small_config(methods=("exact", "smr"), power_grid_db=(15.0, 25.0), trials=3,
                           max_trials=5)
        serial = simulate_ser(cfg, workers=1)
        parallel = simulate_ser(cfg, workers=2)
        for k in serial:
            assert serial[k].to_csv() == parallel[k].to_csv()

    def test_hb_iterations_follow_residual_model(self):
        cfg = SimulationConfig(M=128, N=16, channel="elaa-los", omega="optimal",
                               methods=("hb",), power_grid_db=(40.0,), trials=1, max_trials=1,
                               min_errors=0, symbols_per_trial=10)
        for seed in range(10):
            c = cfg.with_overrides(base_seed=seed)
            measured = simulate_ser(c, workers=1)["hb"].points[0].mean_iterations
            h = make_channel(c, seed).H
            kappa = condition_number(hermitian_eig(h @ h.conj().T))
            predicted = next(t for t in range(200) if residual_model(kappa, t) <= cfg.tol)
            assert abs(measured - predicted) <= 1
