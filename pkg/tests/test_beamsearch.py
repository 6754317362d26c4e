import math

import numpy as np
import pytest

from mmwuav.array_channel import ArrayGeometry, Mpc, synth_channel
from mmwuav.beamsearch import (
    MeasurementModel,
    SearchScenario,
    exhaustive_search,
    exhaustive_slot_count,
    hierarchical_search,
    hierarchical_slot_count,
    measure,
    nearest_grid_index,
    success_rate,
    tracking_shortlist,
)
from mmwuav.codebook import build_bmw_ss, build_deact


def grid_aligned_channel(n, i_bs, j_ms, gain=1.0 + 0j):
    geom = ArrayGeometry(n)
    psi = -1 + (2 * i_bs + 1) / n
    omega = -1 + (2 * j_ms + 1) / n
    return synth_channel(geom, geom, [Mpc(gain, psi, omega)]).h_matrix


class TestMeasure:
    def test_pure_noise_variance(self, deact_32):
        word = deact_32.codeword(3, 2)
        model = MeasurementModel(0.0, rng_seed=4)
        h = np.zeros((32, 32))
        samples = np.array([measure(h, word, word, model) for _ in range(4000)])
        expect = np.sum(np.abs(word.weights) ** 2)
        assert np.mean(np.abs(samples) ** 2) == pytest.approx(expect, rel=0.1)
        assert np.mean(samples) == pytest.approx(0, abs=0.05)

    def test_noiseless_aligned_power(self, deact_32):
        h = grid_aligned_channel(32, 5, 9)
        model = MeasurementModel(2.0, noiseless=True)
        y = measure(h, deact_32.codeword(5, 5), deact_32.codeword(5, 9), model)
        assert abs(y) ** 2 == pytest.approx(2.0 * 32 * 32, rel=1e-10)

    def test_determinism(self, deact_32):
        h = grid_aligned_channel(32, 1, 2)
        word = deact_32.codeword(5, 1)
        ys = [
            measure(h, word, word, MeasurementModel(1.0, rng_seed=(3, 4)))
            for _ in range(2)
        ]
        assert ys[0] == ys[1]

    def test_dimension_mismatch(self, deact_32):
        h = np.zeros((16, 16))
        with pytest.raises(ValueError):
            measure(h, deact_32.codeword(5, 0), deact_32.codeword(5, 0),
                    MeasurementModel(1.0))

    def test_negative_snr_rejected(self):
        with pytest.raises(ValueError):
            MeasurementModel(-1.0)


class TestSlotCounts:
    @pytest.mark.parametrize(
        "n,expect_h,expect_e",
        [(16, 16, 256), (32, 20, 1024), (64, 24, 4096), (128, 28, 16384)],
    )
    def test_formulas(self, n, expect_h, expect_e):
        assert hierarchical_slot_count(n, 2) == expect_h
        assert exhaustive_slot_count(n) == expect_e

    def test_result_slot_accounting(self, deact_32):
        h = grid_aligned_channel(32, 0, 0)
        model = MeasurementModel(1.0, noiseless=True)
        assert exhaustive_search(h, deact_32, deact_32, model).slots_used == 1024
        assert hierarchical_search(h, deact_32, deact_32, model).slots_used == 20

    def test_single_pair(self):
        # N equal to the branching degree: one layer, M^2 slots, same as exhaustive
        cb2 = build_deact(2, 2)
        h = grid_aligned_channel(2, 1, 0)
        model = MeasurementModel(1.0, noiseless=True)
        res = hierarchical_search(h, cb2, cb2, model)
        assert res.slots_used == 4 == exhaustive_search(h, cb2, cb2, model).slots_used
        assert res.layer_trace == ((1, 0, 1),)


class TestSearchCorrectness:
    @pytest.mark.parametrize("builder", [build_deact, build_bmw_ss])
    @pytest.mark.parametrize("n", [4, 8])
    def test_noiseless_oracle_equivalence(self, builder, n):
        cb = builder(n, 2)
        model_args = dict(noiseless=True)
        for i in range(n):
            for j in range(n):
                h = grid_aligned_channel(n, i, j)
                r_h = hierarchical_search(h, cb, cb, MeasurementModel(1.0, **model_args))
                r_e = exhaustive_search(h, cb, cb, MeasurementModel(1.0, **model_args))
                assert (r_h.rx_index, r_h.tx_index) == (r_e.rx_index, r_e.tx_index) == (i, j)

    def test_exhaustive_off_grid_los(self, deact_32):
        geom = ArrayGeometry(32)
        rng = np.random.default_rng(5)
        for _ in range(10):
            psi, omega = rng.uniform(-1, 1, 2)
            h = synth_channel(geom, geom, [Mpc(1.0 + 0j, psi, omega)]).h_matrix
            res = exhaustive_search(h, deact_32, deact_32,
                                    MeasurementModel(1.0, noiseless=True))
            assert res.rx_index == nearest_grid_index(psi, 32)
            assert res.tx_index == nearest_grid_index(omega, 32)

    def test_layer_trace_descends(self, bmw_32):
        h = grid_aligned_channel(32, 21, 6)
        res = hierarchical_search(h, bmw_32, bmw_32, MeasurementModel(1.0, noiseless=True))
        assert [entry[0] for entry in res.layer_trace] == [1, 2, 3, 4, 5]
        for (k, tx, rx), (k2, tx2, rx2) in zip(res.layer_trace, res.layer_trace[1:]):
            assert tx2 // 2 == tx and rx2 // 2 == rx
        assert res.layer_trace[-1][1:] == (res.tx_index, res.rx_index)

    def test_mismatched_codebooks_rejected(self, deact_32):
        cb16 = build_deact(16, 2)
        h = np.zeros((32, 16))
        with pytest.raises(ValueError):
            hierarchical_search(h, deact_32, cb16, MeasurementModel(1.0))


class TestNearestGridIndex:
    def test_slice_membership(self):
        assert nearest_grid_index(-1.0, 32) == 0
        assert nearest_grid_index(0.999, 32) == 31
        assert nearest_grid_index(-1 + 1 / 32, 32) == 0
        assert nearest_grid_index(0.0, 32) == 16


class TestSuccessRate:
    def test_determinism(self):
        scenario = SearchScenario(n_antennas=8, l_paths=2)
        a = success_rate(scenario, [-10, 0], trials=40, master_seed=3)
        b = success_rate(scenario, [-10, 0], trials=40, master_seed=3)
        np.testing.assert_array_equal(a.rate, b.rate)

    def test_high_snr_beats_low_snr(self):
        scenario = SearchScenario(n_antennas=16)
        curve = success_rate(scenario, [-30, 10], trials=150, master_seed=1)
        assert curve.rate[1] > curve.rate[0] + 0.3

    def test_chance_level_at_very_low_snr(self):
        scenario = SearchScenario(n_antennas=16)
        trials = 600
        curve = success_rate(scenario, [-40], trials=trials, master_seed=2)
        chance = 1.0 / 16**2
        se = math.sqrt(chance * (1 - chance) / trials)
        assert abs(curve.rate[0] - chance) <= 3 * se + 1e-9

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            SearchScenario(n_antennas=16, codebook="nope")
        with pytest.raises(ValueError):
            success_rate(SearchScenario(n_antennas=8), [0.0], trials=0)


class TestTrackingShortlist:
    def test_interior(self, deact_32):
        cb16 = build_deact(16, 2)
        assert tracking_shortlist(cb16, 5) == [4, 5, 6]

    def test_saturation(self):
        cb16 = build_deact(16, 2)
        assert tracking_shortlist(cb16, 0) == [0, 1]
        assert tracking_shortlist(cb16, 15) == [14, 15]

    def test_out_of_range(self):
        cb16 = build_deact(16, 2)
        with pytest.raises(ValueError):
            tracking_shortlist(cb16, 16)
