import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multicarrier.modem import constellation
from multicarrier.waveforms import (SubbandAllocation, Transceiver, WaveformConfig, WaveformKind, pcc_combine,
                                    pcc_map, rx_cp_ofdm, rx_ufmc, tx_cp_ofdm, tx_ufmc, ufmc_subcarrier_gain)

KINDS = [WaveformKind.CP_OFDM, WaveformKind.PCC_OFDM, WaveformKind.UFMC]


def _data(t, S, seed=0, frames=()):
    c = constellation(16)
    labels = np.random.default_rng(seed).integers(0, 16, size=frames + (S, t.data_per_symbol))
    return c.points[labels]


class TestConfig:
    def test_spans(self):
        assert WaveformConfig("cp_ofdm").symbol_span == 288
        assert WaveformConfig("pcc").symbol_span == 256
        assert WaveformConfig("ufmc").symbol_span == 288

    @pytest.mark.parametrize("kw", [dict(N=100), dict(N_CP=256), dict(L=32), dict(L=0), dict(pcc_cp=-1)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            WaveformConfig(**kw)

    def test_parse_aliases(self):
        assert WaveformKind.parse("PCC") is WaveformKind.PCC_OFDM
        assert WaveformKind.parse("cp-ofdm") is WaveformKind.CP_OFDM
        with pytest.raises(ValueError):
            WaveformKind.parse("fbmc")

    def test_label(self):
        assert WaveformConfig("pcc", pcc_weighting=False).label == "pcc_ofdm_noweight"


class TestAllocation:
    def test_subcarriers(self):
        a = SubbandAllocation((24, 0), 12)
        assert a.start_indices == (0, 24)
        np.testing.assert_array_equal(a.subcarriers, list(range(12)) + list(range(24, 36)))
        np.testing.assert_array_equal(a.pair_starts, list(range(0, 12, 2)) + list(range(24, 36, 2)))

    def test_overlap_rejected(self):
        with pytest.raises(ValueError):
            SubbandAllocation((0, 6), 12)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            Transceiver(WaveformConfig(), SubbandAllocation((250,)))

    def test_pcc_needs_even_pairs(self):
        with pytest.raises(ValueError):
            Transceiver(WaveformConfig("pcc"), SubbandAllocation((101,)))

    def test_overlaps(self):
        assert SubbandAllocation((100,)).overlaps(SubbandAllocation((111,)))
        assert not SubbandAllocation((100,)).overlaps(SubbandAllocation((112,)))


class TestLoopback:
    @pytest.mark.parametrize("kind", KINDS)
    def test_clean_loopback(self, kind):
        t = Transceiver(WaveformConfig(kind), SubbandAllocation((100, 140)))
        data = _data(t, 5)
        y = t.transmit(data)
        assert y.shape == (5 * t.symbol_span,)
        eq = None
        if kind is WaveformKind.UFMC:
            eq = 1.0 / ufmc_subcarrier_gain(t.cfg, t.alloc)
        np.testing.assert_allclose(t.receive(y, 5, eq), data, atol=1e-10)

    @pytest.mark.parametrize("kind", KINDS)
    def test_pruned_matches_full(self, kind):
        t = Transceiver(WaveformConfig(kind), SubbandAllocation((100,)))
        y = t.transmit(_data(t, 4, frames=(3,)))
        y = y + 0.1 * np.random.default_rng(1).standard_normal(y.shape)
        np.testing.assert_allclose(t.receive(y, 4, pruned=True), t.receive(y, 4), atol=1e-12)

    def test_cp_ofdm_full_band(self):
        cfg = WaveformConfig(N=64, N_CP=16)
        X = np.random.default_rng(2).standard_normal((3, 64)) + 0j
        np.testing.assert_allclose(rx_cp_ofdm(tx_cp_ofdm(X, cfg), cfg), X, atol=1e-12)

    def test_cyclic_prefix_copies_tail(self):
        cfg = WaveformConfig(N=16, N_CP=4, L=1)
        X = np.random.default_rng(3).standard_normal((1, 16)) + 0j
        y = tx_cp_ofdm(X, cfg)
        np.testing.assert_allclose(y[:4], y[16:20])

    def test_transmit_scale(self):
        # x[n] = sum_k X_k exp(j 2 pi k n / N)
        cfg = WaveformConfig(N=16, N_CP=0, L=1)
        X = np.zeros((1, 16), dtype=complex)
        X[0, 3] = 1.0
        np.testing.assert_allclose(tx_cp_ofdm(X, cfg), np.exp(2j * np.pi * 3 * np.arange(16) / 16), atol=1e-12)

    def test_ufmc_single_tap_equals_cp_free_ofdm(self):
        alloc = SubbandAllocation((4,), 12)
        ufmc = WaveformConfig("ufmc", N=64, L=1)
        ofdm = WaveformConfig("cp_ofdm", N=64, N_CP=0)
        X = np.zeros((2, 64), dtype=complex)
        X[:, alloc.subcarriers] = np.random.default_rng(4).standard_normal((2, 12))
        np.testing.assert_allclose(tx_ufmc(X, ufmc, alloc), tx_cp_ofdm(X, ofdm), atol=1e-12)

    def test_ufmc_gain_matches_filter_response(self):
        cfg = WaveformConfig("ufmc")
        alloc = SubbandAllocation((100,))
        X = np.zeros((1, 256), dtype=complex)
        X[0, alloc.subcarriers] = 1.0
        Y = rx_ufmc(tx_ufmc(X, cfg, alloc), cfg)
        gain = ufmc_subcarrier_gain(cfg, alloc)
        np.testing.assert_allclose(Y[0, alloc.subcarriers], gain[alloc.subcarriers], atol=1e-12)
        # the centre of the passband is the filter peak
        assert np.abs(gain[105]) > np.abs(gain[100])

    def test_symbol_count_checked(self):
        t = Transceiver(WaveformConfig(), SubbandAllocation((0,)))
        with pytest.raises(ValueError):
            t.receive(np.zeros(100), 1)


class TestPcc:
    def test_pair_mapping(self):
        alloc = SubbandAllocation((2,), 4)
        X = pcc_map([[1 + 1j, 2.0]], alloc, 8)
        np.testing.assert_allclose(X, [[0, 0, 1 + 1j, -1 - 1j, 2, -2, 0, 0]])

    def test_combine(self):
        alloc = SubbandAllocation((0,), 4)
        Y = np.array([1.0, -3.0, 2.0, 0.0])
        np.testing.assert_allclose(pcc_combine(Y, alloc), [2.0, 1.0])
        np.testing.assert_allclose(pcc_combine(Y, alloc, weighting=False), [1.0, 2.0])

    def test_wrong_data_width(self):
        with pytest.raises(ValueError):
            pcc_map(np.ones((1, 5)), SubbandAllocation((0,), 12), 64)

    @given(st.integers(0, 2 ** 31))
    @settings(max_examples=10, deadline=None)
    def test_noweight_loopback(self, seed):
        t = Transceiver(WaveformConfig("pcc", pcc_weighting=False), SubbandAllocation((40,)))
        data = _data(t, 3, seed)
        np.testing.assert_allclose(t.receive(t.transmit(data), 3), data, atol=1e-10)


class TestSamplePower:
    @pytest.mark.parametrize("kind", KINDS)
    def test_matches_empirical(self, kind):
        t = Transceiver(WaveformConfig(kind), SubbandAllocation((100,)))
        y = t.transmit(_data(t, 400, seed=5))
        assert np.mean(np.abs(y) ** 2) == pytest.approx(t.mean_sample_power(), rel=0.05)

    def test_cp_value(self):
        t = Transceiver(WaveformConfig(), SubbandAllocation((100,)))
        # each unit subcarrier has unit magnitude on every sample, prefix included
        assert t.mean_sample_power() == pytest.approx(12.0)
