import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.signal import freqz

from multicarrier.numerics import (SeededRng, SizingError, as_complex_vector, chebyshev_filter, dft,
                                   dft_bins, direct_dft, linear_convolve, synthesize, welch_psd)
from multicarrier.numerics.filters import ProtoFilter


def _random_complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


class TestDft:
    def test_impulse_gives_constant(self):
        np.testing.assert_allclose(dft([1, 0, 0, 0]), [1, 1, 1, 1])

    def test_constant_gives_scaled_impulse(self):
        np.testing.assert_allclose(dft(np.ones(4)), [4, 0, 0, 0], atol=1e-15)

    @pytest.mark.parametrize("n", [4, 16, 64, 256])
    def test_matches_direct_oracle(self, n):
        x = _random_complex(np.random.default_rng(n), n)
        assert np.max(np.abs(dft(x) - direct_dft(x))) < 1e-10
        assert np.max(np.abs(dft(x, inverse=True) - direct_dft(x, inverse=True))) < 1e-10

    def test_round_trip_256(self):
        x = _random_complex(np.random.default_rng(0), 256)
        assert np.max(np.abs(dft(dft(x), inverse=True) - x)) < 1e-12

    def test_batched_along_last_axis(self):
        x = _random_complex(np.random.default_rng(1), (3, 5, 32))
        expected = np.stack([[direct_dft(row) for row in block] for block in x])
        np.testing.assert_allclose(dft(x), expected, atol=1e-10)

    def test_length_one(self):
        np.testing.assert_allclose(dft([2 + 1j]), [2 + 1j])

    @pytest.mark.parametrize("n", [0, 3, 12, 100])
    def test_rejects_non_power_of_two(self, n):
        with pytest.raises(SizingError):
            dft(np.ones(n))

    def test_oracle_matches_numpy(self):
        x = _random_complex(np.random.default_rng(2), 16)
        np.testing.assert_allclose(direct_dft(x), np.fft.fft(x), atol=1e-12)

    @given(st.integers(min_value=0, max_value=8), st.integers(min_value=0, max_value=2 ** 31))
    @settings(max_examples=25, deadline=None)
    def test_parseval(self, log_n, seed):
        n = 2 ** log_n
        x = _random_complex(np.random.default_rng(seed), n)
        X = dft(x)
        assert np.sum(np.abs(X) ** 2) / n == pytest.approx(np.sum(np.abs(x) ** 2), rel=1e-10)


class TestPrunedTransforms:
    def test_bins_match_full_transform(self):
        x = _random_complex(np.random.default_rng(3), (4, 64))
        bins = [0, 5, 17, 63]
        np.testing.assert_allclose(dft_bins(x, bins), dft(x)[..., bins], atol=1e-10)

    def test_zero_padded_bins(self):
        x = _random_complex(np.random.default_rng(4), 40)
        padded = np.concatenate([x, np.zeros(24)])
        np.testing.assert_allclose(dft_bins(x, [2, 10, 30], 64), dft(padded)[[2, 10, 30]], atol=1e-10)

    def test_n_fft_shorter_than_input_rejected(self):
        with pytest.raises(SizingError):
            dft_bins(np.ones(8), [0], 4)

    def test_synthesize_matches_inverse(self):
        rng = np.random.default_rng(5)
        X = np.zeros((2, 32), dtype=complex)
        bins = [3, 4, 9]
        X[:, bins] = _random_complex(rng, (2, 3))
        np.testing.assert_allclose(synthesize(X[:, bins], bins, 32), 32 * dft(X, inverse=True), atol=1e-12)


class TestLinearConvolve:
    def test_identity_filter(self):
        np.testing.assert_allclose(linear_convolve([1, 2], ProtoFilter([1.0])), [1, 2])

    def test_impulse_reproduces_taps(self):
        h = np.array([0.5, 0.5, 0.0])
        np.testing.assert_allclose(linear_convolve([1, 0, 0], h), [0.5, 0.5, 0, 0, 0])

    def test_output_length(self):
        y = linear_convolve(np.ones(256), chebyshev_filter(33, 40.0))
        assert y.shape == (288,)

    @given(st.integers(1, 40), st.integers(0, 10), st.integers(0, 2 ** 31))
    @settings(max_examples=30, deadline=None)
    def test_matches_direct_summation(self, n, half, seed):
        rng = np.random.default_rng(seed)
        x = _random_complex(rng, n)
        h = _random_complex(rng, 2 * half + 1)
        y = linear_convolve(x, h)
        direct = np.zeros(n + h.size - 1, dtype=complex)
        for i in range(n):
            for j in range(h.size):
                direct[i + j] += x[i] * h[j]
        assert np.max(np.abs(y - direct)) < 1e-12

    def test_batched(self):
        x = _random_complex(np.random.default_rng(6), (3, 10))
        h = chebyshev_filter(5, 40.0).taps
        y = linear_convolve(x, h)
        for row, out in zip(x, y):
            np.testing.assert_allclose(out, np.convolve(row, h), atol=1e-12)


class TestChebyshevFilter:
    def test_single_tap(self):
        np.testing.assert_allclose(chebyshev_filter(1, 40.0).taps, [1.0])

    def test_unit_energy_and_symmetry(self):
        f = chebyshev_filter(33, 40.0)
        assert f.L == 33
        assert np.sum(np.abs(f.taps) ** 2) == pytest.approx(1.0)
        np.testing.assert_allclose(f.taps, f.taps[::-1])
        assert np.allclose(np.imag(f.taps), 0)

    def test_sidelobes_below_attenuation(self):
        f = chebyshev_filter(33, 40.0)
        w, H = freqz(f.taps.real, worN=4096, whole=True)
        mag = 20 * np.log10(np.abs(H) / np.abs(H).max())
        # mainlobe ends at the first null from DC
        half = mag[: 2048]
        first_null = np.argmax(np.diff(half) > 0)
        assert mag[first_null:4096 - first_null].max() <= -40.0 + 1e-6

    def test_modulation_property(self):
        base = chebyshev_filter(33, 40.0).taps
        mod = chebyshev_filter(33, 40.0, 0.25).taps
        np.testing.assert_allclose(mod, base * np.exp(2j * np.pi * 0.25 * np.arange(33)), atol=1e-14)

    def test_response_matches_freqz(self):
        f = chebyshev_filter(9, 30.0, 0.1)
        freqs = np.array([0.0, 0.1, 0.37])
        _, H = freqz(f.taps, worN=2 * np.pi * freqs)
        np.testing.assert_allclose(f.response(freqs), H, atol=1e-12)

    @pytest.mark.parametrize("L", [0, 2, 32, -1])
    def test_rejects_bad_length(self, L):
        with pytest.raises(ValueError):
            chebyshev_filter(L, 40.0)

    def test_proto_filter_rejects_even_length(self):
        with pytest.raises(ValueError):
            ProtoFilter([1.0, 1.0])


class TestWelchPsd:
    def test_line_spectrum_peak(self):
        x = np.exp(2j * np.pi * 8 * np.arange(4096) / 64)
        assert np.argmax(welch_psd(x, 64, 32)) == 8

    def test_parseval_normalization(self):
        x = _random_complex(np.random.default_rng(7), 5000)
        psd = welch_psd(x, 256, 128)
        assert np.sum(psd) / 256 == pytest.approx(np.mean(np.abs(x) ** 2), rel=1e-6)

    def test_white_noise_flat(self):
        x = SeededRng(8).complex_normal(64 * 2001)
        psd = welch_psd(x, 64, 32)
        db = 10 * np.log10(psd / psd.mean())
        assert np.max(np.abs(db)) < 1.5

    def test_too_short_rejected(self):
        with pytest.raises(ValueError):
            welch_psd(np.ones(10), 64, 32)

    @pytest.mark.parametrize("seg,overlap", [(48, 0), (64, 64), (64, -1)])
    def test_bad_parameters_rejected(self, seg, overlap):
        with pytest.raises(ValueError):
            welch_psd(np.ones(1000), seg, overlap)


class TestSeededRng:
    def test_same_key_same_draws(self):
        a = SeededRng(5, 3).complex_normal(100)
        b = SeededRng(5, 3).complex_normal(100)
        np.testing.assert_array_equal(a, b)

    def test_streams_differ(self):
        assert not np.array_equal(SeededRng(5, 3).uniform(10), SeededRng(5, 4).uniform(10))
        assert not np.array_equal(SeededRng(5, 3).uniform(10), SeededRng(6, 3).uniform(10))

    def test_interleaving_does_not_matter(self):
        a1, b1 = SeededRng(1, 0), SeededRng(1, 1)
        seq_a = [a1.bits(7) for _ in range(3)]
        seq_b = [b1.bits(7) for _ in range(3)]
        a2, b2 = SeededRng(1, 0), SeededRng(1, 1)
        inter_a, inter_b = [], []
        for _ in range(3):
            inter_b.append(b2.bits(7))
            inter_a.append(a2.bits(7))
        np.testing.assert_array_equal(np.concatenate(seq_a), np.concatenate(inter_a))
        np.testing.assert_array_equal(np.concatenate(seq_b), np.concatenate(inter_b))

    def test_gaussian_moments(self):
        z = SeededRng(9).complex_normal(10 ** 6)
        assert abs(z.mean()) < 0.01
        assert np.mean(np.abs(z) ** 2) == pytest.approx(1.0, rel=0.02)
        r = SeededRng(10).normal(10 ** 6)
        assert abs(r.mean()) < 0.01
        assert np.var(r) == pytest.approx(1.0, rel=0.02)

    def test_variance_scaling_reuses_unit_draws(self):
        unit = SeededRng(2, 7).complex_normal((4, 5))
        scaled = SeededRng(2, 7).complex_normal((4, 5), variance=0.25)
        np.testing.assert_allclose(scaled, 0.5 * unit, rtol=1e-15)

    def test_uniform_range_and_bits(self):
        rng = SeededRng(11)
        u = rng.uniform(10000)
        assert u.min() > 0 and u.max() <= 1
        b = rng.bits(10000)
        assert set(np.unique(b)) <= {0, 1}
        assert rng.integers(4, 1000).max() < 4

    def test_negative_seed_rejected(self):
        with pytest.raises(ValueError):
            SeededRng(-1)

    def test_spawn(self):
        np.testing.assert_array_equal(SeededRng(3).spawn(2).uniform(5), SeededRng(3, 2).uniform(5))


class TestComplexVector:
    def test_valid(self):
        v = as_complex_vector([1, 2j])
        assert v.dtype == np.complex128

    @pytest.mark.parametrize("bad", [[], [[1, 2]], [1, np.nan], [np.inf]])
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            as_complex_vector(bad)
