"""FIR prototype filters and linear convolution."""
from dataclasses import dataclass
import warnings

import numpy as np
from scipy.signal.windows import chebwin


@dataclass(frozen=True)
class ProtoFilter:
    """Odd-length FIR filter with unit-energy taps."""

    taps: np.ndarray

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=np.complex128).ravel()
        if taps.size % 2 != 1:
            raise ValueError(f"filter length must be odd, got {taps.size}")
        energy = np.sum(np.abs(taps) ** 2)
        if not np.isfinite(energy) or energy <= 0:
            raise ValueError("filter taps must be finite and not all zero")
        taps = taps / np.sqrt(energy)
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)

    @property
    def L(self) -> int:
        return self.taps.size

    def response(self, freqs) -> np.ndarray:
        """Frequency response ``sum_i h[i] exp(-j 2 pi f i)`` at normalized `freqs`."""
        freqs = np.asarray(freqs, dtype=float)
        i = np.arange(self.L)
        return np.exp(-2j * np.pi * np.multiply.outer(freqs, i)) @ self.taps


def linear_convolve(x, h) -> np.ndarray:
    """Full linear convolution along the last axis of `x`.

    `h` may be a :class:`ProtoFilter` or a raw tap sequence (used as given,
    without renormalization). Output length is ``len(x) + L - 1``.
    """
    taps = h.taps if isinstance(h, ProtoFilter) else np.asarray(h, dtype=np.complex128).ravel()
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[-1]
    out = np.zeros(x.shape[:-1] + (n + taps.size - 1,), dtype=np.complex128)
    # one shifted multiply-accumulate per tap; L is small compared with n
    for i, tap in enumerate(taps):
        if tap != 0:
            out[..., i:i + n] += tap * x
    return out


def chebyshev_filter(L: int, sidelobe_atten_db: float = 40.0, center_norm_freq: float = 0.0) -> ProtoFilter:
    """Dolph-Chebyshev window of length `L`, modulated to `center_norm_freq`.

    The centre frequency is in cycles/sample; tap ``i`` is multiplied by
    ``exp(j 2 pi center_norm_freq i)``.
    """
    if L < 1 or L % 2 == 0:
        raise ValueError(f"filter length must be a positive odd integer, got {L}")
    if sidelobe_atten_db <= 0:
        raise ValueError("sidelobe attenuation must be positive")
    if not 0.0 <= center_norm_freq < 1.0:
        raise ValueError("center frequency must lie in [0, 1)")
    if L == 1:
        window = np.ones(1)
    else:
        with warnings.catch_warnings():
            # scipy warns below 45 dB; 40 dB is the intended design here
            warnings.simplefilter("ignore", UserWarning)
            window = chebwin(L, at=sidelobe_atten_db, sym=True)
    i = np.arange(L)
    return ProtoFilter(window * np.exp(2j * np.pi * center_norm_freq * i))
