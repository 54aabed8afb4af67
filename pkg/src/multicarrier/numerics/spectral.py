"""Welch power spectral density estimate for complex baseband signals."""
import numpy as np
from scipy.signal import welch

from .fft import is_power_of_two


def welch_psd(x, segment_len: int, overlap: int) -> np.ndarray:
    """Averaged Hann-windowed periodogram of a complex sequence.

    Returns ``segment_len`` bins in FFT order (bin ``b`` is frequency
    ``b / segment_len`` cycles/sample).  The estimate is rescaled so that
    ``psd.sum() / segment_len == mean(|x|**2)``.
    """
    x = np.asarray(x, dtype=np.complex128).ravel()
    if not is_power_of_two(segment_len):
        raise ValueError(f"segment_len must be a power of two, got {segment_len}")
    if not 0 <= overlap < segment_len:
        raise ValueError("overlap must satisfy 0 <= overlap < segment_len")
    if x.size < segment_len:
        raise ValueError(f"input of length {x.size} shorter than one segment ({segment_len})")
    _, psd = welch(x, fs=1.0, window="hann", nperseg=segment_len, noverlap=overlap,
                   detrend=False, return_onesided=False, scaling="density")
    total = psd.sum() / segment_len
    power = np.mean(np.abs(x) ** 2)
    if total > 0:
        psd = psd * (power / total)
    return psd
