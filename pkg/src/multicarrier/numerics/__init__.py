"""Transforms, filters, spectral estimation and random streams."""
import numpy as np

from .fft import SizingError, dft, dft_bins, direct_dft, is_power_of_two, synthesize
from .filters import ProtoFilter, chebyshev_filter, linear_convolve
from .rng import SeededRng
from .spectral import welch_psd

__all__ = [
    "SizingError", "dft", "dft_bins", "direct_dft", "is_power_of_two", "synthesize",
    "ProtoFilter", "chebyshev_filter", "linear_convolve",
    "SeededRng", "welch_psd", "as_complex_vector",
]


def as_complex_vector(x):
    """Validate a non-empty, finite, one-dimensional complex sequence."""
    v = np.asarray(x, dtype=np.complex128)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("expected a non-empty one-dimensional sequence")
    if not np.all(np.isfinite(v)):
        raise ValueError("sequence contains NaN or Inf")
    return v
