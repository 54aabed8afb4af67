"""Iterative radix-2 FFT.

The transform works along the last axis so that a whole frame of OFDM
symbols (or a batch of frames) is processed in one call.  Forward is
unscaled, inverse carries the 1/N factor.
"""
from functools import lru_cache

import numpy as np


class SizingError(ValueError):
    """Transform length is not a power of two."""


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@lru_cache(maxsize=None)
def _bit_reversal(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


@lru_cache(maxsize=None)
def _twiddles(n: int, inverse: bool) -> tuple:
    sign = 1.0 if inverse else -1.0
    out = []
    m = 2
    while m <= n:
        half = m // 2
        w = np.exp(sign * 2j * np.pi * np.arange(half) / m)
        w.setflags(write=False)
        out.append(w)
        m *= 2
    return tuple(out)


def dft(x, inverse: bool = False) -> np.ndarray:
    """Discrete Fourier transform along the last axis.

    Parameters
    ----------
    x : array_like
        Complex input; the last axis length must be a power of two.
    inverse : bool
        If True compute ``(1/N) sum_k X_k exp(+j 2 pi k n / N)``.

    Raises
    ------
    SizingError
        If the transform length is not a power of two.
    """
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[-1] if x.ndim else 0
    if not is_power_of_two(n):
        raise SizingError(f"dft length must be a power of two, got {n}")
    lead = x.shape[:-1]
    y = np.ascontiguousarray(x[..., _bit_reversal(n)])
    m = 2
    for w in _twiddles(n, inverse):
        half = m // 2
        pairs = y.reshape(lead + (n // m, 2, half))
        top = pairs[..., 0, :]
        bot = pairs[..., 1, :]
        t = bot * w if m > 2 else bot.copy()
        # butterflies written back in place
        np.subtract(top, t, out=bot)
        np.add(top, t, out=top)
        m *= 2
    if inverse:
        y /= n
    return y


def direct_dft(x, inverse: bool = False) -> np.ndarray:
    """O(N^2) matrix DFT with the same conventions as :func:`dft`.

    Works for any length; used as a reference and for small odd sizes.
    """
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[-1]
    sign = 1.0 if inverse else -1.0
    k = np.arange(n)
    mat = np.exp(sign * 2j * np.pi * np.outer(k, k) / n)
    y = x @ mat.T
    return y / n if inverse else y


@lru_cache(maxsize=64)
def _bin_matrix(length: int, bins: tuple, n_fft: int) -> np.ndarray:
    n = np.arange(length)[:, None]
    k = np.asarray(bins)[None, :]
    m = np.exp(-2j * np.pi * n * k / n_fft)
    m.setflags(write=False)
    return m


def dft_bins(x, bins, n_fft: int = None) -> np.ndarray:
    """Selected bins of the forward DFT of `x` zero padded to `n_fft`.

    ``out[..., i] = sum_n x[..., n] exp(-j 2 pi bins[i] n / n_fft)``.  A
    pruned transform: cheaper than :func:`dft` when few bins are needed.
    """
    x = np.asarray(x, dtype=np.complex128)
    length = x.shape[-1]
    n_fft = length if n_fft is None else int(n_fft)
    if n_fft < length:
        raise SizingError(f"n_fft {n_fft} shorter than input length {length}")
    bins = tuple(int(b) for b in np.atleast_1d(bins))
    return x @ _bin_matrix(length, bins, n_fft)


def synthesize(values, bins, n: int) -> np.ndarray:
    """``x[..., t] = sum_i values[..., i] exp(j 2 pi bins[i] t / n)`` for ``t < n``.

    Equals ``n * dft(X, inverse=True)`` for a spectrum ``X`` that is zero
    outside `bins`; cheaper when few bins are occupied.
    """
    values = np.asarray(values, dtype=np.complex128)
    bins = tuple(int(b) for b in np.atleast_1d(bins))
    return values @ _bin_matrix(n, bins, n).conj().T
