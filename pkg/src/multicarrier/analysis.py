"""Interference matrices, time envelopes and spectral roll-off measurements."""
from dataclasses import dataclass
import csv

import numpy as np

from .modem import constellation
from .numerics import SeededRng, welch_psd
from .waveforms import SubbandAllocation, Transceiver, WaveformConfig, WaveformKind


@dataclass(frozen=True)
class InterferenceMatrix:
    """Complex transfer ``values[l, k]`` from input ``k`` to output ``l``.

    `domain` is ``"time"`` (offset = p/N) or ``"freq"`` (offset = dfT);
    `variant` is ``"plain"``, ``"pcc_noweight"`` or ``"pcc_weight"``.
    """

    values: np.ndarray
    offset: float
    domain: str
    variant: str = "plain"
    N: int = 0

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.values)

    @property
    def shape(self):
        return self.values.shape

    def off_diagonal_power(self) -> np.ndarray:
        """Interference power reaching each output from all other inputs."""
        p = self.magnitudes ** 2
        return p.sum(axis=1) - np.diag(p)

    def to_csv(self, path) -> None:
        write_matrix_csv(path, self)


def _geometric(ratio_angle, count, N):
    """``sum_{n<count} exp(j ratio_angle n)`` with the degenerate terms set to ``count``."""
    num = 1.0 - np.exp(1j * ratio_angle * count)
    den = 1.0 - np.exp(1j * ratio_angle)
    small = np.abs(den) < 1e-12
    out = np.empty(np.broadcast(ratio_angle, count).shape, dtype=np.complex128)
    out[~small] = num[~small] / den[~small]
    out[small] = count
    return out


def ici_time(N: int, p: int) -> InterferenceMatrix:
    """Interference within one receive window when the receiver is `p` samples late.

    ``Y[l, k] = (1/N) exp(j 2 pi k p / N) sum_{n=0}^{N-1-p} exp(j 2 pi n (k - l) / N)``;
    neighbouring symbols are not included.
    """
    if not 0 <= p < N:
        raise ValueError(f"p must satisfy 0 <= p < N, got {p}")
    k = np.arange(N)
    d = k[None, :] - k[:, None]
    s = _geometric(2 * np.pi * (d % N) / N, N - p, N)
    values = np.exp(2j * np.pi * k * p / N)[None, :] * s / N
    return InterferenceMatrix(values, p / N, "time", "plain", N)


def ici_freq(N: int, dfT: float, theta0: float = 0.0) -> InterferenceMatrix:
    """``Y[l, k] = (1/N) exp(j theta0) sum_{n<N} exp(j 2 pi n (k - l + dfT) / N)``."""
    k = np.arange(N)
    d = (k[None, :] - k[:, None]).astype(float) + dfT
    s = _geometric(2 * np.pi * d / N, N, N)
    values = np.exp(1j * theta0) * s / N
    return InterferenceMatrix(values, float(dfT), "freq", "plain", N)


def ischi(plain: InterferenceMatrix, weighting: bool, equalize: bool = True) -> InterferenceMatrix:
    """Subchannel-to-subchannel transfer of PCC-OFDM.

    Input ``D_k'`` drives subcarriers ``2k'`` and ``2k'+1`` with ``+1, -1``;
    the output is ``(row 2l' - row 2l'+1) / 2`` with weighting, else row
    ``2l'``.  With `equalize`, each subcarrier's timing phase ramp is
    removed before combining, as the receiver does.
    """
    if plain.variant != "plain":
        raise ValueError("ischi needs a plain interference matrix")
    N = plain.values.shape[0]
    if N % 2:
        raise ValueError("ischi needs an even number of subcarriers")
    V = plain.values
    if equalize and plain.domain == "time":
        p = int(round(plain.offset * N))
        V = np.exp(-2j * np.pi * np.arange(N) * p / N)[:, None] * V
    cols = V[:, 0::2] - V[:, 1::2]
    if weighting:
        rows = 0.5 * (cols[0::2] - cols[1::2])
        variant = "pcc_weight"
    else:
        rows = cols[0::2]
        variant = "pcc_noweight"
    return InterferenceMatrix(rows, plain.offset, plain.domain, variant, N)


def interference_matrix(domain: str, N: int, offset, pcc: str = "none") -> InterferenceMatrix:
    """Build a plain or PCC matrix; `offset` is p (time) or dfT (freq)."""
    plain = ici_time(N, int(offset)) if domain == "time" else ici_freq(N, float(offset))
    if pcc == "none":
        return plain
    if pcc not in ("weighted", "noweight"):
        raise ValueError(f"pcc must be none, noweight or weighted, got {pcc!r}")
    return ischi(plain, weighting=(pcc == "weighted"))


def envelope_pcc(N: int) -> np.ndarray:
    """Magnitude of the pair window, ``sqrt(2 (1 - cos(2 pi l / N)))``."""
    if N < 2:
        raise ValueError("N must be at least 2")
    l = np.arange(N)
    return np.sqrt(2.0 * (1.0 - np.cos(2 * np.pi * l / N)))


def waveform_envelope(cfg: WaveformConfig, alloc: SubbandAllocation) -> np.ndarray:
    """RMS time envelope of one symbol for i.i.d. unit-energy data, peak = 1.

    Computed exactly as the root of the summed power of each data input's
    waveform, so its length is the waveform's symbol span.
    """
    t = Transceiver(cfg, alloc)
    waves = t.transmit(t.unit_inputs())
    env = np.sqrt(np.sum(np.abs(waves) ** 2, axis=0))
    return env / env.max()


@dataclass(frozen=True)
class Spectrum:
    freqs: np.ndarray
    """Frequency in subcarrier spacings, ``[0, N)``."""
    psd_db: np.ndarray
    """Peak-normalized power spectral density, dB."""


def psd_estimate(cfg: WaveformConfig, alloc, num_symbols: int, rng: SeededRng,
                 segment_factor: int = 4, order: int = 4) -> Spectrum:
    """Welch PSD of a random-data transmit stream.

    `alloc` may be one allocation or a list (one per user, summed).
    Segments are ``segment_factor * N`` samples long with 50 % overlap.
    """
    if num_symbols < 100:
        raise ValueError("psd_estimate needs at least 100 symbols")
    allocs = alloc if isinstance(alloc, (list, tuple)) else [alloc]
    c = constellation(order)
    stream = None
    for a in allocs:
        t = Transceiver(cfg, a)
        labels = rng.integers(c.order, size=(num_symbols, t.data_per_symbol))
        x = t.transmit(c.points[labels])
        stream = x if stream is None else stream + x
    seg = segment_factor * cfg.N
    psd = welch_psd(stream, seg, seg // 2)
    freqs = np.arange(seg) * cfg.N / seg
    with np.errstate(divide="ignore"):
        psd_db = 10 * np.log10(psd / psd.max())
    return Spectrum(freqs, psd_db)


def local_maxima_envelope(offsets, psd_db):
    """Indices of local maxima (sidelobe peaks) of a sampled PSD."""
    p = np.asarray(psd_db)
    inner = np.arange(1, p.size - 1)
    peak = (p[inner] >= p[inner - 1]) & (p[inner] >= p[inner + 1])
    return inner[peak]


def oob_slope(freqs, psd_db, band_edge: float, decade_span=(5.0, 50.0), side: str = "upper") -> float:
    """Roll-off in dB/decade beyond a band edge.

    Fits dB against ``log10(|f - band_edge|)`` over ``decade_span`` using
    only the sidelobe peaks so that spectral nulls do not bias the fit.
    """
    freqs = np.asarray(freqs, dtype=float)
    psd_db = np.asarray(psd_db, dtype=float)
    lo, hi = decade_span
    if not 0 < lo < hi:
        raise ValueError("decade_span must satisfy 0 < lo < hi")
    offsets = freqs - band_edge if side == "upper" else band_edge - freqs
    order = np.argsort(offsets)
    offsets, psd_db = offsets[order], psd_db[order]
    window = (offsets > 0) & (offsets <= hi * 1.5)
    off_w, psd_w = offsets[window], psd_db[window]
    peaks = local_maxima_envelope(off_w, psd_w)
    keep = peaks[(off_w[peaks] >= lo) & (off_w[peaks] <= hi)]
    if keep.size < 8:
        raise ValueError(f"only {keep.size} envelope points in fit region; need at least 8")
    slope, _ = np.polyfit(np.log10(off_w[keep]), psd_w[keep], 1)
    return float(slope)


def write_matrix_csv(path, matrix: InterferenceMatrix) -> None:
    """Magnitudes, row-major, with a header row of column indices.

    The corner cell records the matrix metadata.
    """
    mags = matrix.magnitudes
    corner = f"{matrix.domain}:{matrix.variant}:offset={matrix.offset!r}:N={matrix.N} row\\col"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([corner] + list(range(mags.shape[1])))
        for i, row in enumerate(mags):
            w.writerow([i] + [f"{v:.12e}" for v in row])


def write_spectrum_csv(path, spectrum: Spectrum) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["freq_subcarriers", "psd_db"])
        for f, p in zip(spectrum.freqs, spectrum.psd_db):
            w.writerow([f"{f:.6f}", f"{p:.6f}"])


def is_plain_kind(kind: WaveformKind) -> bool:
    return kind is not WaveformKind.PCC_OFDM
