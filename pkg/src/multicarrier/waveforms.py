"""CP-OFDM, PCC-OFDM and UFMC transmitter/receiver chains.

Conventions shared by all chains:

* A frame is an array ``(..., S, N)`` of subcarrier values; leading axes
  are independent frames (Monte-Carlo trials).
* The transmitter emits ``x[n] = sum_k X_k exp(j 2 pi k n / N)`` per symbol
  and receivers scale their DFT by ``1/N``, so a clean loopback returns
  ``X`` exactly.
* Receivers open each symbol's window at the first sample of the
  transmitted block.  For CP-OFDM the window therefore covers the cyclic
  prefix and the known ``N_CP`` rotation is undone per subcarrier; a late
  receiver (positive timing offset) up to ``N_CP`` samples stays inside
  the cyclic extension of the symbol.
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .numerics import chebyshev_filter, dft, dft_bins, is_power_of_two, linear_convolve, synthesize


class WaveformKind(str, Enum):
    CP_OFDM = "cp_ofdm"
    PCC_OFDM = "pcc_ofdm"
    UFMC = "ufmc"

    @classmethod
    def parse(cls, value) -> "WaveformKind":
        if isinstance(value, cls):
            return value
        s = str(value).lower().replace("-", "_")
        aliases = {"cp": "cp_ofdm", "ofdm": "cp_ofdm", "pcc": "pcc_ofdm"}
        s = aliases.get(s, s)
        try:
            return cls(s)
        except ValueError:
            raise ValueError(f"unknown waveform {value!r}; expected cp_ofdm, pcc_ofdm or ufmc") from None


@dataclass(frozen=True)
class WaveformConfig:
    """Everything needed to build one transceiver.

    `N_CP` only matters for CP-OFDM, `L` only for UFMC, `pcc_weighting`
    and `pcc_cp` only for PCC-OFDM.
    """

    kind: WaveformKind = WaveformKind.CP_OFDM
    N: int = 256
    N_CP: int = 32
    L: int = 33
    pcc_weighting: bool = True
    pcc_cp: int = 0
    sidelobe_atten_db: float = 40.0

    def __post_init__(self):
        object.__setattr__(self, "kind", WaveformKind.parse(self.kind))
        if not is_power_of_two(self.N):
            raise ValueError(f"N must be a power of two, got {self.N}")
        if not 0 <= self.N_CP < self.N:
            raise ValueError(f"N_CP must satisfy 0 <= N_CP < N, got {self.N_CP}")
        if not 0 <= self.pcc_cp < self.N:
            raise ValueError(f"pcc_cp must satisfy 0 <= pcc_cp < N, got {self.pcc_cp}")
        if self.L < 1 or self.L > self.N or self.L % 2 == 0:
            raise ValueError(f"L must be odd with 1 <= L <= N, got {self.L}")

    @property
    def symbol_span(self) -> int:
        """Samples per transmitted symbol."""
        if self.kind is WaveformKind.CP_OFDM:
            return self.N + self.N_CP
        if self.kind is WaveformKind.PCC_OFDM:
            return self.N + self.pcc_cp
        return self.N + self.L - 1

    @property
    def prefix(self) -> int:
        if self.kind is WaveformKind.CP_OFDM:
            return self.N_CP
        if self.kind is WaveformKind.PCC_OFDM:
            return self.pcc_cp
        return 0

    @property
    def label(self) -> str:
        if self.kind is WaveformKind.PCC_OFDM and not self.pcc_weighting:
            return "pcc_ofdm_noweight"
        return self.kind.value


@dataclass(frozen=True)
class SubbandAllocation:
    """Contiguous subbands of ``subband_size`` subcarriers.

    `guard` records the spacing used when the allocation was laid out next
    to another user's; it does not change which subcarriers are used.
    """

    start_indices: tuple
    subband_size: int = 12
    guard: int = 0

    def __post_init__(self):
        starts = tuple(sorted(int(s) for s in self.start_indices))
        if not starts:
            raise ValueError("allocation needs at least one subband")
        if self.subband_size < 1:
            raise ValueError("subband_size must be positive")
        for a, b in zip(starts, starts[1:]):
            if b < a + self.subband_size:
                raise ValueError(f"subbands starting at {a} and {b} overlap")
        object.__setattr__(self, "start_indices", starts)

    @property
    def subbands(self) -> list:
        return [np.arange(s, s + self.subband_size) for s in self.start_indices]

    @property
    def subcarriers(self) -> np.ndarray:
        return np.concatenate(self.subbands)

    @property
    def num_subcarriers(self) -> int:
        return len(self.start_indices) * self.subband_size

    @property
    def pair_starts(self) -> np.ndarray:
        """Even lower index of every PCC subcarrier pair."""
        return self.subcarriers[0::2]

    def validate(self, cfg: WaveformConfig) -> None:
        if self.start_indices[0] < 0 or self.start_indices[-1] + self.subband_size > cfg.N:
            raise ValueError(f"allocation exceeds subcarrier range [0, {cfg.N})")
        if cfg.kind is WaveformKind.PCC_OFDM:
            if self.subband_size % 2 or any(s % 2 for s in self.start_indices):
                raise ValueError("PCC subbands need an even size and even start indices")

    def overlaps(self, other: "SubbandAllocation") -> bool:
        return bool(np.intersect1d(self.subcarriers, other.subcarriers).size)


def _check_pairs(alloc: SubbandAllocation) -> None:
    if alloc.num_subcarriers % 2:
        raise ValueError("PCC needs an even number of allocated subcarriers")
    if alloc.subband_size % 2 or any(s % 2 for s in alloc.start_indices):
        raise ValueError("PCC pairs must start on even indices inside a subband")


def pcc_map(data, alloc: SubbandAllocation, N: int) -> np.ndarray:
    """Place each data value on a subcarrier pair as ``(D, -D)``."""
    _check_pairs(alloc)
    data = np.asarray(data, dtype=np.complex128)
    pairs = alloc.pair_starts
    if data.shape[-1] != pairs.size:
        raise ValueError(f"expected {pairs.size} data values per symbol, got {data.shape[-1]}")
    X = np.zeros(data.shape[:-1] + (N,), dtype=np.complex128)
    X[..., pairs] = data
    X[..., pairs + 1] = -data
    return X


def pcc_combine(Y, alloc: SubbandAllocation, weighting: bool = True) -> np.ndarray:
    """Pair combining ``(Y[2l] - Y[2l+1]) / 2``, or ``Y[2l]`` alone without weighting."""
    _check_pairs(alloc)
    Y = np.asarray(Y, dtype=np.complex128)
    pairs = alloc.pair_starts
    if weighting:
        return 0.5 * (Y[..., pairs] - Y[..., pairs + 1])
    return Y[..., pairs].copy()


def _modulate_body(frame, N: int) -> np.ndarray:
    frame = np.asarray(frame, dtype=np.complex128)
    occupied = np.flatnonzero(np.any(frame.reshape(-1, N) != 0, axis=0))
    if occupied.size <= N // 8:
        # sparse allocation: direct synthesis beats the full transform
        return synthesize(frame[..., occupied], occupied, N)
    return N * dft(frame, inverse=True)


def _blocks(samples, span: int, num_symbols):
    samples = np.asarray(samples, dtype=np.complex128)
    n = samples.shape[-1]
    S = n // span if num_symbols is None else int(num_symbols)
    if S < 1 or n < S * span:
        raise ValueError(f"need {max(S, 1) * span} samples for {max(S, 1)} symbols, got {n}")
    return samples[..., :S * span].reshape(samples.shape[:-1] + (S, span))


def _apply_equalizer(Y, equalizer):
    if equalizer is None:
        return Y
    return Y * np.asarray(equalizer)


def _with_prefix(body, prefix: int) -> np.ndarray:
    if prefix:
        body = np.concatenate((body[..., -prefix:], body), axis=-1)
    return body.reshape(body.shape[:-2] + (-1,))


def _window_dft(windows, N: int, n_fft: int, bins) -> np.ndarray:
    """``dft / N`` of each window; with `bins`, only those outputs (others 0)."""
    if bins is None:
        if windows.shape[-1] < n_fft:
            padded = np.zeros(windows.shape[:-1] + (n_fft,), dtype=np.complex128)
            padded[..., :windows.shape[-1]] = windows
            windows = padded
        Y = dft(windows) / N
        return Y[..., ::n_fft // N] if n_fft != N else Y
    bins = np.asarray(bins)
    Y = np.zeros(windows.shape[:-1] + (N,), dtype=np.complex128)
    Y[..., bins] = dft_bins(windows, bins * (n_fft // N), n_fft) / N
    return Y


def _prefix_window_rx(samples, N: int, prefix: int, num_symbols, bins=None) -> np.ndarray:
    blocks = _blocks(samples, N + prefix, num_symbols)
    Y = _window_dft(blocks[..., :N], N, N, bins)
    if prefix:
        Y *= np.exp(2j * np.pi * np.arange(N) * prefix / N)
    return Y


def tx_cp_ofdm(frame, cfg: WaveformConfig) -> np.ndarray:
    """IFFT every symbol, prepend the last `N_CP` samples, concatenate."""
    frame = np.asarray(frame, dtype=np.complex128)
    return _with_prefix(_modulate_body(frame, cfg.N), cfg.N_CP)


def rx_cp_ofdm(samples, cfg: WaveformConfig, equalizer=None, num_symbols=None, bins=None) -> np.ndarray:
    """Demodulate ``(..., S, N)`` subcarrier values from a CP-OFDM stream.

    `equalizer` multiplies the DFT outputs; shape ``(N,)`` or ``(S, N)``.
    With `bins`, only those subcarriers are computed and the rest are 0.
    """
    Y = _prefix_window_rx(samples, cfg.N, cfg.N_CP, num_symbols, bins)
    return _apply_equalizer(Y, equalizer)


def tx_pcc_ofdm(data, cfg: WaveformConfig, alloc: SubbandAllocation) -> np.ndarray:
    """PCC pair mapping followed by a plain IFFT (optional `pcc_cp` prefix)."""
    X = pcc_map(data, alloc, cfg.N)
    return _with_prefix(_modulate_body(X, cfg.N), cfg.pcc_cp)


def rx_pcc_ofdm(samples, cfg: WaveformConfig, alloc: SubbandAllocation, equalizer=None,
                subchannel_equalizer=None, num_symbols=None, bins=None) -> np.ndarray:
    """DFT, per-subcarrier equalization, pair combining.

    With ``cfg.pcc_weighting`` False the decision uses the even subcarrier
    of each pair only.  `subchannel_equalizer` scales the combined outputs.
    """
    Y = _prefix_window_rx(samples, cfg.N, cfg.pcc_cp, num_symbols, bins)
    Y = _apply_equalizer(Y, equalizer)
    Z = pcc_combine(Y, alloc, weighting=cfg.pcc_weighting)
    return _apply_equalizer(Z, subchannel_equalizer)


def ufmc_filters(cfg: WaveformConfig, alloc: SubbandAllocation) -> list:
    """One Chebyshev prototype per subband, modulated to the subband centre."""
    filters = []
    for start in alloc.start_indices:
        centre = (start + (alloc.subband_size - 1) / 2.0) / cfg.N
        filters.append(chebyshev_filter(cfg.L, cfg.sidelobe_atten_db, centre % 1.0))
    return filters


def ufmc_subcarrier_gain(cfg: WaveformConfig, alloc: SubbandAllocation) -> np.ndarray:
    """Filter response seen by every allocated subcarrier (1 elsewhere)."""
    gain = np.ones(cfg.N, dtype=np.complex128)
    for band, filt in zip(alloc.subbands, ufmc_filters(cfg, alloc)):
        gain[band] = filt.response(band / cfg.N)
    return gain


def tx_ufmc(frame, cfg: WaveformConfig, alloc: SubbandAllocation) -> np.ndarray:
    """Per-subband IFFT and filtering, summed; ``N + L - 1`` samples per symbol."""
    frame = np.asarray(frame, dtype=np.complex128)
    out = None
    for band, filt in zip(alloc.subbands, ufmc_filters(cfg, alloc)):
        sub = np.zeros_like(frame)
        sub[..., band] = frame[..., band]
        y = linear_convolve(_modulate_body(sub, cfg.N), filt)
        out = y if out is None else out + y
    return out.reshape(out.shape[:-2] + (-1,))


def rx_ufmc(samples, cfg: WaveformConfig, equalizer=None, num_symbols=None, bins=None) -> np.ndarray:
    """Zero-pad each ``N + L - 1`` block to 2N, 2N-point DFT, keep even bins.

    Output bin ``k`` equals ``X_k`` times the subband filter response at
    ``k / N``; the equalizer is expected to remove it.
    """
    blocks = _blocks(samples, cfg.N + cfg.L - 1, num_symbols)
    Y = _window_dft(blocks, cfg.N, 2 * cfg.N, bins)
    return _apply_equalizer(Y, equalizer)


class Transceiver:
    """One user's transmitter and receiver for a fixed config and allocation.

    Data arrays carry one value per allocated subcarrier (CP-OFDM, UFMC) or
    per subcarrier pair (PCC-OFDM), ordered by subcarrier index.
    """

    def __init__(self, cfg: WaveformConfig, alloc: SubbandAllocation):
        alloc.validate(cfg)
        self.cfg = cfg
        self.alloc = alloc
        self.subcarriers = alloc.subcarriers
        self._power = None

    @property
    def kind(self) -> WaveformKind:
        return self.cfg.kind

    @property
    def symbol_span(self) -> int:
        return self.cfg.symbol_span

    @property
    def data_per_symbol(self) -> int:
        n = self.alloc.num_subcarriers
        return n // 2 if self.kind is WaveformKind.PCC_OFDM else n

    def frame(self, data) -> np.ndarray:
        data = np.asarray(data, dtype=np.complex128)
        if self.kind is WaveformKind.PCC_OFDM:
            return pcc_map(data, self.alloc, self.cfg.N)
        X = np.zeros(data.shape[:-1] + (self.cfg.N,), dtype=np.complex128)
        X[..., self.subcarriers] = data
        return X

    def transmit(self, data) -> np.ndarray:
        """``(..., S, data_per_symbol)`` data values to a sample stream."""
        if self.kind is WaveformKind.CP_OFDM:
            return tx_cp_ofdm(self.frame(data), self.cfg)
        if self.kind is WaveformKind.PCC_OFDM:
            return tx_pcc_ofdm(data, self.cfg, self.alloc)
        return tx_ufmc(self.frame(data), self.cfg, self.alloc)

    def subcarrier_outputs(self, samples, num_symbols=None, equalizer=None, pruned=False) -> np.ndarray:
        """Equalized DFT outputs ``(..., S, N)`` before any pair combining.

        With `pruned`, only the allocated subcarriers are computed (by
        direct summation) and the other outputs are zero.
        """
        bins = self.subcarriers if pruned else None
        if self.kind is WaveformKind.UFMC:
            return rx_ufmc(samples, self.cfg, equalizer, num_symbols, bins)
        Y = _prefix_window_rx(samples, self.cfg.N, self.cfg.prefix, num_symbols, bins)
        return _apply_equalizer(Y, equalizer)

    def receive(self, samples, num_symbols=None, equalizer=None, subchannel_equalizer=None,
                pruned=False) -> np.ndarray:
        """Decision statistics ``(..., S, data_per_symbol)``."""
        if self.kind is WaveformKind.PCC_OFDM:
            return rx_pcc_ofdm(samples, self.cfg, self.alloc, equalizer, subchannel_equalizer, num_symbols,
                               self.subcarriers if pruned else None)
        Y = self.subcarrier_outputs(samples, num_symbols, equalizer, pruned)
        return _apply_equalizer(Y[..., self.subcarriers], subchannel_equalizer)

    def unit_inputs(self, num_symbols: int = 1, symbol: int = 0) -> np.ndarray:
        """Batch of frames, frame ``i`` carrying a single 1 on data input ``i``."""
        d = self.data_per_symbol
        data = np.zeros((d, num_symbols, d), dtype=np.complex128)
        data[np.arange(d), symbol, np.arange(d)] = 1.0
        return data

    def mean_sample_power(self) -> float:
        """Expected power per transmitted sample for i.i.d. unit-energy data.

        Measured from the chain itself: the energy of every data input's
        waveform over one symbol, summed, divided by the symbol span.
        """
        if self._power is None:
            waveforms = self.transmit(self.unit_inputs())
            self._power = float(np.sum(np.abs(waveforms) ** 2) / self.symbol_span)
        return self._power
