"""Multiuser uplink channel: per-user offsets, gains and calibrated AWGN."""
from dataclasses import dataclass, field
import math

import numpy as np

from .modem import Constellation, parse_constellation
from .numerics import SeededRng, dft
from .waveforms import SubbandAllocation, Transceiver, WaveformKind, _with_prefix


@dataclass(frozen=True)
class UserScenario:
    """One user's allocation, constellation and impairments.

    `tau` is the receiver timing offset as a fraction of the N-sample body
    (positive: receiver late), `dfT` the carrier offset in subcarrier
    spacings, `gain_db` the received power relative to the reference user.
    """

    alloc: SubbandAllocation
    constellation: Constellation
    tau: float = 0.0
    dfT: float = 0.0
    gain_db: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "constellation", parse_constellation(self.constellation))
        if abs(self.tau) > 0.5:
            raise ValueError(f"|tau| must be <= 0.5, got {self.tau}")
        if abs(self.dfT) > 2:
            raise ValueError(f"|dfT| must be <= 2, got {self.dfT}")


@dataclass
class ChannelOutput:
    samples: np.ndarray
    n0: float
    meta: list = field(default_factory=list)


@dataclass
class UplinkUser:
    """A user's scenario together with its transceiver and transmitted stream."""

    scenario: UserScenario
    transceiver: Transceiver
    samples: np.ndarray


@dataclass(frozen=True)
class Equalizer:
    """Genie equalizer: per-subcarrier multipliers ``(S, N)`` and, for PCC,
    per-subchannel multipliers ``(S, N/2-pairs)`` applied after combining."""

    per_subcarrier: np.ndarray
    per_subchannel: np.ndarray = None


def sample_shift(tau: float, N: int) -> int:
    """Integer receiver shift ``round(tau * N)`` (halves away from zero)."""
    v = tau * N
    return int(math.copysign(math.floor(abs(v) + 0.5), v))


def shift_samples(x, p: int) -> np.ndarray:
    """``y[n] = x[n + p]`` along the last axis, zero filled."""
    x = np.asarray(x, dtype=np.complex128)
    if p == 0:
        return x.copy()
    y = np.zeros_like(x)
    n = x.shape[-1]
    if abs(p) >= n:
        return y
    if p > 0:
        y[..., :n - p] = x[..., p:]
    else:
        y[..., -p:] = x[..., :n + p]
    return y


def apply_timing_offset(x, tau: float, N: int) -> np.ndarray:
    """Receiver late by ``p = round(tau N)`` samples: the stream is advanced
    by `p` (first `p` samples dropped, tail zero padded); negative `tau`
    delays it instead."""
    if abs(tau) > 0.5:
        raise ValueError(f"|tau| must be <= 0.5, got {tau}")
    return shift_samples(x, sample_shift(tau, N))


def apply_cfo(x, dfT: float, N: int, theta0: float = 0.0) -> np.ndarray:
    """Rotate sample ``n`` (stream index) by ``exp(j (2 pi dfT n / N + theta0))``."""
    x = np.asarray(x, dtype=np.complex128)
    if dfT == 0 and theta0 == 0:
        return x.copy()
    n = np.arange(x.shape[-1])
    return x * np.exp(1j * (2 * np.pi * dfT * n / N + theta0))


def impair(x, user: UserScenario, N: int, theta0: float = 0.0) -> np.ndarray:
    """Gain, timing offset and frequency offset of one user, in that order."""
    y = apply_timing_offset(x, user.tau, N)
    y = apply_cfo(y, user.dfT, N, theta0)
    if user.gain_db:
        y *= 10.0 ** (user.gain_db / 20.0)
    return y


def eb_bits_per_symbol(transceiver: Transceiver, constellation: Constellation) -> int:
    """Bits per symbol used to define Eb.

    PCC counts ``log2 M`` bits per allocated subcarrier, i.e. Eb is the
    energy of one subcarrier of a pair per bit, as for the other waveforms.
    """
    return transceiver.alloc.num_subcarriers * constellation.bits_per_symbol


def noise_variance(transceiver: Transceiver, constellation: Constellation, ebn0_db: float,
                   gain_db: float = 0.0) -> float:
    """Per-sample complex noise variance for a target Eb/N0 of a user."""
    if math.isinf(ebn0_db) and ebn0_db > 0:
        return 0.0
    power = transceiver.mean_sample_power() * 10.0 ** (gain_db / 10.0)
    energy_per_bit = power * transceiver.symbol_span / eb_bits_per_symbol(transceiver, constellation)
    return energy_per_bit / 10.0 ** (ebn0_db / 10.0)


def compose_uplink(users, ebn0_db: float, ref_user: int, rng: SeededRng, theta0: float = 0.0) -> ChannelOutput:
    """Sum of impaired user streams plus AWGN calibrated to the reference user.

    `users` is a list of :class:`UplinkUser`.  With several users the
    reference user defines the receiver's synchronization and must have no
    timing or frequency offset.
    """
    if not users:
        raise ValueError("no users to compose")
    if not 0 <= ref_user < len(users):
        raise ValueError(f"ref_user {ref_user} out of range")
    first = users[0].transceiver.cfg
    for u in users[1:]:
        cfg = u.transceiver.cfg
        if cfg.N != first.N or cfg.kind is not first.kind:
            raise ValueError("all users must share N and waveform kind")
    ref = users[ref_user]
    if len(users) > 1 and (ref.scenario.tau != 0 or ref.scenario.dfT != 0):
        raise ValueError("reference user must have zero timing and frequency offset")
    for i, a in enumerate(users):
        for b in users[i + 1:]:
            if a.scenario.alloc.overlaps(b.scenario.alloc):
                raise ValueError("user allocations overlap")

    total = None
    meta = []
    for u in users:
        y = impair(u.samples, u.scenario, first.N, theta0)
        total = y if total is None else total + y
        meta.append({"p": sample_shift(u.scenario.tau, first.N), "dfT": u.scenario.dfT,
                     "theta0": theta0, "gain_db": u.scenario.gain_db})
    n0 = noise_variance(ref.transceiver, ref.scenario.constellation, ebn0_db, ref.scenario.gain_db)
    if n0 > 0:
        total = total + rng.complex_normal(total.shape, n0)
    return ChannelOutput(samples=total, n0=n0, meta=meta)


def _invert(g) -> np.ndarray:
    g = np.asarray(g)
    out = np.zeros_like(g)
    ok = np.abs(g) > 1e-12
    out[ok] = 1.0 / g[ok]
    return out


def genie_equalizer(transceiver: Transceiver, user: UserScenario, num_symbols: int,
                    theta0: float = 0.0) -> Equalizer:
    """Perfect knowledge of a user's own deterministic gain on each input.

    Unit inputs are pushed through the user's transmitter, impairments
    and receiver with no neighbouring symbols; the resulting complex gain
    from each data value to its own decision statistic is inverted.  For
    PCC the per-subcarrier step removes only the phase of each subcarrier's
    gain and the combined subchannel gain is inverted after pair combining.
    The carrier-offset phase that accumulates from symbol to symbol is
    included.
    """
    cfg = transceiver.cfg
    N = cfg.N
    sc = transceiver.subcarriers
    k = np.arange(sc.size)
    drift = np.exp(2j * np.pi * user.dfT * (np.arange(num_symbols) - 1) * cfg.symbol_span / N)

    tones = np.zeros((sc.size, 3, N), dtype=np.complex128)
    tones[k, 1, sc] = 1.0
    if cfg.kind is WaveformKind.UFMC:
        stream = transceiver.transmit(tones[..., sc])
    else:
        stream = _with_prefix(N * dft(tones, inverse=True), cfg.prefix)
    Y = transceiver.subcarrier_outputs(impair(stream, user, N, theta0), 3)
    g = Y[k, 1, sc]

    per_sc = np.ones(N, dtype=np.complex128)
    if cfg.kind is not WaveformKind.PCC_OFDM:
        per_sc[sc] = _invert(g)
        return Equalizer(per_sc[None, :] * np.conj(drift)[:, None])

    mag = np.abs(g)
    per_sc[sc] = np.where(mag > 1e-12, np.conj(g) / np.where(mag > 1e-12, mag, 1.0), 0.0)
    pairs = transceiver.transmit(transceiver.unit_inputs(3, symbol=1))
    Z = transceiver.receive(impair(pairs, user, N, theta0), 3, equalizer=per_sc)
    d = np.arange(transceiver.data_per_symbol)
    sub = _invert(Z[d, 1, d])
    return Equalizer(np.broadcast_to(per_sc, (num_symbols, N)), sub[None, :] * np.conj(drift)[:, None])

