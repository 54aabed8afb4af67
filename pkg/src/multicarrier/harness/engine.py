"""Monte-Carlo BER engine.

Work is split into chunks of ``chunk_frames`` frames.  Chunk ``i`` draws
user ``u``'s data from stream ``(seed, i * STREAM_STRIDE + u)`` and its
noise from stream ``(seed, i * STREAM_STRIDE + STREAM_STRIDE - 1)``, so
every chunk is a pure function of the scenario and its index.

Because the receiver is linear, a chunk is cached as the received signal
part ``z_s`` and the received unit-variance noise part ``z_n`` of the
measured user's decision statistics; an Eb/N0 point then needs only
``z_s + sqrt(n0) z_n`` and a hard decision.  All Eb/N0 points therefore see
the same data and noise (common random numbers).

Stopping contract: a point accumulates chunks ``0, 1, 2, ...`` in order
and stops after the first chunk at which it has ``min_errors`` errors or
``max_bits`` bits.  Threads only compute chunks ahead of time; results
never depend on the thread count or scheduling.
"""
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
import math
import threading

import numpy as np

from ..modem import qam_demap_labels
from ..numerics import SeededRng
from ..uplink import UplinkUser, compose_uplink, genie_equalizer, noise_variance
from ..waveforms import Transceiver
from .scenario import BerRecord, RequiredResult, Scenario

STREAM_STRIDE = 1024
SEARCH_BRACKET = (-2.0, 40.0)
SEARCH_TOLERANCE_DB = 0.1

_POPCOUNT = np.array([bin(i).count("1") for i in range(256)], dtype=np.int64)


class BerEngine:
    """Simulates one :class:`Scenario`; reusable across Eb/N0 points."""

    def __init__(self, scenario: Scenario, threads: int = 1, cache_chunks: int = 256):
        if threads < 1:
            raise ValueError("threads must be >= 1")
        if len(scenario.users) >= STREAM_STRIDE:
            raise ValueError(f"at most {STREAM_STRIDE - 1} users supported")
        self.scenario = scenario
        self.threads = threads
        self.cache_chunks = cache_chunks
        s = scenario
        self.transceivers = [Transceiver(s.waveform, u.alloc) for u in s.users]
        self.measured = self.transceivers[s.measured_user]
        self.constellation = s.users[s.measured_user].constellation
        self.equalizer = genie_equalizer(self.measured, s.users[s.measured_user], s.frame_symbols, s.theta0)
        self.bits_per_chunk = (s.chunk_frames * (s.frame_symbols - 2) * self.measured.data_per_symbol
                               * self.constellation.bits_per_symbol)
        self.digest = s.digest
        self._cache = OrderedDict()
        self._lock = threading.Lock()
        self._pool = ThreadPoolExecutor(threads) if threads > 1 else None

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # chunk generation -------------------------------------------------

    def transmitted(self, index: int):
        """Per-user labels ``(F, S, d)`` and transmit streams of chunk `index`."""
        s = self.scenario
        labels, streams = [], []
        for u, (user, t) in enumerate(zip(s.users, self.transceivers)):
            rng = SeededRng(s.seed, index * STREAM_STRIDE + u)
            lab = rng.integers(user.constellation.order, (s.chunk_frames, s.frame_symbols, t.data_per_symbol))
            labels.append(lab)
            streams.append(t.transmit(user.constellation.points[lab]))
        return labels, streams

    def noise_rng(self, index: int) -> SeededRng:
        return SeededRng(self.scenario.seed, index * STREAM_STRIDE + STREAM_STRIDE - 1)

    def _receive(self, samples):
        S = self.scenario.frame_symbols
        eq = self.equalizer
        z = self.measured.receive(samples, S, eq.per_subcarrier, eq.per_subchannel, pruned=True)
        return z[..., 1:S - 1, :]

    def _compute_chunk(self, index: int):
        s = self.scenario
        labels, streams = self.transmitted(index)
        users = [UplinkUser(u, t, x) for u, t, x in zip(s.users, self.transceivers, streams)]
        clean = compose_uplink(users, math.inf, s.ref_user, None, s.theta0).samples
        noise = self.noise_rng(index).complex_normal(clean.shape)
        tx = labels[s.measured_user][:, 1:s.frame_symbols - 1, :]
        return tx, self._receive(clean), self._receive(noise)

    def chunk(self, index: int):
        with self._lock:
            hit = self._cache.get(index)
            if hit is not None:
                self._cache.move_to_end(index)
                return hit
        value = self._compute_chunk(index)
        with self._lock:
            self._cache[index] = value
            while len(self._cache) > self.cache_chunks:
                self._cache.popitem(last=False)
        return value

    def _chunks(self):
        """Chunks in index order; with threads, the next few are computed ahead."""
        index = 0
        while True:
            if self._pool is None:
                yield self.chunk(index)
                index += 1
            else:
                batch = range(index, index + self.threads)
                yield from self._pool.map(self.chunk, batch)
                index += self.threads

    # evaluation -------------------------------------------------------

    def n0(self, ebn0_db: float) -> float:
        s = self.scenario
        ref = s.users[s.ref_user]
        return noise_variance(self.transceivers[s.ref_user], ref.constellation, ebn0_db, ref.gain_db)

    def _errors(self, chunk, scale: float) -> int:
        tx, zs, zn = chunk
        rx = qam_demap_labels(zs + scale * zn, self.constellation)
        return int(_POPCOUNT[tx ^ rx].sum())

    def run_ber(self, grid=None) -> list:
        """One :class:`BerRecord` per Eb/N0 point, all points sharing chunks."""
        s = self.scenario
        grid = list(s.ebn0_grid if grid is None else grid)
        if not grid:
            raise ValueError("empty Eb/N0 grid")
        scales = [math.sqrt(self.n0(x)) for x in grid]
        errors = [0] * len(grid)
        bits = [0] * len(grid)
        active = set(range(len(grid)))
        for chunk in self._chunks():
            for i in sorted(active):
                errors[i] += self._errors(chunk, scales[i])
                bits[i] += self.bits_per_chunk
                if errors[i] >= s.min_errors or bits[i] >= s.max_bits:
                    active.discard(i)
            if not active:
                break
        return [BerRecord(x, e, b, self.digest, s.seed) for x, e, b in zip(grid, errors, bits)]

    def run_point(self, ebn0_db: float) -> BerRecord:
        return self.run_ber([ebn0_db])[0]

    def _decide(self, ebn0_db: float, target: float) -> float:
        """BER estimate good enough to tell which side of `target` it lies on.

        Stops early once a 3-sigma (Poisson) interval excludes `target`;
        otherwise follows the normal stopping rule.
        """
        s = self.scenario
        scale = math.sqrt(self.n0(ebn0_db))
        e = n = 0
        for chunk in self._chunks():
            e += self._errors(chunk, scale)
            n += self.bits_per_chunk
            if e >= s.min_errors or n >= s.max_bits:
                break
            spread = 3.0 * math.sqrt(e)
            if (e + spread + 3.0) / n < target or (e >= 10 and (e - spread) / n > target):
                break
        return e / n

    def required_ebn0(self, target: float, bracket=SEARCH_BRACKET,
                      tolerance: float = SEARCH_TOLERANCE_DB) -> RequiredResult:
        """Eb/N0 at which the BER crosses `target`, by bisection.

        The final bracket ends are re-evaluated under the full stopping rule
        and the crossing is interpolated linearly in ``log10(BER)``.  If the
        BER at the top of the bracket still exceeds the target the result
        is saturated (``inf``).
        """
        lo, hi = bracket
        trace = []

        def probe(x):
            b = self._decide(x, target)
            trace.append((x, b))
            return b

        if probe(hi) > target:
            return RequiredResult(target, math.inf, True, trace)
        if probe(lo) <= target:
            return RequiredResult(target, lo, False, trace)
        while hi - lo > tolerance:
            mid = 0.5 * (lo + hi)
            if probe(mid) > target:
                lo = mid
            else:
                hi = mid
        b_lo, b_hi = (r.ber for r in self.run_ber([lo, hi]))
        trace += [(lo, b_lo), (hi, b_hi)]
        if b_hi <= 0 or b_lo <= b_hi:
            value = hi
        else:
            frac = (math.log10(b_lo) - math.log10(target)) / (math.log10(b_lo) - math.log10(b_hi))
            value = lo + min(max(frac, 0.0), 1.0) * (hi - lo)
        return RequiredResult(target, value, False, trace)


def run_ber(scenario: Scenario, threads: int = 1) -> list:
    with BerEngine(scenario, threads) as engine:
        return engine.run_ber()


def required_ebn0(scenario: Scenario, target_ber: float = None, threads: int = 1) -> RequiredResult:
    target = scenario.target_ber if target_ber is None else target_ber
    if target is None:
        raise ValueError("no target BER given")
    with BerEngine(scenario, threads) as engine:
        return engine.required_ebn0(target)
