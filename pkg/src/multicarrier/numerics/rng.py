"""Reproducible, splittable random streams.

Every stream is keyed by ``(seed, stream_id)``; the underlying bit
generator is Philox (counter based), so a stream's draws depend only on
its key and never on which thread consumes it or in which order.
"""
import numpy as np


class SeededRng:
    """Single-owner random stream identified by ``(seed, stream_id)``."""

    def __init__(self, seed: int, stream_id: int = 0):
        if seed < 0 or stream_id < 0:
            raise ValueError("seed and stream_id must be non-negative")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self._gen = np.random.Generator(np.random.Philox(ss))

    def __repr__(self):
        return f"SeededRng(seed={self.seed}, stream_id={self.stream_id})"

    def spawn(self, stream_id: int) -> "SeededRng":
        """Independent stream sharing this stream's seed."""
        return SeededRng(self.seed, stream_id)

    def uniform(self, size) -> np.ndarray:
        """Uniform draws on (0, 1]."""
        return 1.0 - self._gen.random(size)

    def integers(self, high: int, size) -> np.ndarray:
        """Uniform integers on ``[0, high)``."""
        return self._gen.integers(0, high, size=size)

    def bits(self, size) -> np.ndarray:
        return self._gen.integers(0, 2, size=size, dtype=np.uint8)

    def complex_normal(self, size, variance: float = 1.0) -> np.ndarray:
        """Circular complex Gaussian with ``E|z|^2 = variance`` (Box-Muller)."""
        u1 = self.uniform(size)
        u2 = self._gen.random(size)
        unit = np.sqrt(-np.log(u1)) * np.exp(2j * np.pi * u2)
        return unit if variance == 1.0 else np.sqrt(variance) * unit

    def normal(self, size) -> np.ndarray:
        """Real standard normal draws (real part of a unit-variance pair, rescaled)."""
        z = self.complex_normal(size, variance=2.0)
        return z.real
