"""Gray-labelled square QAM mapping, hard-decision demapping and AWGN theory."""
from dataclasses import dataclass, field
from functools import lru_cache
import math

import numpy as np
from scipy.special import erfc

SUPPORTED_ORDERS = (4, 16, 64)


def gray_to_binary(g: int) -> int:
    b = 0
    while g:
        b ^= g
        g >>= 1
    return b


def qfunc(x):
    """Gaussian tail probability Q(x)."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


@dataclass(frozen=True)
class Constellation:
    """Square M-QAM with per-axis Gray labelling and unit average energy.

    A label's first ``log2(M)/2`` bits select the in-phase level and the
    remaining bits the quadrature level.  On each axis bit value 0 maps to
    the positive side (for 4-QAM: 0 -> +1, 1 -> -1).

    Attributes
    ----------
    order : int
        Number of points M.
    points : ndarray, shape (M,)
        ``points[label]`` is the symbol carrying the integer `label`.
    bit_labels : ndarray, shape (M, log2 M)
        Row ``label`` holds its bits, most significant first.
    """

    order: int
    points: np.ndarray = field(init=False, repr=False)
    bit_labels: np.ndarray = field(init=False, repr=False)
    axis_levels: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.order not in SUPPORTED_ORDERS:
            raise ValueError(f"unsupported constellation order {self.order}; expected one of {SUPPORTED_ORDERS}")
        side = self.side
        scale = 1.0 / math.sqrt(2.0 * (self.order - 1) / 3.0)
        # axis_levels[g] = amplitude carrying per-axis Gray label g
        levels = np.array([(side - 1 - 2 * gray_to_binary(g)) * scale for g in range(side)])
        half = self.bits_per_symbol // 2
        labels = np.arange(self.order)
        points = levels[labels >> half] + 1j * levels[labels & (side - 1)]
        shifts = np.arange(self.bits_per_symbol - 1, -1, -1)
        bit_labels = ((labels[:, None] >> shifts) & 1).astype(np.uint8)
        for arr in (levels, points, bit_labels):
            arr.setflags(write=False)
        object.__setattr__(self, "axis_levels", levels)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "bit_labels", bit_labels)

    @property
    def side(self) -> int:
        return math.isqrt(self.order)

    @property
    def bits_per_symbol(self) -> int:
        return int(math.log2(self.order))

    @property
    def min_distance(self) -> float:
        return 2.0 / math.sqrt(2.0 * (self.order - 1) / 3.0)

    @property
    def name(self) -> str:
        return f"{self.order}qam"


@lru_cache(maxsize=None)
def constellation(order: int) -> Constellation:
    return Constellation(order)


def parse_constellation(text) -> Constellation:
    """Accept ``16``, ``"16"``, ``"16qam"`` or ``"16-QAM"``."""
    if isinstance(text, Constellation):
        return text
    s = str(text).lower().replace("-", "").replace("_", "")
    if s.endswith("qam"):
        s = s[:-3]
    try:
        order = int(s)
    except ValueError:
        raise ValueError(f"cannot parse constellation {text!r}") from None
    return constellation(order)


def qam_map(bits, c: Constellation) -> np.ndarray:
    """Map bits (last axis) to symbols, ``log2 M`` bits per symbol.

    Leading axes are preserved, so a ``(frames, symbols, nbits)`` block maps
    to ``(frames, symbols, nbits / log2 M)``.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    k = c.bits_per_symbol
    if bits.ndim == 0 or bits.shape[-1] == 0:
        raise ValueError("empty bit block")
    if bits.shape[-1] % k:
        raise ValueError(f"bit count {bits.shape[-1]} not divisible by {k} bits/symbol")
    grouped = bits.reshape(bits.shape[:-1] + (bits.shape[-1] // k, k))
    weights = 1 << np.arange(k - 1, -1, -1)
    labels = grouped.astype(np.int64) @ weights
    return c.points[labels]


def _axis_decide(values, c: Constellation) -> np.ndarray:
    # argmin returns the first minimum, i.e. the smallest per-axis label on ties
    dist = np.abs(values[..., None] - c.axis_levels)
    return np.argmin(dist, axis=-1)


def qam_demap_labels(symbols, c: Constellation) -> np.ndarray:
    """Integer label of the nearest constellation point for each symbol."""
    symbols = np.asarray(symbols, dtype=np.complex128)
    half = c.bits_per_symbol // 2
    gi = _axis_decide(symbols.real, c)
    gq = _axis_decide(symbols.imag, c)
    return (gi << half) | gq


def qam_demap(symbols, c: Constellation) -> np.ndarray:
    """Hard decisions: nearest point's bits, concatenated along the last axis.

    Ties are resolved toward the smaller label index.
    """
    labels = qam_demap_labels(symbols, c)
    bits = c.bit_labels[labels]
    return bits.reshape(bits.shape[:-2] + (-1,))


def theoretical_ber(c, ebn0_db):
    """Exact bit error probability of Gray square M-QAM in AWGN.

    Uses the per-bit-position sum of erfc terms for Gray-coded PAM on each
    axis.  `c` may be a :class:`Constellation` or an order.
    """
    order = c.order if isinstance(c, Constellation) else int(c)
    if order not in SUPPORTED_ORDERS:
        raise ValueError(f"unsupported constellation order {order}")
    ebn0 = 10.0 ** (np.asarray(ebn0_db, dtype=float) / 10.0)
    side = math.isqrt(order)
    m = int(math.log2(order))
    arg = np.sqrt(3.0 * m * ebn0 / (2.0 * (order - 1)))
    total = np.zeros_like(arg)
    nbits_axis = int(math.log2(side))
    for k in range(1, nbits_axis + 1):
        pk = np.zeros_like(arg)
        upper = int((1 - 2.0 ** -k) * side)
        for i in range(upper):
            w = math.floor(i * 2 ** (k - 1) / side)
            coef = (-1) ** w * (2 ** (k - 1) - math.floor(i * 2 ** (k - 1) / side + 0.5))
            pk = pk + coef * erfc((2 * i + 1) * arg)
        total = total + pk / side
    ber = total / nbits_axis
    return float(ber) if np.ndim(ber) == 0 else ber


def ebn0_for_ber(c, target: float, lo: float = -10.0, hi: float = 40.0) -> float:
    """Eb/N0 in dB at which :func:`theoretical_ber` equals `target`."""
    from scipy.optimize import brentq

    # the floor keeps the log finite where the tail underflows
    return brentq(lambda x: math.log(max(theoretical_ber(c, x), 1e-300)) - math.log(target), lo, hi, xtol=1e-10)
