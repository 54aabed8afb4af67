"""Scenario description, result records and stable digests."""
from dataclasses import dataclass, field
import hashlib
import json
import math

from ..modem import parse_constellation
from ..uplink import UserScenario
from ..waveforms import SubbandAllocation, WaveformConfig, WaveformKind

DEFAULT_FRAME_SYMBOLS = 20
DEFAULT_MIN_ERRORS = 200
DEFAULT_MAX_BITS = 20_000_000
DEFAULT_CHUNK_FRAMES = 32


@dataclass(frozen=True)
class Scenario:
    """Everything needed to reproduce a BER experiment.

    Attributes
    ----------
    waveform : WaveformConfig
    users : tuple of UserScenario
        User 0 is the reference by default; the receiver is synchronized
        to `ref_user` and noise is calibrated to its Eb.
    measured_user : int
        Only this user's bits are counted.
    ebn0_grid : tuple of float
        Strictly increasing Eb/N0 points in dB.
    frame_symbols : int
        Symbols per frame; the first and last are not counted.
    min_errors, max_bits : int
        A point stops at `min_errors` bit errors or `max_bits` bits.
    chunk_frames : int
        Frames simulated per random-stream chunk (the unit of work).
    """

    waveform: WaveformConfig
    users: tuple
    measured_user: int = 0
    ref_user: int = 0
    ebn0_grid: tuple = ()
    target_ber: float = None
    frame_symbols: int = DEFAULT_FRAME_SYMBOLS
    min_errors: int = DEFAULT_MIN_ERRORS
    max_bits: int = DEFAULT_MAX_BITS
    seed: int = 0
    theta0: float = 0.0
    chunk_frames: int = DEFAULT_CHUNK_FRAMES

    def __post_init__(self):
        users = tuple(self.users)
        object.__setattr__(self, "users", users)
        object.__setattr__(self, "ebn0_grid", tuple(float(x) for x in self.ebn0_grid))
        if not users:
            raise ValueError("scenario needs at least one user")
        for name in ("measured_user", "ref_user"):
            idx = getattr(self, name)
            if not 0 <= idx < len(users):
                raise ValueError(f"{name} {idx} out of range for {len(users)} users")
        grid = self.ebn0_grid
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("ebn0_grid must be strictly increasing")
        if self.frame_symbols < 3:
            raise ValueError("frame_symbols must be at least 3")
        if self.min_errors < 100:
            raise ValueError("min_errors must be at least 100")
        if self.max_bits <= 0 or self.chunk_frames <= 0:
            raise ValueError("max_bits and chunk_frames must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.target_ber is not None and not 0 < self.target_ber < 0.5:
            raise ValueError("target_ber must lie in (0, 0.5)")
        for u in users:
            u.alloc.validate(self.waveform)
        for i, a in enumerate(users):
            for b in users[i + 1:]:
                if a.alloc.overlaps(b.alloc):
                    raise ValueError("users have overlapping allocations")

    def replace(self, **changes) -> "Scenario":
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(changes)
        return Scenario(**d)

    def to_dict(self) -> dict:
        w = self.waveform
        return {
            "waveform": {
                "kind": w.kind.value, "N": w.N, "N_CP": w.N_CP, "L": w.L,
                "pcc_weighting": w.pcc_weighting, "pcc_cp": w.pcc_cp,
                "sidelobe_atten_db": w.sidelobe_atten_db,
            },
            "users": [user_to_dict(u) for u in self.users],
            "measured_user": self.measured_user,
            "ref_user": self.ref_user,
            "ebn0_grid": list(self.ebn0_grid),
            "target_ber": self.target_ber,
            "frame_symbols": self.frame_symbols,
            "min_errors": self.min_errors,
            "max_bits": self.max_bits,
            "seed": self.seed,
            "theta0": self.theta0,
            "chunk_frames": self.chunk_frames,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        d = dict(d)
        w = dict(d.pop("waveform"))
        w["kind"] = WaveformKind.parse(w["kind"])
        users = tuple(user_from_dict(u) for u in d.pop("users"))
        return cls(waveform=WaveformConfig(**w), users=users, **d)

    @property
    def digest(self) -> str:
        """Hash of the physical setup and stopping rule.

        The Eb/N0 grid and target are left out: a point's result does not
        depend on which other points are simulated alongside it.
        """
        d = self.to_dict()
        d.pop("ebn0_grid")
        d.pop("target_ber")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def user_to_dict(u: UserScenario) -> dict:
    return {
        "subbands": list(u.alloc.start_indices),
        "subband_size": u.alloc.subband_size,
        "guard": u.alloc.guard,
        "constellation": u.constellation.order,
        "tau": u.tau,
        "dfT": u.dfT,
        "gain_db": u.gain_db,
    }


def user_from_dict(d: dict) -> UserScenario:
    alloc = SubbandAllocation(tuple(d["subbands"]), d.get("subband_size", 12), d.get("guard", 0))
    return UserScenario(alloc, parse_constellation(d["constellation"]), float(d.get("tau", 0.0)),
                        float(d.get("dfT", 0.0)), float(d.get("gain_db", 0.0)))


@dataclass(frozen=True)
class BerRecord:
    """Bit error count at one Eb/N0 point."""

    ebn0_db: float
    bit_errors: int
    bits: int
    scenario_digest: str
    seed: int = 0

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits if self.bits else 0.0

    @property
    def std_err(self) -> float:
        return math.sqrt(self.ber * (1.0 - self.ber) / self.bits) if self.bits else 0.0

    @property
    def upper_bound(self) -> bool:
        """No errors seen: `ber` is only bounded above (about ``3 / bits``)."""
        return self.bit_errors == 0


@dataclass(frozen=True)
class RequiredResult:
    """Eb/N0 (dB) needed to reach a target BER; ``inf`` when saturated."""

    target_ber: float
    ebn0_db: float
    saturated: bool
    evaluations: list = field(default_factory=list, compare=False)
