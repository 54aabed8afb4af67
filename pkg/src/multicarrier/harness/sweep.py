"""Canonical experiment families and deterministic result files."""
from dataclasses import dataclass, field
from enum import Enum
import csv
import io
import json
import math
import os

import numpy as np

from .. import analysis
from ..modem import constellation
from ..numerics import SeededRng
from ..uplink import UserScenario
from ..waveforms import SubbandAllocation, WaveformConfig, WaveformKind
from .engine import BerEngine
from .scenario import Scenario

TOOL_NAME = "multicarrier"
TOOL_VERSION = "0.1.0"

BER_COLUMNS = ["ebn0_db", "ber", "std_err", "bit_errors", "bits", "scenario_digest", "upper_bound_flag"]
REQUIRED_COLUMNS = ["offset_value", "required_ebn0_db", "saturated_flag"]

USER1_START = 100
SUBBAND_SIZE = 12
ORDERS = (4, 16, 64)


class Family(str, Enum):
    AWGN_CURVES = "awgn_curves"
    TIME_OFFSET_CURVES = "time_offset_curves"
    FREQ_OFFSET_CURVES = "freq_offset_curves"
    REQUIRED_VS_TAU = "required_vs_tau"
    REQUIRED_VS_DFT = "required_vs_dft"
    TWO_USER_GRID = "two_user_grid"
    SPECTRA = "spectra"
    ENVELOPES = "envelopes"
    ICI_SURFACES = "ici_surfaces"

    @classmethod
    def parse(cls, value) -> "Family":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower().replace("-", "_"))
        except ValueError:
            names = ", ".join(f.value for f in cls)
            raise ValueError(f"unknown family {value!r}; expected one of {names}") from None


@dataclass
class SweepOptions:
    """Overrides applied to every scenario of a family."""

    seed: int = 0
    threads: int = 1
    min_errors: int = None
    max_bits: int = None
    frame_symbols: int = None
    ebn0_grid: tuple = None
    orders: tuple = ORDERS
    kinds: tuple = None
    target_ber: float = 1e-2

    def apply(self, s: Scenario) -> Scenario:
        changes = {"seed": self.seed}
        for name in ("min_errors", "max_bits", "frame_symbols"):
            if getattr(self, name) is not None:
                changes[name] = getattr(self, name)
        if self.ebn0_grid is not None:
            changes["ebn0_grid"] = tuple(self.ebn0_grid)
        return s.replace(**changes)


@dataclass
class ResultSet:
    """Tables keyed by file stem, plus the manifest entries describing them."""

    tables: dict = field(default_factory=dict)
    manifest: dict = field(default_factory=dict)

    def add(self, stem: str, columns: list, rows: list, config) -> None:
        self.tables[stem] = (columns, rows)
        self.manifest[stem] = config


# waveform variants: (label, config)
def waveform_variants(kinds=None):
    variants = [
        ("cp_ofdm", WaveformConfig(WaveformKind.CP_OFDM)),
        ("pcc_ofdm", WaveformConfig(WaveformKind.PCC_OFDM)),
        ("pcc_ofdm_noweight", WaveformConfig(WaveformKind.PCC_OFDM, pcc_weighting=False)),
        ("ufmc", WaveformConfig(WaveformKind.UFMC)),
    ]
    if kinds is not None:
        labels = {v[0] for v in variants}
        wanted = {k if k in labels else WaveformKind.parse(k).value for k in kinds}
        variants = [v for v in variants if v[0] in wanted]
    return variants


def default_grid(cfg: WaveformConfig, order: int) -> tuple:
    """Eb/N0 points spanning BER of roughly 1e-1 to 1e-5."""
    start = {4: 0.0, 16: 4.0, 64: 8.0}[order]
    if cfg.kind is WaveformKind.PCC_OFDM and cfg.pcc_weighting:
        start -= 2.0
    return tuple(start + 1.0 * i for i in range(11))


def single_user(cfg, order, tau=0.0, dfT=0.0, seed=0) -> Scenario:
    u = UserScenario(SubbandAllocation((USER1_START,), SUBBAND_SIZE), constellation(order), tau, dfT)
    return Scenario(cfg, (u,), ebn0_grid=default_grid(cfg, order), seed=seed)


def two_users(cfg, order, guard, tau2=0.0, dfT2=0.0, gain2_db=0.0, seed=0) -> Scenario:
    """User 1's subband, then `guard` empty subcarriers, then user 2's subband."""
    c = constellation(order)
    u1 = UserScenario(SubbandAllocation((USER1_START,), SUBBAND_SIZE), c)
    u2 = UserScenario(SubbandAllocation((USER1_START + SUBBAND_SIZE + guard,), SUBBAND_SIZE), c,
                      tau2, dfT2, gain2_db)
    return Scenario(cfg, (u1, u2), ebn0_grid=default_grid(cfg, order), seed=seed)


def ber_rows(records, prefix=()):
    return [list(prefix) + [r.ebn0_db, r.ber, r.std_err, r.bit_errors, r.bits, r.scenario_digest,
                            int(r.upper_bound)] for r in records]


def _run_curves(scenarios, opts: SweepOptions, stem: str, prefix_cols, results: ResultSet):
    rows, configs = [], []
    for prefix, s in scenarios:
        s = opts.apply(s)
        with BerEngine(s, opts.threads) as engine:
            rows += ber_rows(engine.run_ber(), prefix)
        configs.append(dict(s.to_dict(), digest=s.digest))
    results.add(stem, list(prefix_cols) + BER_COLUMNS, rows, configs)


def _curve_family(opts, stem, tau=0.0, dfT=0.0):
    items = []
    for label, cfg in waveform_variants(opts.kinds):
        for order in opts.orders:
            items.append(((label, order, tau, dfT), single_user(cfg, order, tau, dfT)))
    results = ResultSet()
    _run_curves(items, opts, stem, ["waveform", "constellation", "tau", "dfT"], results)
    return results


def _required_family(opts, stem, values, param):
    results = ResultSet()
    kinds = opts.kinds or ("cp_ofdm", "pcc_ofdm", "ufmc")
    for label, cfg in waveform_variants(kinds):
        for order in opts.orders:
            rows, configs = [], []
            for v in values:
                s = opts.apply(single_user(cfg, order, **{param: v}))
                s = s.replace(target_ber=opts.target_ber)
                with BerEngine(s, opts.threads) as engine:
                    r = engine.required_ebn0(opts.target_ber)
                rows.append([v, r.ebn0_db, int(r.saturated)])
                configs.append(dict(s.to_dict(), digest=s.digest))
            results.add(f"{stem}_{label}_{order}qam", REQUIRED_COLUMNS, rows, configs)
    return results


def _offsets(lo, hi, step):
    n = int(round((hi - lo) / step))
    return [round(lo + i * step, 10) for i in range(n + 1)]


TWO_USER_CASES = (
    # (tau2, dfT2)
    (0.0, 0.0), (0.05, 0.0), (0.0, 0.05), (0.0, 0.2), (0.05, 0.05), (0.05, 0.2),
)


def run_family(family, opts: SweepOptions = None) -> ResultSet:
    family = Family.parse(family)
    opts = opts or SweepOptions()
    if family is Family.AWGN_CURVES:
        return _curve_family(opts, "awgn_curves")
    if family is Family.TIME_OFFSET_CURVES:
        return _curve_family(opts, "time_offset_curves", tau=0.05)
    if family is Family.FREQ_OFFSET_CURVES:
        return _curve_family(opts, "freq_offset_curves", dfT=0.05)
    if family is Family.REQUIRED_VS_TAU:
        return _required_family(opts, "required_vs_tau", _offsets(-0.2, 0.2, 0.02), "tau")
    if family is Family.REQUIRED_VS_DFT:
        return _required_family(opts, "required_vs_dft", _offsets(0.0, 0.3, 0.02), "dfT")
    if family is Family.TWO_USER_GRID:
        results = ResultSet()
        cols = ["waveform", "constellation", "guard", "tau2", "dfT2", "gain2_db"]
        for tau2, dfT2 in TWO_USER_CASES:
            items = []
            for label, cfg in waveform_variants(opts.kinds or ("cp_ofdm", "pcc_ofdm", "ufmc")):
                for order in opts.orders:
                    for guard in (SUBBAND_SIZE, 0):
                        for gain in (0.0, 10.0):
                            s = two_users(cfg, order, guard, tau2, dfT2, gain)
                            items.append(((label, order, guard, tau2, dfT2, gain), s))
            _run_curves(items, opts, f"two_user_tau{tau2:g}_dft{dfT2:g}", cols, results)
        return results
    if family is Family.SPECTRA:
        return spectra(opts.seed)
    if family is Family.ENVELOPES:
        return envelopes()
    return ici_surfaces()


def spectra(seed: int, num_symbols: int = 600, guard: int = SUBBAND_SIZE) -> ResultSet:
    """Two users' subbands separated by a guard band, per waveform."""
    results = ResultSet()
    a1 = SubbandAllocation((USER1_START,), SUBBAND_SIZE)
    a2 = SubbandAllocation((USER1_START + SUBBAND_SIZE + guard,), SUBBAND_SIZE)
    for i, (label, cfg) in enumerate(waveform_variants(("cp_ofdm", "pcc_ofdm", "ufmc"))):
        est = analysis.psd_estimate(cfg, [a1, a2], num_symbols, SeededRng(seed, i))
        rows = [[f, p] for f, p in zip(est.freqs, est.psd_db)]
        results.add(f"spectrum_{label}", ["freq_subcarriers", "psd_db"], rows,
                    {"waveform": label, "subbands": [a1.start_indices[0], a2.start_indices[0]],
                     "subband_size": SUBBAND_SIZE, "num_symbols": num_symbols, "seed": seed})
    return results


def envelopes(alloc: SubbandAllocation = None) -> ResultSet:
    results = ResultSet()
    alloc = alloc or SubbandAllocation((USER1_START,), SUBBAND_SIZE)
    for label, cfg in waveform_variants(("cp_ofdm", "pcc_ofdm", "ufmc")):
        env = analysis.waveform_envelope(cfg, alloc)
        results.add(f"envelope_{label}", ["sample", "envelope"], [[n, v] for n, v in enumerate(env)],
                    {"waveform": label, "span": int(env.size), "subbands": list(alloc.start_indices)})
    return results


def ici_surfaces(N: int = 256, p: int = 13, dfT: float = 0.05) -> ResultSet:
    results = ResultSet()
    for domain, offset in (("time", p), ("freq", dfT)):
        for pcc in ("none", "noweight", "weighted"):
            m = analysis.interference_matrix(domain, N, offset, pcc)
            rows = [[i] + list(row) for i, row in enumerate(m.magnitudes)]
            cols = ["row"] + [str(k) for k in range(m.shape[1])]
            results.add(f"ici_{domain}_{pcc}", cols, rows,
                        {"domain": domain, "N": N, "offset": offset, "pcc": pcc})
    return results


# output ------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v) or math.isnan(v):
            return str(v)
        return repr(round(v, 12))
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def render_table(columns, rows, fmt: str = "csv") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()
    if fmt == "json":
        data = [dict(zip(columns, _jsonable(list(row)))) for row in rows]
        return json.dumps(data, indent=1, sort_keys=False) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def write_results(results: ResultSet, out_dir, fmt: str = "csv", seed: int = 0, command: str = "") -> list:
    """Write every table and ``manifest.json``; returns the written paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    files = {}
    for stem in sorted(results.tables):
        columns, rows = results.tables[stem]
        name = f"{stem}.{fmt}"
        path = os.path.join(out_dir, name)
        with open(path, "w", newline="") as fh:
            fh.write(render_table(columns, rows, fmt))
        paths.append(path)
        files[name] = _jsonable(results.manifest[stem])
    manifest = {"tool": TOOL_NAME, "version": TOOL_VERSION, "command": command, "seed": seed, "files": files}
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as fh:
        fh.write(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    paths.append(path)
    return paths
