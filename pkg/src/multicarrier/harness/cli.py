"""Command line entry point: ``multicarrier <command> [options]``."""
import argparse
import sys

from .. import analysis
from ..modem import parse_constellation
from ..numerics import SeededRng
from ..uplink import UserScenario
from ..waveforms import SubbandAllocation, WaveformConfig, WaveformKind
from .config import ConfigError, load_config
from .engine import BerEngine
from .scenario import Scenario
from .sweep import (BER_COLUMNS, REQUIRED_COLUMNS, Family, ResultSet, SweepOptions, ber_rows,
                    default_grid, run_family, write_results)


def _grid(text):
    """``"0:2:10"`` (start:step:stop, inclusive) or ``"0,3,6"``."""
    if ":" in text:
        start, step, stop = (float(v) for v in text.split(":"))
        if step <= 0:
            raise argparse.ArgumentTypeError("grid step must be positive")
        n = int(round((stop - start) / step))
        return tuple(round(start + i * step, 10) for i in range(n + 1))
    return tuple(float(v) for v in text.split(","))


def _common(p):
    g = p.add_argument_group("global options")
    g.add_argument("--config", help="YAML scenario file")
    g.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
    g.add_argument("--out-dir", default="out", help="directory for result files")
    g.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    g.add_argument("--format", choices=("csv", "json"), default="csv", help="table format")


def _scenario_args(p):
    p.add_argument("--waveform", default=None, help="cp_ofdm, pcc_ofdm or ufmc")
    p.add_argument("--no-weighting", action="store_true", help="PCC receiver without weighting-and-adding")
    p.add_argument("--mod", default=None, help="constellation: 4qam, 16qam or 64qam")
    p.add_argument("--tau", type=float, default=None, help="timing offset (fraction of N)")
    p.add_argument("--dfT", "--dft", dest="dfT", type=float, default=None, help="frequency offset (subcarrier spacings)")
    p.add_argument("--subband", type=int, default=None, help="first subcarrier of the user's subband")
    p.add_argument("--grid", type=_grid, default=None, help="Eb/N0 grid, start:step:stop or a,b,c")
    p.add_argument("--min-errors", type=int, default=None)
    p.add_argument("--max-bits", type=int, default=None)
    p.add_argument("--frame-symbols", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multicarrier", description="Multicarrier waveform laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ber", help="BER versus Eb/N0 for one scenario")
    _scenario_args(p)
    _common(p)

    p = sub.add_parser("required", help="Eb/N0 needed for a target BER")
    _scenario_args(p)
    p.add_argument("--target", type=float, default=None, help="target BER (default 1e-2)")
    _common(p)

    p = sub.add_parser("sweep", help="run a canonical experiment family")
    p.add_argument("--family", required=True, help=", ".join(f.value for f in Family))
    p.add_argument("--waveforms", default=None, help="comma-separated subset of waveforms")
    p.add_argument("--orders", default=None, help="comma-separated constellation orders")
    p.add_argument("--grid", type=_grid, default=None, help="override every Eb/N0 grid")
    p.add_argument("--min-errors", type=int, default=None)
    p.add_argument("--max-bits", type=int, default=None)
    p.add_argument("--frame-symbols", type=int, default=None)
    p.add_argument("--target", type=float, default=1e-2, help="target BER for required-Eb/N0 families")
    _common(p)

    p = sub.add_parser("ici", help="interference matrix magnitudes")
    p.add_argument("--kind", choices=("time", "freq"), required=True)
    p.add_argument("--N", type=int, default=256)
    p.add_argument("--p", type=int, default=None, help="sample offset (time)")
    p.add_argument("--dfT", "--dft", dest="dfT", type=float, default=None, help="frequency offset (freq)")
    p.add_argument("--pcc", choices=("none", "noweight", "weighted"), default="none")
    _common(p)

    p = sub.add_parser("psd", help="Welch PSD of a random-data transmit stream")
    p.add_argument("--waveform", default="cp_ofdm")
    p.add_argument("--subbands", default="100", help="comma-separated subband starts, one per user")
    p.add_argument("--subband-size", type=int, default=12)
    p.add_argument("--symbols", type=int, default=600)
    p.add_argument("--N", type=int, default=256)
    _common(p)

    p = sub.add_parser("envelope", help="RMS time envelope of one symbol")
    p.add_argument("--waveform", default="cp_ofdm")
    p.add_argument("--subband", type=int, default=100)
    p.add_argument("--subband-size", type=int, default=12)
    p.add_argument("--N", type=int, default=256)
    _common(p)
    return parser


def _resolve_scenario(args) -> Scenario:
    """Defaults, then the config file, then explicit flags."""
    if args.config:
        s = load_config(args.config)
    else:
        kind = WaveformKind.parse(args.waveform or "cp_ofdm")
        cfg = WaveformConfig(kind)
        c = parse_constellation(args.mod or "4qam")
        u = UserScenario(SubbandAllocation((100 if args.subband is None else args.subband,)), c)
        s = Scenario(cfg, (u,), ebn0_grid=default_grid(cfg, c.order))
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.waveform is not None or args.no_weighting:
        w = s.waveform
        kind = WaveformKind.parse(args.waveform) if args.waveform else w.kind
        changes["waveform"] = WaveformConfig(kind, w.N, w.N_CP, w.L, w.pcc_weighting and not args.no_weighting, w.pcc_cp,
                                             w.sidelobe_atten_db)
    m = s.measured_user
    user = s.users[m]
    if any(v is not None for v in (args.mod, args.tau, args.dfT, args.subband)):
        alloc = user.alloc
        if args.subband is not None:
            alloc = SubbandAllocation((args.subband,), alloc.subband_size, alloc.guard)
        user = UserScenario(alloc, parse_constellation(args.mod) if args.mod else user.constellation,
                            user.tau if args.tau is None else args.tau,
                            user.dfT if args.dfT is None else args.dfT, user.gain_db)
        changes["users"] = s.users[:m] + (user,) + s.users[m + 1:]
    if args.grid is not None:
        changes["ebn0_grid"] = args.grid
    elif args.mod is not None and not args.config:
        changes["ebn0_grid"] = default_grid(changes.get("waveform", s.waveform), user.constellation.order)
    for flag, name in (("min_errors", "min_errors"), ("max_bits", "max_bits"), ("frame_symbols", "frame_symbols")):
        if getattr(args, flag) is not None:
            changes[name] = getattr(args, flag)
    return s.replace(**changes) if changes else s


def _cmd_ber(args) -> ResultSet:
    s = _resolve_scenario(args)
    with BerEngine(s, args.threads) as engine:
        records = engine.run_ber()
    results = ResultSet()
    results.add("ber", BER_COLUMNS, ber_rows(records), dict(s.to_dict(), digest=s.digest))
    for r in records:
        flag = " (upper bound)" if r.upper_bound else ""
        print(f"{r.ebn0_db:8.3f} dB  ber={r.ber:.4e}  +/-{r.std_err:.1e}  errors={r.bit_errors}  bits={r.bits}{flag}")
    return results


def _cmd_required(args) -> ResultSet:
    s = _resolve_scenario(args)
    target = args.target if args.target is not None else (s.target_ber or 1e-2)
    s = s.replace(target_ber=target)
    with BerEngine(s, args.threads) as engine:
        r = engine.required_ebn0(target)
    user = s.users[s.measured_user]
    offset = user.tau if user.tau else user.dfT
    results = ResultSet()
    results.add("required", REQUIRED_COLUMNS, [[offset, r.ebn0_db, int(r.saturated)]],
                dict(s.to_dict(), digest=s.digest))
    print(f"{r.ebn0_db:.3f}" + (" (saturated: target not reached within bracket)" if r.saturated else ""))
    return results


def _cmd_sweep(args) -> ResultSet:
    family = Family.parse(args.family)
    opts = SweepOptions(seed=args.seed or 0, threads=args.threads, min_errors=args.min_errors,
                        max_bits=args.max_bits, frame_symbols=args.frame_symbols, ebn0_grid=args.grid,
                        target_ber=args.target)
    if args.orders:
        opts.orders = tuple(parse_constellation(o).order for o in args.orders.split(","))
    if args.waveforms:
        opts.kinds = tuple(args.waveforms.split(","))
    if args.config:
        base = load_config(args.config)
        for name in ("min_errors", "max_bits", "frame_symbols"):
            if getattr(opts, name) is None:
                setattr(opts, name, getattr(base, name))
        if args.seed is None:
            opts.seed = base.seed
    results = run_family(family, opts)
    print(f"{family.value}: {len(results.tables)} table(s)")
    return results


def _cmd_ici(args) -> ResultSet:
    if args.kind == "time":
        if args.p is None:
            raise ValueError("--p is required for --kind time")
        offset = args.p
    else:
        if args.dfT is None:
            raise ValueError("--dfT is required for --kind freq")
        offset = args.dfT
    m = analysis.interference_matrix(args.kind, args.N, offset, args.pcc)
    results = ResultSet()
    rows = [[i] + list(row) for i, row in enumerate(m.magnitudes)]
    results.add(f"ici_{args.kind}_{args.pcc}", ["row"] + [str(k) for k in range(m.shape[1])], rows,
                {"domain": args.kind, "N": args.N, "offset": offset, "pcc": args.pcc})
    print(f"{m.shape[0]}x{m.shape[1]} matrix")
    return results


def _cmd_psd(args) -> ResultSet:
    cfg = WaveformConfig(WaveformKind.parse(args.waveform), N=args.N)
    allocs = [SubbandAllocation((int(s),), args.subband_size) for s in args.subbands.split(",")]
    seed = args.seed or 0
    est = analysis.psd_estimate(cfg, allocs, args.symbols, SeededRng(seed, 0))
    results = ResultSet()
    results.add(f"psd_{cfg.kind.value}", ["freq_subcarriers", "psd_db"],
                [[f, p] for f, p in zip(est.freqs, est.psd_db)],
                {"waveform": cfg.kind.value, "N": args.N, "subbands": [a.start_indices[0] for a in allocs],
                 "subband_size": args.subband_size, "num_symbols": args.symbols, "seed": seed})
    return results


def _cmd_envelope(args) -> ResultSet:
    cfg = WaveformConfig(WaveformKind.parse(args.waveform), N=args.N)
    alloc = SubbandAllocation((args.subband,), args.subband_size)
    env = analysis.waveform_envelope(cfg, alloc)
    results = ResultSet()
    results.add(f"envelope_{cfg.kind.value}", ["sample", "envelope"], [[n, v] for n, v in enumerate(env)],
                {"waveform": cfg.kind.value, "N": args.N, "span": int(env.size), "subband": args.subband})
    print(f"span {env.size} samples")
    return results


_COMMANDS = {
    "ber": _cmd_ber, "required": _cmd_required, "sweep": _cmd_sweep,
    "ici": _cmd_ici, "psd": _cmd_psd, "envelope": _cmd_envelope,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        results = _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in write_results(results, args.out_dir, args.format, args.seed or 0, _canonical(args)):
        print(path)
    return 0


def _canonical(args) -> str:
    """Command description for the manifest, excluding options that must not affect output."""
    skip = {"threads", "out_dir"}
    parts = [args.command] + [f"{k}={v}" for k, v in sorted(vars(args).items())
                              if k not in skip and k != "command" and v is not None]
    return " ".join(parts)


if __name__ == "__main__":
    sys.exit(main())
