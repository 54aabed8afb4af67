"""YAML scenario files with line/field diagnostics.

Schema (every key optional except ``users``)::

    waveform:
      kind: pcc_ofdm          # cp_ofdm | pcc_ofdm | ufmc (aliases: cp, pcc)
      N: 256
      N_CP: 32
      L: 33
      pcc_weighting: true
      pcc_cp: 0
      sidelobe_atten_db: 40
    users:
      - subbands: [100]       # first subcarrier of each subband
        subband_size: 12
        guard: 0
        constellation: 16qam  # 4, 16 or 64 (with or without "qam")
        tau: 0.0
        dfT: 0.0
        gain_db: 0.0
    measured_user: 0
    ref_user: 0
    ebn0_grid: [0, 2, 4, 6]
    target_ber: 0.01
    frame_symbols: 20
    min_errors: 200
    max_bits: 20000000
    seed: 1
    theta0: 0.0
    chunk_frames: 32
"""
import yaml

from ..modem import parse_constellation
from ..uplink import UserScenario
from ..waveforms import SubbandAllocation, WaveformConfig, WaveformKind
from .scenario import Scenario


class ConfigError(ValueError):
    """Invalid configuration; the message carries ``source:line: field: problem``."""

    def __init__(self, source, line, field, problem):
        self.source, self.line, self.field, self.problem = source, line, field, problem
        where = f"{source}:{line}" if line is not None else str(source)
        super().__init__(f"{where}: {field}: {problem}")


_WAVEFORM_FIELDS = {
    "kind": str, "N": int, "N_CP": int, "L": int, "pcc_weighting": bool,
    "pcc_cp": int, "sidelobe_atten_db": float,
}
_USER_FIELDS = {
    "subbands": list, "subband_size": int, "guard": int, "constellation": str,
    "tau": float, "dfT": float, "gain_db": float,
}
_TOP_FIELDS = {
    "waveform": dict, "users": list, "measured_user": int, "ref_user": int,
    "ebn0_grid": list, "target_ber": float, "frame_symbols": int, "min_errors": int,
    "max_bits": int, "seed": int, "theta0": float, "chunk_frames": int,
}


class _Node:
    """Plain value plus the 1-based source line it came from."""

    def __init__(self, value, line):
        self.value, self.line = value, line


def _convert(node):
    line = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        out = {}
        for k, v in node.value:
            out[k.value] = _convert(v)
        return _Node(out, line)
    if isinstance(node, yaml.SequenceNode):
        return _Node([_convert(v) for v in node.value], line)
    value = yaml.safe_load(yaml.serialize(node))
    return _Node(value, line)


def _typed(node, want, source, field):
    v = node.value
    if want is float:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(source, node.line, field, f"expected a number, got {v!r}")
        return float(v)
    if want is int:
        if isinstance(v, bool) or not isinstance(v, int):
            if isinstance(v, float) and v.is_integer():
                return int(v)
            raise ConfigError(source, node.line, field, f"expected an integer, got {v!r}")
        return v
    if want is bool:
        if not isinstance(v, bool):
            raise ConfigError(source, node.line, field, f"expected true or false, got {v!r}")
        return v
    if want is str:
        if isinstance(v, (dict, list)) or v is None:
            raise ConfigError(source, node.line, field, f"expected a scalar, got {type(v).__name__}")
        return str(v)
    if not isinstance(v, want):
        raise ConfigError(source, node.line, field, f"expected a {want.__name__}")
    return v


def _section(node, schema, source, prefix):
    if not isinstance(node.value, dict):
        raise ConfigError(source, node.line, prefix or "<root>", "expected a mapping")
    out = {}
    for key, child in node.value.items():
        field = f"{prefix}.{key}" if prefix else str(key)
        if key not in schema:
            raise ConfigError(source, child.line, field, f"unknown key (allowed: {', '.join(schema)})")
        out[key] = (_typed(child, schema[key], source, field), child)
    return out


def _guard(fn, source, node, field):
    try:
        return fn()
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(source, node.line, field, str(exc)) from None


def parse_config(text: str, source: str = "<config>", base: dict = None) -> Scenario:
    """Build a :class:`Scenario` from YAML text.

    `base` supplies defaults (for example from command-line flags) that
    the file overrides.
    """
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(source, line, "<syntax>", str(getattr(exc, "problem", exc))) from None
    if root is None:
        raise ConfigError(source, 1, "<root>", "empty config")
    tree = _convert(root)
    top = _section(tree, _TOP_FIELDS, source, "")
    return _build(top, source, tree, base or {})


def load_config(path, base: dict = None) -> Scenario:
    with open(path) as fh:
        return parse_config(fh.read(), str(path), base)


def _build(top, source, tree, base) -> Scenario:
    wave_kw = dict(base.get("waveform", {}))
    if "waveform" in top:
        w_node = top["waveform"][1]
        for key, (value, node) in _section(w_node, _WAVEFORM_FIELDS, source, "waveform").items():
            if key == "kind":
                value = _guard(lambda: WaveformKind.parse(value), source, node, "waveform.kind")
            wave_kw[key] = value
        waveform = _guard(lambda: WaveformConfig(**wave_kw), source, w_node, "waveform")
    else:
        waveform = WaveformConfig(**wave_kw)

    if "users" in top:
        users_node = top["users"][1]
        users = []
        for i, u_node in enumerate(users_node.value):
            users.append(_user(u_node, source, f"users[{i}]"))
        if not users:
            raise ConfigError(source, users_node.line, "users", "at least one user required")
    elif "users" in base:
        users = base["users"]
    else:
        raise ConfigError(source, tree.line, "users", "missing required key")

    kw = {k: v for k, v in base.items() if k not in ("waveform", "users")}
    for key, (value, node) in top.items():
        if key in ("waveform", "users"):
            continue
        if key == "ebn0_grid":
            value = tuple(_typed(n, float, source, f"ebn0_grid[{i}]") for i, n in enumerate(node.value))
        kw[key] = value
    line_of = {k: n.line for k, (_, n) in top.items()}
    try:
        return Scenario(waveform=waveform, users=tuple(users), **kw)
    except ValueError as exc:
        msg = str(exc)
        field = next((k for k in _TOP_FIELDS if msg.startswith(k) or f" {k} " in f" {msg} "), "<scenario>")
        raise ConfigError(source, line_of.get(field, tree.line), field, msg) from None


def _user(node, source, prefix) -> UserScenario:
    fields = _section(node, _USER_FIELDS, source, prefix)
    get = lambda k, d: fields[k][0] if k in fields else d  # noqa: E731
    if "constellation" not in fields:
        raise ConfigError(source, node.line, f"{prefix}.constellation", "missing required key")
    if "subbands" not in fields:
        raise ConfigError(source, node.line, f"{prefix}.subbands", "missing required key")
    sb_node = fields["subbands"][1]
    starts = tuple(_typed(n, int, source, f"{prefix}.subbands[{i}]") for i, n in enumerate(sb_node.value))
    alloc = _guard(lambda: SubbandAllocation(starts, get("subband_size", 12), get("guard", 0)),
                   source, sb_node, f"{prefix}.subbands")
    c_node = fields["constellation"][1]
    c = _guard(lambda: parse_constellation(fields["constellation"][0]), source, c_node, f"{prefix}.constellation")
    for key in ("tau", "dfT"):
        if key in fields:
            value, n = fields[key]
            limit = 0.5 if key == "tau" else 2.0
            if abs(value) > limit:
                raise ConfigError(source, n.line, f"{prefix}.{key}", f"|{key}| must be <= {limit}, got {value}")
    return _guard(lambda: UserScenario(alloc, c, get("tau", 0.0), get("dfT", 0.0), get("gain_db", 0.0)),
                  source, node, prefix)
