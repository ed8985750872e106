"""Run configuration: a flat ``section.key = value`` text format.

Values are JSON literals (numbers, ``true``/``false``, quoted strings, lists);
``inf`` is accepted for infinite floats and bare words are read as strings.
Blank lines and ``#`` comments (to end of line) are ignored, so string
values cannot contain ``#``.  Unspecified keys keep their
defaults, so an empty file is a valid configuration.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

from .grid import Grid, InitialConditionSpec
from .kinetics import ModelParams
from .timestepper import StepControl

MODES = ("single", "figure1-pair", "eps-continuation", "positivity-1d", "mms")
DEFAULT_SAMPLE_TIMES = (0.0, 2.5, 5.0, 10.0)


class ConfigError(ValueError):
    def __init__(self, key, line, message):
        where = f"line {line}" if isinstance(line, int) else line or "config"
        super().__init__(f"{key} ({where}): {message}")
        self.key = key
        self.line = line


@dataclass(frozen=True)
class RunConfig:
    grid: Grid = field(default_factory=lambda: Grid(2, (10.0, 10.0), (65, 65)))
    initial: InitialConditionSpec = field(default_factory=InitialConditionSpec)
    params: ModelParams = field(default_factory=ModelParams)
    control: StepControl = field(default_factory=StepControl)
    t_end: float = 10.0
    sample_times: tuple[float, ...] = DEFAULT_SAMPLE_TIMES
    mode: str = "single"
    out_dir: str = "out"
    figure1_K: tuple[float, float] = (15.0, 0.0)
    eps_list: tuple[float, ...] = (0.5, 0.25, 0.125, 0.0625, 0.0)
    positivity_nodes: int = 257
    positivity_floor: float = 0.2
    mms_nodes: tuple[int, ...] = (33, 65, 129)


# -- value coercion -----------------------------------------------------------

def _float(v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise TypeError(f"expected a number, got {v!r}")
    return float(v)


def _int(v):
    if isinstance(v, bool) or not isinstance(v, int):
        raise TypeError(f"expected an integer, got {v!r}")
    return v


def _bool(v):
    if not isinstance(v, bool):
        raise TypeError(f"expected true or false, got {v!r}")
    return v


def _str(v):
    if not isinstance(v, str):
        raise TypeError(f"expected a string, got {v!r}")
    return v


def _list(item):
    def conv(v):
        if not isinstance(v, list):
            raise TypeError(f"expected a list, got {v!r}")
        return tuple(item(x) for x in v)

    return conv


def _nonneg(v):
    if v < 0:
        raise ValueError("must be nonnegative")


def _positive(v):
    if not v > 0:
        raise ValueError("must be positive")


def _all_nonneg(v):
    if any(x < 0 for x in v):
        raise ValueError("entries must be nonnegative")


# key -> (section attribute, field name, converter, check)
SCHEMA = {
    "grid.dim": ("grid", "dim", _int, None),
    "grid.extents": ("grid", "extents", _list(_float), None),
    "grid.nodes": ("grid", "nodes", _list(_int), None),
    "initial.amplitudes": ("initial", "amplitudes", _list(_float), _all_nonneg),
    "initial.centers": ("initial", "centers", _list(_list(_float)), None),
    "initial.width": ("initial", "width", _float, _positive),
    "initial.susceptible_floor": ("initial", "susceptible_floor", _float, _nonneg),
    "params.K": ("params", "K", _float, _nonneg),
    "params.lambda_S": ("params", "lambda_S", _float, _nonneg),
    "params.lambda_I": ("params", "lambda_I", _float, _nonneg),
    "params.mu_S": ("params", "mu_S", _float, _nonneg),
    "params.mu_I": ("params", "mu_I", _float, _nonneg),
    "params.eps_reg": ("params", "eps_reg", _float, _nonneg),
    "params.chi_mode": ("params", "chi_mode", _str, None),
    "control.safety": ("control", "safety", _float, _positive),
    "control.dt_max": ("control", "dt_max", _float, _positive),
    "control.clamp": ("control", "clamp", _bool, None),
    "run.t_end": (None, "t_end", _float, _nonneg),
    "run.sample_times": (None, "sample_times", _list(_float), _all_nonneg),
    "run.mode": (None, "mode", _str, None),
    "run.out_dir": (None, "out_dir", _str, None),
    "figure1.K": (None, "figure1_K", _list(_float), _all_nonneg),
    "continuation.eps_list": (None, "eps_list", _list(_float), _all_nonneg),
    "positivity.nodes": (None, "positivity_nodes", _int, None),
    "positivity.floor": (None, "positivity_floor", _float, _nonneg),
    "mms.nodes": (None, "mms_nodes", _list(_int), None),
}


def _literal(text):
    text = text.strip()
    if text in ("inf", "+inf", "Infinity"):
        return math.inf
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _parse_lines(text, source=None):
    """Yield ``(key, raw value, line)`` from config text."""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(line, source or lineno, "expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        yield key, value, source or lineno


def _apply(entries):
    values = {}
    lines = {}
    for key, raw, line in entries:
        if key not in SCHEMA:
            raise ConfigError(key, line, "unknown key")
        _, _, conv, check = SCHEMA[key]
        try:
            value = conv(_literal(raw))
            if check:
                check(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(key, line, str(exc)) from None
        values[key] = value
        lines[key] = line
    return values, lines


def _build(values, lines, base=None):
    base = base or RunConfig()
    sections = {}
    top = {}
    for key, value in values.items():
        section, name, _, _ = SCHEMA[key]
        if section is None:
            top[name] = value
        else:
            sections.setdefault(section, {})[name] = value

    def section_error(section, exc):
        keys = [k for k in values if k.startswith(section + ".")]
        line = lines[keys[0]] if keys else None
        return ConfigError(keys[0] if keys else section, line, str(exc))

    built = {}
    for section, updates in sections.items():
        try:
            built[section] = replace(getattr(base, section), **updates)
        except (TypeError, ValueError) as exc:
            raise section_error(section, exc) from None
    if "sample_times" not in top and "t_end" in top and base.sample_times == DEFAULT_SAMPLE_TIMES:
        t_end = top["t_end"]
        kept = [t for t in DEFAULT_SAMPLE_TIMES if t < t_end]
        top["sample_times"] = tuple(kept + [t_end])
    cfg = replace(base, **built, **top)
    _validate(cfg, lines)
    return cfg


def _validate(cfg: RunConfig, lines):
    def fail(key, msg):
        raise ConfigError(key, lines.get(key), msg)

    if cfg.mode not in MODES:
        fail("run.mode", f"must be one of {MODES}")
    times = cfg.sample_times
    if any(b < a for a, b in zip(times, times[1:])):
        fail("run.sample_times", "must be sorted")
    if times and times[-1] > cfg.t_end:
        fail("run.sample_times", f"must lie within [0, t_end={cfg.t_end}]")
    if len(cfg.figure1_K) != 2:
        fail("figure1.K", "needs exactly two values")
    eps = cfg.eps_list
    if not eps or any(b >= a for a, b in zip(eps, eps[1:])) or eps[0] > 1:
        fail("continuation.eps_list", "must be nonempty, strictly decreasing, within [0, 1]")
    if cfg.positivity_nodes < 3:
        fail("positivity.nodes", "needs at least 3 nodes")
    if not cfg.positivity_floor <= 1:
        fail("positivity.floor", "must lie in [0, 1]")
    if len(cfg.mms_nodes) < 3 or any(b - 1 != 2 * (a - 1) for a, b in zip(cfg.mms_nodes, cfg.mms_nodes[1:])):
        fail("mms.nodes", "needs at least three nested sizes (n -> 2n - 1)")
    if any(len(c) < cfg.grid.dim for c in cfg.initial.centers):
        fail("initial.centers", f"every centre needs {cfg.grid.dim} coordinates")


def parse_config(text: str) -> RunConfig:
    values, lines = _apply(_parse_lines(text))
    return _build(values, lines)


def apply_overrides(cfg: RunConfig, overrides) -> RunConfig:
    """Apply ``key=value`` strings on top of ``cfg``."""
    entries = []
    for item in overrides:
        if "=" not in item:
            raise ConfigError(item, "override", "expected key=value")
        key, value = item.split("=", 1)
        entries.append((key.strip(), value, "override"))
    values, lines = _apply(entries)
    # re-emit and parse so that overrides go through the same validation path
    merged, merged_lines = _apply(_parse_lines(emit_config(cfg)))
    if "run.t_end" in values and "run.sample_times" not in values and cfg.sample_times == DEFAULT_SAMPLE_TIMES:
        del merged["run.sample_times"]
    merged.update(values)
    merged_lines.update(lines)
    return _build(merged, merged_lines)


def _dump(value):
    if isinstance(value, float) and math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if isinstance(value, tuple):
        return "[" + ", ".join(_dump(v) for v in value) + "]"
    if isinstance(value, float):
        return repr(value)
    return json.dumps(value)


def emit_config(cfg: RunConfig) -> str:
    """Serialise every key; ``parse_config(emit_config(c)) == c``."""
    out = []
    current = None
    for key, (section, name, _, _) in SCHEMA.items():
        head = key.split(".", 1)[0]
        if head != current:
            if current is not None:
                out.append("")
            current = head
        value = getattr(getattr(cfg, section), name) if section else getattr(cfg, name)
        out.append(f"{key} = {_dump(value)}")
    return "\n".join(out) + "\n"
