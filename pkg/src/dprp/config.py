"""Experiment configuration: presets, INI files and command-line overrides.

A config file is a single ``[experiment]`` section of ``key = value`` lines::

    [experiment]
    preset = reference
    s = 2
    r_grid = 10:10000:10

Keys not given fall back to the preset (``reference`` or ``small``), then to the
defaults below.  Values given on the command line override both.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import re
from dataclasses import dataclass, fields

SECTION = "experiment"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str = "custom"
    n: int = 10
    d: int = 50
    T: int = 500
    lam: float = 1.0
    L: float = 1.0
    power: float = 1.0
    delta: float = 5e-5
    delta_prime: float = 5e-5
    s: int = 1
    eps_jl: float = 0.5
    a: float = 1.0
    sigma2: float = 1.0
    channel: str = "static"
    seed: int = 1
    draws: int = 1
    r_grid: str = "1:50:1"
    eps_grid: str = "0.1:1:0.1"
    tradeoff_r: str = ""
    eps_target: float = 300.0
    r_max: int = 0
    # simulate
    r: int = 25
    kind: str = "rademacher"
    zeta: float = 0.3
    m_per_client: int = 20
    radius_factor: float = 1.5
    # verify
    verify_scale: float = 1.0
    verify_seeds: int = 1

    def fingerprint(self) -> str:
        text = "\n".join(f"{k}={v!r}" for k, v in sorted(self.as_dict().items()))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def header_lines(self) -> list[str]:
        return [f"{k} = {v}" for k, v in self.as_dict().items()]

    def r_values(self) -> list[int]:
        values = [int(round(v)) for v in parse_grid(self.r_grid, "r_grid")]
        return [r for r in values if 1 <= r <= self.d]

    def eps_values(self) -> list[float]:
        return parse_grid(self.eps_grid, "eps_grid")

    def tradeoff_dims(self) -> list[int]:
        if self.tradeoff_r.strip():
            return [int(v) for v in parse_list(self.tradeoff_r, "tradeoff_r")]
        return [max(1, self.d // 100), max(1, self.d // 10)]


PRESETS = {
    "reference": dict(scenario="reference", n=1000, d=10000, T=1000, lam=0.001, L=1.0, power=1.0,
                  delta=5e-5, delta_prime=5e-5, s=1, eps_jl=0.5, a=1.0, sigma2=1.0,
                  channel="static", r_grid="10:10000:10", eps_grid="0.1:1:0.05",
                  kind="achlioptas:1"),
    "small": dict(scenario="small", n=10, d=50, T=500, lam=1.0, r=25, kind="rademacher",
                  channel="iid", zeta=0.3, r_grid="1:50:1"),
}

_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}
_CASTS = {"int": int, "float": float, "str": str}


def _cast(key, raw, where):
    kind = _TYPES[key]
    try:
        if kind == "int":
            value = float(raw)
            if value != int(value):
                raise ValueError
            return int(value)
        return _CASTS[kind](raw)
    except ValueError:
        raise ConfigError(f"{where}: field '{key}' expects {kind}, got {raw!r}") from None


def parse_grid(text: str, name: str = "grid") -> list[float]:
    """``"start:stop:step"`` (inclusive stop) or a comma-separated list."""
    text = text.strip()
    if ":" not in text:
        return parse_list(text, name)
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"field '{name}': expected start:stop:step, got {text!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"field '{name}': non-numeric grid {text!r}") from None
    if step <= 0 or stop < start:
        raise ConfigError(f"field '{name}': empty grid {text!r}")
    count = int((stop - start) / step + 1e-9) + 1
    return [round(start + k * step, 12) for k in range(count)]


def parse_list(text: str, name: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"field '{name}': non-numeric list {text!r}") from None


def _key_lines(text: str) -> dict:
    lines = {}
    for number, line in enumerate(text.splitlines(), start=1):
        m = re.match(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*[=:]", line)
        if m:
            lines.setdefault(m.group(1), number)
    return lines


def read_file(path) -> dict:
    """Raw ``{key: (value, location)}`` pairs from an INI file."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # field names such as T and L are case-sensitive
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not parser.has_section(SECTION):
        raise ConfigError(f"{path}: missing [{SECTION}] section")
    lines = _key_lines(text)
    return {k: (v, f"{path}:{lines.get(k, '?')}") for k, v in parser.items(SECTION)}


def build(path=None, overrides: dict | None = None, preset: str | None = None,
          default_preset: str | None = None) -> ExperimentConfig:
    """Resolve preset, file values and overrides into a validated config.

    The preset is taken from ``overrides``, then ``preset``, then the file's
    ``preset`` key, then ``default_preset``.
    """
    raw = read_file(path) if path else {}
    overrides = dict(overrides or {})
    name = overrides.pop("preset", None) or preset
    if name is None and "preset" in raw:
        name = raw.pop("preset")[0]
    raw.pop("preset", None)
    name = name or default_preset
    values = {}
    if name:
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
        values.update(PRESETS[name])
    for key, (value, where) in raw.items():
        if key not in _TYPES:
            raise ConfigError(f"{where}: unknown field '{key}'")
        values[key] = _cast(key, value, where)
    for key, value in overrides.items():
        if key not in _TYPES:
            raise ConfigError(f"command line: unknown field '{key}'")
        values[key] = _cast(key, value, "command line") if isinstance(value, str) else value
    cfg = ExperimentConfig(**values)
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    def need(cond, key, msg):
        if not cond:
            raise ConfigError(f"field '{key}': {msg}")

    need(cfg.n >= 1, "n", "must be >= 1")
    need(cfg.d >= 1, "d", "must be >= 1")
    need(cfg.T >= 1, "T", "must be >= 1")
    need(cfg.lam > 0, "lam", "must be positive")
    need(cfg.L > 0, "L", "must be positive")
    need(cfg.power > 0, "power", "must be positive")
    need(0 < cfg.delta < 1, "delta", "must lie in (0, 1)")
    need(0 < cfg.delta_prime < 1, "delta_prime", "must lie in (0, 1)")
    need(cfg.s >= 1, "s", "must be >= 1")
    need(0 < cfg.eps_jl < 1, "eps_jl", "must lie in (0, 1)")
    need(cfg.a > 0, "a", "must be positive")
    need(cfg.sigma2 >= 0, "sigma2", "must be nonnegative")
    need(cfg.channel in ("static", "iid", "unit"), "channel", "must be static, iid or unit")
    need(cfg.draws >= 1, "draws", "must be >= 1")
    need(1 <= cfg.r <= cfg.d, "r", "must lie in [1, d]")
    need(0 <= cfg.zeta <= 1, "zeta", "must lie in [0, 1]")
    need(cfg.eps_target > 0, "eps_target", "must be positive")
    need(cfg.verify_scale > 0, "verify_scale", "must be positive")
    need(cfg.verify_seeds >= 1, "verify_seeds", "must be >= 1")
    need(cfg.r_max >= 0, "r_max", "must be >= 0 (0 means d)")
    cfg.r_values()
    cfg.eps_values()
    cfg.tradeoff_dims()
    from .projection import parse_kind
    try:
        parse_kind(cfg.kind)
    except ValueError as exc:
        raise ConfigError(f"field 'kind': {exc}") from None
