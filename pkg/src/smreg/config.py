"""Flat ``key = value`` simulation configuration.

One setting per line, ``#`` starts a comment, lists are comma separated::

    # LoS-dominated downlink
    M = 128
    N = 16
    channel = elaa-los
    power_grid_db = 30, 35, 40
    methods = exact, smr@10, hb@10

A method may carry an ``@k`` suffix to run exactly ``k`` iterations instead
of iterating to ``tol``.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, fields, replace

from .errors import ConfigError

CHANNELS = ("rayleigh", "elaa-los", "elaa-mixed")
PRECODERS = ("zf", "lmmse")
METHODS = ("exact", "hb", "jacobi", "gs", "ssor", "smr", "smr-list")
SMR_MODES = ("lowcomplexity", "theorem1", "theorem2")
SCENARIOS = ("auto", "los-dominated", "symmetric-rayleigh")


def parse_method(token: str):
    """Split ``"hb@16"`` into ``("hb", 16)``; a bare name gives ``(name, None)``."""
    name, sep, count = token.partition("@")
    if name not in METHODS:
        raise ValueError(f"unknown method {name!r}; choose from {', '.join(METHODS)}")
    if not sep:
        return name, None
    k = int(count)
    if k < 0:
        raise ValueError(f"iteration count must be >= 0 in {token!r}")
    return name, k


def _parse_float(text: str) -> float:
    return float(text)


def _parse_int(text: str) -> int:
    return int(text)


def _auto_or_float(text: str):
    return "auto" if text == "auto" else float(text)


def _omega(text: str):
    return text if text in ("gershgorin", "optimal") else float(text)


def _float_list(text: str) -> tuple:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _str_list(text: str) -> tuple:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _fmt(value) -> str:
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _choice(*options):
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text
    return parse


@dataclass(frozen=True)
class SimulationConfig:
    M: int = field(default=128, metadata={"parse": _parse_int})
    N: int = field(default=16, metadata={"parse": _parse_int})
    channel: str = field(default="elaa-los", metadata={"parse": _choice(*CHANNELS)})
    precoder: str = field(default="zf", metadata={"parse": _choice(*PRECODERS)})
    modulation_order: int = field(default=64, metadata={"parse": _parse_int})
    power_grid_db: tuple = field(default=(20.0, 30.0, 40.0), metadata={"parse": _float_list})
    trials: int = field(default=10, metadata={"parse": _parse_int})
    max_trials: int = field(default=200, metadata={"parse": _parse_int})
    min_errors: int = field(default=100, metadata={"parse": _parse_int})
    symbols_per_trial: int = field(default=1000, metadata={"parse": _parse_int})
    base_seed: int = field(default=0, metadata={"parse": _parse_int})
    methods: tuple = field(default=("exact", "hb", "smr"), metadata={"parse": _str_list})
    alpha: object = field(default="auto", metadata={"parse": _auto_or_float})
    xi: object = field(default="auto", metadata={"parse": _auto_or_float})
    scenario: str = field(default="auto", metadata={"parse": _choice(*SCENARIOS)})
    smr_mode: str = field(default="lowcomplexity", metadata={"parse": _choice(*SMR_MODES)})
    smr_column: int = field(default=0, metadata={"parse": _parse_int})
    tol: float = field(default=1e-10, metadata={"parse": _parse_float})
    max_iter: int = field(default=200, metadata={"parse": _parse_int})
    omega: object = field(default="gershgorin", metadata={"parse": _omega})
    n0: float = field(default=1.0, metadata={"parse": _parse_float})
    antennas_per_user: int = field(default=8, metadata={"parse": _parse_int})
    region: tuple = field(default=(-0.5, 0.5, 300.0, 500.0), metadata={"parse": _float_list})
    bs_height: float = field(default=10.0, metadata={"parse": _parse_float})
    user_height: float = field(default=1.5, metadata={"parse": _parse_float})
    antenna_spacing: float = field(default=0.0429, metadata={"parse": _parse_float})
    carrier: float = field(default=3.5e9, metadata={"parse": _parse_float})
    ple_los: float = field(default=2.0, metadata={"parse": _parse_float})
    ple_nlos: float = field(default=3.5, metadata={"parse": _parse_float})
    shadowing_db: float = field(default=4.0, metadata={"parse": _parse_float})
    los_d0: float = field(default=50.0, metadata={"parse": _parse_float})
    rician_k_db: float = field(default=10.0, metadata={"parse": _parse_float})

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        def fail(key, msg):
            raise ConfigError(msg, key=key)

        if self.M < 1 or self.N < 1:
            fail("N" if self.N < 1 else "M", "antenna counts must be positive")
        if self.N > self.M:
            fail("N", f"N={self.N} exceeds M={self.M}; need N <= M")
        if self.modulation_order != 64:
            fail("modulation_order", "only 64-QAM is supported")
        if not self.power_grid_db:
            fail("power_grid_db", "power grid is empty")
        if any(math.isnan(p) for p in self.power_grid_db):
            fail("power_grid_db", "power grid contains NaN")
        if self.trials < 1:
            fail("trials", "trials must be >= 1")
        if self.max_trials < self.trials:
            fail("max_trials", "max_trials must be >= trials")
        if self.symbols_per_trial < 1:
            fail("symbols_per_trial", "symbols_per_trial must be >= 1")
        if not 0 <= self.base_seed < 2**64:
            fail("base_seed", "base_seed must be an unsigned 64-bit integer")
        if not self.methods:
            fail("methods", "no methods given")
        for token in self.methods:
            try:
                parse_method(token)
            except ValueError as exc:
                fail("methods", str(exc))
        if not self.tol > 0:
            fail("tol", "tol must be > 0")
        if self.max_iter < 0:
            fail("max_iter", "max_iter must be >= 0")
        if self.n0 < 0:
            fail("n0", "n0 must be >= 0")
        if len(self.region) != 4:
            fail("region", "region needs x_min, x_max, y_min, y_max")
        if not 0 <= self.smr_column < self.N:
            fail("smr_column", f"smr_column must lie in [0, {self.N})")

    def with_overrides(self, **changes) -> "SimulationConfig":
        return replace(self, **changes)


_FIELDS = {f.name: f for f in fields(SimulationConfig)}
REQUIRED = ("M", "N", "channel")


def parse_config(text: str) -> SimulationConfig:
    """Parse the flat format; unspecified keys take their defaults.

    Raises :class:`ConfigError` naming the key and line for unknown keys,
    malformed values, duplicates and invariant violations.
    """
    values, lines = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError("expected 'key = value'", line=lineno)
        if key not in _FIELDS:
            raise ConfigError("unknown key", key=key, line=lineno)
        if key in values:
            raise ConfigError(f"duplicate key (first on line {lines[key]})", key=key, line=lineno)
        try:
            values[key] = _FIELDS[key].metadata["parse"](value)
        except ValueError as exc:
            raise ConfigError(f"bad value {value!r}: {exc}", key=key, line=lineno) from None
        lines[key] = lineno
    missing = [k for k in REQUIRED if k not in values]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}", key=missing[0])
    try:
        return SimulationConfig(**values)
    except ConfigError as exc:
        if exc.key in lines and exc.line is None:
            raise ConfigError(exc.reason, key=exc.key, line=lines[exc.key]) from None
        raise


def serialize_config(cfg: SimulationConfig) -> str:
    """Canonical text: every key in declaration order, floats via ``repr``."""
    return "".join(f"{name} = {_fmt(getattr(cfg, name))}\n" for name in _FIELDS)


def config_hash(cfg: SimulationConfig) -> str:
    """Git blob SHA-1 of the canonical serialization."""
    data = serialize_config(cfg).encode("utf-8")
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()
