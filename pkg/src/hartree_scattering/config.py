"""Run configuration: flat ``key = value`` text files.

Blank lines and ``#`` comments are ignored.  Lists are comma separated.
Unknown keys are rejected so typos fail loudly.  See ``README.md`` for the
schema.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path


class ConfigError(ValueError):
    """Configuration failed validation (CLI exit status 1)."""


def _floats(text: str) -> tuple[float, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(float(p) for p in text.split(","))


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class RunConfig:
    d: int = 2
    n: int = 512
    L: float = 512.0
    epsilon: float = 0.05
    sigma: float = 2.0
    center: tuple = ()
    boost: tuple = ()
    t_end: float = 50.0
    tau: float = 0.01
    beta: float = 1.1
    v_max: float = 0.0
    n_velocities: int = 128
    diag_start: float = 1.0
    diag_every: float = 0.25
    snapshot_times: tuple = (1.0, 2.0, 4.0, 8.0, 12.5, 16.0, 25.0, 32.0, 50.0)
    coupling: str = "derived"
    profile_width: float = 1.0
    linear: bool = False
    free_reference: bool = True
    save_gamma_history: bool = True
    output_dir: str = "runs/default"
    seed: int = 0

    # -- construction ---------------------------------------------------

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        kw = {}
        known = {f.name: f for f in fields(cls)}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value'")
            key, value = (p.strip() for p in line.split("=", 1))
            if key not in known:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            try:
                kw[key] = _convert(key, value)
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
        cfg = cls(**kw)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))

    def with_updates(self, **kw) -> "RunConfig":
        cfg = replace(self, **kw)
        cfg.validate()
        return cfg

    # -- checks ---------------------------------------------------------

    def validate(self):
        d = self.d
        if d not in (2, 3):
            raise ConfigError("d must be 2 or 3")
        if self.n < 8 or self.n & (self.n - 1):
            raise ConfigError("n must be a power of two >= 8")
        if not self.L > 0:
            raise ConfigError("L must be positive")
        if not d / 2 < self.beta < 1 + d / 2:
            raise ConfigError(f"beta must satisfy {d / 2} < beta < {1 + d / 2} in d = {d}")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive (use linear = true for the free flow)")
        if not self.sigma > 0:
            raise ConfigError("sigma must be positive")
        if not self.t_end >= 4:
            raise ConfigError("t_end must be at least 4")
        if not self.tau > 0:
            raise ConfigError("tau must be positive")
        if self.center and len(self.center) != d:
            raise ConfigError(f"center needs {d} components")
        if self.boost and len(self.boost) != d:
            raise ConfigError(f"boost needs {d} components")
        if self.v_max < 0:
            raise ConfigError("v_max must be >= 0 (0 selects the default)")
        if self.n_velocities < 4:
            raise ConfigError("n_velocities must be >= 4")
        if self.diag_start < 1:
            raise ConfigError("diagnostics start at t >= 1")
        k = self.diag_every / self.tau
        if self.diag_every <= 0 or abs(k - round(k)) > 1e-9 * k:
            raise ConfigError("diag_every must be a positive multiple of tau")
        for ts in self.snapshot_times:
            m = ts / self.tau
            if ts < 0 or ts > self.t_end or abs(m - round(m)) > 1e-9 * max(m, 1):
                raise ConfigError(f"snapshot time {ts} is not a step time in [0, t_end]")
        if self.coupling not in ("derived", "paper"):
            raise ConfigError("coupling must be 'derived' or 'paper'")
        if not self.profile_width > 0:
            raise ConfigError("profile_width must be positive")

    # -- derived quantities -----------------------------------------------

    @property
    def diag_stride(self) -> int:
        return int(round(self.diag_every / self.tau))

    @property
    def velocity_max(self) -> float:
        return self.v_max if self.v_max > 0 else 0.2 * self.L / self.t_end

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            if f.name.startswith("_"):
                continue
            val = getattr(self, f.name)
            if isinstance(val, tuple):
                val = ", ".join(repr(float(x)) for x in val)
            elif isinstance(val, bool):
                val = "true" if val else "false"
            elif isinstance(val, float):
                val = repr(val)
            lines.append(f"{f.name} = {val}")
        return "\n".join(lines) + "\n"

    def hash(self, exclude=("output_dir",)) -> str:
        text = "\n".join(l for l in self.to_text().splitlines()
                         if l.split(" = ", 1)[0] not in exclude)
        return hashlib.sha256(text.encode()).hexdigest()


_INT = {"d", "n", "n_velocities", "seed"}
_FLOAT = {"L", "epsilon", "sigma", "t_end", "tau", "beta", "v_max", "diag_start", "diag_every",
          "profile_width"}
_LIST = {"center", "boost", "snapshot_times"}
_BOOL = {"linear", "free_reference", "save_gamma_history"}


def _convert(key: str, value: str):
    if key in _INT:
        return int(value)
    if key in _FLOAT:
        out = float(value)
        if not math.isfinite(out):
            raise ValueError("must be finite")
        return out
    if key in _LIST:
        return _floats(value)
    if key in _BOOL:
        return _bool(value)
    return value


SMOKE = RunConfig(n=64, L=64.0, sigma=1.5, t_end=4.0, tau=0.025, diag_every=0.25,
                  n_velocities=16, v_max=2.0, snapshot_times=(1.0, 2.0, 4.0), output_dir="runs/smoke")
