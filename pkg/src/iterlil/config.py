"""Run configuration: file parsing, flag overrides, canonical fingerprint.

Config files are plain "key = value" lines with '#' comments.  Keys mirror
the command-line flags one to one; flags win over the file.  Every run
artifact embeds a fingerprint of the canonical config text so outputs can
be traced back to their exact settings.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, replace

from .errors import ConfigError, IterlilError
from .laws import parse_law

__all__ = ["McConfig", "parse_config", "canonical_text", "fingerprint"]

_KEYS = ("law", "seed", "reps", "horizon", "grid", "j", "step", "out", "workers")

# Keys that determine the numerical output.  `out` and `workers` only steer
# where results land and how many processes compute them, so two runs that
# differ in nothing else share a fingerprint (and must produce identical
# bytes).
_SEMANTIC_KEYS = ("law", "seed", "reps", "horizon", "grid", "j", "step")


@dataclass(frozen=True)
class McConfig:
    law: str = "exp_indep(1.0,1.0)"
    seed: int = 20260814
    reps: int = 50
    horizon: float = 1000.0
    grid: str = "geometric"
    j: int = 1
    step: float = 0.01
    out: str = ""
    workers: int = 1

    @property
    def grid_preset(self) -> str:
        return self.grid.split(":", 1)[0]

    @property
    def grid_ratio(self) -> float:
        parts = self.grid.split(":", 1)
        return float(parts[1]) if len(parts) == 2 else 1.2

    @property
    def output_dir(self) -> str:
        return self.out or os.environ.get("ITERLIL_OUT", "out")


def _coerce(key: str, raw: str, where: str):
    try:
        if key in ("seed", "reps", "j", "workers"):
            return int(raw)
        if key in ("horizon", "step"):
            return float(raw)
        return raw.strip()
    except ValueError:
        raise ConfigError(f"{where}: cannot parse value {raw!r} for key {key!r}") from None


def _validate(cfg: McConfig) -> McConfig:
    if cfg.seed < 0:
        raise ConfigError("seed must be nonnegative")
    if cfg.reps < 1:
        raise ConfigError("reps must be at least 1")
    if cfg.horizon <= 0.0:
        raise ConfigError("horizon must be positive")
    if cfg.j < 1:
        raise ConfigError("j must be at least 1")
    if cfg.step <= 0.0:
        raise ConfigError("step must be positive")
    if cfg.workers < 1:
        raise ConfigError("workers must be at least 1")
    preset = cfg.grid_preset
    if preset not in ("geometric", "proof_grid"):
        raise ConfigError(f"unknown grid preset {preset!r}")
    try:
        ratio = cfg.grid_ratio
    except ValueError:
        raise ConfigError(f"bad grid ratio in {cfg.grid!r}") from None
    if preset == "geometric" and ratio <= 1.0:
        raise ConfigError("geometric grid ratio must exceed 1")
    try:
        canonical_law = parse_law(cfg.law).spec_string
    except IterlilError as exc:
        raise ConfigError(f"bad law spec {cfg.law!r}: {exc}") from None
    return replace(cfg, law=canonical_law)


def parse_config(path: str | None = None, overrides: dict | None = None) -> McConfig:
    """Build a validated config from an optional file plus flag overrides."""
    values: dict = {}
    if path is not None:
        try:
            with open(path) as fh:
                lines = fh.readlines()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path!r}: {exc}") from None
        for lineno, line in enumerate(lines, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, raw = (part.strip() for part in stripped.split("=", 1))
            if key not in _KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _coerce(key, raw, f"{path}:{lineno}")
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key not in _KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = _coerce(key, str(val), f"flag --{key}")
    return _validate(McConfig(**values))


def canonical_text(cfg: McConfig) -> str:
    """Stable textual form; reparsing it reproduces the config exactly."""
    lines = []
    for key in _KEYS:
        val = getattr(cfg, key)
        if isinstance(val, float):
            val = repr(val)
        lines.append(f"{key} = {val}")
    return "\n".join(lines) + "\n"


def fingerprint(cfg: McConfig) -> str:
    """12-hex-digit digest of the result-determining config entries."""
    lines = []
    for key in _SEMANTIC_KEYS:
        val = getattr(cfg, key)
        if isinstance(val, float):
            val = repr(val)
        lines.append(f"{key} = {val}")
    return hashlib.sha256("\n".join(lines).encode()).hexdigest()[:12]
