"""Run configuration: defaults, key-value config files and validation."""
from __future__ import annotations

import configparser
import dataclasses
import os
from dataclasses import dataclass, fields

from . import filterbank as fb
from .signature import METHODS, SignatureConfig

PATCHING = ("grid", "five", "whole")
WORKERS_ENV = "SCATRET_WORKERS"

# accepted spellings in config files besides the field names
ALIASES = {
    "scales": "J",
    "rotations": "L",
    "orientations": "L",
    "max_path_length": "M",
    "epsilon": "epsilon_rel",
    "levels": "dwt_levels",
}


class ConfigError(ValueError):
    pass


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
        if value < 1:
            raise ConfigError(f"{WORKERS_ENV} must be >= 1, got {value}")
        return value
    return os.cpu_count() or 1


@dataclass(frozen=True)
class RunConfig:
    method: str = "nwst-weibull"
    J: int = 3
    L: int = 4
    M: int = 2
    epsilon_rel: float = 1e-6
    center_freq: float = fb.CENTER_FREQ
    bandwidth_factor: float = fb.BANDWIDTH_FACTOR
    slant: float = fb.SLANT
    lowpass_width: float = fb.LOWPASS_WIDTH
    oversampling: int = 1
    dwt_levels: int = 3
    patch_size: int = 128
    patching: str = "grid"       # grid: non-overlapping tiles; five: corners + centre; whole: entire image
    downscale: bool = False      # halve images before cutting patches
    floor_rel: float = 1e-12
    root: str | None = None
    db: str | None = None
    seed: int = 0
    workers: int | None = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {', '.join(METHODS)}, got {self.method!r}")
        if self.J < 1:
            raise ConfigError(f"J must be >= 1, got {self.J}")
        if self.L < 1:
            raise ConfigError(f"L must be >= 1, got {self.L}")
        if not 0 <= self.M <= 3:
            raise ConfigError(f"M must be in 0..3, got {self.M}")
        if self.dwt_levels < 1:
            raise ConfigError(f"dwt_levels must be >= 1, got {self.dwt_levels}")
        if self.patch_size < 1:
            raise ConfigError(f"patch_size must be positive, got {self.patch_size}")
        levels = self.dwt_levels if self.method == "fwt-ggd" else self.J
        if self.patch_size % 2 ** levels:
            raise ConfigError(f"patch_size {self.patch_size} is not divisible by 2**{levels}")
        if self.patching not in PATCHING:
            raise ConfigError(f"patching must be one of {', '.join(PATCHING)}, got {self.patching!r}")
        for name in ("epsilon_rel", "center_freq", "bandwidth_factor", "slant", "lowpass_width", "floor_rel"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        ov = self.oversampling
        if ov < 1 or ov & (ov - 1):
            raise ConfigError(f"oversampling must be a power of two, got {ov}")
        if self.workers is not None and self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")

    def replace(self, **changes) -> "RunConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        return dataclasses.replace(self, **changes)

    @property
    def resolved_workers(self) -> int:
        return self.workers if self.workers is not None else default_workers()

    def signature_config(self) -> SignatureConfig:
        if self.method == "fwt-ggd":
            return SignatureConfig(J=0, L=0, depth=self.dwt_levels, normalized=False, epsilon_rel=0.0)
        normalized = self.method == "nwst-weibull"
        return SignatureConfig(J=self.J, L=self.L, depth=self.M, normalized=normalized,
                               epsilon_rel=float(self.epsilon_rel) if normalized else 0.0)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def _coerce(name: str, text: str):
    kinds = {f.name: f.type for f in fields(RunConfig)}
    kind = kinds[name]
    text = text.strip()
    if text.lower() in ("", "none") and "None" in str(kind):
        return None
    try:
        if kind.startswith("int"):
            return int(text)
        if kind.startswith("float"):
            return float(text)
        if kind == "bool":
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
    except ValueError:
        raise ConfigError(f"invalid value for {name}: {text!r}") from None
    return text


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines (an optional ``[run]`` header is allowed)."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    body = text if text.lstrip().startswith("[") else "[run]\n" + text
    try:
        parser.read_string(body)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    known = {f.name for f in fields(RunConfig)}
    lowered = {name.lower(): name for name in known}
    out = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            name = ALIASES.get(key.lower(), lowered.get(key.lower().replace("-", "_")))
            if name is None:
                raise ConfigError(f"unknown config key {key!r}")
            out[name] = _coerce(name, value)
    return out


def load_config(path=None, **overrides) -> RunConfig:
    """Defaults, then the file at ``path``, then non-None ``overrides``."""
    values = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                values = parse_config_text(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
