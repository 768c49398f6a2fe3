"""Retrieval feature vectors: per-subband distribution parameters."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

METHODS = ("wst-weibull", "nwst-weibull", "fwt-ggd")
METHOD_IDS = {name: i for i, name in enumerate(METHODS)}


@dataclass(frozen=True)
class SignatureConfig:
    """Transform settings shared by every signature in a database.

    ``depth`` is the maximum path length M for scattering methods and the
    number of decomposition levels for ``fwt-ggd`` (which stores J = L = 0).
    """

    J: int
    L: int
    depth: int
    normalized: bool
    epsilon_rel: float

    def canonical(self) -> str:
        return f"J={self.J};L={self.L};depth={self.depth};normalized={int(self.normalized)};eps={self.epsilon_rel!r}"


def fingerprint(method: str, config: SignatureConfig) -> str:
    text = f"{method}|{config.canonical()}"
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def subband_labels(method: str, config: SignatureConfig) -> tuple:
    """Canonical subband order of a method (layer-0 scattering path excluded)."""
    if method == "fwt-ggd":
        from .dwt import ORIENTATIONS
        return tuple(f"L{lvl}-{o[0].upper()}" for lvl in range(1, config.depth + 1) for o in ORIENTATIONS)
    if method in ("wst-weibull", "nwst-weibull"):
        from .scattering import admissible_paths, path_label
        return tuple(path_label(p) for p in admissible_paths(config.J, config.L, config.depth) if p)
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True, eq=False)
class Signature:
    """``params[i] = (param1, param2)`` for subband ``labels[i]``.

    Weibull methods store ``(lambda, k)``, ``fwt-ggd`` stores ``(alpha, beta)``.
    ``source`` is ``(class_label, patch_id)`` or None for ad-hoc queries.
    """

    method: str
    config: SignatureConfig
    labels: tuple
    params: np.ndarray = field(repr=False)
    source: tuple | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        params = np.array(self.params, dtype=np.float64).reshape(-1, 2)
        params.setflags(write=False)
        object.__setattr__(self, "params", params)
        if len(params) == 0:
            raise ValueError("signature has no entries")
        if len(self.labels) != len(params):
            raise ValueError("labels and params differ in length")
        if not (np.all(np.isfinite(params)) and np.all(params > 0)):
            raise ValueError("signature parameters must be positive and finite")

    @property
    def fingerprint(self) -> str:
        return fingerprint(self.method, self.config)

    def __len__(self):
        return len(self.labels)

    def __eq__(self, other):
        if not isinstance(other, Signature):
            return NotImplemented
        return (self.method == other.method and self.config == other.config
                and self.labels == other.labels and self.source == other.source
                and np.array_equal(self.params, other.params))

    __hash__ = None

    def with_source(self, class_label: str, patch_id: int) -> "Signature":
        return Signature(self.method, self.config, self.labels, self.params, (class_label, int(patch_id)))
