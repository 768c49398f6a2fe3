"""Separable 2D Daubechies-2 (4-tap) wavelet pyramid with periodic extension."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

ORIENTATIONS = ("horizontal", "vertical", "diagonal")

_S3 = math.sqrt(3.0)
DEC_LO = np.array([1 + _S3, 3 + _S3, 3 - _S3, 1 - _S3]) / (4 * math.sqrt(2.0))
DEC_HI = np.array([(-1) ** n * DEC_LO[3 - n] for n in range(4)])


class DwtError(ValueError):
    pass


@dataclass
class DwtPyramid:
    """``details[(level, orientation)]`` for levels 1..``levels`` plus the coarsest approximation.

    ``horizontal`` details are high-pass along rows (axis 0) and low-pass
    along columns, i.e. they respond to horizontal edges.
    """

    levels: int
    details: dict = field(repr=False)
    approx: np.ndarray = field(repr=False)

    def keys(self):
        return [(lvl, o) for lvl in range(1, self.levels + 1) for o in ORIENTATIONS]


def _analyze(x: np.ndarray, axis: int):
    x = np.moveaxis(x, axis, -1)
    n = x.shape[-1]
    idx = (2 * np.arange(n // 2)[:, None] + np.arange(4)[None, :]) % n
    taps = x[..., idx]
    lo = taps @ DEC_LO
    hi = taps @ DEC_HI
    return np.moveaxis(lo, -1, axis), np.moveaxis(hi, -1, axis)


def _synthesize(lo: np.ndarray, hi: np.ndarray, axis: int):
    lo = np.moveaxis(lo, axis, -1)
    hi = np.moveaxis(hi, axis, -1)
    half = lo.shape[-1]
    n = 2 * half
    out = np.zeros(lo.shape[:-1] + (n,))
    for k in range(4):
        pos = (2 * np.arange(half) + k) % n
        # transpose of the analysis operator; positions are distinct for fixed k
        out[..., pos] += lo * DEC_LO[k] + hi * DEC_HI[k]
    return np.moveaxis(out, -1, axis)


def dwt2(image, levels: int = 3) -> DwtPyramid:
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise DwtError("dwt2 expects a 2D image")
    if levels < 1:
        raise DwtError(f"levels must be >= 1, got {levels}")
    k = 2 ** levels
    if image.shape[0] % k or image.shape[1] % k:
        raise DwtError(f"image shape {image.shape} not divisible by 2**{levels}")
    details = {}
    approx = image
    for level in range(1, levels + 1):
        rows_lo, rows_hi = _analyze(approx, axis=0)
        ll, lh = _analyze(rows_lo, axis=1)
        hl, hh = _analyze(rows_hi, axis=1)
        details[(level, "horizontal")] = hl
        details[(level, "vertical")] = lh
        details[(level, "diagonal")] = hh
        approx = ll
    return DwtPyramid(levels=levels, details=details, approx=approx)


def idwt2(pyramid: DwtPyramid) -> np.ndarray:
    approx = np.asarray(pyramid.approx, dtype=np.float64)
    for level in range(pyramid.levels, 0, -1):
        try:
            hl = pyramid.details[(level, "horizontal")]
            lh = pyramid.details[(level, "vertical")]
            hh = pyramid.details[(level, "diagonal")]
        except KeyError as exc:
            raise DwtError(f"missing detail subband {exc.args[0]}") from None
        if not (hl.shape == lh.shape == hh.shape == approx.shape):
            raise DwtError(f"inconsistent subband shapes at level {level}")
        rows_lo = _synthesize(approx, lh, axis=1)
        rows_hi = _synthesize(hl, hh, axis=1)
        approx = _synthesize(rows_lo, rows_hi, axis=0)
    return approx
