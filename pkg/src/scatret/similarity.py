"""Weibull Bhattacharyya kernel, the summed log-kernel distance and the GGD baseline.

For Weibull rates ``lam1, lam2`` and shapes ``k1, k2`` the kernel is the
product of two geometric-over-arithmetic mean ratios, one of ``lam**k`` (with
``k`` the mean shape) and one of the shapes. In log form the first factor is
``-ln cosh(k * (ln lam1 - ln lam2) / 2)``, which never forms ``lam**k``.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from .signature import Signature
from .statmodel import GGDParams, WeibullParams

LN2 = math.log(2.0)


class SimilarityError(ValueError):
    pass


def _log_cosh(x):
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax)) - LN2


def log_weibull_kernel(lam1, k1, lam2, k2):
    """Vectorized ``ln K``; broadcasts over array arguments."""
    lam1, k1, lam2, k2 = (np.asarray(v, dtype=np.float64) for v in (lam1, k1, lam2, k2))
    k = 0.5 * (k1 + k2)
    d = 0.5 * k * (np.log(lam1) - np.log(lam2))
    if not np.all(np.isfinite(d)):
        raise SimilarityError("kernel argument overflow: k * ln(lam1/lam2) is not finite")
    scale_term = np.where(d == 0, 0.0, -_log_cosh(d))
    shape_term = 0.5 * (np.log(k1) + np.log(k2)) - np.log(k)
    return scale_term + np.where(k1 == k2, 0.0, shape_term)


def weibull_kernel(p1: WeibullParams, p2: WeibullParams) -> float:
    return float(np.exp(log_weibull_kernel(p1.lam, p1.k, p2.lam, p2.k)))


def kernel_distance(p1: WeibullParams, p2: WeibullParams) -> float:
    """Metric induced by the kernel, ``sqrt(2 - 2K)``."""
    return math.sqrt(max(2.0 - 2.0 * weibull_kernel(p1, p2), 0.0))


# -- densities and quadrature oracle --------------------------------------

def weibull_pdf(params: WeibullParams):
    lam, k = params.lam, params.k

    def pdf(x):
        x = np.asarray(x, dtype=np.float64)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = lam * x
            val = lam * k * t ** (k - 1) * np.exp(-t ** k)
        return np.where(x > 0, np.nan_to_num(val, nan=0.0, posinf=0.0), 0.0)
    return pdf


def ggd_pdf(params: GGDParams):
    a, b = params.alpha, params.beta
    log_norm = math.log(b) - math.log(2 * a) - float(gammaln(1.0 / b))

    def pdf(x):
        return np.exp(log_norm - (np.abs(np.asarray(x, dtype=np.float64)) / a) ** b)
    return pdf


def bc_numeric(pdf1, pdf2, support=(0.0, math.inf), breakpoints=(), epsabs=1e-10):
    """Bhattacharyya coefficient ``integral sqrt(p q)`` by adaptive quadrature.

    ``breakpoints`` split the support into pieces integrated separately, which
    helps when the densities are concentrated far from the origin.
    """
    lo, hi = support
    if not lo < hi:
        raise SimilarityError(f"empty support {support}")
    cuts = sorted(c for c in set(breakpoints) if lo < c < hi)
    edges = [lo, *cuts, hi]

    def integrand(x):
        return math.sqrt(max(float(pdf1(x)) * float(pdf2(x)), 0.0))

    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        out = integrate.quad(integrand, a, b, epsabs=epsabs / len(edges), epsrel=1e-12,
                             limit=500, full_output=1)
        if len(out) > 3:
            raise SimilarityError(f"quadrature did not converge on [{a}, {b}]: {out[3]}")
        total += out[0]
    return total


def weibull_bc_numeric(p1: WeibullParams, p2: WeibullParams) -> float:
    """Quadrature Bhattacharyya coefficient of two Weibulls.

    Integrates over ``t = ln x``, where both densities become smooth
    double-exponential bumps (no singularity at the origin for ``k < 1``).
    """
    def log_density_t(p):
        def f(t):
            z = p.k * (math.log(p.lam) + t)
            return math.log(p.k) + z - math.exp(min(z, 700.0))
        return f

    f1, f2 = log_density_t(p1), log_density_t(p2)
    centres = [-math.log(p.lam) for p in (p1, p2)]
    widths = [1.0 / p.k for p in (p1, p2)]
    lo = min(c - 40 * w for c, w in zip(centres, widths))
    hi = max(c + 6 * w for c, w in zip(centres, widths))
    cuts = [c + f * w for c, w in zip(centres, widths) for f in (-4.0, -1.0, 0.0, 1.0)]
    return bc_numeric(lambda t: math.exp(f1(t)), lambda t: math.exp(f2(t)), (lo, hi), cuts)


# -- signature similarities -------------------------------------------------

def _check_compatible(s1: Signature, s2: Signature):
    if s1.method != s2.method or s1.config != s2.config:
        raise SimilarityError(
            f"config mismatch: {s1.method} {s1.config.canonical()} vs {s2.method} {s2.config.canonical()}")
    if len(s1) != len(s2):
        raise SimilarityError(f"subband-count mismatch: {len(s1)} vs {len(s2)}")
    if s1.labels != s2.labels:
        raise SimilarityError("subband labels differ")


def sm_scat_params(query: np.ndarray, records: np.ndarray) -> np.ndarray:
    """``-sum ln K`` between ``query`` (N, 2) and each of ``records`` (R, N, 2)."""
    q = np.asarray(query, dtype=np.float64)
    r = np.asarray(records, dtype=np.float64)
    logk = log_weibull_kernel(q[..., 0], q[..., 1], r[..., 0], r[..., 1])
    # each -ln K is >= 0 analytically; clip rounding
    return np.maximum(-logk, 0.0).sum(axis=-1)


def sm_scat(s1: Signature, s2: Signature) -> float:
    """Summed negative log-kernel over subbands; smaller means more similar."""
    _check_compatible(s1, s2)
    if s1.method == "fwt-ggd":
        raise SimilarityError("sm_scat needs Weibull signatures")
    return float(sm_scat_params(s1.params, s2.params))


def ggd_cross_entropy(p1: GGDParams, p2: GGDParams) -> float:
    """``-E_{p1}[ln p2]`` for zero-mean generalized Gaussians."""
    return float(_ggd_cross_entropy(p1.alpha, p1.beta, p2.alpha, p2.beta))


def _ggd_cross_entropy(a1, b1, a2, b2):
    a1, b1, a2, b2 = (np.asarray(v, dtype=np.float64) for v in (a1, b1, a2, b2))
    moment = np.exp(b2 * (np.log(a1) - np.log(a2)) + gammaln((b2 + 1.0) / b1) - gammaln(1.0 / b1))
    if not np.all(np.isfinite(moment)):
        raise SimilarityError("overflow in GGD cross-entropy")
    return np.log(2.0 * a2 / b2) + gammaln(1.0 / b2) + moment


def ggd_kld(p1: GGDParams, p2: GGDParams) -> float:
    return ggd_cross_entropy(p1, p2) - ggd_cross_entropy(p1, p1)


def ggd_kld_params(query: np.ndarray, records: np.ndarray) -> np.ndarray:
    """Summed per-subband KLD from ``query`` (N, 2) to each of ``records`` (R, N, 2)."""
    q = np.asarray(query, dtype=np.float64)
    r = np.asarray(records, dtype=np.float64)
    cross = _ggd_cross_entropy(q[..., 0], q[..., 1], r[..., 0], r[..., 1])
    self_ = _ggd_cross_entropy(q[..., 0], q[..., 1], q[..., 0], q[..., 1])
    return (cross - self_).sum(axis=-1)


def ggd_kld_sm(s1: Signature, s2: Signature) -> float:
    """``sum_i KLD(p1_i || p2_i)``. Not symmetric; ``s1`` plays the query."""
    _check_compatible(s1, s2)
    if s1.method != "fwt-ggd":
        raise SimilarityError("ggd_kld_sm needs fwt-ggd signatures")
    return float(ggd_kld_params(s1.params, s2.params))


def signature_distance(s1: Signature, s2: Signature) -> float:
    """The retrieval distance of the signature's method."""
    return ggd_kld_sm(s1, s2) if s1.method == "fwt-ggd" else sm_scat(s1, s2)


def distances_to(query: Signature, method: str, records: np.ndarray) -> np.ndarray:
    """Vectorized distance from one query to a stack of record parameters."""
    if method == "fwt-ggd":
        return ggd_kld_params(query.params, records)
    return sm_scat_params(query.params, records)
