"""Maximum-likelihood fits of Weibull and generalized Gaussian models to subbands.

The Weibull density is parametrized by a rate ``lam`` (the reciprocal of the
usual scale) and a shape ``k``::

    p(x | lam, k) = lam k (lam x)^(k-1) exp(-(lam x)^k),   x >= 0
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import digamma, logsumexp, polygamma

from .dwt import DwtPyramid
from .scattering import ScatteringRep, path_label
from .signature import Signature, SignatureConfig

MIN_SAMPLES = 16
FLOOR_REL = 1e-12
K_BRACKET = (1e-3, 1e3)
BETA_BRACKET = (0.05, 50.0)


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class WeibullParams:
    lam: float
    k: float

    def __post_init__(self):
        for name in ("lam", "k"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"Weibull {name} must be positive and finite, got {value}")

    @property
    def scale(self) -> float:
        """Conventional Weibull scale, ``1 / lam``."""
        return 1.0 / self.lam


@dataclass(frozen=True)
class GGDParams:
    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("alpha", "beta"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"GGD {name} must be positive and finite, got {value}")


def _positive_samples(samples) -> np.ndarray:
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size == 0:
        raise FitError("empty sample list")
    if not np.all(np.isfinite(x)):
        raise FitError("non-finite sample")
    if np.any(x <= 0):
        raise FitError("nonpositive sample")
    return x


def weibull_loglik(params: WeibullParams, samples) -> float:
    """Log-likelihood ``N k ln lam + N ln k + (k-1) sum ln x - sum (lam x)^k``."""
    x = _positive_samples(samples)
    lam, k = params.lam, params.k
    n = x.size
    lx = np.log(x)
    return (n * k * math.log(lam) + n * math.log(k) + (k - 1) * float(lx.sum())
            - float(np.exp(k * (math.log(lam) + lx)).sum()))


def weibull_lambda_star(samples, k: float) -> float:
    """Rate maximising the likelihood for fixed shape: ``(mean x^k)^(-1/k)``."""
    if not k > 0:
        raise FitError(f"shape must be positive, got {k}")
    lx = np.log(_positive_samples(samples))
    log_mean = logsumexp(k * lx) - math.log(lx.size)
    return math.exp(-log_mean / k)


def weibull_shape_equation(samples, k: float) -> float:
    """Left-hand side of the profile score equation in k (zero at the ML shape).

    ``N/k + sum ln x - N sum(x^k ln x) / sum(x^k)``
    """
    lx = np.log(_positive_samples(samples))
    y = lx - lx.mean()
    return lx.size * _shape_residual(y, k)[0]


def _shape_residual(y: np.ndarray, k: float):
    # per-sample residual and its derivative, with centred log-samples y
    z = k * y
    w = np.exp(z - z.max())
    sw = w.sum()
    m1 = float((w * y).sum() / sw)
    var = float((w * (y - m1) ** 2).sum() / sw)
    return 1.0 / k - m1, -1.0 / (k * k) - var


def _safeguarded_newton(fn, x0, lo, hi, tol, max_iter, decreasing, what):
    f_lo, _ = fn(lo)
    f_hi, _ = fn(hi)
    sign = 1.0 if decreasing else -1.0
    if sign * f_lo < 0 or sign * f_hi > 0:
        raise FitError(f"{what}: root outside the bracket [{lo:g}, {hi:g}] (non-convergence)")
    x = min(max(x0, lo), hi)
    for _ in range(max_iter):
        f, df = fn(x)
        if abs(f) <= tol:
            return x
        if sign * f > 0:
            lo = x
        else:
            hi = x
        step = x - f / df if df != 0 else math.nan
        if not (lo < step < hi):
            step = math.sqrt(lo * hi)
        x = step
    raise FitError(f"{what}: non-convergence after {max_iter} iterations")


def weibull_fit(samples, floor: float | None = None, max_iter: int = 100,
                tol: float = 1e-9) -> WeibullParams:
    """ML Weibull fit.

    Samples ``<= floor`` are discarded first (default ``1e-12 * max``). The
    shape solves the profile score equation by Newton-Raphson, falling back
    to bisection whenever a step leaves the current bracket; iteration stops
    when the per-sample residual is below ``tol``.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    if not np.all(np.isfinite(x)):
        raise FitError("non-finite sample")
    if np.any(x < 0):
        raise FitError("negative sample")
    if x.size == 0:
        raise FitError("too few samples: 0")
    if floor is None:
        floor = FLOOR_REL * float(x.max())
    x = x[x > floor]
    if x.size < MIN_SAMPLES:
        raise FitError(f"too few samples: {x.size} above floor {floor:g}")
    lx = np.log(x)
    if np.ptp(lx) == 0:
        raise FitError("degenerate sample: all values equal")
    y = lx - lx.mean()
    std = float(y.std())
    k0 = math.pi / (math.sqrt(6.0) * std) if std > 0 else 1.0
    k = _safeguarded_newton(lambda kk: _shape_residual(y, kk), k0, *K_BRACKET, tol, max_iter,
                            decreasing=True, what="Weibull shape")
    log_lam = -(lx.mean() + (logsumexp(k * y) - math.log(y.size)) / k)
    return WeibullParams(lam=math.exp(log_lam), k=k)


def ggd_fit(samples, max_iter: int = 100, tol: float = 1e-9) -> GGDParams:
    """ML fit of a zero-mean generalized Gaussian (shape by safeguarded Newton).

    The shape is searched in ``BETA_BRACKET``; samples whose likelihood keeps
    rising towards an end of that range get the end value.

    Solves ``1 + psi(1/b)/b - S1/S0 + ln(b S0 / N)/b = 0`` with
    ``S0 = sum |x|^b`` and ``S1 = sum |x|^b ln|x|``; then
    ``alpha = (b S0 / N)^(1/b)``.
    """
    x = np.abs(np.asarray(samples, dtype=np.float64).ravel())
    if not np.all(np.isfinite(x)):
        raise FitError("non-finite sample")
    n = x.size
    if n < MIN_SAMPLES:
        raise FitError(f"too few samples: {n}")
    a = x[x > 0]
    if a.size < 2 or np.ptp(a) == 0 and a.size == n:
        raise FitError("degenerate sample: zero variance")
    la_raw = np.log(a)
    shift = float(la_raw.mean())
    la = la_raw - shift
    log_n = math.log(n)

    def equation(b):
        z = b * la
        zmax = z.max()
        w = np.exp(z - zmax)
        sw = w.sum()
        m1 = float((w * la).sum() / sw)
        m2 = float((w * la * la).sum() / sw)
        log_term = math.log(b) + zmax + math.log(sw) - log_n
        g = 1.0 + digamma(1.0 / b) / b - m1 + log_term / b
        dg = (-polygamma(1, 1.0 / b) / b ** 3 - digamma(1.0 / b) / b ** 2
              - (m2 - m1 * m1) + 1.0 / b ** 2 + m1 / b - log_term / b ** 2)
        return g, dg

    # bracket the root on a log grid; the equation changes sign once
    grid = np.geomspace(*BETA_BRACKET, 60)
    values = [equation(b)[0] for b in grid]
    bracket = None
    for b0, b1, g0, g1 in zip(grid[:-1], grid[1:], values[:-1], values[1:]):
        if g0 == 0:
            bracket = (b0, b0)
            break
        if g0 * g1 < 0:
            bracket = (b0, b1)
            break
    if bracket is None:
        # no interior root: the likelihood is monotone over the bracket and
        # its maximum sits on the boundary (e.g. near-uniform samples)
        if not all(np.isfinite(values)):
            raise FitError("GGD shape: non-convergence")
        beta = BETA_BRACKET[1] if values[-1] > 0 else BETA_BRACKET[0]
        lo = hi = beta
    else:
        lo, hi = bracket
    if lo == hi:
        beta = lo
    else:
        increasing = values[list(grid).index(lo)] < 0
        beta = _safeguarded_newton(equation, math.sqrt(lo * hi), lo, hi, tol, max_iter,
                                   decreasing=not increasing, what="GGD shape")
    z = beta * la
    log_alpha = (math.log(beta) + logsumexp(z) - log_n) / beta + shift
    return GGDParams(alpha=math.exp(log_alpha), beta=float(beta))


def fit_signature(rep, method: str | None = None, floor_rel: float = FLOOR_REL) -> Signature:
    """Fit every layer >= 1 scattering subband (Weibull) or DWT detail (GGD).

    ``method`` is ``"weibull"`` or ``"ggd"``; by default it follows the
    representation type.
    """
    if isinstance(rep, ScatteringRep):
        if method not in (None, "weibull"):
            raise ValueError(f"scattering representations are fitted with 'weibull', not {method!r}")
        labels, params = [], []
        for path, sub in rep.subbands.items():
            if not path:
                continue
            flat = sub.ravel()
            try:
                fit = weibull_fit(flat, floor=floor_rel * float(flat.max()) if flat.size else None)
            except FitError as exc:
                raise FitError(f"subband {path_label(path)}: {exc}") from exc
            labels.append(path_label(path))
            params.append((fit.lam, fit.k))
        if not labels:
            raise ValueError("representation has no layer >= 1 subbands")
        name = "nwst-weibull" if rep.normalized else "wst-weibull"
        config = SignatureConfig(J=rep.J, L=rep.L, depth=rep.M, normalized=rep.normalized,
                                 epsilon_rel=float(rep.epsilon_rel) if rep.normalized else 0.0)
        return Signature(name, config, tuple(labels), np.array(params))
    if isinstance(rep, DwtPyramid):
        if method not in (None, "ggd"):
            raise ValueError(f"DWT pyramids are fitted with 'ggd', not {method!r}")
        from .signature import subband_labels
        config = SignatureConfig(J=0, L=0, depth=rep.levels, normalized=False, epsilon_rel=0.0)
        labels = subband_labels("fwt-ggd", config)
        params = []
        for key, label in zip(rep.keys(), labels):
            try:
                fit = ggd_fit(rep.details[key])
            except FitError as exc:
                raise FitError(f"subband {label}: {exc}") from exc
            params.append((fit.alpha, fit.beta))
        return Signature("fwt-ggd", config, labels, np.array(params))
    raise TypeError(f"cannot fit a signature to {type(rep).__name__}")
