"""Frequency-domain Morlet filterbank with Gaussian scaling and blur filters.

Scale index ``j`` runs over ``0 .. J-1`` with ``j = 0`` the finest band; the
wavelet at scale ``j`` is the mother wavelet dilated by ``2**j``. Rotation
``r`` orients the wavelet at angle ``r * pi / L``, so the L orientations cover
a half-plane and every filter is (nearly) analytic.

All responses are sampled on the DFT frequency grid, periodized by summing
shifted copies of the continuous response, so they are the exact transfer
functions of the sampled spatial filters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

CENTER_FREQ = 3 * math.pi / 4
BANDWIDTH_FACTOR = 1.3
SLANT = 1.6
LOWPASS_WIDTH = 2.5
BLUR_BINS = 1.0

# Number of periodic copies summed on each side of the principal domain.
_PERIODS = 2


def half_power_sigma(center_freq: float) -> float:
    """Radial bandwidth at which dyadic neighbours cross at half power.

    Scales ``xi`` and ``xi/2`` with widths ``s`` and ``s/2`` meet where both
    squared Gaussians equal 1/2, giving ``s = xi / (3 sqrt(ln 2))``.
    """
    return center_freq / (3.0 * math.sqrt(math.log(2.0)))


def frequency_grid(height: int, width: int):
    """Angular frequencies (radians/sample) of the DFT bins, ``ij`` ordering."""
    wy = 2 * np.pi * np.fft.fftfreq(height)
    wx = 2 * np.pi * np.fft.fftfreq(width)
    return np.meshgrid(wy, wx, indexing="ij")


def gabor_response(wy, wx, scale: int, theta: float, center_freq: float,
                   sigma: float, slant: float, modulated: bool = True):
    """Continuous, unperiodized Gaussian bump of a dilated, rotated Gabor.

    ``sigma`` is the radial width of the mother window in frequency and
    ``sigma * slant`` its width across the orientation.
    """
    s = 2.0 ** scale
    u = (np.cos(theta) * wx + np.sin(theta) * wy) * s
    v = (-np.sin(theta) * wx + np.cos(theta) * wy) * s
    if modulated:
        u = u - center_freq
    return np.exp(-(u * u + (v / slant) ** 2) / (2 * sigma * sigma))


def morlet_response(wy, wx, scale: int, theta: float, center_freq: float,
                    sigma: float, slant: float):
    """Continuous Morlet response, zero at the origin."""
    kappa = math.exp(-center_freq ** 2 / (2 * sigma * sigma))
    return (gabor_response(wy, wx, scale, theta, center_freq, sigma, slant)
            - kappa * gabor_response(wy, wx, scale, theta, center_freq, sigma, slant, modulated=False))


def _periodize(fn, height, width):
    wy, wx = frequency_grid(height, width)
    total = np.zeros((height, width))
    for a in range(-_PERIODS, _PERIODS + 1):
        for b in range(-_PERIODS, _PERIODS + 1):
            total += fn(wy + 2 * np.pi * a, wx + 2 * np.pi * b)
    return total


def _sampled_morlet(height, width, scale, theta, center_freq, sigma, slant):
    gabor = _periodize(
        lambda wy, wx: gabor_response(wy, wx, scale, theta, center_freq, sigma, slant),
        height, width)
    window = _periodize(
        lambda wy, wx: gabor_response(wy, wx, scale, theta, center_freq, sigma, slant, modulated=False),
        height, width)
    # cancel the DC bin of the periodized filter exactly
    return gabor - (gabor[0, 0] / window[0, 0]) * window


def _sampled_gaussian(height, width, sigma):
    g = _periodize(lambda wy, wx: np.exp(-(wy * wy + wx * wx) / (2 * sigma * sigma)), height, width)
    return g / g[0, 0]


def periodize_filter(response: np.ndarray, res: int) -> np.ndarray:
    """Transfer function of the filter on a grid subsampled by ``2**res``.

    Summing the aliased copies equals subsampling the spatial impulse
    response (scaled by the area factor), so responses keep their gain.
    """
    if res == 0:
        return response
    k = 2 ** res
    h, w = response.shape
    return response.reshape(k, h // k, k, w // k).sum(axis=(0, 2))


def _analytic_sum(responses, shape):
    ny = (-np.arange(shape[0])) % shape[0]
    nx = (-np.arange(shape[1])) % shape[1]
    total = np.zeros(shape)
    for psi in responses:
        power = np.abs(psi) ** 2
        total += power + power[np.ix_(ny, nx)]
    return total


def annulus_mask(height: int, width: int, J: int) -> np.ndarray:
    wy, wx = frequency_grid(height, width)
    radius = np.hypot(wy, wx)
    return (radius >= np.pi / 2 ** J) & (radius <= np.pi)


@dataclass(frozen=True)
class FilterBank:
    """Sampled filters for one grid size, plus their subsampled versions.

    ``bandpass[(j, r)]`` is complex, ``lowpass`` and ``blur`` are real. The
    ``*_levels`` tuples hold the same filters periodized to resolution
    ``res`` (grid divided by ``2**res``).
    """

    height: int
    width: int
    J: int
    L: int
    center_freq: float
    bandwidth_factor: float
    slant: float
    lowpass_width: float
    gain: float
    bandpass: dict = field(repr=False)
    lowpass: np.ndarray = field(repr=False)
    blur: np.ndarray = field(repr=False)
    bandpass_levels: tuple = field(repr=False, default=())
    lowpass_levels: tuple = field(repr=False, default=())

    @property
    def shape(self):
        return (self.height, self.width)

    @property
    def sigma(self) -> float:
        return half_power_sigma(self.center_freq) * self.bandwidth_factor

    def keys(self):
        return [(j, r) for j in range(self.J) for r in range(self.L)]

    def bandpass_at(self, j: int, r: int, res: int) -> np.ndarray:
        return self.bandpass_levels[res][(j, r)]

    def lowpass_at(self, res: int) -> np.ndarray:
        return self.lowpass_levels[res]


def build_morlet_bank(width: int, height: int, J: int, L: int,
                      slant: float = SLANT,
                      bandwidth_factor: float = BANDWIDTH_FACTOR,
                      center_freq: float = CENTER_FREQ,
                      lowpass_width: float = LOWPASS_WIDTH,
                      blur_bins: float = BLUR_BINS) -> FilterBank:
    """Build the Morlet bank for a ``width`` x ``height`` grid.

    Parameters
    ----------
    J, L : int
        Number of dyadic scales and of orientations over ``[0, pi)``.
    slant : float
        Ratio of the across-orientation to the radial window width.
    bandwidth_factor : float
        Multiplier on the half-power-crossing radial width.
    center_freq : float
        Centre frequency of the finest wavelet, radians per sample.
    lowpass_width : float
        Standard deviation of the scaling filter in frequency, times ``2**J``.
    blur_bins : float
        Standard deviation of the normalization blur filter, in DFT bins of
        the shorter grid side.

    Notes
    -----
    After construction all band-pass filters share one gain, chosen to
    minimise the Littlewood-Paley deviation on the annulus
    ``pi / 2**J <= |w| <= pi`` subject to ``max |psi| <= 1``.
    """
    for name, value in (("J", J), ("L", L)):
        if int(value) != value or value < 1:
            raise ValueError(f"{name} must be a positive integer, got {value}")
    for name, value in (("slant", slant), ("bandwidth_factor", bandwidth_factor),
                        ("center_freq", center_freq), ("lowpass_width", lowpass_width),
                        ("blur_bins", blur_bins)):
        if not value > 0:
            raise ValueError(f"{name} must be positive, got {value}")
    if width < 2 ** J or height < 2 ** J:
        raise ValueError(f"grid {width}x{height} smaller than 2**J = {2 ** J}")
    if width % 2 ** J or height % 2 ** J:
        raise ValueError(f"grid {width}x{height} not divisible by 2**J = {2 ** J}")

    sigma = half_power_sigma(center_freq) * bandwidth_factor
    raw = {
        (j, r): _sampled_morlet(height, width, j, r * np.pi / L, center_freq, sigma, slant)
        for j in range(J) for r in range(L)
    }
    lowpass = _sampled_gaussian(height, width, lowpass_width / 2 ** J)
    blur = _sampled_gaussian(height, width, blur_bins * 2 * np.pi / min(height, width))

    peak = max(float(np.abs(psi).max()) for psi in raw.values())
    mask = annulus_mask(height, width, J)
    band_power = _analytic_sum(raw.values(), (height, width))[mask]
    low_power = lowpass[mask] ** 2

    def deviation(g2):
        return float(np.abs(low_power + g2 * band_power - 1.0).max())

    opt = minimize_scalar(deviation, bounds=(0.0, 1.0 / peak ** 2), method="bounded",
                          options={"xatol": 1e-10})
    gain = math.sqrt(opt.x)
    bandpass = {key: gain * psi for key, psi in raw.items()}

    bandpass_levels = tuple(
        {key: periodize_filter(psi, res) for key, psi in bandpass.items() if key[0] >= res}
        for res in range(J)
    )
    lowpass_levels = tuple(periodize_filter(lowpass, res) for res in range(J + 1))
    return FilterBank(
        height=height, width=width, J=J, L=L, center_freq=center_freq,
        bandwidth_factor=bandwidth_factor, slant=slant, lowpass_width=lowpass_width,
        gain=gain, bandpass=bandpass, lowpass=lowpass, blur=blur,
        bandpass_levels=bandpass_levels, lowpass_levels=lowpass_levels,
    )


def littlewood_paley(bank: FilterBank):
    """Pointwise filter energy sum and its max deviation from 1 on the annulus.

    Each analytic filter covers one half-plane, so it contributes at both
    ``w`` and ``-w``: ``|phi(w)|^2 + sum |psi(w)|^2 + |psi(-w)|^2``.
    """
    shape = bank.shape
    total = bank.lowpass ** 2 + _analytic_sum(bank.bandpass.values(), shape)
    mask = annulus_mask(bank.height, bank.width, bank.J)
    return total, float(np.abs(total[mask] - 1.0).max())
