"""Windowed scattering transform (WST) and its normalized variant (NWST).

Paths are tuples of ``(j, r)`` steps with strictly increasing scale. Band-pass
moduli at scale ``j`` live on the grid subsampled by ``2**j`` and every output
subband on the grid subsampled by ``2**J`` (both divided by the oversampling
factor). Convolutions are periodic, carried out with the FFT.
"""
from __future__ import annotations

import itertools
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .filterbank import FilterBank

Path = tuple


class ScatteringError(ValueError):
    pass


def path_label(path: Path) -> str:
    """``((0, 1), (2, 3))`` -> ``"0,1/2,3"``; the empty path is ``"-"``."""
    return "/".join(f"{j},{r}" for j, r in path) or "-"


def parse_path(text: str) -> Path:
    text = text.strip()
    if text in ("", "-"):
        return ()
    steps = []
    for step in text.split("/"):
        parts = step.split(",")
        if len(parts) != 2:
            raise ScatteringError(f"invalid path selector {text!r}")
        try:
            steps.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise ScatteringError(f"invalid path selector {text!r}") from None
    return tuple(steps)


def admissible_paths(J: int, L: int, M: int) -> list[Path]:
    """All paths of length 0..M with strictly increasing scales, canonical order."""
    if M < 0:
        raise ScatteringError(f"M must be nonnegative, got {M}")
    paths = [()]
    for m in range(1, M + 1):
        for scales in itertools.combinations(range(J), m):
            for rots in itertools.product(range(L), repeat=m):
                paths.append(tuple(zip(scales, rots)))
    # layer first, then lexicographic in the steps
    return sorted(paths, key=lambda p: (len(p), p))


def _subsample(spectrum: np.ndarray, k: int) -> np.ndarray:
    """Spectrum of the signal subsampled by ``k`` along both axes."""
    if k == 1:
        return spectrum
    h, w = spectrum.shape
    return spectrum.reshape(k, h // k, k, w // k).mean(axis=(0, 2))


def resample_fourier(x: np.ndarray, shape) -> np.ndarray:
    """Band-limited resampling of a periodic grid by cropping or zero-padding its spectrum."""
    h, w = x.shape
    H, W = shape
    if (h, w) == (H, W):
        return x.copy()
    spec = np.fft.fftshift(np.fft.fft2(x))
    out = np.zeros((H, W), dtype=complex)
    ch, cw = min(h, H), min(w, W)
    src_r, src_c = h // 2 - ch // 2, w // 2 - cw // 2
    dst_r, dst_c = H // 2 - ch // 2, W // 2 - cw // 2
    out[dst_r:dst_r + ch, dst_c:dst_c + cw] = spec[src_r:src_r + ch, src_c:src_c + cw]
    return np.real(np.fft.ifft2(np.fft.ifftshift(out))) * (H * W) / (h * w)


def _log2_factor(oversampling: int) -> int:
    ov = int(oversampling)
    if ov < 1 or ov & (ov - 1):
        raise ScatteringError(f"oversampling must be a power of two, got {oversampling}")
    return ov.bit_length() - 1


@dataclass
class ScatteringRep:
    """Ordered map path -> subband plus the configuration that produced it."""

    subbands: dict = field(repr=False)
    J: int
    L: int
    M: int
    normalized: bool = False
    oversampling: int = 1
    epsilon_rel: float = 0.0

    @property
    def paths(self) -> list:
        return list(self.subbands)

    def layer(self, m: int) -> dict:
        return {p: s for p, s in self.subbands.items() if len(p) == m}

    @property
    def sampling_exponent(self) -> int:
        return max(self.J - _log2_factor(self.oversampling), 0)


def propagate(signal: np.ndarray, bank: FilterBank, j_min: int, resolution: int = 0,
              oversampling: int = 1):
    """One node of the scattering tree.

    ``signal`` lives on the grid subsampled by ``2**resolution``. Returns the
    moduli ``|psi_{j,r} * signal|`` for ``j >= j_min`` (each on the ``2**j``
    grid, up to oversampling) and ``phi_J * signal`` on the ``2**J`` grid.
    """
    ov = _log2_factor(oversampling)
    expected = (bank.height >> resolution, bank.width >> resolution)
    if signal.shape != expected:
        raise ScatteringError(
            f"signal shape {signal.shape} does not match bank at resolution {resolution}: {expected}")
    spectrum = np.fft.fft2(signal)

    moduli = {}
    for j in range(max(j_min, 0), bank.J):
        target = max(j - ov, 0)
        if target < resolution:
            raise ScatteringError(f"scale {j} is finer than the signal resolution {resolution}")
        k = 2 ** (target - resolution)
        for r in range(bank.L):
            filtered = _subsample(spectrum * bank.bandpass_at(j, r, resolution), k)
            moduli[(j, r)] = np.abs(np.fft.ifft2(filtered))

    k = 2 ** (max(bank.J - ov, 0) - resolution)
    low = np.real(np.fft.ifft2(_subsample(spectrum * bank.lowpass_at(resolution), k)))
    return moduli, low


def _check_image(image, bank):
    image = np.asarray(image, dtype=np.float64)
    if image.shape != bank.shape:
        raise ScatteringError(f"image shape {image.shape} does not match bank {bank.shape}")
    return image


def wst(image, bank: FilterBank, M: int, oversampling: int = 1) -> ScatteringRep:
    """Finite-path windowed scattering transform up to path length ``M``."""
    if M < 0:
        raise ScatteringError(f"M must be nonnegative, got {M}")
    image = _check_image(image, bank)
    ov = _log2_factor(oversampling)
    out = {}
    # frontier: path -> (modulus signal, its resolution)
    frontier = {(): (image, 0)}
    for m in range(M + 1):
        next_frontier = {}
        for path, (signal, res) in frontier.items():
            j_min = path[-1][0] + 1 if path else 0
            if m == M:
                j_min = bank.J
            moduli, low = propagate(signal, bank, j_min, res, oversampling)
            # lowpass of a nonnegative signal is nonnegative; clip FFT round-off
            out[path] = np.maximum(low, 0.0) if path else low
            for (j, r), u in moduli.items():
                next_frontier[path + ((j, r),)] = (u, max(j - ov, 0))
        frontier = next_frontier
    order = admissible_paths(bank.J, bank.L, M)
    return ScatteringRep(subbands={p: out[p] for p in order}, J=bank.J, L=bank.L, M=M,
                         normalized=False, oversampling=oversampling)


def _add_floor(den: np.ndarray, epsilon_rel: float) -> np.ndarray:
    eps = max(epsilon_rel * float(np.mean(den)), np.finfo(float).tiny)
    return den + eps


def nwst(image, bank: FilterBank, M: int, epsilon_rel: float = 1e-6,
         oversampling: int = 1) -> ScatteringRep:
    """Normalized WST.

    Layer-1 subbands are divided by ``|f| * blur`` resampled to the subband
    grid, deeper subbands by their parent subband; each denominator gets
    ``epsilon_rel`` times its own mean added.
    """
    if not epsilon_rel > 0:
        raise ScatteringError(f"epsilon_rel must be positive, got {epsilon_rel}")
    rep = wst(image, bank, M, oversampling)
    image = _check_image(image, bank)
    first = np.real(np.fft.ifft2(np.fft.fft2(np.abs(image)) * bank.blur))
    out = {}
    for path, sub in rep.subbands.items():
        if not path:
            out[path] = sub
            continue
        if len(path) == 1:
            den = resample_fourier(first, sub.shape)
        else:
            den = rep.subbands[path[:-1]]
        out[path] = sub / _add_floor(den, epsilon_rel)
    return ScatteringRep(subbands=out, J=rep.J, L=rep.L, M=M, normalized=True,
                         oversampling=oversampling, epsilon_rel=epsilon_rel)


def _weighted_energy(rep: ScatteringRep, subbands) -> float:
    area = 4.0 ** rep.sampling_exponent
    return area * math.fsum(float(np.sum(s * s)) for s in subbands)


def scattering_norm(rep: ScatteringRep) -> float:
    """Scattering norm, each subband weighted by its subsampling area."""
    if rep.normalized:
        raise ScatteringError("scattering norm is defined for the plain WST only")
    return math.sqrt(_weighted_energy(rep, rep.subbands.values()))


def scattering_distance(rep1: ScatteringRep, rep2: ScatteringRep) -> float:
    """``||S[f1] - S[f2]||_S`` over the common path set."""
    if rep1.normalized or rep2.normalized:
        raise ScatteringError("scattering distance is defined for the plain WST only")
    if list(rep1.subbands) != list(rep2.subbands):
        raise ScatteringError("representations have different path sets")
    diffs = (rep1.subbands[p] - rep2.subbands[p] for p in rep1.subbands)
    return math.sqrt(_weighted_energy(rep1, diffs))


# -- subband dump ----------------------------------------------------------

DUMP_MAGIC = b"SCSB"
DUMP_VERSION = 1


def write_subband_dump(rep: ScatteringRep, path) -> None:
    """Binary dump, little-endian.

    Header: magic ``SCSB``, u16 version, u8 normalized flag, u8 J, u8 L,
    u8 M, u32 record count. Each record: u8 layer, ``layer`` pairs of u8
    (j, r), u32 height, u32 width, then height*width float64 row-major.
    """
    with open(path, "wb") as fh:
        fh.write(DUMP_MAGIC)
        fh.write(struct.pack("<HBBBBI", DUMP_VERSION, int(rep.normalized), rep.J, rep.L, rep.M,
                             len(rep.subbands)))
        for p, sub in rep.subbands.items():
            fh.write(struct.pack("<B", len(p)))
            for j, r in p:
                fh.write(struct.pack("<BB", j, r))
            fh.write(struct.pack("<II", *sub.shape))
            fh.write(np.ascontiguousarray(sub, dtype="<f8").tobytes())


def read_subband_dump(path) -> ScatteringRep:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != DUMP_MAGIC:
        raise ScatteringError("not a subband dump")
    version, normalized, J, L, M, count = struct.unpack_from("<HBBBBI", data, 4)
    if version != DUMP_VERSION:
        raise ScatteringError(f"unsupported dump version {version}")
    pos = 4 + struct.calcsize("<HBBBBI")
    subbands = {}
    for _ in range(count):
        (layer,) = struct.unpack_from("<B", data, pos)
        pos += 1
        steps = []
        for _ in range(layer):
            steps.append(struct.unpack_from("<BB", data, pos))
            pos += 2
        h, w = struct.unpack_from("<II", data, pos)
        pos += 8
        sub = np.frombuffer(data, dtype="<f8", count=h * w, offset=pos).reshape(h, w)
        pos += 8 * h * w
        subbands[tuple(steps)] = sub.astype(np.float64)
    return ScatteringRep(subbands=subbands, J=J, L=L, M=M, normalized=bool(normalized))
