"""Feature database, nearest-signature queries and retrieval-rate evaluation."""
from __future__ import annotations

import io
import json
import math
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import imageio
from .config import RunConfig
from .dwt import dwt2
from .filterbank import build_morlet_bank
from .scattering import nwst, wst
from .signature import METHOD_IDS, METHODS, Signature, SignatureConfig, fingerprint, subband_labels
from .similarity import distances_to
from .statmodel import fit_signature

DB_MAGIC = b"SCRT"
DB_VERSION = 1
_HEADER = struct.Struct("<4sHB")
_CONFIG = struct.Struct("<HHHBd")


class RetrievalError(ValueError):
    pass


# -- database ---------------------------------------------------------------

@dataclass
class FeatureDB:
    """Signatures sharing one (method, config), kept in canonical (class, patch id) order."""

    method: str
    config: SignatureConfig
    records: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if self.method not in METHODS:
            raise RetrievalError(f"unknown method {self.method!r}")
        self.labels = subband_labels(self.method, self.config)
        seen = set()
        for rec in self.records:
            self._check(rec)
            if rec.source in seen:
                raise RetrievalError(f"duplicate record id {rec.source}")
            seen.add(rec.source)
        self.records = sorted(self.records, key=lambda r: r.source)
        self._params = None

    @property
    def fingerprint(self) -> str:
        return fingerprint(self.method, self.config)

    def _check(self, rec: Signature):
        if rec.fingerprint != self.fingerprint:
            raise RetrievalError(
                f"fingerprint mismatch: record {rec.fingerprint} vs database {self.fingerprint}")
        if rec.source is None:
            raise RetrievalError("database records need a (class_label, patch_id) source")
        if rec.labels != self.labels:
            raise RetrievalError("record subbands differ from the canonical order")

    def __len__(self):
        return len(self.records)

    @property
    def ids(self) -> list:
        return [r.source for r in self.records]

    @property
    def params(self) -> np.ndarray:
        """All record parameters stacked as (R, N, 2)."""
        if self._params is None:
            self._params = np.stack([r.params for r in self.records]) if self.records else \
                np.zeros((0, len(self.labels), 2))
        return self._params

    def classes(self) -> dict:
        out = {}
        for cls, _ in self.ids:
            out[cls] = out.get(cls, 0) + 1
        return out

    # binary format

    def to_bytes(self) -> bytes:
        buf = io.BytesIO()
        buf.write(_HEADER.pack(DB_MAGIC, DB_VERSION, METHOD_IDS[self.method]))
        c = self.config
        buf.write(_CONFIG.pack(c.J, c.L, c.depth, int(c.normalized), c.epsilon_rel))
        buf.write(struct.pack("<I", len(self.records)))
        for rec in self.records:
            label = rec.source[0].encode("utf-8")
            buf.write(struct.pack("<I", len(label)))
            buf.write(label)
            buf.write(struct.pack("<II", rec.source[1], len(rec)))
            buf.write(np.ascontiguousarray(rec.params, dtype="<f8").tobytes())
        return buf.getvalue()

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> "FeatureDB":
        try:
            magic, version, method_id = _HEADER.unpack_from(data, 0)
            if magic != DB_MAGIC:
                raise RetrievalError("not a feature database (bad magic)")
            if version != DB_VERSION:
                raise RetrievalError(f"unsupported database version {version}")
            if method_id >= len(METHODS):
                raise RetrievalError(f"unknown method id {method_id}")
            method = METHODS[method_id]
            J, L, depth, normalized, eps = _CONFIG.unpack_from(data, _HEADER.size)
            config = SignatureConfig(J=J, L=L, depth=depth, normalized=bool(normalized), epsilon_rel=eps)
            labels = subband_labels(method, config)
            pos = _HEADER.size + _CONFIG.size
            (count,) = struct.unpack_from("<I", data, pos)
            pos += 4
            records = []
            for _ in range(count):
                (n,) = struct.unpack_from("<I", data, pos)
                pos += 4
                label = data[pos:pos + n].decode("utf-8")
                pos += n
                patch_id, entries = struct.unpack_from("<II", data, pos)
                pos += 8
                if entries != len(labels):
                    raise RetrievalError(f"record {label}/{patch_id} has {entries} entries, expected {len(labels)}")
                params = np.frombuffer(data, dtype="<f8", count=2 * entries, offset=pos).reshape(entries, 2)
                pos += 16 * entries
                records.append(Signature(method, config, labels, params.astype(np.float64), (label, patch_id)))
        except (struct.error, UnicodeDecodeError, ValueError) as exc:
            if isinstance(exc, RetrievalError):
                raise
            raise RetrievalError(f"corrupt feature database: {exc}") from None
        if pos != len(data):
            raise RetrievalError("corrupt feature database: trailing bytes")
        return cls(method, config, records)

    @classmethod
    def load(cls, path) -> "FeatureDB":
        return cls.from_bytes(Path(path).read_bytes())


# -- feature extraction -------------------------------------------------------

@lru_cache(maxsize=8)
def _bank(height, width, J, L, slant, bandwidth_factor, center_freq, lowpass_width):
    return build_morlet_bank(width, height, J, L, slant=slant, bandwidth_factor=bandwidth_factor,
                             center_freq=center_freq, lowpass_width=lowpass_width)


def bank_for(config: RunConfig, shape):
    return _bank(shape[0], shape[1], config.J, config.L, config.slant, config.bandwidth_factor,
                 config.center_freq, config.lowpass_width)


def extract_signature(patch, config: RunConfig, blur_sigma: float = 0.0) -> Signature:
    """Blur (optional), normalize, transform and fit one patch."""
    patch = imageio.as_grid(patch)
    if blur_sigma:
        patch = imageio.gaussian_blur(patch, blur_sigma)
    patch = imageio.normalize_patch(patch)
    if config.method == "fwt-ggd":
        rep = dwt2(patch, config.dwt_levels)
    else:
        bank = bank_for(config, patch.shape)
        if config.method == "nwst-weibull":
            rep = nwst(patch, bank, config.M, config.epsilon_rel, config.oversampling)
        else:
            rep = wst(patch, bank, config.M, config.oversampling)
    return fit_signature(rep, floor_rel=config.floor_rel)


def image_patches(image, config: RunConfig) -> list:
    if config.downscale:
        image = imageio.downscale_half(image)
    if config.patching == "whole":
        return [imageio.as_grid(image).copy()]
    if config.patching == "five":
        offsets = imageio.five_window_offsets(image.shape, config.patch_size)
    else:
        offsets = imageio.grid_offsets(image.shape, config.patch_size)
    if not offsets:
        raise imageio.ImageError(f"image {image.shape[1]}x{image.shape[0]} smaller than patch_size {config.patch_size}")
    return imageio.extract_patches(image, config.patch_size, offsets)


def _index_file(task):
    path, config, blur_sigma = task
    try:
        patches = image_patches(imageio.load_grayscale(path), config)
        sigs = [extract_signature(p, config, blur_sigma) for p in patches]
    except Exception as exc:  # annotate any extraction failure with the file
        raise RetrievalError(f"{path}: {exc}") from None
    return [p.shape for p in patches], sigs


def index_dataset(root, config: RunConfig, blur_sigma: float = 0.0, workers: int | None = None,
                  progress=None) -> FeatureDB:
    """Index every patch of every image under ``root`` (one subdirectory per class).

    Patch ids count up within a class across its sorted files. ``progress``
    is called as ``progress(done, total_files, class_label, patch_id)`` once
    per patch.
    """
    dataset = imageio.list_dataset(root)
    tasks, owners = [], []
    for cls, files in dataset.items():
        for path in files:
            tasks.append((str(path), config, float(blur_sigma)))
            owners.append(cls)
    workers = workers if workers is not None else config.resolved_workers
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            results = pool.map(_index_file, tasks, chunksize=max(1, len(tasks) // (4 * workers)))
            results = list(_track(results, owners, progress, len(tasks)))
    else:
        results = list(_track(map(_index_file, tasks), owners, progress, len(tasks)))

    records, shapes, next_id = [], set(), {}
    for cls, (patch_shapes, sigs) in zip(owners, results):
        shapes.update(patch_shapes)
        for sig in sigs:
            pid = next_id.get(cls, 0)
            next_id[cls] = pid + 1
            records.append(sig.with_source(cls, pid))
    if len(shapes) > 1:
        raise RetrievalError(f"mixed patch sizes: {sorted(shapes)}")
    return FeatureDB(config.method, config.signature_config(), records)


def _track(results, owners, progress, total):
    counts = {}
    for done, (cls, result) in enumerate(zip(owners, results), start=1):
        if progress is not None:
            for _ in result[1]:
                pid = counts.get(cls, 0)
                counts[cls] = pid + 1
                progress(done, total, cls, pid)
        yield result


# -- queries and evaluation ----------------------------------------------------

def _id_rank(ids) -> np.ndarray:
    order = sorted(range(len(ids)), key=lambda i: ids[i])
    rank = np.empty(len(ids), dtype=np.int64)
    rank[order] = np.arange(len(ids))
    return rank


def query(db: FeatureDB, q: Signature, n: int) -> list:
    """Top-``n`` records as ``(class_label, patch_id, distance)``, ascending.

    A record with the same ``(class_label, patch_id)`` as the query is
    skipped. Equal distances are ordered by id.
    """
    if n < 1:
        raise RetrievalError(f"n must be >= 1, got {n}")
    if q.fingerprint != db.fingerprint or q.method != db.method:
        raise RetrievalError(f"fingerprint mismatch: query {q.fingerprint} vs database {db.fingerprint}")
    if len(db) == 0:
        return []
    ids = db.ids
    dist = distances_to(q, db.method, db.params)
    order = np.lexsort((_id_rank(ids), dist))
    out = []
    for i in order:
        if q.source is not None and ids[i] == q.source:
            continue
        out.append((ids[i][0], ids[i][1], float(dist[i])))
        if len(out) == n:
            break
    return out


def distance_matrix(db: FeatureDB) -> np.ndarray:
    """``D[i, j]`` = distance from record i (as query) to record j."""
    return np.stack([distances_to(rec, db.method, db.params) for rec in db.records]) \
        if len(db) else np.zeros((0, 0))


def retrieval_rate(db: FeatureDB):
    """Overall and per-class rates with ``c - 1`` retrieved patches per query."""
    sizes = db.classes()
    if not sizes:
        raise RetrievalError("empty database")
    if len(set(sizes.values())) != 1:
        raise RetrievalError(f"unequal class sizes: {sizes}")
    c = next(iter(sizes.values()))
    if c < 2:
        raise RetrievalError("singleton class: every class needs at least 2 patches")
    ids = db.ids
    rank = _id_rank(ids)
    labels = np.array([cls for cls, _ in ids])
    dist = distance_matrix(db)
    per_record = np.empty(len(ids))
    for i in range(len(ids)):
        order = np.lexsort((rank, dist[i]))
        order = order[order != i][: c - 1]
        per_record[i] = np.count_nonzero(labels[order] == labels[i]) / (c - 1)
    per_class = {cls: float(per_record[labels == cls].mean()) for cls in sorted(sizes)}
    return float(per_record.mean()), per_class


def blur_sweep(root, config: RunConfig, sigmas, workers: int | None = None, progress=None) -> dict:
    """Retrieval rate after blurring every patch, per sigma in input order."""
    sigmas = [float(s) for s in sigmas]
    if any(s < 0 or not math.isfinite(s) for s in sigmas):
        raise RetrievalError(f"sigmas must be nonnegative, got {sigmas}")
    out = {}
    for s in sigmas:
        if s not in out:
            db = index_dataset(root, config, blur_sigma=s, workers=workers, progress=progress)
            out[s] = retrieval_rate(db)[0]
    return out


# -- reports --------------------------------------------------------------------

@dataclass
class EvaluationReport:
    method: str
    config: dict
    records: int
    overall: float
    per_class: dict

    @classmethod
    def from_db(cls, db: FeatureDB) -> "EvaluationReport":
        overall, per_class = retrieval_rate(db)
        c = db.config
        echo = {"J": c.J, "L": c.L, "depth": c.depth, "normalized": c.normalized,
                "epsilon_rel": c.epsilon_rel, "fingerprint": db.fingerprint}
        return cls(db.method, echo, len(db), overall, per_class)

    def to_json(self) -> str:
        return json.dumps({"method": self.method, "config": self.config, "records": self.records,
                           "overall": self.overall, "per_class": self.per_class},
                          indent=2, sort_keys=True)

    def to_text(self) -> str:
        lines = [f"method   {self.method}",
                 "config   " + " ".join(f"{k}={v}" for k, v in self.config.items()),
                 f"records  {self.records}",
                 f"overall  {100 * self.overall:.2f}%",
                 "",
                 f"{'class':<24} rate"]
        lines += [f"{cls:<24} {100 * rate:6.2f}%" for cls, rate in self.per_class.items()]
        return "\n".join(lines) + "\n"
