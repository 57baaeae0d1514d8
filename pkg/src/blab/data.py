"""Datasets: IDX ingestion, synthetic generators, balanced subsampling."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rng import make_rng

IDX_IMAGE_MAGIC = 2051
IDX_LABEL_MAGIC = 2049


class DataError(ValueError):
    """Malformed or inconsistent dataset input."""


@dataclass
class Dataset:
    """Ordered labeled feature vectors. samples is (s, n) float64, labels is (s,) in {0,1}."""

    samples: np.ndarray
    labels: np.ndarray
    name: str = ""

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.samples.ndim != 2 or len(self.samples) == 0:
            raise DataError("samples must be a nonempty (s, n) array")
        if self.labels.shape != (len(self.samples),):
            raise DataError("labels length must match samples")
        if not np.isfinite(self.samples).all():
            raise DataError("samples contain non-finite values")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def both_classes_present(self) -> bool:
        return 0 in self.labels and 1 in self.labels

    def with_samples(self, samples: np.ndarray, name: str | None = None) -> "Dataset":
        return Dataset(samples, self.labels.copy(), self.name if name is None else name)


@dataclass
class SymmetricLayout:
    """Curated point layout admitting more than one valid projection set."""

    kind: str
    dataset: Dataset
    symmetry_group_note: str = ""


def _read_be_u32(f, path) -> int:
    raw = f.read(4)
    if len(raw) != 4:
        raise DataError(f"truncated IDX file: {path}")
    return struct.unpack(">I", raw)[0]


def load_idx(images_path, labels_path) -> Dataset:
    """Read an MNIST-style IDX image/label pair; pixels scaled to [0, 1]."""
    images_path, labels_path = Path(images_path), Path(labels_path)
    with open(images_path, "rb") as f:
        magic = _read_be_u32(f, images_path)
        if magic != IDX_IMAGE_MAGIC:
            raise DataError(f"bad magic {magic} in {images_path} (expected {IDX_IMAGE_MAGIC})")
        count = _read_be_u32(f, images_path)
        rows = _read_be_u32(f, images_path)
        cols = _read_be_u32(f, images_path)
        payload = f.read()
        if len(payload) != count * rows * cols:
            raise DataError(f"truncated IDX image payload in {images_path}")
        pixels = np.frombuffer(payload, dtype=np.uint8).reshape(count, rows * cols)
    with open(labels_path, "rb") as f:
        magic = _read_be_u32(f, labels_path)
        if magic != IDX_LABEL_MAGIC:
            raise DataError(f"bad magic {magic} in {labels_path} (expected {IDX_LABEL_MAGIC})")
        label_count = _read_be_u32(f, labels_path)
        raw = f.read()
        if len(raw) != label_count:
            raise DataError(f"truncated IDX label payload in {labels_path}")
        labels = np.frombuffer(raw, dtype=np.uint8)
    if label_count != count:
        raise DataError(f"image/label count mismatch: {count} images vs {label_count} labels")
    return Dataset(pixels.astype(np.float64) / 255.0, labels.astype(np.int64), name=images_path.stem)


def save_idx(data: Dataset, images_path, labels_path, rows: int, cols: int) -> None:
    """Write a Dataset back to IDX fixtures (values quantized to u8 via round(v*255))."""
    if rows * cols != data.dim:
        raise DataError("rows*cols must equal the feature dimension")
    pixels = np.clip(np.rint(data.samples * 255.0), 0, 255).astype(np.uint8)
    with open(images_path, "wb") as f:
        f.write(struct.pack(">IIII", IDX_IMAGE_MAGIC, len(data), rows, cols))
        f.write(pixels.tobytes())
    with open(labels_path, "wb") as f:
        f.write(struct.pack(">II", IDX_LABEL_MAGIC, len(data)))
        f.write(data.labels.astype(np.uint8).tobytes())


def filter_binary(data: Dataset, class_a: int, class_b: int) -> Dataset:
    """Keep two original categories, relabeling class_a -> 0 and class_b -> 1."""
    if class_a == class_b:
        raise DataError("class_a and class_b must differ")
    mask_a = data.labels == class_a
    mask_b = data.labels == class_b
    if not mask_a.any():
        raise DataError(f"class {class_a} absent from dataset")
    if not mask_b.any():
        raise DataError(f"class {class_b} absent from dataset")
    keep = mask_a | mask_b
    samples = data.samples[keep]
    labels = np.where(data.labels[keep] == class_b, 1, 0)
    return Dataset(samples, labels, name=f"{data.name}_{class_a}v{class_b}")


def sample_balanced(data: Dataset, total: int, seed: int) -> Dataset:
    """Draw total/2 samples per class without replacement, deterministic per seed."""
    if total <= 0 or total % 2 != 0:
        raise DataError("total must be an even positive integer")
    half = total // 2
    rng = make_rng(seed, stream=0xBA7A)
    picked = []
    for cls in (0, 1):
        idx = np.flatnonzero(data.labels == cls)
        if len(idx) < half:
            raise DataError(f"class {cls} has only {len(idx)} samples, need {half}")
        picked.append(rng.choice(idx, size=half, replace=False))
    order = np.sort(np.concatenate(picked))
    return Dataset(data.samples[order], data.labels[order], name=f"{data.name}_sub{total}")


def gen_gaussian_blobs(n: int, per_class: int, centers, sigma: float, seed: int) -> Dataset:
    """Two isotropic normal blobs, per_class points each."""
    c0, c1 = (np.asarray(c, dtype=np.float64) for c in centers)
    if c0.shape != (n,) or c1.shape != (n,):
        raise DataError("centers must both have dimension n")
    if sigma <= 0:
        raise DataError("sigma must be positive")
    rng = make_rng(seed, stream=0xB10B)
    pts0 = c0 + sigma * rng.standard_normal((per_class, n))
    pts1 = c1 + sigma * rng.standard_normal((per_class, n))
    samples = np.vstack([pts0, pts1])
    labels = np.concatenate([np.zeros(per_class, dtype=np.int64), np.ones(per_class, dtype=np.int64)])
    return Dataset(samples, labels, name=f"blobs{n}d")


LAYOUT_KINDS = ("square_xor", "mirrored_pairs")


def gen_symmetric_layout(kind: str, perturb: float = 0.0) -> SymmetricLayout:
    """Built-in symmetric layouts; perturb > 0 shifts one point to break the symmetry."""
    if kind == "square_xor":
        pts = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
        labels = np.array([0, 0, 1, 1])
        note = ("class 0 on the x-axis, class 1 on the y-axis; both diagonal lines are "
                "optimal boundaries and every point is equidistant to the two, so at "
                "least two projection assignments exist")
    elif kind == "mirrored_pairs":
        pts = np.array([[-1.0, 1.0], [-1.0, -1.0], [1.0, 1.0], [1.0, -1.0]])
        labels = np.array([0, 0, 1, 1])
        note = ("two opposite-class pairs mirrored about the x-axis; reflecting the "
                "layout swaps the pairs without changing the point set")
    else:
        raise DataError(f"unknown layout kind: {kind!r}")
    if perturb:
        pts = pts.copy()
        pts[0] = pts[0] + np.array([perturb, perturb]) / np.sqrt(2.0)
    return SymmetricLayout(kind, Dataset(pts, labels, name=kind), note)


def export_csv(data: Dataset, path) -> None:
    """Write `label,f0,f1,...` rows; floats use repr so values round-trip exactly."""
    with open(path, "w") as f:
        f.write("label," + ",".join(f"f{i}" for i in range(data.dim)) + "\n")
        for x, l in zip(data.samples, data.labels):
            f.write(f"{int(l)}," + ",".join(repr(float(v)) for v in x) + "\n")


def import_csv(path) -> Dataset:
    path = Path(path)
    with open(path) as f:
        header = f.readline().strip().split(",")
        if not header or header[0] != "label":
            raise DataError(f"{path}: expected dataset CSV header starting with 'label'")
        rows, labels = [], []
        for line in f:
            parts = line.strip().split(",")
            if len(parts) != len(header):
                raise DataError(f"{path}: row width mismatch")
            labels.append(int(parts[0]))
            rows.append([float(v) for v in parts[1:]])
    if not rows:
        raise DataError(f"{path}: no data rows")
    return Dataset(np.array(rows), np.array(labels), name=path.stem)
