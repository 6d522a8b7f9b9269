"""Datasets and augmentations: synthetic spirals, IDX image files, blur/affine."""

import struct
from dataclasses import dataclass

import numpy as np

from . import _accel
from .graph import group_adjacency

__all__ = [
    "LabeledDataset",
    "SslDataset",
    "AugmentationSpec",
    "spiral",
    "read_idx_images",
    "read_idx_labels",
    "save_idx_images",
    "save_idx_labels",
    "load_idx",
    "gaussian_blur",
    "affine_transform",
    "augment",
    "build_ssl",
]

IDX_IMAGE_MAGIC = 2051
IDX_LABEL_MAGIC = 2049


@dataclass
class LabeledDataset:
    points: np.ndarray  # (N, d) float64
    labels: np.ndarray  # (N,) int64, nonnegative
    provenance: str = ""

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.points.shape[0] != self.labels.shape[0]:
            raise ValueError("points and labels must have equal length")
        if self.labels.size and self.labels.min() < 0:
            raise ValueError("labels must be nonnegative")

    def __len__(self):
        return self.points.shape[0]


@dataclass
class SslDataset:
    """Originals with their augmentations, grouped, plus the adjacency."""

    points: np.ndarray
    groups: list
    adjacency: np.ndarray
    labels: np.ndarray = None  # per-point label inherited from the original

    def __len__(self):
        return self.points.shape[0]


@dataclass
class AugmentationSpec:
    kind: str  # "gaussian_blur" | "affine"
    n_aug: int = 1
    seed: int = 0
    sigma_b: float = 2.0
    rot_deg: float = 10.0
    trans_frac: float = 0.1
    scale_range: tuple = (0.9, 1.1)

    def __post_init__(self):
        if self.kind not in ("gaussian_blur", "affine"):
            raise ValueError(f"unknown augmentation kind {self.kind!r}")
        if self.n_aug < 1:
            raise ValueError("n_aug must be >= 1")
        if self.kind == "gaussian_blur" and self.sigma_b <= 0:
            raise ValueError("sigma_b must be positive")
        if self.scale_range[0] > self.scale_range[1]:
            raise ValueError("empty scale range")


def spiral(n_per_arm, seed=0, t_min=1.5 * np.pi, t_max=4.5 * np.pi):
    """Two entangled Archimedean arms (r = t), the second rotated by pi.

    Both arms share the same parameter draws, so arm 1 is exactly arm 0
    rotated by half a turn.
    """
    if n_per_arm < 2:
        raise ValueError("n_per_arm must be >= 2")
    rng = np.random.default_rng(seed)
    t = rng.uniform(t_min, t_max, size=n_per_arm)
    arm0 = np.stack([t * np.cos(t), t * np.sin(t)], axis=1)
    points = np.vstack([arm0, -arm0])
    labels = np.concatenate([np.zeros(n_per_arm), np.ones(n_per_arm)])
    return LabeledDataset(points=points, labels=labels, provenance="spiral")


# ---------------------------------------------------------------------------
# IDX container (big-endian headers, u8 payload)


def read_idx_images(path):
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) < 16:
            raise ValueError("truncated IDX image header")
        magic, count, rows, cols = struct.unpack(">IIII", header)
        if magic != IDX_IMAGE_MAGIC:
            raise ValueError(f"bad IDX image magic {magic}, expected {IDX_IMAGE_MAGIC}")
        payload = fh.read()
    expected = count * rows * cols
    if len(payload) != expected:
        raise ValueError(f"truncated IDX images: {len(payload)} bytes, need {expected}")
    return np.frombuffer(payload, dtype=np.uint8).reshape(count, rows, cols).copy()


def read_idx_labels(path):
    with open(path, "rb") as fh:
        header = fh.read(8)
        if len(header) < 8:
            raise ValueError("truncated IDX label header")
        magic, count = struct.unpack(">II", header)
        if magic != IDX_LABEL_MAGIC:
            raise ValueError(f"bad IDX label magic {magic}, expected {IDX_LABEL_MAGIC}")
        payload = fh.read()
    if len(payload) != count:
        raise ValueError(f"truncated IDX labels: {len(payload)} bytes, need {count}")
    return np.frombuffer(payload, dtype=np.uint8).copy()


def save_idx_images(path, images):
    images = np.asarray(images, dtype=np.uint8)
    if images.ndim != 3:
        raise ValueError("images must be (count, rows, cols) uint8")
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", IDX_IMAGE_MAGIC, *images.shape))
        fh.write(images.tobytes())


def save_idx_labels(path, labels):
    labels = np.asarray(labels, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">II", IDX_LABEL_MAGIC, labels.shape[0]))
        fh.write(labels.tobytes())


def load_idx(images_path, labels_path):
    """Flattened [0, 1] pixels plus integer labels."""
    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise ValueError(
            f"count mismatch: {images.shape[0]} images vs {labels.shape[0]} labels"
        )
    n, rows, cols = images.shape
    points = images.reshape(n, rows * cols).astype(np.float64) / 255.0
    return LabeledDataset(points=points, labels=labels, provenance=str(images_path))


# ---------------------------------------------------------------------------
# Image augmentations on flattened square grayscale images


def _as_square(image):
    image = np.ascontiguousarray(image, dtype=np.float64)
    side = int(round(np.sqrt(image.size)))
    if side * side != image.size:
        raise ValueError(f"image of {image.size} pixels is not square")
    return image.reshape(side, side), side


def gaussian_blur(image, sigma_b):
    """Separable Gaussian convolution with reflect padding; preserves shape."""
    if sigma_b <= 0:
        raise ValueError("sigma_b must be positive")
    img, side = _as_square(image)
    radius = max(1, int(np.ceil(3.0 * sigma_b)))
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    weights = np.exp(-(offsets**2) / (2.0 * sigma_b**2))
    weights /= weights.sum()
    padded = np.pad(img, ((0, 0), (radius, radius)), mode="reflect")
    rows = _accel.convolve_rows(np.ascontiguousarray(padded), weights)
    padded = np.pad(rows.T, ((0, 0), (radius, radius)), mode="reflect")
    cols = _accel.convolve_rows(np.ascontiguousarray(padded), weights)
    return cols.T.reshape(image.shape)


def affine_transform(image, rot_deg, trans_px, scale):
    """Rotate/translate/scale about the image center with bilinear resampling.

    Output pixels are pulled from the inverse-mapped source location; samples
    outside the frame read as zero.  trans_px is (dx, dy) in pixels.
    """
    img, side = _as_square(image)
    center = (side - 1) / 2.0
    theta = np.deg2rad(rot_deg)
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    tx, ty = float(trans_px[0]), float(trans_px[1])
    coeffs = (
        cos_t / scale,
        -sin_t / scale,
        (sin_t * (center + tx) - cos_t * (center + ty)) / scale + center,
        sin_t / scale,
        cos_t / scale,
        (-cos_t * (center + tx) - sin_t * (center + ty)) / scale + center,
    )
    out = _accel.warp_bilinear(img, coeffs)
    return np.clip(out, 0.0, 1.0).reshape(image.shape)


def augment(image, spec, rng):
    """One random augmentation of a flattened [0, 1] grayscale image.

    Blur applies the fixed sigma_b; affine draws rotation, per-axis
    translation, then scale from rng, in that order.
    """
    image = np.asarray(image, dtype=np.float64)
    if np.min(image) < 0.0 or np.max(image) > 1.0:
        raise ValueError("pixel values must lie in [0, 1]")
    if spec.kind == "gaussian_blur":
        return gaussian_blur(image, spec.sigma_b)
    side = int(round(np.sqrt(image.size)))
    rot = rng.uniform(-spec.rot_deg, spec.rot_deg)
    trans = rng.uniform(-spec.trans_frac, spec.trans_frac, size=2) * side
    scale = rng.uniform(spec.scale_range[0], spec.scale_range[1])
    return affine_transform(image, rot, trans, scale)


def build_ssl(dataset, spec, mode="clique"):
    """Assemble the SSL dataset: each original followed by its augmentations.

    Groups are contiguous index runs of size 1 + n_aug; the adjacency links
    each group as a clique or as a star rooted at the original.
    """
    rng = np.random.default_rng(spec.seed)
    points = []
    groups = []
    labels = []
    next_idx = 0
    for i in range(len(dataset)):
        original = dataset.points[i]
        members = [next_idx]
        points.append(original)
        labels.append(dataset.labels[i])
        next_idx += 1
        for _ in range(spec.n_aug):
            points.append(augment(original, spec, rng))
            labels.append(dataset.labels[i])
            members.append(next_idx)
            next_idx += 1
        groups.append(members)
    points = np.asarray(points)
    adjacency = group_adjacency(groups, len(points), mode=mode)
    return SslDataset(
        points=points,
        groups=groups,
        adjacency=adjacency,
        labels=np.asarray(labels, dtype=np.int64),
    )
