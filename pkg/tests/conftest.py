import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def _bilinear_resize(img, side):
    h, w = img.shape
    rs = (np.arange(side) + 0.5) * h / side - 0.5
    cs = (np.arange(side) + 0.5) * w / side - 0.5
    r0 = np.clip(np.floor(rs).astype(int), 0, h - 1)
    c0 = np.clip(np.floor(cs).astype(int), 0, w - 1)
    r1 = np.clip(r0 + 1, 0, h - 1)
    c1 = np.clip(c0 + 1, 0, w - 1)
    wr = np.clip(rs - r0, 0.0, 1.0)[:, None]
    wc = np.clip(cs - c0, 0.0, 1.0)[None, :]
    v00 = img[np.ix_(r0, c0)]
    v01 = img[np.ix_(r0, c1)]
    v10 = img[np.ix_(r1, c0)]
    v11 = img[np.ix_(r1, c1)]
    return (1 - wr) * ((1 - wc) * v00 + wc * v01) + wr * ((1 - wc) * v10 + wc * v11)


@pytest.fixture(scope="session")
def digits_idx(tmp_path_factory):
    """28x28 IDX files built from the bundled scikit-learn digits.

    Real handwritten digits, upscaled from 8x8: a stand-in corpus for the
    image-classification pipeline when no MNIST files are available.
    """
    sklearn_datasets = pytest.importorskip("sklearn.datasets")
    from ssl_kernel.data import save_idx_images, save_idx_labels

    bunch = sklearn_datasets.load_digits()
    big = np.stack([_bilinear_resize(im / 16.0, 28) for im in bunch.images])
    u8 = np.round(big * 255).astype(np.uint8)
    labels = bunch.target.astype(np.uint8)
    root = tmp_path_factory.mktemp("digits")
    save_idx_images(root / "train-images.idx", u8[:1200])
    save_idx_labels(root / "train-labels.idx", labels[:1200])
    save_idx_images(root / "test-images.idx", u8[1200:])
    save_idx_labels(root / "test-labels.idx", labels[1200:])
    return root


def random_spd(rng, n, jitter=0.5):
    """Well-conditioned random symmetric positive definite matrix."""
    A = rng.normal(size=(n, n))
    return A @ A.T + jitter * n * np.eye(n)


def pairwise_dataset(rng, n_pairs, dim, spread=0.1):
    """SSL dataset of n_pairs anchors, each with one nearby augmentation."""
    anchors = rng.normal(size=(n_pairs, dim)) * 2.0
    points = np.empty((2 * n_pairs, dim))
    points[0::2] = anchors
    points[1::2] = anchors + rng.normal(size=(n_pairs, dim)) * spread
    return points
