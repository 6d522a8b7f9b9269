"""Closed-form induced kernels for contrastive and non-contrastive SSL losses.

Fitting returns an InducedKernel holding a PSD coefficient matrix B over the
SSL dataset together with a factor M (M^T M = B).  New points are evaluated as
k*(x, y) = k_{x,s} B k_{s,y}, equivalently as the inner product of the length-K
representations M k_{s,x}.
"""

import io
import json
import struct
from dataclasses import dataclass

import numpy as np

from .kernels import (
    Linear,
    Polynomial,
    Precomputed,
    RBF,
    stable_inverse,
    sym_eigen,
    top_k,
)

__all__ = [
    "SslConfig",
    "InducedKernel",
    "fit_noncontrastive",
    "fit_contrastive",
    "loss_vic",
    "loss_vic_equivalent",
    "loss_contrastive",
    "check_closeness_bound",
    "ClosenessReport",
    "save_induced",
    "load_induced",
]

CONTRASTIVE = "contrastive"
NONCONTRASTIVE = "noncontrastive"

INDUCED_MAGIC = b"IKSL"
INDUCED_VERSION = 1


@dataclass(frozen=True)
class SslConfig:
    """Loss kind plus the knobs that shape the induced kernel.

    k=None keeps the full representation width N; eps=None applies a ridge to
    the Gram inverse only when the Gram is rank deficient.
    """

    loss: str
    beta: float = 0.0
    k: "int | None" = None
    eps: "float | None" = None

    def __post_init__(self):
        if self.loss not in (CONTRASTIVE, NONCONTRASTIVE):
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if self.k == "full":
            object.__setattr__(self, "k", None)
        if self.k is not None and (int(self.k) != self.k or self.k < 1):
            raise ValueError("k must be a positive integer or None")
        if self.eps is not None and self.eps < 0:
            raise ValueError("eps must be nonnegative")

    def width(self, n):
        if self.k is None:
            return n
        if self.k > n:
            raise ValueError(f"k={self.k} exceeds dataset size {n}")
        return int(self.k)


class InducedKernel:
    """SSL dataset handle plus the (B, M) pair defining the induced kernel."""

    def __init__(self, B, M, config, base=None, points=None, structure=None, ssl_gram=None):
        self.B = np.asarray(B, dtype=np.float64)
        self.M = np.asarray(M, dtype=np.float64)
        self.config = config
        self.base = base
        self.points = None if points is None else np.asarray(points)
        self.structure = structure  # adjacency (contrastive) or laplacian
        self.ssl_gram = None if ssl_gram is None else np.asarray(ssl_gram)

    @property
    def n(self):
        return self.B.shape[0]

    @property
    def rep_dim(self):
        return self.M.shape[0]

    def _need_handle(self):
        if self.base is None or self.points is None:
            raise ValueError(
                "induced kernel has no dataset handle; attach base kernel and points"
            )

    def cross_to_ssl(self, X):
        """k_{s,X}: base-kernel columns against the SSL dataset, shape (N, m)."""
        self._need_handle()
        return self.base.cross(self.points, X)

    def represent(self, x):
        """Representation M k_{s,x} of one point (length rep_dim)."""
        return self.transform(np.asarray(x)[None, :] if np.ndim(x) == 1 else x)[0]

    def transform(self, X):
        """Representations of many points, shape (m, rep_dim)."""
        return (self.M @ self.cross_to_ssl(X)).T

    def eval(self, x, y):
        """k*(x, y); computed as an inner product of representations."""
        rx = self.represent(x)
        ry = self.represent(y)
        return float(rx @ ry)

    def pairwise(self, X, Y):
        """Induced cross matrix k_{X,s} B k_{s,Y}."""
        return self.transform(X) @ self.transform(Y).T

    def gram(self, X):
        """Induced Gram over X; assembled as Z Z^T so it is symmetric PSD."""
        Z = self.transform(X)
        return Z @ Z.T

    def train_representations(self):
        """Representations of the SSL points themselves (rows)."""
        if self.ssl_gram is not None:
            return (self.M @ self.ssl_gram).T
        self._need_handle()
        return self.transform(self.points)

    def train_gram(self):
        """Induced Gram over the SSL dataset, equal to K_ss B K_ss."""
        Z = self.train_representations()
        return Z @ Z.T


def _fit(G, target, cfg, base, points, structure):
    G = np.asarray(G, dtype=np.float64)
    n = G.shape[0]
    if target.shape != (n, n):
        raise ValueError(f"size mismatch: gram {G.shape} vs structure {target.shape}")
    width = cfg.width(n)
    C_K, D_K = top_k(target, width)
    K_inv = stable_inverse(G, cfg.eps)
    M = (np.sqrt(D_K)[:, None] * C_K.T) @ K_inv
    B = M.T @ M
    return InducedKernel(
        B, M, cfg, base=base, points=points, structure=structure, ssl_gram=G
    )


def fit_noncontrastive(G, L, cfg, base=None, points=None):
    """Induced kernel of the variance-invariance loss.

    B = K_ss^-1 T_K K_ss^-1 with T = I - (1/N)11^T - (beta/2) L truncated to
    its top-K positive eigenspace; directions whose eigenvalue goes negative
    (large beta) contribute nothing.
    """
    if cfg.loss != NONCONTRASTIVE:
        raise ValueError("config loss must be 'noncontrastive'")
    L = np.asarray(L, dtype=np.float64)
    n = L.shape[0]
    T = np.eye(n) - np.full((n, n), 1.0 / n) - (cfg.beta / 2.0) * L
    return _fit(G, T, cfg, base, points, structure=L)


def fit_contrastive(G, A, cfg, base=None, points=None):
    """Induced kernel of the spectral contrastive loss: B = K^-1 (I+A)_K K^-1."""
    if cfg.loss != CONTRASTIVE:
        raise ValueError("config loss must be 'contrastive'")
    A = np.asarray(A, dtype=np.float64)
    T = np.eye(A.shape[0]) + A
    return _fit(G, T, cfg, base, points, structure=A)


# ---------------------------------------------------------------------------
# Loss functions (used to certify optimality of the closed forms)


def loss_vic(Z, L, beta):
    """|Z^T (I - 11^T/N) Z - I|_F^2 + beta tr(Z^T L Z)."""
    Z = np.asarray(Z, dtype=np.float64)
    L = np.asarray(L, dtype=np.float64)
    n, k = Z.shape
    if L.shape != (n, n):
        raise ValueError("Z rows and L size must agree")
    Zc = Z - Z.mean(axis=0, keepdims=True)
    cov = Z.T @ Zc
    invariance = float(np.trace(Z.T @ L @ Z))
    return float(np.sum((cov - np.eye(k)) ** 2)) + beta * invariance


def loss_vic_equivalent(Z, L, beta):
    """|Z Z^T M_c - (M_c - beta L / 2)|_F^2 for M_c = I - 11^T/N.

    Differs from loss_vic by a constant independent of Z, so both rank the
    same minimizer; this matrix form is what the closed form optimizes.
    """
    Z = np.asarray(Z, dtype=np.float64)
    L = np.asarray(L, dtype=np.float64)
    n = Z.shape[0]
    if L.shape != (n, n):
        raise ValueError("Z rows and L size must agree")
    Mc = np.eye(n) - np.full((n, n), 1.0 / n)
    target = Mc - (beta / 2.0) * L
    return float(np.sum((Z @ Z.T @ Mc - target) ** 2))


def loss_contrastive(Z, A):
    """|Z Z^T - (I + A)|_F^2."""
    Z = np.asarray(Z, dtype=np.float64)
    A = np.asarray(A, dtype=np.float64)
    n = Z.shape[0]
    if A.shape != (n, n):
        raise ValueError("Z rows and A size must agree")
    return float(np.sum((Z @ Z.T - np.eye(n) - A) ** 2))


# ---------------------------------------------------------------------------
# Kernel-closeness guarantee for pairwise contrastive kernels


@dataclass
class ClosenessReport:
    delta: float
    n_trials: int
    min_value: float
    margin: float
    passed: bool


def _pairwise_pairs(ik, tol=1e-6):
    """Recover augmentation pairs from the induced train Gram (= I + A)."""
    T = ik.train_gram()
    n = T.shape[0]
    A = T - np.eye(n)
    pairs = []
    for i in range(n):
        row = np.where(A[i] > 0.5)[0]
        if len(row) != 1:
            raise ValueError("induced kernel was not built from pairwise adjacency")
        j = int(row[0])
        if abs(A[i, j] - 1.0) > 1e-3:
            raise ValueError("induced kernel was not built from pairwise adjacency")
        if i < j:
            pairs.append((i, j))
    return pairs


def check_closeness_bound(ik, trials=100, delta=0.5, rng=None):
    """Sample perturbations near augmentation pairs and verify k* >= 1 - delta.

    Points are drawn in input space around anchors x_i, x_j of an augmented
    pair and kept only when their feature-space distance to the anchor is at
    most delta / (5 |K_ss^-1| sqrt(N)); the proposal radius shrinks until the
    rejection test passes, so the loop terminates for continuous kernels.
    """
    if ik.config.loss != CONTRASTIVE:
        raise ValueError("closeness bound applies to contrastive induced kernels")
    ik._need_handle()
    rng = np.random.default_rng(rng)
    G = ik.base.gram(ik.points)
    if np.max(np.abs(np.diag(G) - 1.0)) > 1e-9:
        raise ValueError("base kernel must be normalized: k(x, x) = 1")
    n = G.shape[0]
    inv_norm = 1.0 / float(sym_eigen(G).values[-1])  # operator norm of K^-1
    radius = delta / (5.0 * inv_norm * np.sqrt(n))
    pairs = _pairwise_pairs(ik)
    points = np.asarray(ik.points, dtype=np.float64)

    # Initial proposal radius in input space.  For RBF the feature-space ball
    # maps to an exact input ball, so proposals cover the whole admissible
    # region; other kernels start at 1 and shrink on rejection.
    if isinstance(ik.base, RBF) and radius * radius < 2.0:
        r0 = ik.base.sigma * np.sqrt(-2.0 * np.log1p(-radius * radius / 2.0))
    else:
        r0 = 1.0

    def sample_near(anchor):
        r = r0
        while True:
            for _ in range(16):
                step = rng.normal(size=anchor.shape)
                norm = np.linalg.norm(step)
                if norm == 0:
                    continue
                cand = anchor + step / norm * r * rng.uniform() ** (1.0 / len(anchor))
                hdist2 = (
                    ik.base(cand, cand)
                    - 2.0 * ik.base(cand, anchor)
                    + ik.base(anchor, anchor)
                )
                if hdist2 <= radius * radius:
                    return cand
            r *= 0.5

    min_val = np.inf
    for _ in range(trials):
        i, j = pairs[rng.integers(len(pairs))]
        x = sample_near(points[i])
        y = sample_near(points[j])
        min_val = min(min_val, ik.eval(x, y))
    margin = min_val - (1.0 - delta)
    return ClosenessReport(
        delta=delta,
        n_trials=trials,
        min_value=float(min_val),
        margin=float(margin),
        passed=bool(margin >= 0.0),
    )


# ---------------------------------------------------------------------------
# Serialization: IKSL container + JSON sidecar of the config.
#
# Layout (little-endian except where noted):
#   magic   4s   b"IKSL"
#   version u16
#   tag     u8   0=rbf 1=linear 2=polynomial 3=precomputed
#   params       rbf: f64 sigma | polynomial: u32 degree, f64 coef
#                precomputed: u32 n_total, n_total^2 f64 matrix
#   n       u32
#   k       u32
#   B       n*n f64
#   M       k*n f64
#
# The SSL points themselves are not stored; pass them to load_induced to
# reattach the dataset handle.

_KERNEL_TAGS = {RBF: 0, Linear: 1, Polynomial: 2, Precomputed: 3}


def _pack_kernel(base, buf):
    tag = _KERNEL_TAGS.get(type(base))
    if tag is None:
        raise TypeError(f"cannot serialize kernel {base!r}")
    buf.write(struct.pack("<B", tag))
    if tag == 0:
        buf.write(struct.pack("<d", base.sigma))
    elif tag == 2:
        buf.write(struct.pack("<Id", base.degree, base.coef))
    elif tag == 3:
        m = base.matrix.shape[0]
        buf.write(struct.pack("<I", m))
        buf.write(base.matrix.astype("<f8").tobytes())


def _unpack_kernel(raw, off):
    (tag,) = struct.unpack_from("<B", raw, off)
    off += 1
    if tag == 0:
        (sigma,) = struct.unpack_from("<d", raw, off)
        return RBF(sigma), off + 8
    if tag == 1:
        return Linear(), off
    if tag == 2:
        degree, coef = struct.unpack_from("<Id", raw, off)
        return Polynomial(degree, coef), off + 12
    if tag == 3:
        (m,) = struct.unpack_from("<I", raw, off)
        off += 4
        mat = np.frombuffer(raw, dtype="<f8", count=m * m, offset=off).reshape(m, m)
        return Precomputed(mat.copy()), off + 8 * m * m
    raise ValueError(f"unknown kernel tag {tag}")


def _config_to_json(cfg):
    payload = {
        "loss": cfg.loss,
        "beta": cfg.beta,
        "k": "full" if cfg.k is None else cfg.k,
        "eps": cfg.eps,
    }
    return json.dumps(payload, sort_keys=True) + "\n"


def _config_from_json(text):
    payload = json.loads(text)
    return SslConfig(
        loss=payload["loss"],
        beta=float(payload["beta"]),
        k=None if payload["k"] == "full" else int(payload["k"]),
        eps=None if payload["eps"] is None else float(payload["eps"]),
    )


def save_induced(ik, path):
    """Write the IKSL container plus `<path>.json` config sidecar."""
    if ik.base is None:
        raise ValueError("cannot serialize an induced kernel without a base kernel")
    buf = io.BytesIO()
    buf.write(INDUCED_MAGIC)
    buf.write(struct.pack("<H", INDUCED_VERSION))
    _pack_kernel(ik.base, buf)
    n, k = ik.n, ik.rep_dim
    buf.write(struct.pack("<II", n, k))
    buf.write(ik.B.astype("<f8").tobytes())
    buf.write(ik.M.astype("<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())
    with open(f"{path}.json", "w", encoding="ascii", newline="\n") as fh:
        fh.write(_config_to_json(ik.config))


def load_induced(path, points=None):
    """Read an IKSL container; points reattach the SSL dataset handle."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != INDUCED_MAGIC:
        raise ValueError(f"bad magic {raw[:4]!r}, expected {INDUCED_MAGIC!r}")
    (version,) = struct.unpack_from("<H", raw, 4)
    if version != INDUCED_VERSION:
        raise ValueError(f"unsupported container version {version}")
    base, off = _unpack_kernel(raw, 6)
    n, k = struct.unpack_from("<II", raw, off)
    off += 8
    B = np.frombuffer(raw, dtype="<f8", count=n * n, offset=off).reshape(n, n).copy()
    off += 8 * n * n
    M = np.frombuffer(raw, dtype="<f8", count=k * n, offset=off).reshape(k, n).copy()
    with open(f"{path}.json", "r", encoding="ascii") as fh:
        cfg = _config_from_json(fh.read())
    return InducedKernel(B, M, cfg, base=base, points=points)
