"""Base kernels, Gram/cross matrix assembly and shared dense symmetric linear algebra.

Kernels operate on plain float arrays: a dataset is an (N, d) array, a single
point a length-d vector.  The precomputed kernel instead indexes into a fixed
Gram matrix, so its "points" are integer indices.
"""

import io
import struct

import numpy as np

__all__ = [
    "RBF",
    "Linear",
    "Polynomial",
    "Precomputed",
    "EigenDecomp",
    "sym_eigen",
    "psd_project",
    "top_k",
    "reg_inverse",
    "validate_gram",
    "save_gram_csv",
    "load_gram_csv",
    "save_gram_bin",
    "load_gram_bin",
]

# Eigenvalues above this fraction of the largest magnitude count as positive.
POSITIVE_CUTOFF = 1e-10

GRAM_MAGIC = b"IKGM"


def _as_points(X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if not np.all(np.isfinite(X)):
        raise ValueError("points must have finite entries")
    return X


class Kernel:
    """Base class: ``k(x, y)`` scalar, ``gram(X)`` and ``cross(X, Y)`` matrices."""

    def __call__(self, x, y):
        x = np.asarray(x, dtype=np.float64).ravel()
        y = np.asarray(y, dtype=np.float64).ravel()
        if x.shape != y.shape:
            raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
        return float(self.cross(x[None, :], y[None, :])[0, 0])

    def gram(self, X):
        """Kernel matrix over one dataset, symmetrized against roundoff."""
        X = _as_points(X)
        if X.shape[0] == 0:
            raise ValueError("empty dataset")
        G = self.cross(X, X)
        return (G + G.T) / 2.0

    def cross(self, X, Y):
        raise NotImplementedError


class RBF(Kernel):
    """Gaussian kernel exp(-|x - y|^2 / (2 sigma^2))."""

    def __init__(self, sigma=1.0):
        if not sigma > 0:
            raise ValueError("sigma must be positive")
        self.sigma = float(sigma)

    def cross(self, X, Y):
        X, Y = _as_points(X), _as_points(Y)
        if X.shape[1] != Y.shape[1]:
            raise ValueError("dimension mismatch")
        sq = (
            np.sum(X * X, axis=1)[:, None]
            + np.sum(Y * Y, axis=1)[None, :]
            - 2.0 * (X @ Y.T)
        )
        np.maximum(sq, 0.0, out=sq)
        return np.exp(-sq / (2.0 * self.sigma**2))

    def __call__(self, x, y):
        # Single evaluations take the subtraction path: exactly symmetric in
        # (x, y) and exactly 1 at x == y.
        x = np.asarray(x, dtype=np.float64).ravel()
        y = np.asarray(y, dtype=np.float64).ravel()
        if x.shape != y.shape:
            raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
        d = x - y
        return float(np.exp(-np.dot(d, d) / (2.0 * self.sigma**2)))

    def __repr__(self):
        return f"RBF(sigma={self.sigma})"


class Linear(Kernel):
    """Dot-product kernel."""

    def cross(self, X, Y):
        X, Y = _as_points(X), _as_points(Y)
        if X.shape[1] != Y.shape[1]:
            raise ValueError("dimension mismatch")
        return X @ Y.T

    def __repr__(self):
        return "Linear()"


class Polynomial(Kernel):
    """(x . y + coef)^degree with integer degree >= 1."""

    def __init__(self, degree=2, coef=1.0):
        if int(degree) != degree or degree < 1:
            raise ValueError("degree must be a positive integer")
        self.degree = int(degree)
        self.coef = float(coef)

    def cross(self, X, Y):
        X, Y = _as_points(X), _as_points(Y)
        if X.shape[1] != Y.shape[1]:
            raise ValueError("dimension mismatch")
        return (X @ Y.T + self.coef) ** self.degree

    def __repr__(self):
        return f"Polynomial(degree={self.degree}, coef={self.coef})"


class Precomputed(Kernel):
    """Kernel backed by a fixed symmetric matrix; points are row indices."""

    def __init__(self, gram):
        gram = np.asarray(gram, dtype=np.float64)
        if gram.ndim != 2 or gram.shape[0] != gram.shape[1]:
            raise ValueError("precomputed gram must be square")
        scale = np.max(np.abs(gram)) if gram.size else 0.0
        if scale and np.max(np.abs(gram - gram.T)) > 1e-10 * scale:
            raise ValueError("precomputed gram must be symmetric")
        self.matrix = (gram + gram.T) / 2.0

    def _indices(self, X):
        idx = np.asarray(X)
        if idx.ndim == 2 and idx.shape[1] == 1:
            idx = idx[:, 0]
        idx = np.atleast_1d(idx)
        if not np.issubdtype(idx.dtype, np.integer):
            rounded = np.rint(idx).astype(np.int64)
            if np.max(np.abs(idx - rounded)) > 0:
                raise ValueError("precomputed kernel points must be integer indices")
            idx = rounded
        n = self.matrix.shape[0]
        if idx.size and (idx.min() < 0 or idx.max() >= n):
            raise IndexError(f"index out of range for {n}-point precomputed gram")
        return idx.astype(np.int64)

    def __call__(self, x, y):
        i = self._indices(x)
        j = self._indices(y)
        if i.size != 1 or j.size != 1:
            raise ValueError("scalar evaluation expects single indices")
        return float(self.matrix[i[0], j[0]])

    def gram(self, X):
        idx = self._indices(X)
        if idx.size == 0:
            raise ValueError("empty dataset")
        return self.matrix[np.ix_(idx, idx)]

    def cross(self, X, Y):
        return self.matrix[np.ix_(self._indices(X), self._indices(Y))]

    def __repr__(self):
        return f"Precomputed(n={self.matrix.shape[0]})"


def validate_gram(G, name="gram"):
    """Check the symmetry / near-PSD contract of a kernel matrix."""
    G = np.asarray(G, dtype=np.float64)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise ValueError(f"{name} must be square")
    scale = np.max(np.abs(G)) if G.size else 0.0
    if scale and np.max(np.abs(G - G.T)) > 1e-10 * scale:
        raise ValueError(f"{name} is not symmetric")
    w = np.linalg.eigvalsh((G + G.T) / 2.0)
    top = max(w.max(), 0.0)
    if w.min() < -1e-8 * max(top, 1.0):
        raise ValueError(f"{name} has a significantly negative eigenvalue: {w.min()}")
    return G


class EigenDecomp:
    """Full symmetric eigendecomposition, eigenvalues sorted descending.

    ``vectors`` holds eigenvectors as columns aligned with ``values``;
    ties keep the ascending-solver order (stable sort), so repeated
    eigenvalues appear in a deterministic order.
    """

    __slots__ = ("values", "vectors")

    def __init__(self, values, vectors):
        self.values = values
        self.vectors = vectors

    def reconstruct(self):
        return (self.vectors * self.values) @ self.vectors.T


def _check_symmetric(M, tol=1e-8):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    scale = max(np.max(np.abs(M)), 1.0)
    if np.max(np.abs(M - M.T)) > tol * scale:
        raise ValueError("matrix is not symmetric")
    return (M + M.T) / 2.0


def sym_eigen(M):
    """Dense symmetric eigendecomposition sorted by descending eigenvalue."""
    M = _check_symmetric(M)
    w, v = np.linalg.eigh(M)
    order = np.argsort(-w, kind="stable")
    return EigenDecomp(w[order], v[:, order])


def psd_project(M):
    """Projection onto the eigenspace of positive eigenvalues.

    Eigenvalues below POSITIVE_CUTOFF times the spectral radius are treated
    as nonpositive and dropped.
    """
    dec = sym_eigen(M)
    w = dec.values.copy()
    cut = POSITIVE_CUTOFF * max(np.max(np.abs(w)), 0.0)
    w[w <= cut] = 0.0
    return (dec.vectors * w) @ dec.vectors.T


def top_k(M, K):
    """Top-K eigenpairs with negative eigenvalues clamped to zero.

    Returns (C_K, D_K): an (N, K) eigenvector block and the K clamped
    eigenvalues, ordered descending.
    """
    dec = sym_eigen(M)
    n = dec.values.shape[0]
    if not 1 <= K <= n:
        raise ValueError(f"K must be in [1, {n}], got {K}")
    w = dec.values[:K].copy()
    cut = POSITIVE_CUTOFF * max(np.max(np.abs(dec.values)), 0.0)
    w[w <= cut] = 0.0
    return dec.vectors[:, :K].copy(), w


def reg_inverse(G, eps=0.0):
    """(G + eps I)^-1 through the eigenbasis, so the result is exactly symmetric.

    With eps == 0 the matrix must be invertible to within condition number
    1e12, otherwise a LinAlgError is raised.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    dec = sym_eigen(_check_symmetric(G))
    w = dec.values + eps
    if np.min(np.abs(w)) <= 1e-12 * max(np.max(np.abs(w)), 1e-300):
        raise np.linalg.LinAlgError(
            "matrix is singular to tolerance; pass eps > 0 to regularize"
        )
    inv = (dec.vectors / w) @ dec.vectors.T
    return (inv + inv.T) / 2.0


def default_ridge(G):
    """Ridge used where an inverse Gram is required but G is rank deficient."""
    n = G.shape[0]
    return 1e-8 * float(np.trace(G)) / n


def stable_inverse(G, eps=None):
    """Inverse Gram with automatic ridge fallback.

    eps=None picks 0 for well-conditioned G and default_ridge(G) otherwise;
    an explicit eps (including 0) is used as given.
    """
    if eps is not None:
        return reg_inverse(G, eps)
    try:
        return reg_inverse(G, 0.0)
    except np.linalg.LinAlgError:
        return reg_inverse(G, default_ridge(G))


# ---------------------------------------------------------------------------
# Gram import/export


def save_gram_csv(G, path):
    """Row-major CSV with a `# n=<N>` comment header."""
    G = np.asarray(G, dtype=np.float64)
    n = G.shape[0]
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"# n={n}\n")
        for row in G:
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write("\n")


def load_gram_csv(path):
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if not header.startswith("# n="):
            raise ValueError("missing `# n=<N>` header line")
        n = int(header[4:])
        rows = [
            [float(tok) for tok in line.strip().split(",")] for line in fh if line.strip()
        ]
    G = np.array(rows, dtype=np.float64)
    if G.shape != (n, n):
        raise ValueError(f"expected {n}x{n} entries, found {G.shape}")
    return G


def save_gram_bin(G, path):
    """Binary format: magic IKGM, big-endian u32 N, N^2 little-endian f64."""
    G = np.ascontiguousarray(G, dtype=np.float64)
    n = G.shape[0]
    buf = io.BytesIO()
    buf.write(GRAM_MAGIC)
    buf.write(struct.pack(">I", n))
    buf.write(G.astype("<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_gram_bin(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != GRAM_MAGIC:
        raise ValueError(f"bad magic {raw[:4]!r}, expected {GRAM_MAGIC!r}")
    (n,) = struct.unpack(">I", raw[4:8])
    payload = raw[8:]
    if len(payload) != 8 * n * n:
        raise ValueError(f"truncated gram payload: {len(payload)} bytes for n={n}")
    return np.frombuffer(payload, dtype="<f8").reshape(n, n).copy()
