"""Supervised consumers of (induced) kernels.

Kernel ridge regression, a soft-margin SVM solved by SMO-style coordinate
ascent, one-vs-rest classification, and the trace-normalized classifier
complexity s_N(K) = (tr K / N) y^T K^-1 y with its generalization bound.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _accel
from .kernels import sym_eigen

__all__ = [
    "RegressionModel",
    "SvmModel",
    "krr_fit",
    "krr_predict",
    "svm_fit",
    "svm_decision",
    "ovr_fit",
    "ovr_classify",
    "complexity_sn",
    "bound_from_complexity",
    "generalization_bound",
    "accuracy",
]


@dataclass
class RegressionModel:
    alpha: np.ndarray  # dual coefficients over the training gram
    lam: float


def krr_fit(K_tt, y, lam=0.0):
    """Solve (K + lam I) alpha = y."""
    K_tt = np.asarray(K_tt, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = K_tt.shape[0]
    if y.shape[0] != n:
        raise ValueError("target length does not match gram size")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    system = K_tt + lam * np.eye(n)
    try:
        alpha = np.linalg.solve(system, y)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"singular system at lambda={lam}") from exc
    resid = np.linalg.norm(system @ alpha - y)
    if resid > 1e-8 * max(1.0, np.linalg.norm(y)):
        raise np.linalg.LinAlgError(
            f"ill-conditioned system: relative residual {resid:.3e}"
        )
    return RegressionModel(alpha=alpha, lam=float(lam))


def krr_predict(model, k_query):
    """Predictions k_query^T alpha for an (N_t, m) query cross matrix."""
    k_query = np.asarray(k_query, dtype=np.float64)
    if k_query.shape[0] != model.alpha.shape[0]:
        raise ValueError("query cross matrix rows must match training size")
    return k_query.T @ model.alpha


@dataclass
class SvmModel:
    alpha: np.ndarray  # box-constrained dual coefficients in [0, C]
    bias: float
    labels: np.ndarray  # +-1 training labels
    C: float
    iterations: int
    converged: bool


def svm_fit(K_tt, labels, C, tol=1e-4, max_iter=200000):
    """Soft-margin kernel SVM dual via maximal-violating-pair updates."""
    K_tt = np.ascontiguousarray(K_tt, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if set(np.unique(y)) - {-1.0, 1.0}:
        raise ValueError("labels must be +-1")
    if np.all(y > 0) or np.all(y < 0):
        raise ValueError("need at least one example of each class")
    if C <= 0:
        raise ValueError("C must be positive")
    Q = np.ascontiguousarray(K_tt * np.outer(y, y))
    alpha, iterations, converged = _accel.smo_solve(Q, y, float(C), tol, max_iter)

    # Bias from the KKT conditions: free support vectors pin it exactly,
    # otherwise fall back to the midpoint of the violating-pair bounds.
    grad = Q @ alpha - 1.0
    dec = y * (grad + 1.0)  # = sum_j alpha_j y_j K_ij, decision without bias
    free = (alpha > 1e-8 * C) & (alpha < C * (1.0 - 1e-8))
    if np.any(free):
        bias = float(np.mean(y[free] - dec[free]))
    else:
        minus_yg = -y * grad
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
        hi = np.max(minus_yg[up]) if np.any(up) else 0.0
        lo = np.min(minus_yg[low]) if np.any(low) else 0.0
        bias = float((hi + lo) / 2.0)
    return SvmModel(
        alpha=alpha,
        bias=bias,
        labels=y,
        C=float(C),
        iterations=int(iterations),
        converged=bool(converged),
    )


def svm_decision(model, k_query):
    """Decision values for an (N_t, m) query cross matrix."""
    k_query = np.asarray(k_query, dtype=np.float64)
    return k_query.T @ (model.alpha * model.labels) + model.bias


def ovr_fit(K_tt, class_ids, C, tol=1e-4, max_iter=200000):
    """One binary SVM per class id (sorted ascending)."""
    class_ids = np.asarray(class_ids)
    classes = np.unique(class_ids)
    if classes.size < 2:
        raise ValueError("need at least two classes")
    models = {}
    for cls in classes:
        y = np.where(class_ids == cls, 1.0, -1.0)
        models[int(cls)] = svm_fit(K_tt, y, C, tol=tol, max_iter=max_iter)
    return models


def ovr_classify(models, k_query):
    """Argmax of per-class decision values; ties go to the lowest class id."""
    if isinstance(models, dict):
        items = sorted(models.items())
    else:
        items = list(enumerate(models))
    if len(items) < 2:
        raise ValueError("need at least two classes")
    classes = np.array([cls for cls, _ in items])
    scores = np.stack(
        [
            svm_decision(m, k_query)
            if isinstance(m, SvmModel)
            else krr_predict(m, k_query)
            for _, m in items
        ]
    )
    return classes[np.argmax(scores, axis=0)]


def _quad_inverse_form(K, y, eps):
    """y^T (K + eps I)^-1 y, with eps=None meaning the pseudo-inverse limit."""
    K = np.asarray(K, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = K.shape[0]
    if y.shape[0] != n:
        raise ValueError("target length does not match gram size")
    dec = sym_eigen(K)
    w = dec.values
    proj = dec.vectors.T @ y
    if eps is None:
        # Pseudo-inverse: drop components in the numerical null space.
        cut = 1e-10 * max(float(np.max(np.abs(w))), 1e-300)
        keep = np.abs(w) > cut
        return float(np.sum(proj[keep] ** 2 / w[keep]))
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    shifted = w + eps
    if np.min(np.abs(shifted)) <= 1e-14 * max(float(np.max(np.abs(shifted))), 1e-300):
        raise np.linalg.LinAlgError("singular kernel matrix at eps=0")
    return float(np.sum(proj**2 / shifted))


def complexity_sn(K, y, eps=None):
    """(tr K / N) y^T K^-1 y.

    eps=None evaluates the pseudo-inverse limit, which keeps the block-ideal
    manifold kernels exact even though they are rank deficient; an explicit
    eps >= 0 uses (K + eps I)^-1 instead.
    """
    K = np.asarray(K, dtype=np.float64)
    n = K.shape[0]
    return float(np.trace(K)) / n * _quad_inverse_form(K, y, eps)


def bound_from_complexity(s_n, n, L_lip, b_range, delta):
    """Generalization-gap bound as a function of s_N(K) and the sample count.

    (2 sqrt2 L + 3b)/sqrt2 * sqrt(s_N / N) + 3b sqrt(log(2/(delta(e-1))) / 2N),
    using tr(K) y^T K^-1 y = N s_N(K).
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    complexity_term = (
        (2.0 * math.sqrt(2.0) * L_lip + 3.0 * b_range)
        / math.sqrt(2.0)
        * math.sqrt(s_n / n)
    )
    tail_term = 3.0 * b_range * math.sqrt(
        math.log(2.0 / (delta * (math.e - 1.0))) / (2.0 * n)
    )
    return float(complexity_term + tail_term)


def generalization_bound(K, y, L_lip, b_range, delta, eps=None):
    """High-probability generalization-gap bound for a kernel classifier.

    (2 sqrt2 L + 3b)/sqrt2 * sqrt(tr(K) y^T K^-1 y) / N
      + 3b sqrt(log(2 / (delta (e-1))) / (2N))
    """
    K = np.asarray(K, dtype=np.float64)
    n = K.shape[0]
    s_n = complexity_sn(K, y, eps)
    return bound_from_complexity(s_n, n, L_lip, b_range, delta)


def accuracy(predictions, truth):
    predictions = np.asarray(predictions)
    truth = np.asarray(truth)
    if predictions.shape != truth.shape:
        raise ValueError("length mismatch")
    return float(np.mean(predictions == truth))
