"""Numpy implementations of the hot loops.

These mirror the compiled core in ``_core.pyx`` operation for operation: the
same update formulas in the same order, so both backends produce identical
floating-point results and can be swapped freely.
"""

import numpy as np

NAME = "pure"


def smo_solve(Q, y, C, tol, max_iter):
    """Maximal-violating-pair coordinate ascent on the SVM dual.

    Solves min_a  a^T Q a / 2 - 1^T a  s.t. 0 <= a <= C, y^T a = 0 with
    Q[i, j] = y_i y_j k(x_i, x_j).  Returns (alpha, iterations, converged).
    """
    n = Q.shape[0]
    alpha = np.zeros(n)
    grad = np.full(n, -1.0)
    minus_yg = np.empty(n)
    it = 0
    converged = False
    while it < max_iter:
        np.multiply(y, grad, out=minus_yg)
        np.negative(minus_yg, out=minus_yg)
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
        up_vals = np.where(up, minus_yg, -np.inf)
        low_vals = np.where(low, minus_yg, np.inf)
        i = int(np.argmax(up_vals))
        j = int(np.argmin(low_vals))
        if up_vals[i] - low_vals[j] <= tol:
            converged = True
            break
        it += 1

        old_i = alpha[i]
        old_j = alpha[j]
        if y[i] != y[j]:
            quad = Q[i, i] + Q[j, j] + 2.0 * Q[i, j]
            if quad <= 0.0:
                quad = 1e-12
            delta = (-grad[i] - grad[j]) / quad
            diff = old_i - old_j
            ai = old_i + delta
            aj = old_j + delta
            if diff > 0.0 and aj < 0.0:
                aj = 0.0
                ai = diff
            elif diff <= 0.0 and ai < 0.0:
                ai = 0.0
                aj = -diff
            if diff > 0.0 and ai > C:
                ai = C
                aj = C - diff
            elif diff <= 0.0 and aj > C:
                aj = C
                ai = C + diff
        else:
            quad = Q[i, i] + Q[j, j] - 2.0 * Q[i, j]
            if quad <= 0.0:
                quad = 1e-12
            delta = (grad[i] - grad[j]) / quad
            total = old_i + old_j
            ai = old_i - delta
            aj = old_j + delta
            if ai > C:
                ai = C
                aj = total - C
            elif aj < 0.0:
                aj = 0.0
                ai = total
            if aj > C:
                aj = C
                ai = total - C
            elif ai < 0.0:
                ai = 0.0
                aj = total

        alpha[i] = ai
        alpha[j] = aj
        di = ai - old_i
        dj = aj - old_j
        grad += Q[i] * di + Q[j] * dj
    return alpha, it, converged


def convolve_rows(padded, weights):
    """Row-direction correlation: out[r, c] = sum_k w[k] * padded[r, c + k]."""
    taps = weights.shape[0]
    width = padded.shape[1] - taps + 1
    out = np.zeros((padded.shape[0], width))
    for k in range(taps):
        out += weights[k] * padded[:, k : k + width]
    return out


def warp_bilinear(img, coeffs):
    """Inverse-mapped bilinear resample with zero fill outside the frame.

    coeffs = (a, b, c, d, e, f): output pixel (r, c) samples the source at
    row a*r + b*c + c0 and column d*r + e*c + f.
    """
    h, w = img.shape
    a, b, c0, d, e, f = (float(v) for v in coeffs)
    rows = np.arange(h)[:, None]
    cols = np.arange(w)[None, :]
    ys = a * rows + b * cols + c0
    xs = d * rows + e * cols + f
    y0 = np.floor(ys)
    x0 = np.floor(xs)
    wy = ys - y0
    wx = xs - x0
    y0 = y0.astype(np.int64)
    x0 = x0.astype(np.int64)

    def fetch(yy, xx):
        valid = (yy >= 0) & (yy < h) & (xx >= 0) & (xx < w)
        vals = img[np.clip(yy, 0, h - 1), np.clip(xx, 0, w - 1)]
        return np.where(valid, vals, 0.0)

    v00 = fetch(y0, x0)
    v01 = fetch(y0, x0 + 1)
    v10 = fetch(y0 + 1, x0)
    v11 = fetch(y0 + 1, x0 + 1)
    return (1.0 - wy) * ((1.0 - wx) * v00 + wx * v01) + wy * (
        (1.0 - wx) * v10 + wx * v11
    )
