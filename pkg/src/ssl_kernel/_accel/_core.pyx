# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twins of the hot loops in ``_pure``.

Every routine keeps the arithmetic order of its numpy counterpart so the two
backends return bit-identical results.
"""

import numpy as np

NAME = "compiled"


def smo_solve(double[:, ::1] Q, double[::1] y, double C, double tol, long max_iter):
    cdef Py_ssize_t n = Q.shape[0]
    alpha_arr = np.zeros(n)
    grad_arr = np.full(n, -1.0)
    cdef double[::1] alpha = alpha_arr
    cdef double[::1] grad = grad_arr
    cdef Py_ssize_t it = 0, i, j, t
    cdef bint converged = False
    cdef double best_up, best_low, v, quad, delta, diff, total
    cdef double old_i, old_j, ai, aj, di, dj
    cdef bint up, low

    while it < max_iter:
        i = -1
        j = -1
        best_up = -np.inf
        best_low = np.inf
        for t in range(n):
            v = -(y[t] * grad[t])
            up = (y[t] > 0 and alpha[t] < C) or (y[t] < 0 and alpha[t] > 0)
            low = (y[t] < 0 and alpha[t] < C) or (y[t] > 0 and alpha[t] > 0)
            if up and v > best_up:
                best_up = v
                i = t
            if low and v < best_low:
                best_low = v
                j = t
        if best_up - best_low <= tol:
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
        for t in range(n):
            grad[t] = grad[t] + (Q[i, t] * di + Q[j, t] * dj)
    return alpha_arr, it, converged


def convolve_rows(double[:, ::1] padded, double[::1] weights):
    cdef Py_ssize_t taps = weights.shape[0]
    cdef Py_ssize_t height = padded.shape[0]
    cdef Py_ssize_t width = padded.shape[1] - taps + 1
    out_arr = np.zeros((height, width))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t r, c, k
    cdef double acc
    for r in range(height):
        for c in range(width):
            acc = 0.0
            for k in range(taps):
                acc = acc + weights[k] * padded[r, c + k]
            out[r, c] = acc
    return out_arr


def warp_bilinear(double[:, ::1] img, coeffs):
    cdef Py_ssize_t h = img.shape[0]
    cdef Py_ssize_t w = img.shape[1]
    cdef double a = coeffs[0], b = coeffs[1], c0 = coeffs[2]
    cdef double d = coeffs[3], e = coeffs[4], f = coeffs[5]
    out_arr = np.zeros((h, w))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t r, c
    cdef double ys, xs, wy, wx, v00, v01, v10, v11
    cdef long y0, x0
    for r in range(h):
        for c in range(w):
            ys = a * r + b * c + c0
            xs = d * r + e * c + f
            y0 = <long>ys
            if ys < y0:
                y0 -= 1
            x0 = <long>xs
            if xs < x0:
                x0 -= 1
            wy = ys - y0
            wx = xs - x0
            v00 = img[y0, x0] if 0 <= y0 < h and 0 <= x0 < w else 0.0
            v01 = img[y0, x0 + 1] if 0 <= y0 < h and 0 <= x0 + 1 < w else 0.0
            v10 = img[y0 + 1, x0] if 0 <= y0 + 1 < h and 0 <= x0 < w else 0.0
            v11 = img[y0 + 1, x0 + 1] if 0 <= y0 + 1 < h and 0 <= x0 + 1 < w else 0.0
            out[r, c] = (1.0 - wy) * ((1.0 - wx) * v00 + wx * v01) + wy * (
                (1.0 - wx) * v10 + wx * v11
            )
    return out_arr
