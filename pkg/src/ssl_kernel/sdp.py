"""Batched induced-kernel optimization as a semidefinite program.

When the SSL loss is enforced per batch, the optimal coefficient matrix B
solves

    min  tr(B K_ss)   s.t.   K_{s_j,s} B K_{s,s_j} [M_c] = T_j  for all j,
                             B >= 0 (PSD),

with T_j the per-batch optimal-representation target and M_c the batch
centering matrix in the non-contrastive case.  Because the batches partition
the dataset, substituting Q = K_ss B K_ss turns every constraint into a pin on
a principal block of Q, so the affine step of an operator-splitting method is
exact.  The solver alternates that affine projection, a PSD projection, and a
scaled dual update.
"""

from dataclasses import dataclass, field

import numpy as np

from .graph import laplacian, validate_adjacency
from .induced import CONTRASTIVE, NONCONTRASTIVE
from .kernels import stable_inverse, sym_eigen, top_k

__all__ = [
    "BatchPlan",
    "SdpSolution",
    "make_batches",
    "attach_data",
    "batch_targets",
    "solve_sdp",
    "residuals",
    "save_trace_csv",
]


@dataclass
class BatchPlan:
    """Partition of the SSL dataset plus per-batch kernel and graph data."""

    batch_indices: list
    n: int
    loss: str = ""
    beta: float = 0.0
    cross: list = field(default_factory=list)  # K_{s,s_j}, one (N, b_j) block each
    structure: list = field(default_factory=list)  # A^(j) or L^(j)

    def sizes(self):
        return [len(idx) for idx in self.batch_indices]


@dataclass
class SdpSolution:
    B: np.ndarray
    objective: float
    residuals: np.ndarray
    iterations: int
    converged: bool
    stagnated: bool = False
    trace: list = field(default_factory=list)  # rows of per-iteration diagnostics


def make_batches(n, b, seed=0):
    """Deterministic shuffled partition into batches of size b (last may be short)."""
    if b < 1 or b > n:
        raise ValueError(f"batch size {b} out of range for n={n}")
    order = np.random.default_rng(seed).permutation(n)
    batches = [order[i : i + b].copy() for i in range(0, n, b)]
    return BatchPlan(batch_indices=batches, n=n)


def attach_data(plan, G, A, cfg):
    """Fill the plan with kernel cross blocks and per-batch graph structure.

    A is the adjacency over the full dataset; per-batch structure is its
    restriction (and, for the non-contrastive loss, the Laplacian of the
    restriction, so degrees count only within-batch edges).
    """
    G = np.asarray(G, dtype=np.float64)
    if G.shape != (plan.n, plan.n):
        raise ValueError("gram size does not match plan")
    A = validate_adjacency(A)
    if A.shape != (plan.n, plan.n):
        raise ValueError("adjacency size does not match plan")
    plan.loss = cfg.loss
    plan.beta = cfg.beta
    plan.cross = [G[:, idx].copy() for idx in plan.batch_indices]
    plan.structure = []
    for idx in plan.batch_indices:
        A_j = A[np.ix_(idx, idx)]
        plan.structure.append(A_j if cfg.loss == CONTRASTIVE else laplacian(A_j))
    return plan


def _batch_width(cfg, b):
    return b if cfg.k is None else min(int(cfg.k), b)


def batch_targets(plan, cfg):
    """Per-batch optimal-representation targets.

    Contrastive: top-K positive truncation of I + A^(j).  Non-contrastive:
    top-K positive truncation of I - 11^T/b - (beta/2) L^(j).
    """
    if plan.loss and plan.loss != cfg.loss:
        raise ValueError("plan was attached for a different loss")
    targets = []
    for idx, S in zip(plan.batch_indices, plan.structure):
        b = len(idx)
        if S.shape != (b, b):
            raise ValueError("structure size mismatch")
        if cfg.loss == CONTRASTIVE:
            base = np.eye(b) + S
        else:
            base = np.eye(b) - np.full((b, b), 1.0 / b) - (cfg.beta / 2.0) * S
        C_K, D_K = top_k(base, _batch_width(cfg, b))
        targets.append((C_K * D_K) @ C_K.T)
    return targets


def _constraint_value(B, plan, j):
    K_j = plan.cross[j]
    val = K_j.T @ B @ K_j
    if plan.loss == NONCONTRASTIVE:
        b = val.shape[0]
        val = val - np.outer(val.mean(axis=1), np.ones(b))  # right-multiply by M_c
    return val


def residuals(B, plan, targets):
    """Frobenius violation of each batch constraint."""
    out = np.empty(len(targets))
    for j, T_j in enumerate(targets):
        out[j] = np.linalg.norm(_constraint_value(B, plan, j) - T_j)
    return out


class _RangeReduction:
    """Lossless reduction of the SDP to the span of the pinned blocks.

    Any PSD Q whose principal block j equals T_j (plus, non-contrastively, a
    multiple of 11^T) has off-diagonal blocks confined to the ranges of those
    diagonal blocks.  Writing Q = V S V^T with V the block-diagonal stack of
    per-batch range bases turns each constraint into a pin on a full-rank
    diagonal block of S, restoring strict feasibility and making the affine
    projection an exact overwrite.
    """

    def __init__(self, plan, targets):
        cols = []
        self.pins = []  # (slice, eigenvalues, has_free_corner)
        n = plan.n
        offset = 0
        col_blocks = []
        for idx, T_j in zip(plan.batch_indices, targets):
            b = len(idx)
            dec = sym_eigen(T_j)
            cut = 1e-12 * max(float(np.max(np.abs(dec.values))), 1e-300)
            keep = dec.values > cut
            W = dec.vectors[:, keep]
            d = dec.values[keep]
            if plan.loss == NONCONTRASTIVE:
                # The centering direction 1/sqrt(b) carries the free multiple
                # of 11^T allowed by the right-centered constraint.
                W = np.hstack([W, np.full((b, 1), 1.0 / np.sqrt(b))])
                free = True
            else:
                free = False
            r = W.shape[1]
            V_block = np.zeros((n, r))
            V_block[idx, :] = W
            col_blocks.append(V_block)
            self.pins.append((slice(offset, offset + r), d, free))
            offset += r
        self.V = np.hstack(col_blocks) if col_blocks else np.zeros((n, 0))
        self.dim = offset

    def project(self, S):
        """Overwrite the pinned diagonal blocks of S."""
        X = S.copy()
        for sl, d, free in self.pins:
            r = sl.stop - sl.start
            block = np.zeros((r, r))
            if free:
                block[: r - 1, : r - 1] = np.diag(d)
                block[r - 1, r - 1] = S[sl.stop - 1, sl.stop - 1]
            else:
                block[:, :] = np.diag(d)
            X[sl, sl] = block
        return X

    def lift(self, S):
        """Back to dataset coordinates: Q = V S V^T."""
        return (self.V @ S) @ self.V.T


def solve_sdp(
    G,
    plan,
    targets,
    tol=1e-6,
    max_iter=5000,
    rank_k=None,
    ridge=None,
    adapt_rho=False,
    relax=1.7,
):
    """Operator-splitting solve of the batched SDP.

    Returns the best iterate with converged=False when max_iter is hit;
    stagnated is set when the constraint residual stops improving, which is
    the symptom of mutually infeasible batch constraints.  relax is the
    usual over-relaxation factor in (0, 2); it roughly halves the iteration
    count on the rank-deficient pairwise targets.  adapt_rho enables x2 / /2
    residual balancing; it is off by default because rescaling the dual
    variable sets convergence back badly on pairwise instances, where the
    dual residual stalls while the iterate traverses a face of the cone.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    G = np.asarray(G, dtype=np.float64)
    if not plan.cross:
        raise ValueError("plan has no kernel data; call attach_data first")

    K_inv = stable_inverse(G, ridge)
    red = _RangeReduction(plan, targets)
    C = red.V.T @ K_inv @ red.V  # objective in S coordinates: tr(B K) = tr(S C)
    C = (C + C.T) / 2.0

    Z = red.project(np.zeros((red.dim, red.dim)))
    U = np.zeros((red.dim, red.dim))
    rho = 1.0
    trace_rows = []
    prev_w = Z + U
    best = None
    best_res = np.inf
    res_window = []
    obj_window = []
    converged = False
    stagnated = False
    it = 0

    if not 0.0 < relax < 2.0:
        raise ValueError("relax must lie in (0, 2)")

    for it in range(1, max_iter + 1):
        X = red.project(Z - U - C / rho)
        X_hat = relax * X + (1.0 - relax) * Z
        dec = sym_eigen(X_hat + U)
        w = np.maximum(dec.values, 0.0)
        Z_new = (dec.vectors * w) @ dec.vectors.T
        Z_new = (Z_new + Z_new.T) / 2.0
        U = U + X_hat - Z_new

        r_prim = np.linalg.norm(X - Z_new)
        s_dual = rho * np.linalg.norm(Z_new - Z)
        Z = Z_new

        B = K_inv @ red.lift(Z) @ K_inv
        res = residuals(B, plan, targets)
        max_res = float(res.max())
        obj = float(np.sum(Z * C))
        w_now = Z + U
        merit = float(np.linalg.norm(w_now - prev_w))
        prev_w = w_now
        trace_rows.append((it, obj, max_res, float(dec.values[-1]), rho, merit))

        if max_res < best_res:
            best_res = max_res
            best = (B.copy(), res.copy())

        # Converged means the returned B is feasible to tolerance (constraint
        # residual; PSD holds by construction from Z) and stationary.
        # Stationarity accepts either the usual scaled dual residual or a
        # flat objective over a trailing window; the latter matters when the
        # optimal face is flat and the iterate can slide along the solution
        # set with s_dual never vanishing.
        obj_window.append(obj)
        if len(obj_window) > 50:
            obj_window.pop(0)
        eps_dual = tol * max(1.0, rho * np.linalg.norm(U))
        obj_flat = (
            len(obj_window) == 50
            and abs(obj_window[-1] - obj_window[0]) <= tol * max(1.0, abs(obj))
        )
        if max_res <= tol and (s_dual <= eps_dual or obj_flat):
            converged = True
            best = (B, res)
            break

        # Infeasible constraint sets show up as a residual floor well above
        # anything roundoff can explain.
        res_window.append(max_res)
        if len(res_window) > 300:
            res_window.pop(0)
            if max_res > 0.99 * res_window[0] and max_res > 1e-3:
                stagnated = True
                break

        # Optional residual balancing, clamped and restricted to a warmup.
        if adapt_rho and it % 25 == 0 and it <= 500:
            if r_prim > 10.0 * s_dual and rho < 1e3:
                rho *= 2.0
                U /= 2.0
                prev_w = Z + U
            elif s_dual > 10.0 * r_prim and rho > 1e-3:
                rho /= 2.0
                U *= 2.0
                prev_w = Z + U

    if best is None:
        B_final = K_inv @ red.lift(Z) @ K_inv
        res_final = residuals(B_final, plan, targets)
    else:
        B_final, res_final = best
    if rank_k is not None:
        C_K, D_K = top_k(B_final, rank_k)
        B_final = (C_K * D_K) @ C_K.T
        res_final = residuals(B_final, plan, targets)

    return SdpSolution(
        B=B_final,
        objective=float(np.sum(B_final * G)),
        residuals=res_final,
        iterations=it,
        converged=converged,
        stagnated=stagnated,
        trace=trace_rows,
    )


def save_trace_csv(solution, path):
    """Convergence trace as CSV for plotting."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("iteration,objective,max_residual,min_eigenvalue,rho,merit\n")
        for row in solution.trace:
            fh.write(",".join(repr(v) for v in row) + "\n")
