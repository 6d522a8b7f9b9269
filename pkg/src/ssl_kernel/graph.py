"""Augmentation adjacency matrices and combinatorial graph Laplacians."""

import numpy as np

__all__ = [
    "pairwise_adjacency",
    "group_adjacency",
    "neighborhood_adjacency",
    "laplacian",
    "validate_adjacency",
    "save_edges_csv",
    "load_edges_csv",
]


def validate_adjacency(A, name="adjacency"):
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square")
    if np.any(A < 0):
        raise ValueError(f"{name} entries must be nonnegative")
    if np.any(np.diag(A) != 0):
        raise ValueError(f"{name} must have a zero diagonal")
    if not np.array_equal(A, A.T):
        raise ValueError(f"{name} must be symmetric")
    return A


def pairwise_adjacency(n_pairs):
    """Block-diagonal [[0,1],[1,0]] blocks: sample 2i is paired with 2i+1."""
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    n = 2 * n_pairs
    A = np.zeros((n, n))
    idx = np.arange(0, n, 2)
    A[idx, idx + 1] = 1.0
    A[idx + 1, idx] = 1.0
    return A


def group_adjacency(groups, n, mode="clique"):
    """Adjacency over n points from disjoint index groups.

    clique mode connects every pair inside a group; star mode connects the
    first index of each group (the original sample) to the rest.
    """
    if mode not in ("star", "clique"):
        raise ValueError(f"unknown mode {mode!r}")
    A = np.zeros((n, n))
    seen = set()
    for group in groups:
        members = [int(i) for i in group]
        for i in members:
            if not 0 <= i < n:
                raise IndexError(f"index {i} outside [0, {n})")
            if i in seen:
                raise ValueError(f"groups overlap at index {i}")
            seen.add(i)
        if mode == "clique":
            for a in members:
                for b in members:
                    if a != b:
                        A[a, b] = 1.0
        else:
            head = members[0]
            for b in members[1:]:
                A[head, b] = 1.0
                A[b, head] = 1.0
    return A


def neighborhood_adjacency(G, d):
    """Connect i != j exactly when the kernel value G[i, j] exceeds d.

    Raising d removes edges; a threshold below every off-diagonal entry
    yields the complete graph.
    """
    G = np.asarray(G, dtype=np.float64)
    A = (G > d).astype(np.float64)
    np.fill_diagonal(A, 0.0)
    return np.maximum(A, A.T)


def laplacian(A):
    """Combinatorial Laplacian diag(A 1) - A."""
    A = validate_adjacency(A)
    return np.diag(A.sum(axis=1)) - A


def save_edges_csv(A, path):
    """Edge list `i,j` (0-based, i < j) with a `# n=<N>` header."""
    A = validate_adjacency(A)
    n = A.shape[0]
    ii, jj = np.nonzero(np.triu(A, 1))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"# n={n}\n")
        for i, j in zip(ii, jj):
            fh.write(f"{i},{j}\n")


def load_edges_csv(path):
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if not header.startswith("# n="):
            raise ValueError("missing `# n=<N>` header line")
        n = int(header[4:])
        A = np.zeros((n, n))
        for line in fh:
            line = line.strip()
            if not line:
                continue
            i, j = (int(tok) for tok in line.split(","))
            A[i, j] = A[j, i] = 1.0
    return A
