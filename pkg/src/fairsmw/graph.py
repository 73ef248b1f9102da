"""Sparse undirected weighted graphs and their elementary operators."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components


class GraphError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Graph:
    """Symmetric CSR adjacency ``W`` plus its degree vector.

    Instances are treated as immutable; every matvec below is read-only.
    """

    W: sp.csr_matrix
    degree: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        W = sp.csr_matrix(self.W, dtype=np.float64)
        W.sum_duplicates()
        W.sort_indices()
        if W.shape[0] != W.shape[1]:
            raise GraphError(f"adjacency must be square, got {W.shape}")
        W.eliminate_zeros()
        if W.nnz and W.data.min() <= 0:
            raise GraphError("edge weights must be strictly positive")
        diff = W - W.T
        if diff.nnz and abs(diff).max() > 1e-12 * abs(W).max():
            raise GraphError("adjacency must be symmetric")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "degree", np.asarray(W.sum(axis=1)).ravel())

    @property
    def n(self) -> int:
        return self.W.shape[0]

    @property
    def m(self) -> int:
        """Number of undirected edges (self-loops counted once)."""
        W = self.W
        loops = int(np.count_nonzero(W.diagonal()))
        return (W.nnz - loops) // 2 + loops

    def has_isolated(self) -> bool:
        return bool(np.any(self.degree <= 0))

    def require_positive_degrees(self) -> None:
        if self.has_isolated():
            bad = np.flatnonzero(self.degree <= 0)
            raise GraphError(
                f"{bad.size} zero-degree vertices (first: {bad[0]}); "
                "run ensure_connected or drop isolated vertices first"
            )

    def n_components(self) -> int:
        return connected_components(self.W, directed=False)[0]

    def is_symmetric(self, tol: float = 0.0) -> bool:
        diff = self.W - self.W.T
        return diff.nnz == 0 or float(abs(diff).max()) <= tol

    def to_dense(self) -> np.ndarray:
        return self.W.toarray()

    def laplacian_dense(self) -> np.ndarray:
        return np.diag(self.degree) - self.to_dense()

    def normalized_laplacian_dense(self) -> np.ndarray:
        self.require_positive_degrees()
        s = 1.0 / np.sqrt(self.degree)
        return np.eye(self.n) - s[:, None] * self.to_dense() * s[None, :]


def from_edge_list(
    edge_triples: Iterable[tuple[int, int, float]],
    n: int,
    allow_self_loops: bool = False,
) -> Graph:
    """Build a symmetric graph on ``n`` vertices; duplicate pairs are summed."""
    if n <= 0:
        raise GraphError(f"vertex count must be positive, got {n}")
    triples = list(edge_triples)
    if triples:
        arr = np.asarray(triples, dtype=np.float64).reshape(-1, 3)
        u = arr[:, 0]
        v = arr[:, 1]
        w = arr[:, 2]
        if np.any(u != np.floor(u)) or np.any(v != np.floor(v)):
            raise GraphError("vertex ids must be integers")
        u = u.astype(np.int64)
        v = v.astype(np.int64)
    else:
        u = v = np.zeros(0, dtype=np.int64)
        w = np.zeros(0)
    return from_arrays(u, v, w, n, allow_self_loops=allow_self_loops)


def from_arrays(u, v, w, n: int, allow_self_loops: bool = False) -> Graph:
    """Vectorised form of :func:`from_edge_list` for large edge sets."""
    if n <= 0:
        raise GraphError(f"vertex count must be positive, got {n}")
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    w = np.asarray(w, dtype=np.float64)
    if u.size:
        bad = (u < 0) | (u >= n) | (v < 0) | (v >= n)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise GraphError(f"vertex id out of range [0, {n}): edge ({u[i]}, {v[i]})")
        if np.any(~(w > 0)):
            i = int(np.flatnonzero(~(w > 0))[0])
            raise GraphError(f"non-positive weight {w[i]} on edge ({u[i]}, {v[i]})")
        loops = u == v
        if loops.any() and not allow_self_loops:
            i = int(np.flatnonzero(loops)[0])
            raise GraphError(f"self-loop on vertex {u[i]} (pass allow_self_loops=True)")
        # a self-loop (i, i) lands once on the diagonal
        off = ~loops
        rows = np.concatenate([u, v[off]])
        cols = np.concatenate([v, u[off]])
        vals = np.concatenate([w, w[off]])
    else:
        rows = cols = np.zeros(0, dtype=np.int64)
        vals = np.zeros(0)
    W = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    return Graph(W)


def _check_dim(g: Graph, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != g.n:
        raise GraphError(f"dimension mismatch: graph has {g.n} vertices, vector has {x.shape[0]}")
    return x


def laplacian_matvec(g: Graph, x) -> np.ndarray:
    """``(D - W) x``; ``x`` may be a vector or an ``n x r`` block."""
    x = _check_dim(g, x)
    d = g.degree if x.ndim == 1 else g.degree[:, None]
    return d * x - g.W @ x


def normalized_adjacency_matvec(g: Graph, x) -> np.ndarray:
    """``D^{-1/2} W D^{-1/2} x``."""
    x = _check_dim(g, x)
    g.require_positive_degrees()
    s = 1.0 / np.sqrt(g.degree)
    if x.ndim > 1:
        s = s[:, None]
    return s * (g.W @ (s * x))


def ensure_connected(g: Graph, seed=None) -> Graph:
    """Link all connected components with weight-1 tree edges.

    One representative per component is drawn with ``seed``; components are
    chained in a seeded random order, so ``c - 1`` edges are added for ``c``
    components. A connected graph is returned as is.
    """
    if g.n < 2:
        raise GraphError("ensure_connected needs at least 2 vertices")
    n_comp, labels = connected_components(g.W, directed=False)
    if n_comp == 1:
        return g
    rng = np.random.default_rng(seed)
    order = np.argsort(labels, kind="stable")
    bounds = np.searchsorted(labels[order], np.arange(n_comp + 1))
    reps = np.array([order[bounds[c] + rng.integers(bounds[c + 1] - bounds[c])] for c in range(n_comp)])
    reps = reps[rng.permutation(n_comp)]
    bridge = sp.coo_matrix(
        (np.ones(2 * (n_comp - 1)),
         (np.concatenate([reps[:-1], reps[1:]]), np.concatenate([reps[1:], reps[:-1]]))),
        shape=(g.n, g.n),
    )
    return Graph(g.W + bridge.tocsr())


def largest_component(g: Graph) -> tuple[Graph, np.ndarray]:
    """Restrict to the largest connected component; returns (graph, kept vertex ids)."""
    n_comp, labels = connected_components(g.W, directed=False)
    if n_comp == 1:
        return g, np.arange(g.n)
    sizes = np.bincount(labels)
    keep = np.flatnonzero(labels == np.argmax(sizes))
    return Graph(g.W[keep][:, keep]), keep
