"""k-means++ / Lloyd discretisation of spectral embeddings and error scoring."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment


@dataclass
class Assignment:
    labels: np.ndarray
    k: int
    inertia: float = float("nan")
    n_iter: int = 0
    empty_repairs: int = 0
    history: list = field(default_factory=list)

    @property
    def has_empty(self) -> bool:
        return bool(np.any(np.bincount(self.labels, minlength=self.k) == 0))


def _sq_dists(X: np.ndarray, C: np.ndarray, x_sq: np.ndarray) -> np.ndarray:
    d = x_sq[:, None] - 2.0 * X @ C.T + np.einsum("ij,ij->i", C, C)[None, :]
    np.maximum(d, 0.0, out=d)
    return d


def kmeans_plusplus(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    x_sq = np.einsum("ij,ij->i", X, X)
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    closest = _sq_dists(X, centers[:1], x_sq)[:, 0]
    for c in range(1, k):
        total = closest.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = int(np.searchsorted(np.cumsum(closest), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        centers[c] = X[idx]
        np.minimum(closest, _sq_dists(X, centers[c : c + 1], x_sq)[:, 0], out=closest)
    return centers


def _lloyd(X, centers, max_iter, tol):
    x_sq = np.einsum("ij,ij->i", X, X)
    k = centers.shape[0]
    history = []
    repairs = 0
    labels = np.zeros(X.shape[0], dtype=np.int64)
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        d = _sq_dists(X, centers, x_sq)
        labels = np.argmin(d, axis=1)
        point_cost = d[np.arange(X.shape[0]), labels]
        history.append(float(point_cost.sum()))
        counts = np.bincount(labels, minlength=k)
        new = np.zeros_like(centers)
        np.add.at(new, labels, X)
        nonempty = counts > 0
        new[nonempty] /= counts[nonempty, None]
        for c in np.flatnonzero(~nonempty):
            # reseed at the point farthest from its current centre
            far = int(np.argmax(point_cost))
            new[c] = X[far]
            point_cost[far] = 0.0
            repairs += 1
        shift = float(np.sqrt(((new - centers) ** 2).sum(axis=1)).max())
        centers = new
        if shift < tol:
            break
    d = _sq_dists(X, centers, x_sq)
    labels = np.argmin(d, axis=1)
    inertia = float(d[np.arange(X.shape[0]), labels].sum())
    history.append(inertia)
    return labels, inertia, n_iter, repairs, history


def kmeans(
    H,
    k: int,
    seed=0,
    max_iter: int = 300,
    restarts: int = 10,
    tol: float = 1e-9,
    normalize_rows: bool = False,
) -> Assignment:
    """Best of ``restarts`` k-means++ seeded Lloyd runs on the rows of ``H``."""
    X = np.asarray(H, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if not np.all(np.isfinite(X)):
        raise ValueError("embedding contains non-finite entries")
    if normalize_rows:
        norms = np.linalg.norm(X, axis=1, keepdims=True)
        X = X / np.where(norms > 0, norms, 1.0)
    seeds = np.random.SeedSequence(seed).spawn(max(restarts, 1))
    best = None
    for ss in seeds:
        rng = np.random.default_rng(ss)
        centers = kmeans_plusplus(X, k, rng)
        labels, inertia, n_iter, repairs, history = _lloyd(X, centers, max_iter, tol)
        if best is None or inertia < best.inertia:
            best = Assignment(labels, k, inertia, n_iter, repairs, history)
    return best


def confusion_matrix(a, b, ka: int | None = None, kb: int | None = None) -> np.ndarray:
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    ka = ka or int(a.max()) + 1
    kb = kb or int(b.max()) + 1
    cm = np.zeros((ka, kb), dtype=np.int64)
    np.add.at(cm, (a, b), 1)
    return cm


def clustering_error(a, truth) -> float:
    """Smallest fraction of mislabelled vertices over all label matchings."""
    a = np.asarray(getattr(a, "labels", a), dtype=np.int64)
    truth = np.asarray(getattr(truth, "labels", truth), dtype=np.int64)
    if a.shape != truth.shape:
        raise ValueError(f"length mismatch: {a.size} vs {truth.size}")
    n = a.size
    if n == 0:
        return 0.0
    K = max(int(a.max()), int(truth.max())) + 1
    cm = confusion_matrix(a, truth, K, K)
    if K <= 8:
        perms = np.array(list(itertools.permutations(range(K))))
        matched = cm[np.arange(K)[None, :], perms].sum(axis=1).max()
    else:
        r, c = linear_sum_assignment(-cm)
        matched = cm[r, c].sum()
    return float(1.0 - matched / n)
