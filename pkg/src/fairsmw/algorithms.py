"""End-to-end clustering pipelines.

Every pipeline returns a :class:`ClusteringResult` with the same metric,
timing and solver-statistics fields so runs can be compared row by row.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import operators as ops
from .cluster import Assignment, clustering_error, kmeans
from .eigensolve import EigenRequest, solve
from .fairness import (
    GroupPartition,
    average_balance,
    build_constraint_matrix,
    cluster_balances,
    constraint_residual,
)
from .graph import Graph


@dataclass
class ClusteringResult:
    algorithm: str
    variant: str
    k: int
    seed: int
    assignment: Assignment
    H: np.ndarray
    eigenvalues: np.ndarray
    avg_balance: float = float("nan")
    balances: np.ndarray = field(default_factory=lambda: np.zeros(0))
    min_balance: float = float("nan")
    ncut: float = float("nan")
    error: float = float("nan")
    constraint_residual: float = float("nan")
    total_s: float = 0.0
    eigs_s: float = 0.0
    kmeans_s: float = 0.0
    restarts: int = 0
    matvecs: int = 0
    empty_clusters: bool = False

    @property
    def labels(self) -> np.ndarray:
        return self.assignment.labels

    def to_row(self, dataset: str = "") -> dict:
        return {
            "dataset": dataset,
            "algorithm": self.algorithm,
            "variant": self.variant,
            "k": self.k,
            "seed": self.seed,
            "avg_balance": self.avg_balance,
            "min_balance": self.min_balance,
            "ncut": self.ncut,
            "error": self.error,
            "constraint_residual": self.constraint_residual,
            "total_s": self.total_s,
            "eigs_s": self.eigs_s,
            "kmeans_s": self.kmeans_s,
            "restarts": self.restarts,
            "matvecs": self.matvecs,
        }


def ncut_value(g: Graph, a, k: int | None = None) -> float:
    """Sum over non-empty clusters of cut(C, V \\ C) / vol(C)."""
    labels = np.asarray(getattr(a, "labels", a), dtype=np.int64)
    k = k or int(labels.max()) + 1
    ind = np.zeros((g.n, k))
    ind[np.arange(g.n), labels] = 1.0
    vol = ind.T @ g.degree
    inner = np.einsum("ij,ij->j", ind, g.W @ ind)
    nonempty = vol > 0
    return float(((vol - inner)[nonempty] / vol[nonempty]).sum())


def _finish(
    name, variant, g, gp, k, seed, H, eigvals, t_start, eigs_s, solver_stats, truth, F, kmeans_kw
) -> ClusteringResult:
    t_km = time.perf_counter()
    assignment = kmeans(H, k, seed=seed, **kmeans_kw)
    kmeans_s = time.perf_counter() - t_km
    total_s = time.perf_counter() - t_start
    res = ClusteringResult(
        algorithm=name,
        variant=variant,
        k=k,
        seed=seed,
        assignment=assignment,
        H=H,
        eigenvalues=np.asarray(eigvals),
        total_s=total_s,
        eigs_s=eigs_s,
        kmeans_s=kmeans_s,
        restarts=solver_stats[0],
        matvecs=solver_stats[1],
    )
    res.ncut = ncut_value(g, assignment, k)
    if gp is not None:
        res.balances, res.empty_clusters = cluster_balances(assignment.labels, gp, k)
        res.avg_balance = float(res.balances.mean())
        res.min_balance = float(res.balances.min())
        if F is None:
            F = build_constraint_matrix(gp)
        res.constraint_residual = constraint_residual(F, H)
    else:
        res.empty_clusters = assignment.has_empty
    if truth is not None:
        res.error = clustering_error(assignment.labels, truth)
    return res


def _kmeans_kw(kw: dict) -> dict:
    return {key: kw[key] for key in ("restarts", "max_iter", "normalize_rows") if key in kw}


def _solve(op, k, which, seed, tol, max_restarts, p):
    t = time.perf_counter()
    res = solve(EigenRequest(op, k, which=which, tol=tol, max_restarts=max_restarts, p=p, seed=seed))
    return res, time.perf_counter() - t


def standard_sc(
    g: Graph, k: int, seed: int = 0, gp: GroupPartition | None = None, truth=None,
    tol: float = 1e-8, max_restarts: int = 1000, p: int | None = None, **kmeans_kw,
) -> ClusteringResult:
    """Unconstrained normalized SC: bottom-k eigenvectors of ``L_sym``.

    Computed as the top-k of ``2I - L_sym`` so only the largest-mode solver is used.
    """
    t0 = time.perf_counter()
    op = ops.ShiftedNormalizedAdjacency(g)
    res, eigs_s = _solve(op, k, "largest", seed, tol, max_restarts, p)
    lam = 2.0 - res.eigenvalues
    return _finish("standard_sc", "", g, gp, k, seed, res.eigenvectors, lam, t0, eigs_s,
                   (res.stats.restarts, res.stats.matvecs), truth, None, _kmeans_kw(kmeans_kw))


def fair_sc_unnormalized(
    g: Graph, gp: GroupPartition, k: int, seed: int = 0, truth=None,
    dense_limit: int = ops.DEFAULT_DENSE_LIMIT, **kmeans_kw,
) -> ClusteringResult:
    t0 = time.perf_counter()
    F = build_constraint_matrix(gp)
    Z = ops.null_space_basis(F, dense_limit=dense_limit)
    if k > Z.shape[1]:
        raise ValueError(f"k={k} exceeds the fair subspace dimension {Z.shape[1]}")
    t_e = time.perf_counter()
    L = g.laplacian_dense()
    w, Y = np.linalg.eigh(Z.T @ L @ Z)
    eigs_s = time.perf_counter() - t_e
    H = Z @ Y[:, :k]
    return _finish("fair_sc_unnormalized", "", g, gp, k, seed, H, w[:k], t0, eigs_s, (0, 0), truth, F,
                   _kmeans_kw(kmeans_kw))


def fair_sc_normalized(
    g: Graph, gp: GroupPartition, k: int, seed: int = 0, truth=None,
    dense_limit: int = ops.DEFAULT_DENSE_LIMIT, **kmeans_kw,
) -> ClusteringResult:
    t0 = time.perf_counter()
    g.require_positive_degrees()
    F = build_constraint_matrix(gp)
    Z = ops.null_space_basis(F, dense_limit=dense_limit)
    if k > Z.shape[1]:
        raise ValueError(f"k={k} exceeds the fair subspace dimension {Z.shape[1]}")
    t_e = time.perf_counter()
    ZDZ = Z.T @ (g.degree[:, None] * Z)
    mu, E = np.linalg.eigh(0.5 * (ZDZ + ZDZ.T))
    if mu.min() <= 1e-12 * mu.max():
        raise np.linalg.LinAlgError("Z^T D Z is singular")
    Q_inv = (E / np.sqrt(mu)) @ E.T
    L = g.laplacian_dense()
    M = Q_inv @ (Z.T @ L @ Z) @ Q_inv
    w, X = np.linalg.eigh(0.5 * (M + M.T))
    eigs_s = time.perf_counter() - t_e
    H = Z @ (Q_inv @ X[:, :k])
    return _finish("fair_sc_normalized", "", g, gp, k, seed, H, w[:k], t0, eigs_s, (0, 0), truth, F,
                   _kmeans_kw(kmeans_kw))


def s_fair_sc(
    g: Graph, gp: GroupPartition, k: int, sigma: float = 3.0, seed: int = 0, truth=None,
    tol: float = 1e-8, max_restarts: int = 1000, p: int | None = None, **kmeans_kw,
) -> ClusteringResult:
    """Bottom-k of the deflated operator, then ``H = D^{-1/2} X``."""
    t0 = time.perf_counter()
    F = build_constraint_matrix(gp)
    op = ops.deflated_operator(g, F, sigma)
    res, eigs_s = _solve(op, k, "smallest", seed, tol, max_restarts, p)
    X = res.eigenvectors
    # drop rounding-level components along the deflated directions
    X = X - op.Q @ (op.Q.T @ X)
    H = X / np.sqrt(g.degree)[:, None]
    return _finish("s_fair_sc", "", g, gp, k, seed, H, res.eigenvalues, t0, eigs_s,
                   (res.stats.restarts, res.stats.matvecs), truth, F, _kmeans_kw(kmeans_kw))


def fair_smw(
    g: Graph, gp: GroupPartition, k: int, variant: str = "aff", seed: int = 0, truth=None,
    tol: float = 1e-8, max_restarts: int = 1000, p: int | None = None, **kmeans_kw,
) -> ClusteringResult:
    """Top-k eigenvectors of the fair operator ``U`` for the chosen ``G`` variant."""
    t0 = time.perf_counter()
    F = build_constraint_matrix(gp)
    U = ops.fair_smw_operator(ops.make_g_operator(g, variant), F)
    res, eigs_s = _solve(U, k, "largest", seed, tol, max_restarts, p)
    return _finish("fair_smw", variant, g, gp, k, seed, res.eigenvectors, res.eigenvalues, t0, eigs_s,
                   (res.stats.restarts, res.stats.matvecs), truth, F, _kmeans_kw(kmeans_kw))


# name -> (callable, variant); "all" expands to the five benchmark pipelines
PIPELINES = {
    "standard_sc": ("standard_sc", ""),
    "fair_sc_unnormalized": ("fair_sc_unnormalized", ""),
    "fair_sc_normalized": ("fair_sc_normalized", ""),
    "s_fair_sc": ("s_fair_sc", ""),
    "fair_smw_sym": ("fair_smw", "sym"),
    "fair_smw_rw": ("fair_smw", "rw"),
    "fair_smw_aff": ("fair_smw", "aff"),
}
ALL = ("standard_sc", "s_fair_sc", "fair_smw_sym", "fair_smw_rw", "fair_smw_aff")
FAIR = ("fair_sc_unnormalized", "fair_sc_normalized", "s_fair_sc", "fair_smw_sym", "fair_smw_rw", "fair_smw_aff")


def run_pipeline(name: str, g: Graph, gp: GroupPartition, k: int, seed: int = 0, truth=None,
                 sigma: float = 3.0, tol: float = 1e-8, max_restarts: int = 1000, **kw) -> ClusteringResult:
    """Dispatch by pipeline name (see ``PIPELINES``)."""
    if name not in PIPELINES:
        raise KeyError(f"unknown algorithm {name!r}; choose from {sorted(PIPELINES)}")
    if name == "standard_sc":
        return standard_sc(g, k, seed=seed, gp=gp, truth=truth, tol=tol, max_restarts=max_restarts, **kw)
    if name == "fair_sc_unnormalized":
        return fair_sc_unnormalized(g, gp, k, seed=seed, truth=truth, **kw)
    if name == "fair_sc_normalized":
        return fair_sc_normalized(g, gp, k, seed=seed, truth=truth, **kw)
    if name == "s_fair_sc":
        return s_fair_sc(g, gp, k, sigma=sigma, seed=seed, truth=truth, tol=tol, max_restarts=max_restarts, **kw)
    return fair_smw(g, gp, k, variant=PIPELINES[name][1], seed=seed, truth=truth, tol=tol,
                    max_restarts=max_restarts, **kw)
