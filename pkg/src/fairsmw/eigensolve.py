"""Thick-restart Krylov eigensolver with restart instrumentation.

Symmetric operators use a thick-restart Lanczos iteration with full
reorthogonalisation. Operators that report ``symmetric = False`` (the rw
fair operator) go through the same expansion but restart on an ordered real
Schur form (Krylov-Schur), so complex Ritz pairs never get split.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla


class EigenConvergenceError(RuntimeError):
    """Raised when ``max_restarts`` is exhausted; ``partial`` holds the last Ritz pairs."""

    def __init__(self, message: str, partial: "EigenResult"):
        super().__init__(message)
        self.partial = partial


@dataclass
class EigenRequest:
    operator: object
    k: int
    which: str = "largest"
    tol: float = 1e-8
    max_restarts: int = 1000
    p: int | None = None
    seed: int | None = 0
    deflate_ones: bool = False

    def __post_init__(self):
        n = self.operator.shape[0]
        if self.which not in ("largest", "smallest"):
            raise ValueError(f"which must be 'largest' or 'smallest', got {self.which!r}")
        if not 1 <= self.k < n:
            raise ValueError(f"need 1 <= k < n, got k={self.k}, n={n}")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.p is None:
            self.p = max(2 * self.k + 1, 20)
        self.p = min(int(self.p), n)
        if self.p <= self.k:
            raise ValueError(f"subspace dimension p={self.p} must exceed k={self.k}")


@dataclass
class SolveStats:
    restarts: int = 0
    matvecs: int = 0
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    residual_history: list = field(default_factory=list)
    ritz_history: list = field(default_factory=list)
    anorm: float = 0.0
    wall_time: float = 0.0
    converged: bool = False
    max_imag: float = 0.0


@dataclass
class EigenResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    stats: SolveStats


def _start_vector(n: int, rng: np.random.Generator, deflate_ones: bool) -> np.ndarray:
    v = rng.uniform(-1.0, 1.0, n)
    if deflate_ones:
        v -= v.mean()
    return v / np.linalg.norm(v)


def _fresh_direction(V: np.ndarray, rng: np.random.Generator) -> np.ndarray | None:
    """Random unit vector orthogonal to the columns of ``V`` (``None`` if V spans R^n)."""
    n, j = V.shape
    if j >= n:
        return None
    for _ in range(5):
        w = rng.uniform(-1.0, 1.0, n)
        for _ in range(2):
            w -= V @ (V.T @ w)
        nw = np.linalg.norm(w)
        if nw > 1e-8:
            return w / nw
    return None


def _pick(values: np.ndarray, count: int, which: str) -> np.ndarray:
    """Indices of the ``count`` values at the wanted end, best first."""
    key = np.real(values)
    order = np.argsort(-key if which == "largest" else key, kind="stable")
    return order[:count]


def solve(req: EigenRequest) -> EigenResult:
    A = req.operator
    n = A.shape[0]
    k, p = req.k, req.p
    symmetric = getattr(A, "symmetric", True)
    rng = np.random.default_rng(req.seed)
    t0 = time.perf_counter()

    V = np.zeros((n, p + 1))
    H = np.zeros((p + 1, p))
    V[:, 0] = _start_vector(n, rng, req.deflate_ones)
    m = 0
    stats = SolveStats()
    anorm = 0.0

    while True:
        for j in range(m, p):
            w = A.matvec(V[:, j])
            stats.matvecs += 1
            Vj = V[:, : j + 1]
            h = Vj.T @ w
            w -= Vj @ h
            h2 = Vj.T @ w
            w -= Vj @ h2
            H[: j + 1, j] = h + h2
            beta = np.linalg.norm(w)
            scale = max(anorm, np.abs(H[: j + 1, j]).max(), 1e-300)
            if beta > 1e-12 * scale:
                H[j + 1, j] = beta
                V[:, j + 1] = w / beta
            else:
                # invariant subspace: continue in a fresh direction with zero coupling
                H[j + 1, j] = 0.0
                fresh = _fresh_direction(V[:, : j + 1], rng)
                V[:, j + 1] = 0.0 if fresh is None else fresh

        if symmetric:
            T = np.triu(H[:p, :p])
            T = T + np.triu(T, 1).T
            theta, S = np.linalg.eigh(T)
        else:
            T = H[:p, :p]
            theta, S = np.linalg.eig(T)
            S = S / np.linalg.norm(S, axis=0)
        e = H[p, :p].copy()
        resid = np.abs(e @ S)
        anorm = max(anorm, float(np.abs(theta).max()))

        want = _pick(theta, k, req.which)
        max_res = float(resid[want].max())
        stats.residual_history.append(max_res)
        stats.ritz_history.append(np.real(theta[want]).copy())
        done = bool(np.all(resid[want] <= req.tol * anorm))

        if done or stats.restarts >= req.max_restarts:
            vals = theta[want]
            vecs = V[:, :p] @ S[:, want]
            if not symmetric:
                stats.max_imag = float(np.abs(np.imag(vals)).max())
                vals = np.real(vals)
                vecs = np.real(vecs)
                vecs = vecs / np.linalg.norm(vecs, axis=0)
            stats.residuals = resid[want]
            stats.anorm = anorm
            stats.converged = done
            stats.wall_time = time.perf_counter() - t0
            result = EigenResult(np.asarray(vals, dtype=np.float64), vecs, stats)
            if not done:
                raise EigenConvergenceError(
                    f"no convergence after {stats.restarts} restarts "
                    f"(max residual {max_res:.3e}, target {req.tol * anorm:.3e})",
                    result,
                )
            return result

        keep = min(p - 1, k + (p - k) // 2)
        if symmetric:
            sel = _pick(theta, keep, req.which)
            Y = S[:, sel]
            R = np.diag(theta[sel])
        else:
            Y, R, keep = _ordered_schur(T, theta, keep, req.which)
        V[:, :keep] = V[:, :p] @ Y
        V[:, keep] = V[:, p]
        H[:] = 0.0
        H[:keep, :keep] = R
        H[keep, :keep] = e @ Y
        m = keep
        stats.restarts += 1


def _ordered_schur(T: np.ndarray, theta: np.ndarray, keep: int, which: str):
    """Real Schur basis whose leading block holds the ``keep`` wanted Ritz values."""
    order = _pick(theta, len(theta), which)
    chosen = set(order[:keep].tolist())
    # keep conjugate pairs together
    for i in list(chosen):
        if abs(theta[i].imag) > 0:
            partner = np.argmin(np.abs(theta - np.conj(theta[i])) + (np.arange(len(theta)) == i))
            chosen.add(int(partner))
    picked = theta[sorted(chosen)]
    tol = 1e-10 * max(1.0, np.abs(theta).max())

    def select(re, im):
        return bool(np.any(np.abs(picked - (re + 1j * im)) <= tol))

    R, Z, sdim = sla.schur(T, output="real", sort=select)
    sdim = max(int(sdim), 1)
    return Z[:, :sdim], R[:sdim, :sdim], sdim


def dense_spectrum(operator) -> np.ndarray:
    """Dense matrix of a matrix-free operator (n applies; tests only)."""
    return operator.to_dense() if hasattr(operator, "to_dense") else operator.matvec(np.eye(operator.shape[0]))


@dataclass
class GapReport:
    which: str
    k: int
    eigenvalues: np.ndarray
    gap: float
    relative_gap: float
    restarts: int
    matvecs: int
    wall_time: float


def eigen_gap_report(operator, k: int, which: str = "largest", **solve_kwargs) -> GapReport:
    """Gap between the k-th and (k+1)-th extreme eigenvalues from a (k+1)-pair solve.

    The relative gap divides by the solver's spectral-norm estimate, the same
    scale its stopping test is measured against.
    """
    if k + 1 > operator.shape[0]:
        raise ValueError("need k + 1 <= n")
    req = EigenRequest(operator, k + 1, which=which, **solve_kwargs)
    res = solve(req)
    lam = res.eigenvalues
    gap = lam[k - 1] - lam[k] if which == "largest" else lam[k] - lam[k - 1]
    scale = float(res.stats.anorm)
    rel = gap / scale if scale > 0 else 0.0
    return GapReport(which, k, lam, float(gap), float(rel), res.stats.restarts, res.stats.matvecs, res.stats.wall_time)
