"""Matrix-free operators for the fair spectral problems.

``GOperator`` is one of the shifted similarity matrices

    sym: D^{-1/2} W D^{-1/2} + 2I
    rw:  D^{-1} W + 2I
    aff: W + nI

``FairOperator`` applies ``U = G - G F (F^T G F)^{-1} F^T G`` with one
``G`` product per call. ``DeflatedOperator`` is the projected, shifted
normalized Laplacian used by the S-Fair-SC baseline.
"""
from __future__ import annotations

import threading

import numpy as np
import scipy.linalg as sla

from .fairness import ConstraintMatrix
from .graph import Graph, GraphError

VARIANTS = ("sym", "rw", "aff")
DEFAULT_DENSE_LIMIT = 3000
GRAM_COND_LIMIT = 1e12


class GramSingularError(np.linalg.LinAlgError):
    """``F^T G F`` is numerically singular, e.g. because ``G F = 0``."""


class Counter:
    """Thread-safe monotone counter."""

    def __init__(self):
        self._lock = threading.Lock()
        self._value = 0

    def add(self, k: int = 1) -> None:
        with self._lock:
            self._value += k

    def reset(self) -> None:
        with self._lock:
            self._value = 0

    @property
    def value(self) -> int:
        return self._value

    def __repr__(self):
        return f"Counter({self._value})"


def _as_float(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != n:
        raise ValueError(f"dimension mismatch: operator size {n}, input has {x.shape[0]} rows")
    return x


def _ncols(x: np.ndarray) -> int:
    return 1 if x.ndim == 1 else x.shape[1]


class GOperator:
    def __init__(self, graph: Graph, variant: str, shift: float | None = None):
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
        if variant in ("sym", "rw"):
            graph.require_positive_degrees()
        self.graph = graph
        self.variant = variant
        if shift is None:
            shift = float(graph.n) if variant == "aff" else 2.0
        self.shift = float(shift)
        self.matvecs = Counter()
        d = graph.degree
        with np.errstate(divide="ignore"):
            self._inv_sqrt_d = 1.0 / np.sqrt(d)
            self._inv_d = 1.0 / d

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    @property
    def symmetric(self) -> bool:
        return self.variant != "rw"

    def _scale(self, v: np.ndarray, x: np.ndarray) -> np.ndarray:
        return v * x if x.ndim == 1 else v[:, None] * x

    def _apply(self, x: np.ndarray, transpose: bool = False) -> np.ndarray:
        W = self.graph.W
        if self.variant == "sym":
            s = self._inv_sqrt_d
            y = self._scale(s, W @ self._scale(s, x))
        elif self.variant == "rw":
            s = self._inv_d
            # G_rw^T = W D^{-1} + 2I
            y = W @ self._scale(s, x) if transpose else self._scale(s, W @ x)
        else:
            y = W @ x
        return y + self.shift * x

    def matvec(self, x) -> np.ndarray:
        x = _as_float(x, self.n)
        self.matvecs.add(_ncols(x))
        return self._apply(x)

    def rmatvec(self, x) -> np.ndarray:
        """Transpose action ``G^T x`` (differs from ``matvec`` only for rw)."""
        x = _as_float(x, self.n)
        return self._apply(x, transpose=True)

    __matmul__ = matvec

    def norm_bound(self) -> float:
        """Cheap upper bound on the spectral scale of ``G``."""
        if self.variant == "aff":
            return float(self.graph.degree.max(initial=0.0)) + abs(self.shift)
        return 1.0 + abs(self.shift)

    def to_dense(self) -> np.ndarray:
        return self._apply(np.eye(self.n))


def make_g_operator(g: Graph, variant: str, shift: float | None = None) -> GOperator:
    """Shifted similarity operator; ``shift`` defaults to 2 (sym, rw) or n (aff)."""
    return GOperator(g, variant, shift)


class FairOperator:
    """``x -> G x - M S^{-1} (F^T G) x`` with ``M = G F`` and ``S = F^T G F``."""

    def __init__(self, gop: GOperator, F: ConstraintMatrix | np.ndarray):
        Fm = F.F if isinstance(F, ConstraintMatrix) else np.asarray(F, dtype=np.float64)
        if Fm.ndim == 1:
            Fm = Fm[:, None]
        if Fm.shape[0] != gop.n:
            raise ValueError(f"F has {Fm.shape[0]} rows, graph has {gop.n} vertices")
        if Fm.shape[1] == 0:
            raise ValueError("F has no columns; at least two protected groups are required")
        self.gop = gop
        self.F = Fm
        self.matvecs = Counter()
        self.M = gop.matvec(Fm)
        # left factor (F^T G)^T = G^T F; a separate transpose pass for rw
        self.MT = self.M if gop.symmetric else gop.rmatvec(Fm)
        self.S = Fm.T @ self.M
        self._check_gram()
        self._lu = sla.lu_factor(self.S)

    def _check_gram(self) -> None:
        sv = np.linalg.svd(self.S, compute_uv=False)
        f2 = np.linalg.norm(self.F, 2) ** 2
        floor = GRAM_COND_LIMIT ** -1 * f2 * self.gop.norm_bound()
        if sv[-1] <= floor or sv[0] > GRAM_COND_LIMIT * sv[-1]:
            cond = np.inf if sv[-1] == 0 else sv[0] / sv[-1]
            raise GramSingularError(
                "constraint Gram matrix singular: F^T G F has smallest singular value "
                f"{sv[-1]:.3e} (condition {cond:.3e}); G F vanishes on the constraint "
                "space, as for the unshifted normalized adjacency of a bipartite cycle"
            )

    @property
    def n(self) -> int:
        return self.gop.n

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    @property
    def symmetric(self) -> bool:
        return self.gop.symmetric

    @property
    def variant(self) -> str:
        return self.gop.variant

    def matvec(self, x) -> np.ndarray:
        x = _as_float(x, self.n)
        self.matvecs.add(_ncols(x))
        y = self.gop.matvec(x)
        c = sla.lu_solve(self._lu, self.MT.T @ x)
        return y - self.M @ c

    __matmul__ = matvec

    def to_dense(self) -> np.ndarray:
        G = self.gop.to_dense()
        return G - self.M @ sla.lu_solve(self._lu, self.MT.T)


def fair_smw_operator(gop: GOperator, F) -> FairOperator:
    return FairOperator(gop, F)


def apply_fair(U: FairOperator, x) -> np.ndarray:
    return U.matvec(x)


def dense_fair_matrix(G: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Dense ``G - G F (F^T G F)^{-1} F^T G`` (test oracle)."""
    F = np.asarray(F, dtype=np.float64).reshape(G.shape[0], -1)
    GF = G @ F
    return G - GF @ np.linalg.solve(F.T @ GF, F.T @ G)


def smw_limit_check(G: np.ndarray, F: np.ndarray, mu: float) -> float:
    """Frobenius distance between ``(G^{-1} + mu F F^T)^{-1}`` and its mu -> inf limit."""
    G = np.asarray(G, dtype=np.float64)
    F = np.asarray(F, dtype=np.float64).reshape(G.shape[0], -1)
    if mu <= 0:
        raise ValueError(f"mu must be positive, got {mu}")
    if not np.allclose(G, G.T, rtol=0, atol=1e-12 * np.abs(G).max()):
        raise ValueError("G must be symmetric")
    try:
        np.linalg.cholesky(G)
    except np.linalg.LinAlgError as exc:
        raise ValueError("G must be positive definite") from exc
    if np.any(np.linalg.norm(F, axis=0) == 0):
        raise ValueError("F has a zero column")
    penalized = np.linalg.inv(np.linalg.inv(G) + mu * F @ F.T)
    return float(np.linalg.norm(penalized - dense_fair_matrix(G, F), "fro"))


def orthonormalize(C: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    """Modified Gram-Schmidt with one reorthogonalisation pass."""
    C = np.array(C, dtype=np.float64, copy=True)
    if C.ndim == 1:
        C = C[:, None]
    Q = np.empty_like(C)
    for j in range(C.shape[1]):
        v = C[:, j].copy()
        norm0 = np.linalg.norm(v)
        for _ in range(2):
            for i in range(j):
                v -= (Q[:, i] @ v) * Q[:, i]
        nv = np.linalg.norm(v)
        if norm0 == 0 or nv <= rtol * norm0:
            raise np.linalg.LinAlgError(f"rank-deficient input: column {j} is dependent on earlier columns")
        Q[:, j] = v / nv
    return Q


class DeflatedOperator:
    """``x -> P L_sym P x + sigma (I - P) x`` with ``P = I - Q Q^T``.

    ``Q`` is an orthonormal basis of ``range(D^{-1/2} F)``.
    """

    def __init__(self, graph: Graph, F, sigma: float = 3.0):
        graph.require_positive_degrees()
        Fm = F.F if isinstance(F, ConstraintMatrix) else np.asarray(F, dtype=np.float64)
        if Fm.ndim == 1:
            Fm = Fm[:, None]
        if sigma <= 2.0:
            raise ValueError(f"sigma must exceed 2 (upper bound of the L_sym spectrum), got {sigma}")
        self.graph = graph
        self.sigma = float(sigma)
        self._inv_sqrt_d = 1.0 / np.sqrt(graph.degree)
        self.Q = orthonormalize(self._inv_sqrt_d[:, None] * Fm)
        self.matvecs = Counter()

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    symmetric = True
    variant = "deflated"

    def _lsym(self, x: np.ndarray) -> np.ndarray:
        s = self._inv_sqrt_d if x.ndim == 1 else self._inv_sqrt_d[:, None]
        return x - s * (self.graph.W @ (s * x))

    def matvec(self, x) -> np.ndarray:
        x = _as_float(x, self.n)
        self.matvecs.add(_ncols(x))
        qx = self.Q @ (self.Q.T @ x)
        y = self._lsym(x - qx)
        y -= self.Q @ (self.Q.T @ y)
        return y + self.sigma * qx

    __matmul__ = matvec

    def to_dense(self) -> np.ndarray:
        return self.matvec(np.eye(self.n))


def deflated_operator(g: Graph, F, sigma: float = 3.0) -> DeflatedOperator:
    return DeflatedOperator(g, F, sigma)


class ShiftedNormalizedAdjacency:
    """``2I - L_sym = I + D^{-1/2} W D^{-1/2}``, whose top eigenvectors are the bottom ones of ``L_sym``."""

    symmetric = True
    variant = "lsym"

    def __init__(self, graph: Graph):
        graph.require_positive_degrees()
        self.graph = graph
        self._inv_sqrt_d = 1.0 / np.sqrt(graph.degree)
        self.matvecs = Counter()

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    def matvec(self, x) -> np.ndarray:
        x = _as_float(x, self.n)
        self.matvecs.add(_ncols(x))
        s = self._inv_sqrt_d if x.ndim == 1 else self._inv_sqrt_d[:, None]
        return x + s * (self.graph.W @ (s * x))

    __matmul__ = matvec

    def to_dense(self) -> np.ndarray:
        return self.matvec(np.eye(self.n))


def null_space_basis(F, dense_limit: int = DEFAULT_DENSE_LIMIT) -> np.ndarray:
    """Orthonormal ``n x (n-h+1)`` basis of ``ker(F^T)`` from a complete QR of ``F``."""
    Fm = F.F if isinstance(F, ConstraintMatrix) else np.asarray(F, dtype=np.float64)
    if Fm.ndim == 1:
        Fm = Fm[:, None]
    n, r = Fm.shape
    if n > dense_limit:
        raise GraphError(f"n={n} exceeds the dense limit {dense_limit} for null-space baselines")
    if r >= n - 1:
        raise ValueError(f"{r} constraints on {n} vertices leave no non-trivial fair subspace")
    Q, R = np.linalg.qr(Fm, mode="complete")
    if np.abs(np.diag(R)).min() <= 1e-12 * np.abs(R).max():
        raise np.linalg.LinAlgError("F is rank deficient")
    return Q[:, r:]
