"""Protected groups, the fairness constraint matrix and balance metrics."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np


class FairnessError(ValueError):
    pass


class EmptyClusterWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class GroupPartition:
    """Assignment of every vertex to one of ``h`` protected groups.

    ``group_of`` must already use the labels ``0..h-1``; use
    :meth:`from_labels` to remap arbitrary labels.
    """

    group_of: np.ndarray
    h: int = field(default=0)
    group_sizes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        g = np.asarray(self.group_of)
        if g.ndim != 1 or g.size == 0:
            raise FairnessError("group_of must be a non-empty 1-d array")
        if not np.issubdtype(g.dtype, np.integer):
            if np.any(g != np.floor(g)):
                raise FairnessError("group labels must be integers")
        g = g.astype(np.int64)
        h = int(self.h) if self.h else int(g.max()) + 1
        if g.min() < 0 or g.max() >= h:
            raise FairnessError(f"group labels must lie in [0, {h})")
        if h < 2:
            raise FairnessError(f"need at least 2 protected groups, got h={h}")
        sizes = np.bincount(g, minlength=h)
        if np.any(sizes == 0):
            raise FairnessError(f"empty protected group(s): {np.flatnonzero(sizes == 0).tolist()}")
        object.__setattr__(self, "group_of", g)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "group_sizes", sizes)

    @classmethod
    def from_labels(cls, labels) -> "GroupPartition":
        """Remap arbitrary hashable-by-numpy labels to ``0..h-1`` (sorted order)."""
        _, inv = np.unique(np.asarray(labels), return_inverse=True)
        return cls(inv.ravel())

    @property
    def n(self) -> int:
        return self.group_of.size

    def indicators(self) -> np.ndarray:
        """Dense ``n x h`` 0/1 matrix whose columns are the group indicators."""
        out = np.zeros((self.n, self.h))
        out[np.arange(self.n), self.group_of] = 1.0
        return out


@dataclass(frozen=True, eq=False)
class ConstraintMatrix:
    """``F = [g_0 - g_1, ..., g_0 - g_{h-1}]`` with ``g_s = f^(s) / |V_s|``.

    Group 0 is the reference, so for two equal groups the single column is
    ``+1/|V_0|`` on group 0 and ``-1/|V_1|`` on group 1.
    """

    F: np.ndarray
    reference: int = 0

    @property
    def n(self) -> int:
        return self.F.shape[0]

    @property
    def n_constraints(self) -> int:
        return self.F.shape[1]


def build_constraint_matrix(gp: GroupPartition) -> ConstraintMatrix:
    inv = 1.0 / gp.group_sizes
    g0 = np.where(gp.group_of == 0, inv[0], 0.0)
    F = np.empty((gp.n, gp.h - 1))
    for s in range(1, gp.h):
        F[:, s - 1] = g0 - np.where(gp.group_of == s, inv[s], 0.0)
    return ConstraintMatrix(F)


def _counts(assignment: np.ndarray, gp: GroupPartition, k: int) -> np.ndarray:
    a = np.asarray(assignment, dtype=np.int64)
    if a.shape != gp.group_of.shape:
        raise FairnessError(f"assignment has {a.size} entries, partition has {gp.n}")
    if a.size and (a.min() < 0 or a.max() >= k):
        raise FairnessError(f"cluster labels must lie in [0, {k})")
    counts = np.zeros((k, gp.h), dtype=np.int64)
    np.add.at(counts, (a, gp.group_of), 1)
    return counts


def _balance_from_counts(row: np.ndarray) -> float:
    # min over ordered pairs s != s' of c_s / c_s' is min(c) / max(c)
    if row.min() == 0:
        return 0.0
    return float(row.min() / row.max())


def cluster_balance(assignment, gp: GroupPartition, cluster: int) -> float:
    """Balance of one cluster; 0 when a group is missing from it.

    An empty cluster also scores 0 and raises an :class:`EmptyClusterWarning`.
    """
    a = np.asarray(assignment, dtype=np.int64)
    k = max(int(a.max()) + 1 if a.size else 0, cluster + 1)
    row = _counts(a, gp, k)[cluster]
    if row.sum() == 0:
        warnings.warn(f"cluster {cluster} is empty; balance set to 0", EmptyClusterWarning, stacklevel=2)
        return 0.0
    return _balance_from_counts(row)


def cluster_balances(assignment, gp: GroupPartition, k: int) -> tuple[np.ndarray, bool]:
    """Per-cluster balances and a flag telling whether any cluster was empty."""
    if k <= 0:
        raise FairnessError(f"k must be positive, got {k}")
    counts = _counts(assignment, gp, k)
    empty = counts.sum(axis=1) == 0
    bal = np.array([_balance_from_counts(r) for r in counts])
    return bal, bool(empty.any())


def average_balance(assignment, gp: GroupPartition, k: int) -> float:
    bal, _ = cluster_balances(assignment, gp, k)
    return float(bal.mean())


def constraint_residual(F, H) -> float:
    """``max |F^T H|`` divided by the largest column norm of ``H``."""
    Fm = F.F if isinstance(F, ConstraintMatrix) else np.asarray(F)
    H = np.asarray(H, dtype=np.float64)
    if H.ndim == 1:
        H = H[:, None]
    if Fm.shape[0] != H.shape[0]:
        raise FairnessError(f"dimension mismatch: F has {Fm.shape[0]} rows, H has {H.shape[0]}")
    scale = float(np.linalg.norm(H, axis=0).max()) if H.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(np.abs(Fm.T @ H).max() / scale)
