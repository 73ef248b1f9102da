"""Stochastic block models with planted clusters and planted protected groups."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fairness import GroupPartition
from .graph import Graph, ensure_connected, from_arrays

GROUP_MODES = ("proportional", "adversarial")


@dataclass
class SbmSpec:
    """SBM with ``p_in = min(1, a q)``, ``p_out = min(1, b q)`` and ``q = (log n / n)^{2/3}``.

    ``p_in``/``p_out`` may be given explicitly to bypass the scaling (e.g. for
    dense graphs).
    """

    n: int
    k: int = 2
    h: int = 2
    a: float = 8.0
    b: float = 1.0
    group_mode: str = "proportional"
    seed: int = 0
    connectivity_fix: bool = False
    p_in: float | None = None
    p_out: float | None = None

    def __post_init__(self):
        if self.n < 2 or self.k < 1 or self.h < 2:
            raise ValueError(f"invalid sizes n={self.n}, k={self.k}, h={self.h}")
        if self.group_mode not in GROUP_MODES:
            raise ValueError(f"group_mode must be one of {GROUP_MODES}")
        if self.p_in is None and self.p_out is None and not self.a > self.b >= 0:
            raise ValueError(f"need a > b >= 0, got a={self.a}, b={self.b}")
        for p in (self.prob_in, self.prob_out):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"edge probability {p} outside [0, 1]")
        if self.group_mode == "proportional" and self.n < self.k * self.h:
            raise ValueError(f"proportional groups need n >= k*h = {self.k * self.h}")

    @property
    def q(self) -> float:
        return (math.log(self.n) / self.n) ** (2.0 / 3.0)

    @property
    def prob_in(self) -> float:
        return self.p_in if self.p_in is not None else min(1.0, self.a * self.q)

    @property
    def prob_out(self) -> float:
        return self.p_out if self.p_out is not None else min(1.0, self.b * self.q)


def cluster_sizes(n: int, k: int) -> np.ndarray:
    return np.array([n // k + (i < n % k) for i in range(k)])


def _groups(spec: SbmSpec, sizes: np.ndarray) -> np.ndarray:
    """Group labels for vertices listed cluster by cluster."""
    h = spec.h
    if spec.group_mode == "adversarial":
        # contiguous group blocks over the cluster-sorted order: clusters as pure as possible
        return (np.arange(spec.n) * h) // spec.n
    out = []
    offset = 0
    for s in sizes:
        cell = np.array([s // h + ((j - offset) % h < s % h) for j in range(h)])
        out.append(np.repeat(np.arange(h), cell))
        offset = (offset + s % h) % h
    return np.concatenate(out)


def generate(spec: SbmSpec, chunk: int = 512) -> tuple[Graph, GroupPartition, np.ndarray]:
    """Sample ``(graph, groups, planted cluster labels)``; fully determined by ``spec.seed``."""
    rng = np.random.default_rng(spec.seed)
    n, k = spec.n, spec.k
    sizes = cluster_sizes(n, k)
    block = np.repeat(np.arange(k), sizes)
    group = _groups(spec, sizes)
    P = np.full((k, k), spec.prob_out)
    np.fill_diagonal(P, spec.prob_in)

    us, vs = [], []
    for r0 in range(0, n - 1, chunk):
        r1 = min(r0 + chunk, n - 1)
        rows = np.arange(r0, r1)
        draws = rng.random((r1 - r0, n))
        hit = draws < P[block[rows]][:, block]
        hit &= np.arange(n)[None, :] > rows[:, None]
        i, j = np.nonzero(hit)
        us.append(i + r0)
        vs.append(j)
    u = np.concatenate(us) if us else np.zeros(0, dtype=np.int64)
    v = np.concatenate(vs) if vs else np.zeros(0, dtype=np.int64)

    # shuffle vertex ids so planted structure is not encoded in the ordering
    perm = rng.permutation(n)
    g = from_arrays(perm[u], perm[v], np.ones(u.size), n)
    truth = np.empty(n, dtype=np.int64)
    truth[perm] = block
    groups = np.empty(n, dtype=np.int64)
    groups[perm] = group
    if spec.connectivity_fix:
        g = ensure_connected(g, spec.seed)
    return g, GroupPartition(groups, spec.h), truth


def adversarial_balance_gap(
    n: int, k: int = 2, h: int = 2, seed: int = 0, group_mode: str = "adversarial",
    algorithms=("standard_sc", "s_fair_sc", "fair_smw_sym", "fair_smw_rw", "fair_smw_aff"),
    **spec_kw,
) -> dict:
    """Average balance of each pipeline on one SBM instance.

    In adversarial mode the protected groups coincide with the planted
    clusters, so unconstrained SC splits along group lines.
    """
    from .algorithms import run_pipeline

    spec = SbmSpec(n=n, k=k, h=h, seed=seed, group_mode=group_mode,
                   connectivity_fix=spec_kw.pop("connectivity_fix", True), **spec_kw)
    g, gp, truth = generate(spec)
    return {name: run_pipeline(name, g, gp, k, seed=seed, truth=truth).avg_balance for name in algorithms}
