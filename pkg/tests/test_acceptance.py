"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py`` (lines appear in the terminal
summary) or directly with ``python3 tests/test_acceptance.py``.
Dataset checks read ``$FAIRSMW_DATA`` (default ``data/``) and are skipped
when the networks have not been fetched.
"""
import os
import sys
import time
import warnings
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import random_graph, random_groups, subspace_angle  # noqa: E402
from fairsmw import operators as ops  # noqa: E402
from fairsmw.algorithms import ALL, FAIR, run_pipeline  # noqa: E402
from fairsmw.dense import dense_eigen  # noqa: E402
from fairsmw.eigensolve import EigenRequest, solve  # noqa: E402
from fairsmw.fairness import GroupPartition, build_constraint_matrix, constraint_residual  # noqa: E402
from fairsmw.graph import from_edge_list, laplacian_matvec  # noqa: E402
from fairsmw.sbm import SbmSpec, generate  # noqa: E402

RESULTS: dict[int, str] = {}
DATA_DIR = Path(os.environ.get("FAIRSMW_DATA", Path(__file__).resolve().parents[1] / "data"))


def report(num: int, ok: bool, detail: str) -> None:
    line = f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[num] = line
    print(line, flush=True)


# 1 ----------------------------------------------------------------------------
def test_c01_spectral_bounds():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    g_lo, g_hi, l_lo, l_hi, worst_imag = np.inf, -np.inf, np.inf, -np.inf, 0.0
    for _ in range(50):
        n = int(rng.integers(10, 201))
        g = random_graph(rng, n, p=float(rng.uniform(0.02, 0.3)))
        w_g, _ = dense_eigen(ops.make_g_operator(g, "sym").to_dense())
        w_l, _ = dense_eigen(g.normalized_laplacian_dense())
        g_lo, g_hi = min(g_lo, w_g[0]), max(g_hi, w_g[-1])
        l_lo, l_hi = min(l_lo, w_l[0]), max(l_hi, w_l[-1])
        F = build_constraint_matrix(random_groups(rng, n, int(rng.integers(2, 4))))
        w_u = np.linalg.eigvals(ops.fair_smw_operator(ops.make_g_operator(g, "rw"), F).to_dense())
        worst_imag = max(worst_imag, float(np.abs(w_u.imag).max() / np.abs(w_u).max()))
    elapsed = time.perf_counter() - t0
    ok_g = g_lo >= 1 - 1e-10 and g_hi <= 3 + 1e-10
    ok_l = l_lo >= -1e-10 and l_hi <= 2 + 1e-10
    ok_u = worst_imag <= 1e-8
    ok = ok_g and ok_l and ok_u and elapsed < 30
    report(1, ok, f"G_sym in [{g_lo:.12g}, {g_hi:.12g}] ({'ok' if ok_g else 'bad'}); "
                  f"L_sym in [{l_lo:.3g}, {l_hi:.12g}] ({'ok' if ok_l else 'bad'}); "
                  f"max |imag|/rho(U_rw) = {worst_imag:.2e} (limit 1e-8, {'ok' if ok_u else 'bad'}); {elapsed:.1f}s")
    assert ok


# 2 ----------------------------------------------------------------------------
def test_c02_smw_limit_rate():
    t0 = time.perf_counter()
    rng = np.random.default_rng(102)
    mus = np.array([1e2, 1e4, 1e6])
    slopes = []
    for i in range(10):
        A = rng.standard_normal((20, 20))
        G = A @ A.T + rng.uniform(0.5, 5) * np.eye(20)
        F = build_constraint_matrix(random_groups(rng, 20, 2 + i % 2)).F
        res = [ops.smw_limit_check(G, F, mu) for mu in mus]
        slopes.append(np.polyfit(np.log10(mus), np.log10(res), 1)[0])
    elapsed = time.perf_counter() - t0
    slopes = np.array(slopes)
    ok = bool(np.all(np.abs(slopes + 1) <= 0.1)) and elapsed < 5
    report(2, ok, f"log-log slopes in [{slopes.min():.4f}, {slopes.max():.4f}] (target -1 +- 0.1); {elapsed:.2f}s")
    assert ok


# 3 ----------------------------------------------------------------------------
def test_c03_fairness_residual():
    t0 = time.perf_counter()
    worst = 0.0
    for seed in range(20):
        h, k = 2 + seed % 2, 2 + (seed // 2) % 2
        g, gp, truth = generate(SbmSpec(n=300, k=k, h=h, seed=seed, connectivity_fix=True))
        for name in FAIR:
            worst = max(worst, run_pipeline(name, g, gp, k, seed=seed, truth=truth).constraint_residual)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-8 and elapsed < 120
    report(3, ok, f"max constraint residual {worst:.2e} over 20 instances x {len(FAIR)} fair pipelines "
                  f"(limit 1e-8); {elapsed:.1f}s")
    assert ok


# 4 ----------------------------------------------------------------------------
def test_c04_figure1_regression():
    t0 = time.perf_counter()
    g = from_edge_list([(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 0, 1)], 4)
    gp = GroupPartition(np.array([0, 0, 1, 1]))
    F = build_constraint_matrix(gp)
    try:
        ops.fair_smw_operator(ops.make_g_operator(g, "sym", shift=0.0), F)
        singular = False
    except ops.GramSingularError as exc:
        singular = "constraint Gram matrix singular" in str(exc)
    res = run_pipeline("fair_smw_sym", g, gp, 2, seed=0)
    a = res.labels
    split_ok = a[0] == a[3] and a[1] == a[2] and a[0] != a[1]
    spec = np.sort(np.linalg.eigvalsh(ops.fair_smw_operator(ops.make_g_operator(g, "sym"), F).to_dense()))[::-1]
    spec_err = float(np.abs(spec - [3, 2, 1, 0]).max())
    elapsed = time.perf_counter() - t0
    ok = singular and res.avg_balance == 1.0 and split_ok and spec_err <= 1e-10 and elapsed < 1
    report(4, ok, f"singular-Gram error {'raised' if singular else 'missing'}; balance {res.avg_balance}; "
                  f"clusters {{v1,v4}},{{v2,v3}} {'yes' if split_ok else 'no'}; spectrum err {spec_err:.1e}; "
                  f"{elapsed:.2f}s")
    assert ok


# 5 ----------------------------------------------------------------------------
def test_c05_experiment1_replica():
    t0 = time.perf_counter()
    errors = {name: [] for name in ALL}
    for seed in range(1, 6):
        g, gp, truth = generate(SbmSpec(n=1000, k=2, h=2, a=8, b=1, group_mode="proportional", seed=seed))
        for name in ALL:
            errors[name].append(run_pipeline(name, g, gp, 2, seed=seed, truth=truth).error)
    elapsed = time.perf_counter() - t0
    fair = ("s_fair_sc", "fair_smw_sym", "fair_smw_rw", "fair_smw_aff")
    worst_fair = max(max(errors[n]) for n in fair)
    spread = max(np.ptp([errors[n][i] for n in ALL]) for i in range(5))
    ok = worst_fair <= 0.01 and spread <= 0.01 and elapsed < 120
    report(5, ok, f"max fair error {worst_fair:.4f} (limit 0.01); max per-seed spread over 5 pipelines "
                  f"{spread:.4f} (limit 0.01); {elapsed:.1f}s")
    assert ok


# 6 ----------------------------------------------------------------------------
def _oracle(op, k, which):
    A = op.to_dense()
    if op.symmetric:
        w, Q = dense_eigen(A)
    else:
        # the rw operator is not symmetric, so the symmetric oracle does not apply
        w, Q = np.linalg.eig(A)
        order = np.argsort(w.real)
        w, Q = w[order].real, Q[:, order].real
    sel = slice(len(w) - k, None) if which == "largest" else slice(0, k)
    return w[sel], Q[:, sel]


def test_c06_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(106)
    worst_val = {v: 0.0 for v in ("sym", "rw", "aff", "deflated")}
    worst_ang = dict(worst_val)
    for _ in range(20):
        n = int(rng.integers(40, 301))
        g = random_graph(rng, n, p=float(rng.uniform(0.03, 0.2)))
        F = build_constraint_matrix(random_groups(rng, n, int(rng.integers(2, 4))))
        k = int(rng.integers(2, 6))
        for variant in worst_val:
            if variant == "deflated":
                op, which = ops.deflated_operator(g, F), "smallest"
            else:
                op, which = ops.fair_smw_operator(ops.make_g_operator(g, variant), F), "largest"
            res = solve(EigenRequest(op, k, which=which, tol=1e-10, seed=int(rng.integers(1 << 30))))
            w, Q = _oracle(op, k, which)
            err = np.abs(np.sort(res.eigenvalues) - np.sort(w)).max()
            if variant == "aff":
                err /= np.abs(w).max()
            worst_val[variant] = max(worst_val[variant], float(err))
            worst_ang[variant] = max(worst_ang[variant], subspace_angle(res.eigenvectors, Q))
    elapsed = time.perf_counter() - t0
    ok = max(worst_val.values()) <= 1e-8 and max(worst_ang.values()) <= 1e-6 and elapsed < 60
    detail = "; ".join(f"{v}: dlam {worst_val[v]:.1e}, angle {worst_ang[v]:.1e}" for v in worst_val)
    report(6, ok, f"{detail} (limits 1e-8 / 1e-6); {elapsed:.1f}s")
    assert ok


# 7 ----------------------------------------------------------------------------
def test_c07_restart_reduction():
    aff, sfair = [], []
    for seed in range(5):
        g, gp, truth = generate(SbmSpec(n=5000, k=2, h=2, a=8, b=1, seed=seed))
        aff.append(run_pipeline("fair_smw_aff", g, gp, 2, seed=seed, truth=truth).restarts)
        sfair.append(run_pipeline("s_fair_sc", g, gp, 2, seed=seed, truth=truth).restarts)
    wins = sum(a < s for a, s in zip(aff, sfair))
    ok = wins >= 4 and max(aff) <= 20
    report(7, ok, f"aff restarts {aff} vs s_fair_sc {sfair}: aff strictly fewer on {wins}/5 seeds "
                  f"(need 4); max aff restarts {max(aff)} (limit 20)")
    assert ok


def test_c07_sparse_regime_supplement():
    """Same comparison where the graph really is sparse (average degree about 3.5)."""
    aff, sfair = [], []
    for seed in range(5):
        g, gp, truth = generate(SbmSpec(n=5000, p_in=6 / 5000, p_out=1 / 5000, seed=seed, connectivity_fix=True))
        aff.append(run_pipeline("fair_smw_aff", g, gp, 2, seed=seed, truth=truth).restarts)
        sfair.append(run_pipeline("s_fair_sc", g, gp, 2, seed=seed, truth=truth).restarts)
    wins = sum(a < s for a, s in zip(aff, sfair))
    ok = wins >= 4 and max(aff) <= 20
    line = (f"supplement (p_in=6/n, p_out=1/n): aff restarts {aff} vs s_fair_sc {sfair}, "
            f"aff fewer on {wins}/5; {'PASS' if ok else 'FAIL'} (informational, not a criterion)")
    RESULTS[7.5] = f"             {line}"
    print(line)
    assert ok


# 8 ----------------------------------------------------------------------------
def test_c08_balance_separation():
    # the fair variants of the benchmark set; the unnormalized dense baseline is
    # reported alongside but not gated (ratio cut peels off low-degree vertices)
    t0 = time.perf_counter()
    fair = [n for n in ALL if n != "standard_sc"]
    std, fair_min, unnorm = [], [], []
    for seed in range(5):
        g, gp, truth = generate(SbmSpec(n=500, k=2, h=2, group_mode="adversarial", seed=seed, connectivity_fix=True))
        std.append(run_pipeline("standard_sc", g, gp, 2, seed=seed, truth=truth).avg_balance)
        fair_min.append(min(run_pipeline(n, g, gp, 2, seed=seed, truth=truth).avg_balance for n in fair))
        unnorm.append(run_pipeline("fair_sc_unnormalized", g, gp, 2, seed=seed).avg_balance)
    elapsed = time.perf_counter() - t0
    ok = max(std) <= 0.2 and min(fair_min) >= 0.8 and elapsed < 60
    report(8, ok, f"standard_sc balance max {max(std):.3f} (limit 0.2); weakest of s_fair_sc/fair_smw per seed "
                  f"{np.round(fair_min, 3).tolist()} (limit 0.8); unnormalized baseline "
                  f"{np.round(unnorm, 3).tolist()} (not gated); {elapsed:.1f}s")
    assert ok


# 9 ----------------------------------------------------------------------------
EXPECTED = {
    "facebooknet": dict(n=155, sizes=[70, 85]),
    "lastfm": dict(n=5576, m=19577),
    "german": dict(n=1000),
    "deezer": dict(n=28281, m=92752),
}


@pytest.mark.parametrize("name", list(EXPECTED))
def test_c09_dataset_sanity(name):
    from fairsmw.io import dataset_available, load_dataset

    if not dataset_available(name, DATA_DIR):
        msg = f"dataset {name} not found under {DATA_DIR}; run `fairsmw fetch-datasets`"
        warnings.warn(msg)
        RESULTS.setdefault(9, f"criterion  9: SKIP  {msg}")
        pytest.skip(msg)
    b = load_dataset(name, DATA_DIR)
    exp = EXPECTED[name]
    got = dict(n=b.graph.n, m=b.graph.m, sizes=sorted(b.groups.group_sizes.tolist()))
    ok = all(got[key] == val for key, val in exp.items())
    if name == "german":
        ok = ok and b.groups.h == 2
    prev = RESULTS.get(9, "")
    line_ok = ok and "FAIL" not in prev
    report(9, line_ok, (prev.split("  ", 1)[-1] + "; " if prev and "SKIP" not in prev else "")
           + f"{name}: n={got['n']} m={got['m']} sizes={got['sizes']} expected {exp}")
    assert ok


# 10 ---------------------------------------------------------------------------
def test_c10_laplacian_form_properties():
    t0 = time.perf_counter()
    rng = np.random.default_rng(110)
    worst_id, worst_ratio = 0.0, 0.0
    graphs = [random_graph(rng, int(rng.integers(5, 80))) for _ in range(50)]
    for i in range(1000):
        g = graphs[i % 50]
        W = g.to_dense()
        y = rng.standard_normal(g.n)
        q = y @ laplacian_matvec(g, y)
        pair = 0.5 * np.sum(W * (y[:, None] - y[None, :]) ** 2)
        worst_id = max(worst_id, abs(q - pair) / max(1.0, abs(pair)))
        worst_ratio = max(worst_ratio, q / (y @ (g.degree * y)))
    # A_sym F = 0 construction: the 4-cycle with groups {v1,v2},{v3,v4}
    g = from_edge_list([(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 0, 1)], 4)
    F = build_constraint_matrix(GroupPartition(np.array([0, 0, 1, 1]))).F
    G = ops.make_g_operator(g, "sym").to_dense()
    proj = np.eye(4) - F @ np.linalg.solve(F.T @ F, F.T)
    simp = float(np.abs(ops.dense_fair_matrix(G, F) - proj @ G).max())
    elapsed = time.perf_counter() - t0
    ok = worst_id <= 1e-10 and worst_ratio <= 2 + 1e-10 and simp <= 1e-12 and elapsed < 10
    report(10, ok, f"quadratic-form identity err {worst_id:.1e}; max Rayleigh ratio {worst_ratio:.6f} (<= 2); "
                   f"U simplification err {simp:.1e}; {elapsed:.2f}s")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
