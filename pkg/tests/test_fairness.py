import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_groups
from fairsmw.fairness import (
    EmptyClusterWarning,
    FairnessError,
    GroupPartition,
    average_balance,
    build_constraint_matrix,
    cluster_balance,
    cluster_balances,
    constraint_residual,
)

partitions = st.builds(
    lambda n, h, seed: random_groups(np.random.default_rng(seed), n, h),
    st.integers(6, 60), st.integers(2, 5), st.integers(0, 2**31 - 1),
)


def test_two_equal_groups_column():
    F = build_constraint_matrix(GroupPartition(np.array([0, 0, 1, 1]))).F
    np.testing.assert_allclose(F[:, 0], [0.5, 0.5, -0.5, -0.5])
    figure = np.array([-0.5, -0.5, 0.5, 0.5])
    # same line as the reference-flipped vector
    assert abs(abs(F[:, 0] @ figure) - 1.0) < 1e-15


def test_singleton_groups():
    F = build_constraint_matrix(GroupPartition(np.array([0, 1]))).F
    np.testing.assert_allclose(F[:, 0], [1, -1])


def test_three_groups_rank_and_sums():
    gp = GroupPartition(np.array([0, 1, 1, 2, 2, 2]))
    F = build_constraint_matrix(gp).F
    assert F.shape == (6, 2)
    assert np.linalg.matrix_rank(F) == 2
    np.testing.assert_allclose(F.sum(axis=0), 0, atol=1e-15)


@pytest.mark.parametrize("labels, h", [([0, 0, 0], 0), ([0, 2, 2], 3), ([0, 1, 3], 3), ([], 0)])
def test_invalid_partitions(labels, h):
    with pytest.raises(FairnessError):
        GroupPartition(np.array(labels, dtype=int), h)


def test_from_labels_remaps():
    gp = GroupPartition.from_labels(np.array(["m", "f", "f", "x"]))
    np.testing.assert_array_equal(gp.group_of, [1, 0, 0, 2])
    np.testing.assert_array_equal(gp.group_sizes, [2, 1, 1])


def test_balance_examples():
    gp = GroupPartition(np.array([0, 0, 0, 1, 1, 1]))
    assert cluster_balance(np.zeros(6, int), gp, 0) == 1.0
    assert cluster_balance(np.array([0, 0, 0, 1, 1, 1]), gp, 0) == 0.0
    gp8 = GroupPartition(np.repeat([0, 1], 4))
    assert average_balance(np.array([0, 1, 0, 1, 0, 1, 0, 1]), gp8, 2) == 1.0
    assert average_balance(np.array([0, 0, 0, 1, 1, 1]), gp, 2) == 0.0


def test_facebook_sized_single_cluster():
    gp = GroupPartition(np.repeat([0, 1], [70, 85]))
    assert cluster_balance(np.zeros(155, int), gp, 0) == pytest.approx(70 / 85)


def test_four_cycle_fair_split(c4_groups):
    assert average_balance(np.array([0, 1, 1, 0]), c4_groups, 2) == 1.0


def test_empty_cluster_scores_zero_with_flag(c4_groups):
    with pytest.warns(EmptyClusterWarning):
        assert cluster_balance(np.zeros(4, int), c4_groups, 1) == 0.0
    bal, empty = cluster_balances(np.zeros(4, int), c4_groups, 2)
    assert empty and bal[1] == 0.0
    with pytest.raises(FairnessError):
        cluster_balances(np.zeros(4, int), c4_groups, 0)


def test_constraint_residual_examples():
    rng = np.random.default_rng(0)
    gp = random_groups(rng, 40, 3)
    F = build_constraint_matrix(gp).F
    assert constraint_residual(F, F) > 0
    P = np.eye(40) - F @ np.linalg.solve(F.T @ F, F.T)
    assert constraint_residual(F, P @ rng.standard_normal((40, 4))) <= 1e-10
    Q, _ = np.linalg.qr(F, mode="complete")
    assert constraint_residual(F, Q[:, 2:]) <= 1e-12
    with pytest.raises(FairnessError):
        constraint_residual(F, np.ones((39, 2)))


@given(partitions)
def test_constraint_matrix_invariants(gp):
    F = build_constraint_matrix(gp).F
    assert F.shape == (gp.n, gp.h - 1)
    assert np.abs(F.sum(axis=0)).max() <= 1e-15 * gp.n
    assert np.linalg.matrix_rank(F) == gp.h - 1
    for col in F.T:
        assert np.unique(col[col != 0]).size <= 2


@given(partitions, st.integers(0, 2**31 - 1))
def test_omitted_group_constraint_is_implied(gp, seed):
    rng = np.random.default_rng(seed)
    F = build_constraint_matrix(gp).F
    Q, _ = np.linalg.qr(F, mode="complete")
    H = Q[:, gp.h - 1 :] @ rng.standard_normal((gp.n - gp.h + 1, 3))
    ind = gp.indicators()
    F_hat = ind - ind.mean(axis=0)  # f^(s) - |V_s|/n 1 for every s, including the reference
    assert np.abs(F_hat.T @ H).max() <= 1e-10 * np.abs(H).max() * gp.n


@given(partitions, st.integers(1, 5), st.integers(0, 2**31 - 1))
def test_balance_relabel_invariance(gp, k, seed):
    rng = np.random.default_rng(seed)
    a = rng.integers(0, k, gp.n)
    base = average_balance(a, gp, k)
    perm_c = rng.permutation(k)
    perm_g = rng.permutation(gp.h)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EmptyClusterWarning)
        assert average_balance(perm_c[a], gp, k) == pytest.approx(base)
        assert average_balance(a, GroupPartition(perm_g[gp.group_of], gp.h), k) == pytest.approx(base)
    assert 0.0 <= base <= 1.0
