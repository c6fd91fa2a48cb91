"""Sorting, incremental accumulators, classification, head resolution."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import build_corpus, worked_head
from sata.sorter import (
    FIXED0,
    HeadType,
    PsumState,
    QClass,
    SeedPolicy,
    classify_queries,
    direct_distance,
    resolve_head,
    sort_keys,
    update_psums,
)


# ---------------------------------------------------------------------------
# direct_distance
# ---------------------------------------------------------------------------

def test_direct_distance_examples():
    assert direct_distance([0, 0, 0, 0], [1, 1, 0, 0]) == 0
    assert direct_distance([1, 1, 0, 0], [1, 1, 0, 0]) == 2
    assert direct_distance([2, 2, 0, 0], [0, 0, 1, 1]) == 0


def test_direct_distance_length_mismatch():
    with pytest.raises(ValueError):
        direct_distance([1, 0], [1, 0, 1])


# ---------------------------------------------------------------------------
# update_psums
# ---------------------------------------------------------------------------

def test_update_psums_first_key():
    state = update_psums(PsumState.fresh(4), 0, worked_head())
    assert [int(state.psums[k]) for k in (1, 2, 3)] == [2, 0, 0]
    assert state.sorted_keys == [0]


def test_update_psums_zero_column():
    mat = np.zeros((4, 4), dtype=np.uint8)
    mat[:, 0] = 1
    state = update_psums(PsumState.fresh(4), 2, mat)  # column 2 is all-zero
    assert (state.psums == 0).all()


def test_update_psums_pair_sorted():
    mat = worked_head()
    state = update_psums(PsumState.fresh(4), 0, mat)
    state = update_psums(state, 1, mat)
    assert [int(state.psums[k]) for k in (2, 3)] == [0, 0]


def test_update_psums_rejects_resort():
    state = update_psums(PsumState.fresh(4), 0, worked_head())
    with pytest.raises(ValueError, match="already sorted"):
        update_psums(state, 0, worked_head())


def test_psum_state_matches_materialized_dummy():
    mat = worked_head()
    state = PsumState.fresh(4)
    for key in (0, 2, 1):
        state = update_psums(state, key, mat)
        dummy = mat[:, state.sorted_keys].sum(axis=1)
        for i in range(4):
            if i not in state.sorted_keys:
                assert int(state.psums[i]) == direct_distance(dummy, mat[:, i])


# ---------------------------------------------------------------------------
# sort_keys
# ---------------------------------------------------------------------------

def test_sort_keys_worked_trace():
    result = sort_keys(worked_head())
    assert result.key_order == [0, 1, 2, 3]
    assert result.steps[0].scores == {1: 2, 2: 0, 3: 0}
    assert result.steps[1].chosen == 2  # 0-0 tie resolved to the lowest index


def test_sort_keys_all_ones_identity():
    for n in (1, 2, 5, 8):
        mat = np.ones((n, n), dtype=np.uint8)
        assert sort_keys(mat).key_order == list(range(n))


def test_sort_keys_single_token():
    assert sort_keys(np.array([[1]], dtype=np.uint8)).key_order == [0]


def test_sort_keys_seed_policies():
    mat = worked_head()
    assert sort_keys(mat, SeedPolicy("fixed", 2)).key_order[0] == 2
    r1 = sort_keys(mat, SeedPolicy("random", 11)).key_order
    r2 = sort_keys(mat, SeedPolicy("random", 11)).key_order
    assert r1 == r2
    with pytest.raises(ValueError):
        sort_keys(mat, SeedPolicy("fixed", 9))
    with pytest.raises(ValueError):
        SeedPolicy("chaotic", 0)


def test_sort_keys_rejects_empty():
    with pytest.raises(ValueError):
        sort_keys(np.zeros((0, 0), dtype=np.uint8))


@given(st.integers(2, 10), st.integers(0, 2**32))
@settings(max_examples=40, deadline=None)
def test_sort_keys_is_permutation(n, seed):
    rng = np.random.default_rng(seed)
    mat = (rng.random((n, n)) < 0.4).astype(np.uint8)
    order = sort_keys(mat).key_order
    assert sorted(order) == list(range(n))


@given(st.integers(2, 8), st.integers(0, 2**32))
@settings(max_examples=40, deadline=None)
def test_greedy_step_picks_lowest_index_maximizer(n, seed):
    rng = np.random.default_rng(seed)
    mat = (rng.random((n, n)) < 0.5).astype(np.uint8)
    result = sort_keys(mat)
    for step in result.steps:
        best = max(step.scores.values())
        assert step.scores[step.chosen] == best
        assert step.chosen == min(k for k, v in step.scores.items() if v == best)


# ---------------------------------------------------------------------------
# classify_queries
# ---------------------------------------------------------------------------

def test_classify_worked():
    classes = classify_queries(worked_head(), [0, 1, 2, 3], 2)
    assert classes == [QClass.HEAD, QClass.HEAD, QClass.TAIL, QClass.TAIL]


def test_classify_s_h_zero_all_head():
    mat = np.ones((4, 4), dtype=np.uint8)
    assert classify_queries(mat, [0, 1, 2, 3], 0) == [QClass.HEAD] * 4


def test_classify_all_ones_all_glob():
    mat = np.ones((4, 4), dtype=np.uint8)
    assert classify_queries(mat, [0, 1, 2, 3], 1) == [QClass.GLOB] * 4


def test_classify_range_check():
    with pytest.raises(ValueError):
        classify_queries(worked_head(), [0, 1, 2, 3], 3)


# ---------------------------------------------------------------------------
# resolve_head
# ---------------------------------------------------------------------------

def test_resolve_worked():
    out = resolve_head(worked_head(), theta=2, s_h_init=2, s_h_min=1)
    assert out.s_h == 2
    assert out.decrements == 0
    assert out.counts == (2, 2, 0)
    assert out.head_type is HeadType.HEAD  # tie goes to HEAD


def test_resolve_all_ones_is_glob():
    out = resolve_head(np.ones((4, 4), dtype=np.uint8), theta=2, s_h_init=2, s_h_min=1)
    assert out.head_type is HeadType.GLOB
    assert out.s_h == 1
    assert [c for _, c in out.glob_trace] == [4, 4]


def test_resolve_block_head():
    mat = np.zeros((8, 8), dtype=np.uint8)
    mat[:4, :4] = 1
    mat[4:, 4:] = 1
    out = resolve_head(mat, theta=4, s_h_init=4, s_h_min=1)
    assert out.s_h == 4
    assert out.decrements == 0
    assert out.counts == (4, 4, 0)


def test_resolve_parameter_checks():
    with pytest.raises(ValueError):
        resolve_head(worked_head(), theta=-1, s_h_init=2, s_h_min=1)
    with pytest.raises(ValueError):
        resolve_head(worked_head(), theta=2, s_h_init=3, s_h_min=1)
    with pytest.raises(ValueError):
        resolve_head(worked_head(), theta=2, s_h_init=1, s_h_min=2)


def test_resolve_glob_monotonic_and_bounded():
    for mask in build_corpus(30, seed=909):
        mat = mask.heads[0]
        n = mat.shape[1]
        s_h_init = n // 2
        s_h_min = min(1, s_h_init)
        out = resolve_head(mat, theta=n // 2, s_h_init=s_h_init, s_h_min=s_h_min)
        assert len(out.glob_trace) <= s_h_init - s_h_min + 1
        order = out.key_order
        prev_glob = None
        for s_h, count in out.glob_trace:
            classes = classify_queries(mat, order, s_h)
            glob = {q for q, c in enumerate(classes) if c is QClass.GLOB}
            assert len(glob) == count
            if prev_glob is not None:
                assert glob <= prev_glob
            prev_glob = glob
