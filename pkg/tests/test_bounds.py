from itertools import product

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from belltwist.bounds import (
    EnumerationTooLarge,
    bell_value,
    classical_bound,
    classical_value,
    dimensional_bound,
    full_quantum_dimension,
    full_quantum_value,
    initial_vectors,
    optimal_w_for_v,
    seesaw,
    tsirelson_bound,
)
from belltwist.core import BellError, strategy_value

from conftest import matrices

CHSH = np.array([[1.0, 1.0], [1.0, -1.0]])


def naive_bound(g):
    a1 = np.array(list(product((1.0, -1.0), repeat=g.shape[0])))
    a2 = np.array(list(product((1.0, -1.0), repeat=g.shape[1])))
    return float(np.max(a1 @ g @ a2.T))


def test_chsh_bound_exact():
    assert classical_bound(CHSH).value == 2.0
    assert naive_bound(CHSH) == 2.0
    assert abs(tsirelson_bound(CHSH) - 2 * np.sqrt(2)) <= 1e-12


def test_small_examples():
    # 8-case enumeration of the Gisin M=2 variant
    g2 = np.array([[1.0, -1.0], [1.0, 1.0]])
    assert classical_bound(g2).value == 2.0
    assert classical_bound(np.ones((1, 1))).value == 1.0
    assert classical_bound(-np.ones((1, 3))).value == 3.0


@given(matrices(6))
def test_matches_naive_enumeration(g):
    cb = classical_bound(g)
    assert abs(cb.value - naive_bound(g)) <= 1e-12 * max(1.0, abs(cb.value))
    assert cb.value == bell_value(g, cb.a1, cb.a2)
    assert set(np.unique(cb.a1)) <= {-1.0, 1.0} and set(np.unique(cb.a2)) <= {-1.0, 1.0}
    assert classical_value(g) == pytest.approx(cb.value, rel=1e-12)


@given(matrices(6))
def test_bound_invariants(g):
    B = classical_bound(g).value
    assert B > 0
    assert B <= tsirelson_bound(g) + 1e-9


def test_gray_code_path_matches_oracle(rng):
    g = rng.uniform(-1, 1, (15, 3))
    oracle = max(np.abs(a @ g.T).sum() for a in product((1.0, -1.0), repeat=3))
    assert classical_bound(g).value == pytest.approx(oracle, rel=1e-12)
    # 13 free signs: one more than the tabulated block, so the Gray-code walk runs
    h = rng.uniform(-1, 1, (14, 15))
    a2 = np.array(list(product((1.0, -1.0), repeat=14)))
    oracle = float(np.max(np.abs(a2 @ h).sum(axis=1)))
    assert classical_bound(h).value == pytest.approx(oracle, rel=1e-12)


def test_budget(monkeypatch):
    g = np.ones((5, 6))
    with pytest.raises(EnumerationTooLarge, match="BELL_MAX_ENUM"):
        classical_bound(g, budget=4)
    monkeypatch.setenv("BELL_MAX_ENUM", "4")
    with pytest.raises(EnumerationTooLarge):
        classical_bound(g)
    monkeypatch.setenv("BELL_MAX_ENUM", "x")
    with pytest.raises(BellError):
        classical_bound(g)


def test_transpose_symmetry(rng):
    g = rng.uniform(-1, 1, (7, 4))
    assert classical_bound(g).value == pytest.approx(classical_bound(g.T).value, rel=1e-12)


def test_best_response_and_degenerate_columns():
    g = np.array([[1.0, 0.0], [0.0, 0.0]])
    v = np.array([[1.0, 0.0], [0.0, 1.0]])
    prev = np.array([[0.0, 1.0], [0.0, 1.0]])
    w, deg = optimal_w_for_v(g, v, prev)
    assert deg.tolist() == [False, True]
    assert np.array_equal(w, [[1.0, 0.0], [0.0, 1.0]])


def test_seesaw_monotone_history(rng):
    g = rng.uniform(-1, 1, (4, 5))
    v0 = np.stack([initial_vectors(4, 3, 0, r) for r in range(3)])
    *_, history = seesaw(g, v0, record=True)
    for h in history:
        assert np.all(np.diff(h) >= -1e-12)


def test_dprime_one_equals_classical():
    g = np.array([[1.0, -1.0, -1.0], [1.0, 1.0, -1.0], [1.0, 1.0, 1.0]])
    assert dimensional_bound(g, 1, restarts=30, seed=0).value == pytest.approx(classical_bound(g).value, abs=1e-10)


@given(matrices(5), st.integers(1, 4), st.integers(0, 1000))
def test_seesaw_invariants(g, dp, seed):
    res = dimensional_bound(g, dp, restarts=3, seed=seed)
    assert res.value == pytest.approx(strategy_value(g, res.strategy), abs=1e-10)
    assert res.value <= tsirelson_bound(g) + 1e-9
    assert res.lower_bound and res.strategy.dprime == dp


def test_seesaw_reaches_chsh_quantum_value():
    res = full_quantum_value(CHSH, restarts=10, seed=0)
    assert res.value == pytest.approx(2 * np.sqrt(2), abs=1e-9)
    assert full_quantum_dimension((2, 2)) == 4
    assert full_quantum_dimension((1, 5)) == 3


def test_seesaw_seeded_and_independent_of_batch_size(rng):
    g = rng.uniform(-1, 1, (4, 4))
    a = dimensional_bound(g, 2, restarts=5, seed=9)
    b = dimensional_bound(g, 2, restarts=5, seed=9)
    assert a.value == b.value and a.strategy.v.tobytes() == b.strategy.v.tobytes()
    # restart r draws the same start whatever the batch size
    c = dimensional_bound(g, 2, restarts=8, seed=9)
    assert c.values_per_restart[:5] == a.values_per_restart


def test_seesaw_rejects_bad_arguments():
    with pytest.raises(BellError):
        dimensional_bound(CHSH, 0)
    with pytest.raises(BellError):
        dimensional_bound(CHSH, 2, restarts=0)
