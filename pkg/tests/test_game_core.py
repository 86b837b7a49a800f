import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy.optimize import linprog

from zsregret.errors import DegenerateMatrix, InvalidMatrix, NonUniqueEquilibrium
from zsregret.game_core import (GameMatrix, best_response_column, best_response_row, cramer_system,
                                det_small, gap_statistics, make_strategy, solve, solve_2x2_closed_form,
                                solve_by_enumeration, swap_identity_check)

FIG = [[2 / 3, 0.0], [0.0, 1 / 3]]
MYOPIC = [[0.75, 0.25], [0.0, 1.0]]
RPS = [[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]]


def lp_value(A):
    """Maximin value by linear programming; independent of the enumeration solver."""
    A = np.asarray(A, dtype=float)
    n, m = A.shape
    # variables (x_1..x_n, v); maximize v s.t. x^T A e_j >= v, sum x = 1
    c = np.zeros(n + 1)
    c[-1] = -1.0
    A_ub = np.hstack([-A.T, np.ones((m, 1))])
    A_eq = np.hstack([np.ones((1, n)), [[0.0]]])
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(m), A_eq=A_eq, b_eq=[1.0],
                  bounds=[(0, None)] * n + [(None, None)], method="highs")
    assert res.success
    return res.x[-1], res.x[:n]


matrices = st.integers(2, 4).flatmap(lambda n: st.integers(2, 4).flatmap(
    lambda m: st.lists(st.lists(st.floats(0.0, 1.0, allow_nan=False, width=32), min_size=m, max_size=m),
                       min_size=n, max_size=n)))


# --- fixed examples -------------------------------------------------------

def test_figure_game():
    sol = solve(GameMatrix.from_unit(FIG))
    np.testing.assert_allclose(sol.x_star, [1 / 3, 2 / 3], atol=1e-12)
    np.testing.assert_allclose(sol.y_star, [1 / 3, 2 / 3], atol=1e-12)
    assert sol.value == pytest.approx(2 / 9, abs=1e-12)


def test_rps_value_zero():
    sol = solve(GameMatrix(RPS))
    np.testing.assert_allclose(sol.x_star, [1 / 3] * 3, atol=1e-12)
    np.testing.assert_allclose(sol.y_star, [1 / 3] * 3, atol=1e-12)
    assert abs(sol.value) <= 1e-12


def test_myopic_instance():
    sol = solve(GameMatrix.from_unit(MYOPIC))
    np.testing.assert_allclose(sol.x_star, [2 / 3, 1 / 3], atol=1e-12)
    np.testing.assert_allclose(sol.y_star, [0.5, 0.5], atol=1e-12)
    assert sol.value == pytest.approx(0.5, abs=1e-12)


def test_rescaled_entries_exact():
    g = GameMatrix(RPS)
    assert np.array_equal(g.rescaled, (np.array(RPS) + 1.0) / 2.0)
    assert g.rescaled.min() == 0.0 and g.rescaled.max() == 1.0


@pytest.mark.parametrize("bad", [[[0.0, 1.0]], [[2.0, 0.0], [0.0, 0.0]], [[np.nan, 0], [0, 0]], [1, 2]])
def test_invalid_matrices(bad):
    with pytest.raises(InvalidMatrix):
        GameMatrix(bad)


def test_unit_scale_rejects_negative():
    with pytest.raises(InvalidMatrix):
        GameMatrix.from_unit(RPS)


def test_make_strategy_renormalizes():
    x = make_strategy([0.2, 0.3 + 1e-10, 0.5])
    assert abs(x.sum() - 1.0) < 1e-15
    with pytest.raises(ValueError):
        make_strategy([0.5, 0.6])
    with pytest.raises(ValueError):
        make_strategy([-0.1, 1.1])


@pytest.mark.parametrize("x, col", [([1.0, 0.0], 1), ([1 / 3, 2 / 3], 0)])
def test_best_response_figure(x, col):
    assert best_response_column(GameMatrix.from_unit(FIG), x) == col


def test_best_response_myopic():
    assert best_response_column(GameMatrix.from_unit(MYOPIC), [0.5, 0.5]) == 0


def test_gap_statistics_examples():
    g = gap_statistics(GameMatrix(FIG))  # native scale: rescaling halves the gaps
    assert g.delta_min == pytest.approx(1 / 6, abs=1e-12)
    assert g.D == pytest.approx(0.5, abs=1e-12)
    # entry gaps of the unit-scale matrix are 0.5, 1, 0.75, 0.75
    g = gap_statistics(GameMatrix.from_unit(MYOPIC))
    assert g.delta_min == pytest.approx(0.5, abs=1e-12)
    assert g.D == pytest.approx(1.5, abs=1e-12)
    assert g.delta_g == np.inf
    # read on the native scale the same literal has every gap halved
    g = gap_statistics(GameMatrix(MYOPIC))
    assert g.delta_min == pytest.approx(0.25, abs=1e-12)
    assert g.D == pytest.approx(0.75, abs=1e-12)


def test_equal_rows():
    with pytest.raises(DegenerateMatrix):
        gap_statistics(GameMatrix([[0.5, 0.1], [0.5, 0.1]]))
    with pytest.raises(NonUniqueEquilibrium):
        solve(GameMatrix([[1.0, 0.0], [1.0, 0.0]]))


def test_psne_closed_form():
    sol = solve(GameMatrix.from_unit([[0.6, 0.4], [0.2, 0.1]]))
    assert sol.is_psne and sol.psne_cell == (0, 1)
    assert sol.value == pytest.approx(0.4)


def test_strict_exclusion_instance():
    A = [[0.9, -0.9, 0.9], [-0.9, 0.9, 0.9], [-0.9, -0.9, 0.0]]
    sol = solve_by_enumeration(A)
    assert sol.support_x == (0, 1) and sol.support_y == (0, 1)
    g = gap_statistics(GameMatrix(A))
    assert g.delta_g > 0


@pytest.mark.parametrize("seq, lhs", [([1, 2, 1, 2], 4), ([1, 1, 1], 0), ([2, 1], 1)])
def test_swap_identity_examples(seq, lhs):
    assert swap_identity_check(seq) == (lhs, lhs)


def test_swap_identity_rejects_labels():
    with pytest.raises(ValueError):
        swap_identity_check([1, 3])


def test_det_small_vs_numpy():
    rng = np.random.default_rng(0)
    for k in range(1, 7):
        for _ in range(20):
            M = rng.uniform(-1, 1, (k, k))
            assert det_small(M) == pytest.approx(np.linalg.det(M), abs=1e-12)


# --- properties -----------------------------------------------------------

@settings(max_examples=300, deadline=None)
@given(st.lists(st.floats(-1.0, 1.0, allow_nan=False), min_size=4, max_size=4))
def test_closed_form_matches_enumeration(entries):
    A = np.array(entries).reshape(2, 2)
    try:
        ref = solve_by_enumeration(A)
    except (NonUniqueEquilibrium, DegenerateMatrix):
        return
    closed = solve_2x2_closed_form(A)
    assert closed is not None
    np.testing.assert_allclose(closed.x_star, ref.x_star, atol=1e-12)
    np.testing.assert_allclose(closed.y_star, ref.y_star, atol=1e-12)
    assert closed.value == pytest.approx(ref.value, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(matrices)
def test_saddle_point_against_lp(rows):
    A = np.array(rows)
    try:
        sol = solve_by_enumeration(A)
    except (NonUniqueEquilibrium, DegenerateMatrix):
        return
    v, _ = lp_value(A)
    assert sol.value == pytest.approx(v, abs=1e-7)
    assert (sol.x_star @ A).min() >= sol.value - 1e-9
    assert (A @ sol.y_star).max() <= sol.value + 1e-9
    assert len(sol.support_x) == len(sol.support_y)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 5).flatmap(lambda k: st.lists(
    st.floats(0.0, 1.0, allow_nan=False), min_size=k * k, max_size=k * k)))
def test_cramer_residual(flat):
    k = int(round(len(flat) ** 0.5))
    A = np.array(flat).reshape(k, k)
    try:
        sol = solve_by_enumeration(A)
    except (NonUniqueEquilibrium, DegenerateMatrix):
        return
    assume(len(sol.support_x) == k)
    system = cramer_system(A)
    assume(abs(system.det_M) > 1e-6)
    assert system.residual() <= 1e-9


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(1, 2), min_size=1, max_size=200))
def test_swap_identity_property(seq):
    lhs, rhs = swap_identity_check(seq)
    assert lhs == rhs


@settings(max_examples=100, deadline=None)
@given(matrices, st.randoms(use_true_random=False))
def test_gap_statistics_permutation_invariant(rows, rnd):
    A = np.array(rows)
    n, m = A.shape
    try:
        base = gap_statistics(GameMatrix.from_unit(A))
    except (NonUniqueEquilibrium, DegenerateMatrix):
        return
    pr = list(range(n))
    pc = list(range(m))
    rnd.shuffle(pr)
    rnd.shuffle(pc)
    perm = gap_statistics(GameMatrix.from_unit(A[np.ix_(pr, pc)]))
    for name in ("delta_min", "delta_g", "delta_g1", "delta_g2"):
        assert getattr(perm, name) == pytest.approx(getattr(base, name), rel=1e-9, abs=1e-12)
    assert abs(perm.D) == pytest.approx(abs(base.D), rel=1e-9, abs=1e-12)
    assert sorted(pr[i] for i in perm.support_x) == list(base.support_x)
    assert sorted(pc[j] for j in perm.support_y) == list(base.support_y)


@settings(max_examples=200, deadline=None)
@given(matrices, st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=4, max_size=4))
def test_best_response_is_minimal(rows, w):
    A = np.array(rows)
    n = A.shape[0]
    x = np.array(w[:n]) + 1e-3
    x /= x.sum()
    j = best_response_column(A, x)
    pay = x @ A
    assert (pay[j] <= pay + 1e-12).all()
    i = best_response_row(A, np.full(A.shape[1], 1.0 / A.shape[1]))
    assert (A @ np.full(A.shape[1], 1.0 / A.shape[1]))[i] >= (A @ np.full(A.shape[1], 1.0 / A.shape[1])).max() - 1e-12
