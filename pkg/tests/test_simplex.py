import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import NETLIB
from oracles import BEALE_A, BEALE_B, BEALE_C, BEALE_OPTIMUM, bland_simplex, brute_force_vertices
from tiledsimplex.engine import TiledEngine, plan
from tiledsimplex.generator import GenSpec, generate
from tiledsimplex.model import ColKind, GeneralLP, RowKind, Sense, StandardFormLP, canonicalize
from tiledsimplex.mps import read_mps
from tiledsimplex.simplex import (
    AntiCycle,
    Basis,
    PivotTooSmall,
    SolverConfig,
    Status,
    TabuState,
    Tableau,
    _lookahead_scores,
    compute_direction,
    conditional_pivot,
    lookahead_score,
    pivot_update,
    price,
    ratio_test,
    select_leaving,
    solve,
    two_phase_solve,
)


def tableau(inverse, rhs, multipliers=None, y=None, red=0.0):
    inverse = np.asarray(inverse, dtype=float)
    m = inverse.shape[0]
    t = np.zeros((m + 1, m + 2))
    t[1:, :m] = inverse
    t[1:, m] = rhs
    if multipliers is not None:
        t[0, :m] = multipliers
    if y is not None:
        t[1:, m + 1] = y
    t[0, m + 1] = red
    return Tableau(t)


def in_core(tab):
    return TiledEngine(plan(tab.m + 1, tab.m + 2))


def beale() -> StandardFormLP:
    A = np.hstack([BEALE_A, np.eye(3)])
    c = np.concatenate([BEALE_C, np.zeros(3)])
    return StandardFormLP(A, BEALE_B.copy(), c, [ColKind.STRUCTURAL] * 4 + [ColKind.SLACK] * 3)


# pricing

def test_price_single_dot_product():
    tab = tableau(np.eye(2), [0, 0], multipliers=[1, 0])
    A = np.array([[2.0, 1.0, 0.0], [1.0, 0.0, 1.0]])
    basis = Basis.from_columns([1, 2], 3)
    assert price(tab, A, np.array([1.0, 0.0, 0.0]), basis) == (0, 1.0)


def test_price_optimal_when_no_positive_reduced_cost():
    tab = tableau(np.eye(2), [0, 0], multipliers=[1, 0])
    A = np.array([[2.0, 1.0, 0.0], [1.0, 0.0, 1.0]])
    assert price(tab, A, np.array([5.0, 0.0, 0.0]), Basis.from_columns([1, 2], 3)) is None


def test_price_tie_goes_to_lower_index():
    tab = tableau(np.eye(1), [0], multipliers=[1])
    A = np.array([[3.0, 3.0, 1.0]])
    assert price(tab, A, np.zeros(3), Basis.from_columns([2], 3)) == (0, 3.0)


def test_price_skips_basic_and_disallowed_columns():
    tab = tableau(np.eye(1), [0], multipliers=[1])
    A = np.array([[5.0, 3.0, 1.0]])
    allowed = np.array([False, True, True])
    assert price(tab, A, np.zeros(3), Basis.from_columns([2], 3), allowed=allowed) == (1, 3.0)


# direction

def test_direction_identity():
    tab = tableau(np.eye(2), [0, 0])
    np.testing.assert_array_equal(compute_direction(tab, [1.0, 2.0]), [1.0, 2.0])


def test_direction_scaled():
    tab = tableau(2 * np.eye(2), [0, 0])
    np.testing.assert_array_equal(compute_direction(tab, [1.0, 0.0]), [2.0, 0.0])


def test_direction_matches_loop_matvec():
    rng = np.random.default_rng(7)
    inv, a = rng.normal(size=(5, 5)), rng.normal(size=5)
    want = [sum(inv[i, j] * a[j] for j in range(5)) for i in range(5)]
    tab = tableau(inv, np.zeros(5))
    np.testing.assert_allclose(compute_direction(tab, a), want, atol=1e-12, rtol=0)
    np.testing.assert_array_equal(tab.entering_col, compute_direction(tab, a))


# ratio test

def test_ratio_degenerate_tie():
    cands, theta = ratio_test(tableau(np.eye(2), [4, 6], y=[2, 3]))
    assert theta == 2.0 and cands.tolist() == [0, 1]


def test_ratio_excludes_nonpositive_entries():
    cands, theta = ratio_test(tableau(np.eye(3), [2, 4, 1], y=[1, 2, -1]))
    assert theta == 2.0 and cands.tolist() == [0, 1]


def test_ratio_unbounded():
    assert ratio_test(tableau(np.eye(2), [1, 1], y=[-1, -2])) is None


def test_ratio_skip_mask():
    cands, theta = ratio_test(tableau(np.eye(2), [0, 6], y=[2, 3]), skip=np.array([True, False]))
    assert cands.tolist() == [1] and theta == 2.0


# pivot

def test_pivot_example():
    tab = tableau(np.eye(2), [4, 6], y=[2, 3])
    expected = tab.copy()
    conditional_pivot(expected, 0)
    pivot_update(tab, 0, in_core(tab))
    np.testing.assert_array_equal(tab.inverse, [[0.5, 0.0], [-1.5, 1.0]])
    np.testing.assert_array_equal(tab.rhs_bar, [2.0, 0.0])
    np.testing.assert_array_equal(tab.entering_col, [1.0, 0.0])
    np.testing.assert_array_equal(tab.data, expected.data)


def test_pivot_unit_column_only_touches_row_r():
    rng = np.random.default_rng(8)
    tab = tableau(rng.normal(size=(4, 4)), rng.normal(size=4), rng.normal(size=4),
                  y=[0, 0, 1, 0], red=0.0)
    before = tab.data.copy()
    pivot_update(tab, 2, in_core(tab))
    np.testing.assert_array_equal(tab.data, before)


def test_pivot_too_small():
    tab = tableau(np.eye(2), [1, 1], y=[1e-12, 1])
    with pytest.raises(PivotTooSmall):
        pivot_update(tab, 0, in_core(tab))


def bits(a):
    # the write-skip may keep -0.0 where the oracle produces +0.0
    return (a + 0.0).tobytes()


@settings(max_examples=1000, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 32))
def test_branchless_equals_conditional(seed, m):
    rng = np.random.default_rng(seed)
    t = rng.normal(size=(m + 1, m + 2))
    t[rng.random(t.shape) < 0.1] = 0.0
    r = int(rng.integers(m))
    if abs(t[r + 1, m + 1]) < 1e-6:
        t[r + 1, m + 1] = 1.5
    a, b = Tableau(t.copy()), Tableau(t.copy())
    conditional_pivot(a, r)
    pivot_update(b, r, in_core(b))
    assert bits(a.data) == bits(b.data)


def test_branchless_equals_conditional_eight_rows():
    # m = 8: inverse 8x8 plus rhs and Y columns, objective row on top
    rng = np.random.default_rng(810)
    tab = Tableau(rng.normal(size=(9, 10)))
    ref = tab.copy()
    conditional_pivot(ref, 3)
    pivot_update(tab, 3, in_core(tab))
    assert bits(tab.data) == bits(ref.data)


# leaving-row selection

def test_singleton_candidate_untouched():
    tabu = TabuState()
    tab = tableau(np.eye(4), [1, 1, 1, 0], y=[0, 0, 0, 1])
    basis = Basis.from_columns([4, 5, 6, 7], 8)
    r = select_leaving([3], 0, tab, basis, tabu, np.zeros((4, 8)), np.zeros(8), SolverConfig())
    assert r == 3 and tabu.banned == {}


def test_banned_candidate_excluded():
    tabu = TabuState()
    basis = Basis.from_columns([4, 5], 6)
    tabu.ban(0, 4)
    tab = tableau(np.eye(2), [0, 0], y=[1, 1])
    r = select_leaving([0, 1], 0, tab, basis, tabu, np.zeros((2, 6)), np.zeros(6), SolverConfig())
    assert r == 1
    assert tabu.banned[0] == {4, 5}


def test_all_banned_falls_back_to_aspiration():
    tabu = TabuState()
    basis = Basis.from_columns([4, 5], 6)
    tabu.ban(0, 4)
    tabu.ban(0, 5)
    A = np.hstack([np.ones((2, 4)), np.eye(2)])
    tab = tableau(np.eye(2), [0, 0], y=[1, 1], red=1.0)
    r = select_leaving([0, 1], 0, tab, basis, tabu, A, np.zeros(6), SolverConfig())
    assert r in (0, 1)


def test_tabu_clears_on_strict_improvement():
    tabu = TabuState()
    tabu.observe(5.0, 1e-7)
    tabu.ban(1, 3)
    tabu.observe(5.0 - 1e-9, 1e-7)
    assert tabu.banned == {1: {3}}
    tabu.observe(4.0, 1e-7)
    assert tabu.banned == {}


def degenerate_state(seed):
    """Slack basis of a random LP with zeros in its rhs, so ratio ties are common."""
    rng = np.random.default_rng(seed)
    m, n = int(rng.integers(2, 9)), int(rng.integers(2, 9))
    A = np.hstack([rng.uniform(-1, 1, (m, n)).round(1), np.eye(m)])
    b = np.where(rng.random(m) < 0.6, 0.0, rng.uniform(0, 2, m).round(1))
    c = np.concatenate([rng.uniform(-1, 1, n).round(2), np.zeros(m)])
    basis = Basis.from_columns(np.arange(n, n + m), n + m)
    tab = Tableau.initial(b, c[basis.basic])
    return A, c, basis, tab


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_batched_lookahead_matches_scratch_pivot(seed):
    A, c, basis, tab = degenerate_state(seed)
    cfg = SolverConfig()
    entering = price(tab, A, c, basis)
    if entering is None:
        return
    k, dk = entering
    compute_direction(tab, A[:, k])
    tab.entering_red_cost = dk
    rt = ratio_test(tab)
    if rt is None:
        return
    rows = rt[0]
    batched = _lookahead_scores(rows, k, tab, basis, A, c, cfg, None, None)
    scratch = [lookahead_score(int(r), k, tab, basis, A, c, cfg) for r in rows]
    np.testing.assert_allclose(batched, scratch, rtol=1e-9, atol=1e-12)


# whole solves

def test_beale_cycles_without_anticycling():
    seen, order = set(), []

    def record(ev):
        key = tuple(sorted(ev.basis.tolist()))
        order.append(key in seen)
        seen.add(key)

    cfg = SolverConfig(anticycle=AntiCycle.NONE, opt_tol=0.0, pivot_tol=0.0, feas_tol=0.0,
                       ratio_tie_tol=0.0, max_iter=10)
    rep = two_phase_solve(beale(), cfg, record)
    assert rep.status is Status.ITERATION_LIMIT
    assert any(order)


def test_beale_terminates_with_tabu():
    ref = bland_simplex(beale().A, beale().b, beale().c)
    assert ref.status == "Optimal"
    assert ref.objective == pytest.approx(BEALE_OPTIMUM, abs=1e-12)
    assert ref.objective == pytest.approx(brute_force_vertices(beale().A, beale().b, beale().c))
    cfg = SolverConfig(anticycle=AntiCycle.TABU, opt_tol=0.0, pivot_tol=0.0, feas_tol=0.0,
                       ratio_tie_tol=0.0, max_iter=50)
    rep = two_phase_solve(beale(), cfg)
    assert rep.status is Status.OPTIMAL
    assert rep.iterations <= 50
    assert rep.objective == pytest.approx(ref.objective, abs=1e-12)


def test_contradictory_rows_infeasible():
    p = GeneralLP("inf", Sense.MINIMIZE, [RowKind.EQ, RowKind.EQ], [[1.0, 1.0], [1.0, 1.0]],
                  [1.0, 0.0], [1.0, 3.0])
    rep = solve(p)
    assert rep.status is Status.INFEASIBLE


def test_growing_variable_unbounded():
    p = GeneralLP("unb", Sense.MINIMIZE, [RowKind.LE], [[-1.0, 1.0]], [-1.0, 0.0], [1.0])
    rep = solve(p)
    assert rep.status is Status.UNBOUNDED
    assert rep.objective == -np.inf


def test_iteration_limit():
    lp = generate(GenSpec(10, 20, "D", 1))
    rep = solve(lp, SolverConfig(max_iter=2))
    assert rep.status is Status.ITERATION_LIMIT
    assert rep.iterations == 2


def test_scsd1_objective():
    rep = solve(read_mps(NETLIB / "scsd1.mps"))
    assert rep.status is Status.OPTIMAL
    assert rep.objective == pytest.approx(8.666667, rel=1e-4)


def test_redundant_row_is_frozen():
    # second row duplicates the first: one artificial cannot leave
    p = GeneralLP("red", Sense.MINIMIZE, [RowKind.EQ] * 2, [[1.0, 1.0], [1.0, 1.0]],
                  [1.0, 2.0], [2.0, 2.0])
    rep = solve(p)
    assert rep.status is Status.OPTIMAL
    assert rep.objective == pytest.approx(2.0)


def test_config_rejects_negative_tolerance():
    with pytest.raises(ValueError):
        SolverConfig(opt_tol=-1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["D", "S20", "S60"]))
def test_solve_invariants(seed, cls):
    rng = np.random.default_rng(seed)
    m, n = int(rng.integers(2, 25)), int(rng.integers(2, 35))
    std, _ = canonicalize(generate(GenSpec(m, max(m, n), cls, seed)))
    cfg = SolverConfig()
    last = {"obj": np.inf}
    events = []

    def check(ev):
        tab = Tableau(ev.tableau)
        assert tab.rhs_bar.min() >= -cfg.feas_tol
        assert len(set(ev.basis.tolist())) == len(ev.basis)
        assert ev.basis[ev.leaving_row] == ev.entering
        if ev.phase == 2:
            assert tab.objective <= last["obj"] + 1e-9 * max(1.0, abs(last["obj"]))
            if ev.theta > cfg.feas_tol and np.isfinite(last["obj"]):
                assert tab.objective < last["obj"]
            last["obj"] = tab.objective
        events.append(ev.iteration)

    rep = two_phase_solve(std, cfg, check)
    assert rep.status is Status.OPTIMAL
    assert events == list(range(1, rep.iterations + 1))
    ref = bland_simplex(std.A, std.b, std.c)
    assert rep.objective == pytest.approx(ref.objective, rel=1e-9, abs=1e-9)


def test_inverse_times_basis_is_identity():
    lp = generate(GenSpec(60, 90, "S20", 3))
    std, _ = canonicalize(lp)
    final = {}

    def keep(ev):
        final["tab"] = ev.tableau.copy()
        final["basis"] = ev.basis.copy()

    rep = two_phase_solve(std, SolverConfig(), keep)
    assert rep.status is Status.OPTIMAL
    m = std.m
    A = np.hstack([std.A, np.eye(m)])  # every row got an artificial in this family
    B = A[:, final["basis"]]
    inv = final["tab"][1:, :m]
    assert np.abs(inv @ B - np.eye(m)).max() <= 1e-6
