"""Window restrictions, resolvent solvers, and monotone limits."""

import numpy as np
import pytest

import graphpotential as gp
from graphpotential import errors
from graphpotential.config import DEFAULTS
from graphpotential.exhaustion import monotone_limit, solve_symmetric
from graphpotential.verification import random_finite_graph, _proper_window


def dense_restriction(g, window):
    """Independent dense assembly straight from the defining sums."""
    idx = {v: i for i, v in enumerate(window)}
    n = len(window)
    S = np.zeros((n, n))
    for x in window:
        i = idx[x]
        S[i, i] += g.potential(x)
        for y, w in g.neighbors(x):
            S[i, i] += w
            if y in idx:
                S[i, idx[y]] -= w
    return S


def test_exhaust_windows_z1():
    z = gp.lattice(1)
    ex = gp.exhaust(z, (0,), [1, 2, 3])
    assert sorted(ex.window(0)) == [(-1,), (0,), (1,)]
    assert sorted(ex.window(2)) == [(i,) for i in range(-3, 4)]
    assert set(ex.window(0)) <= set(ex.window(1)) <= set(ex.window(2))


def test_exhaust_tree_ball_size():
    t = gp.regular_tree(2)
    ex = gp.exhaust(t, 1, [3])
    assert ex.window_size(0) == 15  # 1 + 2 + 4 + 8


def test_exhaust_finite_graph_saturates():
    g = gp.path_graph(4)
    ex = gp.exhaust(g, 0, [10])
    assert sorted(ex.window(0)) == [0, 1, 2, 3]


def test_exhaust_validates_radii():
    z = gp.lattice(1)
    with pytest.raises(ValueError):
        gp.exhaust(z, (0,), [2, 2])
    with pytest.raises(ValueError):
        gp.exhaust(z, (0,), [0, 1])
    with pytest.raises(errors.UnknownVertex):
        gp.exhaust(z, (0, 0), [1])


def test_euclidean_windows_nested_and_lattice_only():
    z2 = gp.lattice(2)
    ex = gp.exhaust(z2, (0, 0), [2, 3], shape="euclidean")
    w0, w1 = set(ex.window(0)), set(ex.window(1))
    assert w0 < w1
    assert all(a * a + b * b <= 4 for a, b in w0)
    assert (2, 2) in w1 and (3, 1) not in w1  # 8 <= 9 < 10
    with pytest.raises(ValueError):
        gp.exhaust(gp.regular_tree(2), 1, [2], shape="euclidean")


def test_restrict_path3_matrix():
    g = gp.path_graph(3)
    op = gp.restrict(g, [0, 1, 2])
    expected = np.array([[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]])
    assert np.array_equal(op.sym_matrix(0.0).toarray(), expected)


def test_restrict_singleton_full_degree():
    z = gp.lattice(1)
    op = gp.restrict(z, [(0,)])
    assert op.diagonal.tolist() == [2.0]


def test_restrict_ones_detects_exterior():
    z = gp.lattice(1)
    ex = gp.exhaust(z, (0,), [3])
    op = ex.operator(0)
    image = op.apply(np.ones(op.n))
    for i, v in enumerate(op.vertices):
        expected = 1.0 if abs(v[0]) == 3 else 0.0
        assert image[i] == pytest.approx(expected, abs=1e-14)


def test_restrict_matches_dense_assembly():
    rng = np.random.default_rng(21)
    for _ in range(25):
        g = random_finite_graph(rng, 9, with_potential=True)
        window = _proper_window(rng, g)
        op = gp.restrict(g, window)
        assert np.allclose(op.sym_matrix(0.0).toarray(), dense_restriction(g, window), atol=0)


def test_m_weighted_symmetry():
    rng = np.random.default_rng(22)
    g = random_finite_graph(rng, 10, with_measure=True)
    window = list(g.vertices)[:7]
    op = gp.restrict(g, window)
    L = op.matrix.toarray()
    M = np.diag(op.m)
    assert np.allclose(M @ L, (M @ L).T, atol=1e-14)


def test_diagonal_dominance():
    rng = np.random.default_rng(23)
    g = random_finite_graph(rng, 10, with_potential=True)
    window = _proper_window(rng, g)
    op = gp.restrict(g, window)
    S = op.sym_matrix(0.0).toarray()
    offdiag = np.abs(S - np.diag(np.diag(S))).sum(axis=1)
    assert np.all(np.diag(S) >= offdiag - 1e-14)


def test_solve_resolvent_singleton_closed_form():
    z = gp.lattice(1)
    op = gp.restrict(z, [(0,)])
    for alpha in (0.0, 0.5, 2.0):
        u = gp.solve_resolvent(op, alpha, gp.GraphFunction.delta((0,)))
        assert u[0] == pytest.approx(1.0 / (2.0 + alpha), rel=1e-12)


def test_solve_resolvent_constants_fixed_point():
    rng = np.random.default_rng(24)
    g = random_finite_graph(rng, 8, with_measure=True)
    op = gp.restrict(g, list(g.vertices))
    u = gp.solve_resolvent(op, 1.0, 1.0)
    assert np.allclose(u, 1.0, atol=1e-10)


def test_solve_resolvent_singular_whole_graph():
    g = gp.path_graph(3)
    op = gp.restrict(g, [0, 1, 2])
    with pytest.raises(errors.SingularSystem):
        gp.solve_resolvent(op, 0.0, gp.GraphFunction.delta(0))


def test_solve_resolvent_alpha_zero_with_killing():
    g = gp.build_finite([(0, 1, 1.0)], potential={0: 0.5})
    op = gp.restrict(g, [0, 1])
    u = gp.solve_resolvent(op, 0.0, gp.GraphFunction.delta(0))
    assert np.allclose(op.sym_matrix(0.0) @ u, [op.m[0], 0.0], atol=1e-12)


def test_solve_matches_dense_oracle():
    rng = np.random.default_rng(25)
    for _ in range(20):
        g = random_finite_graph(rng, 10, with_measure=True, with_potential=True)
        window = _proper_window(rng, g)
        op = gp.restrict(g, window)
        f = rng.normal(size=op.n)
        alpha = float(rng.uniform(0.0, 2.0))
        S = dense_restriction(g, window) + alpha * np.diag(op.m)
        expected = np.linalg.solve(S, op.m * f)
        got = gp.solve_resolvent(op, alpha, f, tol=1e-13)
        assert np.allclose(got, expected, atol=1e-9)


def test_solve_positivity_preserving():
    rng = np.random.default_rng(26)
    for _ in range(20):
        g = random_finite_graph(rng, 9)
        window = _proper_window(rng, g)
        op = gp.restrict(g, window)
        f = rng.uniform(0.0, 1.0, size=op.n)
        u = gp.solve_resolvent(op, float(rng.uniform(0.1, 3.0)), f)
        assert np.all(u >= -1e-12)


def test_window_monotonicity_in_window_and_alpha():
    z2 = gp.lattice(2)
    ex = gp.exhaust(z2, (0, 0), [2, 4, 6])
    prev = None
    for i in range(3):
        op = ex.operator(i)
        u = gp.solve_resolvent(op, 0.7, gp.GraphFunction.delta((0, 0)))
        if prev is not None:
            small = ex.operator(i - 1)
            for j, v in enumerate(small.vertices):
                assert prev[j] <= u[op.index_of(v)] + 1e-10
        prev = u
    op = ex.operator(1)
    vals = [
        gp.solve_resolvent(op, a, gp.GraphFunction.delta((0, 0)))[op.index_of((1, 1))]
        for a in (0.1, 0.5, 1.0, 5.0)
    ]
    assert all(b <= a + 1e-10 for a, b in zip(vals, vals[1:]))


def test_resolvent_self_adjointness_m_weighted():
    rng = np.random.default_rng(27)
    g = random_finite_graph(rng, 12, with_measure=True)
    window = _proper_window(rng, g)
    op = gp.restrict(g, window)
    f, h = rng.normal(size=op.n), rng.normal(size=op.n)
    Rf = gp.solve_resolvent(op, 0.9, f, tol=1e-13)
    Rh = gp.solve_resolvent(op, 0.9, h, tol=1e-13)
    assert np.inner(Rf * op.m, h) == pytest.approx(np.inner(f * op.m, Rh), rel=1e-10, abs=1e-10)


def test_markov_bound():
    rng = np.random.default_rng(28)
    g = random_finite_graph(rng, 10)
    window = _proper_window(rng, g)
    op = gp.restrict(g, window)
    f = rng.uniform(0, 1, size=op.n)
    for alpha in (0.2, 1.0, 7.0):
        u = alpha * gp.solve_resolvent(op, alpha, f)
        assert np.all(u >= -1e-12) and np.all(u <= 1.0 + 1e-12)


def test_neumann_series_prefactor_and_singleton():
    z = gp.lattice(1)
    op = gp.restrict(z, [(0,)])
    for alpha in (0.1, 1.0, 10.0):
        u = gp.neumann_series_resolvent(op, alpha, (0,))
        assert u[0] == pytest.approx(1.0 / (2.0 + alpha), rel=1e-12)
    with pytest.raises(errors.SingularSystem):
        gp.neumann_series_resolvent(op, 0.0, (0,))


def test_neumann_series_matches_direct():
    rng = np.random.default_rng(29)
    for _ in range(30):
        g = random_finite_graph(rng, 12, with_measure=True, with_potential=True)
        window = _proper_window(rng, g)
        op = gp.restrict(g, window)
        x = window[int(rng.integers(0, len(window)))]
        alpha = float(rng.choice([0.1, 1.0, 10.0]))
        series = gp.neumann_series_resolvent(op, alpha, x, tol=1e-12)
        direct = gp.solve_resolvent(op, alpha, gp.GraphFunction.delta(x), tol=1e-13)
        assert np.max(np.abs(series - direct)) <= 1e-9


def test_perturbed_resolvent_constant_shift():
    z = gp.lattice(1)
    ex = gp.exhaust(z, (0,), [4])
    op = ex.operator(0)
    f = np.linspace(0, 1, op.n)
    left = gp.perturbed_resolvent(op, np.full(op.n, 0.7), 0.3, f)
    right = gp.solve_resolvent(op, 1.0, f)
    assert np.allclose(left, right, atol=1e-11)


def test_perturbed_resolvent_exchange_identity():
    rng = np.random.default_rng(30)
    for _ in range(20):
        g = random_finite_graph(rng, 10, with_measure=True)
        window = _proper_window(rng, g)
        op = gp.restrict(g, window)
        gv = rng.uniform(0.2, 2.0, size=op.n)
        f = rng.normal(size=op.n)
        alpha = float(rng.uniform(0.05, 2.0))
        lhs = gp.perturbed_resolvent(op, gv, alpha, f, tol=1e-13)
        rhs = gp.solve_resolvent(op, alpha, f - gv * lhs, tol=1e-13)
        assert np.max(np.abs(lhs - rhs)) <= 1e-9


def test_perturbed_resolvent_saturates_on_whole_graph():
    # (L + g)^{-1} g -> 1 as the shift vanishes, exactly here since L 1 = 0
    g = gp.path_graph(5)
    op = gp.restrict(g, list(g.vertices))
    gv = np.full(op.n, 0.4)
    for alpha in (1.0, 0.1, 0.001, 0.0):
        u = gp.perturbed_resolvent(op, gv, alpha, gv)
        assert np.all(u <= 1.0 + 1e-12)
    assert np.allclose(gp.perturbed_resolvent(op, gv, 0.0, gv), 1.0, atol=1e-11)


def test_solve_symmetric_matches_resolvent_route():
    rng = np.random.default_rng(31)
    g = random_finite_graph(rng, 10, with_measure=True)
    window = _proper_window(rng, g)
    op = gp.restrict(g, window)
    rhs = rng.normal(size=op.n)
    u1 = solve_symmetric(op, rhs, tol=1e-13)
    u2 = gp.solve_resolvent(op, 0.0, rhs / op.m, tol=1e-13)
    assert np.allclose(u1, u2, atol=1e-9)


def test_cg_path_agrees_with_direct():
    z2 = gp.lattice(2)
    ex = gp.exhaust(z2, (0, 0), [12])
    op = ex.operator(0)
    f = gp.GraphFunction.delta((0, 0))
    direct = gp.solve_resolvent(op, 0.0, f, settings=DEFAULTS)
    forced = DEFAULTS.replace(direct_threshold=10, chain_direct=False)
    op2 = ex.operator(0)
    op2._cache.clear()
    iterative = gp.solve_resolvent(op2, 0.0, f, settings=forced)
    assert np.max(np.abs(direct - iterative)) <= 1e-7


def test_monotone_limit_verdicts():
    rep = monotone_limit([1, 1.5, 1.75, 1.875], "nondecreasing", tol=0.2)
    assert rep.verdict == "converged"
    assert rep.limit == 1.875
    assert rep.achieved_tol == pytest.approx(0.125)

    rep = monotone_limit([1, 2, 4, 8], "nondecreasing", tol=1e-6, divergence_threshold=5)
    assert rep.verdict == "diverging"

    with pytest.raises(errors.NotMonotone):
        monotone_limit([1.0, 0.9], "nondecreasing", tol=0.1)

    rep = monotone_limit([3.0, 2.0, 1.5], "nonincreasing", tol=1e-9)
    assert rep.verdict == "undetermined"


def test_auto_radii_caps_window():
    z2 = gp.lattice(2)
    radii = gp.auto_radii(z2, (0, 0))
    assert radii[0] == 5 and all(b > a for a, b in zip(radii, radii[1:]))
    ex = gp.exhaust(z2, (0, 0), [radii[-1]])
    assert ex.window_size(0) <= DEFAULTS.window_cap
    fin = gp.path_graph(6)
    assert gp.auto_radii(fin, 0)[-1] <= 5
