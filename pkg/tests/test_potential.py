"""Capacity, Green values, monopoles, and classification."""

import numpy as np
import pytest

import graphpotential as gp
from graphpotential import errors, forms
from graphpotential.potential import (
    capacity_flux,
    capacity_sequence,
    classify,
    equilibrium_potential,
    green_alpha_sweep,
    green_estimate,
    monopole_solve,
)


def series_capacity(step_weights):
    """Series-resistance reduction for a single escape path."""
    return 1.0 / sum(1.0 / w for w in step_weights)


def tree_capacity(k, levels):
    """Parallel-series reduction for the k-ary tree, root to depth `levels`."""
    r = 1.0 / k
    for _ in range(levels - 1):
        r = (1.0 + r) / k
    return 1.0 / r


def test_z1_capacity_closed_form():
    z = gp.lattice(1)
    ex = gp.exhaust(z, (0,), [1, 2, 5, 10, 50])
    rep = capacity_sequence(z, (0,), ex)
    for r, cap in zip(ex.radii, rep.values):
        # two parallel escape paths of r+1 unit resistors each
        oracle = 2.0 * series_capacity([1.0] * (r + 1))
        assert cap == pytest.approx(2.0 / (r + 1), abs=1e-10)
        assert cap == pytest.approx(oracle, abs=1e-10)


def test_tree_capacity_closed_form():
    t = gp.regular_tree(2)
    ex = gp.exhaust(t, 1, [1, 2, 3, 4, 8])
    rep = capacity_sequence(t, 1, ex)
    for r, cap in zip(ex.radii, rep.values):
        n = r + 1  # levels of edges between the root and the absorbed shell
        assert cap == pytest.approx(2.0**n / (2.0**n - 1.0), abs=1e-10)
        assert cap == pytest.approx(tree_capacity(2, n), abs=1e-10)


def test_birth_death_capacity_series_oracle():
    beta = 2.5
    g = gp.birth_death(beta)
    ex = gp.exhaust(g, 0, [3, 6, 12])
    rep = capacity_sequence(g, 0, ex)
    for r, cap in zip(ex.radii, rep.values):
        weights = [(n + 1.0) ** beta for n in range(r + 1)]
        assert cap == pytest.approx(series_capacity(weights), rel=1e-10)


def test_equilibrium_potential_properties():
    z2 = gp.lattice(2)
    ex = gp.exhaust(z2, (0, 0), [5])
    op = ex.operator(0)
    v, cap = equilibrium_potential(z2, op, (0, 0))
    assert v[(0, 0)] == 1.0
    assert all(-1e-12 <= val <= 1.0 + 1e-12 for val in v.values())
    vec = op.vector(v)
    assert capacity_flux(op, vec, (0, 0)) == pytest.approx(cap, abs=1e-9)
    # capacity equals the energy of the zero-extended minimizer
    assert forms.energy(z2, gp.GraphFunction(v)).value == pytest.approx(cap, rel=1e-9)


def test_equilibrium_singleton_window():
    z = gp.lattice(1)
    v, cap = equilibrium_potential(z, [(0,)], (0,))
    assert v == {(0,): 1.0}
    assert cap == 2.0


def test_equilibrium_whole_finite_graph_zero_capacity():
    g = gp.path_graph(4)
    v, cap = equilibrium_potential(g, list(g.vertices), 0)
    assert cap == pytest.approx(0.0, abs=1e-12)
    assert all(val == pytest.approx(1.0, abs=1e-10) for val in v.values())


def test_capacity_monotone_nonincreasing():
    z2 = gp.lattice(2)
    rep = capacity_sequence(z2, (0, 0), gp.exhaust(z2, (0, 0), [2, 4, 8, 16]))
    assert all(b <= a + 1e-10 for a, b in zip(rep.values, rep.values[1:]))


def test_green_z1_closed_form_and_divergence():
    z = gp.lattice(1)
    ex = gp.exhaust(z, (0,), [4, 8, 16, 32, 64, 128])
    rep = green_estimate(z, (0,), (0,), ex)
    for r, val in zip(ex.radii, rep.values):
        assert val == pytest.approx((r + 1) / 2.0, rel=1e-10)
    assert rep.verdict == "diverging"


def test_green_symmetry_with_measure():
    g = gp.birth_death(1.0, measure_spec=("pow", 1.0))
    ex = gp.exhaust(g, 0, [6])
    x, y = 1, 4
    gx = green_estimate(g, x, y, ex).values[-1]
    gy = green_estimate(g, y, x, ex).values[-1]
    assert gx * g.measure(y) == pytest.approx(gy * g.measure(x), rel=1e-10)


def test_green_duality_with_capacity():
    t = gp.regular_tree(2)
    ex = gp.exhaust(t, 1, [2, 4, 6])
    caps = capacity_sequence(t, 1, ex).values
    greens = green_estimate(t, 1, 1, ex).values
    for c, gval in zip(caps, greens):
        assert c * gval == pytest.approx(1.0, abs=1e-9)


def test_green_alpha_sweep_monotone():
    t = gp.regular_tree(2)
    ex = gp.exhaust(t, 1, [3, 6])
    rep = green_alpha_sweep(t, 1, 1, ex, alphas=(2.0, 1.0, 0.5, 0.1))
    assert all(b >= a - 1e-12 for a, b in zip(rep.values, rep.values[1:]))
    assert rep.values[-1] <= green_estimate(t, 1, 1, ex).values[-1] + 1e-9


def test_monopole_energy_identity():
    for g, root, radii in [
        (gp.lattice(1), (0,), [2, 4, 8]),
        (gp.regular_tree(2), 1, [2, 4]),
        (gp.lattice(2, measure_spec=("const", 2.0)), (0, 0), [3, 5]),
    ]:
        ex = gp.exhaust(g, root, radii)
        sols, rep = monopole_solve(g, root, ex)
        greens = green_estimate(g, root, root, ex).values
        m_root = g.measure(root)
        for sol, energy_val, gval in zip(sols, rep.values, greens):
            assert energy_val == pytest.approx(gval * m_root, rel=1e-9)
            # the window solution carries a unit source at the root
            assert forms.apply_laplacian(g, sol, root) == pytest.approx(
                1.0 / 1.0, abs=1e-8
            )


def test_monopole_energies_tree_bounded_z1_divergent():
    t = gp.regular_tree(2)
    _, rep_t = monopole_solve(t, 1, gp.exhaust(t, 1, [2, 4, 8, 12]))
    assert rep_t.values[-1] < 1.001
    z = gp.lattice(1)
    _, rep_z = monopole_solve(z, (0,), gp.exhaust(z, (0,), [8, 16, 32, 64, 128]))
    assert rep_z.verdict == "diverging"


def test_classify_z1_recurrent():
    z = gp.lattice(1)
    rep = classify(z, (0,), gp.exhaust(z, (0,), [5, 10, 20, 40, 80, 160]))
    assert rep.verdict == "recurrent"
    assert rep.notes["measure_independence"]["bitwise_identical"]


def test_classify_tree_transient():
    t = gp.regular_tree(2)
    rep = classify(t, 1, gp.exhaust(t, 1, [2, 4, 8, 12]))
    assert rep.verdict == "transient"


def test_classify_killing_term_forces_transience():
    # a strictly positive killing term keeps the capacity bounded away from 0
    z = gp.lattice(1, potential_spec=("const", 0.3))
    rep = classify(z, (0,), gp.exhaust(z, (0,), [4, 8, 16, 32]), measure_check=False)
    assert rep.verdict == "transient"
    caps = rep.evidence["capacity"].values
    assert caps[-1] > 0.3


def test_classify_never_both_thresholds():
    with pytest.raises(ValueError):
        gp.load_settings(overrides={"transience_floor": 1e-4, "recurrence_ceiling": 1e-3})


def test_classification_report_shape():
    z = gp.lattice(1)
    rep = classify(z, (0,), gp.exhaust(z, (0,), [4, 8, 16]), measure_check=False)
    d = rep.as_dict()
    assert set(d) == {"verdict", "evidence", "config", "notes"}
    assert "capacity" in d["evidence"] and "green_diagonal" in d["evidence"]
    assert d["config"]["radii"] == [4, 8, 16]


def test_green_requires_first_window():
    z = gp.lattice(1)
    ex = gp.exhaust(z, (0,), [2, 4])
    with pytest.raises(errors.DisconnectedWindow):
        green_estimate(z, (9,), (0,), ex)


def test_measure_covariance_bitwise():
    beta = 1.2
    g1 = gp.birth_death(beta)
    g2 = gp.birth_death(beta, measure_spec=("pow", 1.5))
    ex1 = gp.exhaust(g1, 0, [3, 6, 12])
    ex2 = gp.exhaust(g2, 0, [3, 6, 12])
    caps1 = capacity_sequence(g1, 0, ex1).values
    caps2 = capacity_sequence(g2, 0, ex2).values
    assert caps1 == caps2  # bitwise
    x, y = 0, 2
    gr1 = green_estimate(g1, x, y, ex1).values
    gr2 = green_estimate(g2, x, y, ex2).values
    ratio = g2.measure(x) / g1.measure(x)
    for a, b in zip(gr1, gr2):
        assert b == pytest.approx(ratio * a, rel=1e-10)
