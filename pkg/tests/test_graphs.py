"""Graph sources: construction, axioms, families, and the text format."""

import numpy as np
import pytest

import graphpotential as gp
from graphpotential import errors


def test_build_finite_path3_degree():
    g = gp.build_finite([(0, 1, 1.0), (1, 2, 1.0)])
    assert gp.degree(g, 1) == 2.0
    assert gp.degree(g, 0) == 1.0


def test_build_finite_potential_in_degree():
    g = gp.build_finite([(0, 1, 1.0), (1, 2, 1.0)], potential={0: 0.5})
    assert gp.degree(g, 0) == 1.5


def test_build_finite_rejects_asymmetric():
    with pytest.raises(errors.AsymmetricInput):
        gp.build_finite([(0, 1, 1.0), (1, 0, 2.0)])


def test_build_finite_accepts_consistent_reverse_pair():
    g = gp.build_finite([(0, 1, 1.5), (1, 0, 1.5)])
    assert gp.degree(g, 0) == 1.5


def test_build_finite_rejects_self_loop():
    with pytest.raises(errors.SelfLoop):
        gp.build_finite([(0, 0, 1.0)])


def test_build_finite_rejects_duplicate_and_bad_signs():
    with pytest.raises(errors.DuplicateEdge):
        gp.build_finite([(0, 1, 1.0), (0, 1, 1.0)])
    with pytest.raises(errors.NonPositiveWeight):
        gp.build_finite([(0, 1, -1.0)])
    with pytest.raises(errors.NonPositiveMeasure):
        gp.build_finite([(0, 1, 1.0)], measure={0: 0.0})


def test_isolated_vertices_from_maps():
    g = gp.build_finite([(0, 1, 1.0)], measure={7: 2.0}, potential={8: 1.0})
    assert set(g.vertices) == {0, 1, 7, 8}
    assert g.neighbors(7) == []
    assert gp.degree(g, 8) == 1.0


def test_lattice_degree_and_keys():
    g = gp.lattice(2)
    assert gp.degree(g, (0, 0)) == 4.0
    assert g.key_of((3, -2)) == "3,-2"
    assert g.vertex_of("3,-2") == (3, -2)
    with pytest.raises(errors.UnknownVertex):
        g.neighbors((0,))
    with pytest.raises(errors.UnknownVertex):
        g.vertex_of("a,b")


def test_tree_structure_and_keys():
    g = gp.regular_tree(2)
    root = g.vertex_of("root")
    nbrs = g.neighbors(root)
    assert len(nbrs) == 2  # root has k children, no parent
    child = g.vertex_of("root.1")
    assert len(g.neighbors(child)) == 3
    assert g.key_of(child) == "root.1"
    deep = g.vertex_of("root.0.1.0")
    assert g.key_of(deep) == "root.0.1.0"
    with pytest.raises(errors.UnknownVertex):
        g.vertex_of("root.2")


def test_birth_death_weights():
    g = gp.birth_death(2.0)
    assert dict(g.neighbors(0)) == {1: 1.0}
    assert dict(g.neighbors(3)) == {2: 9.0, 4: 16.0}
    assert gp.degree(g, 0) == 1.0


def test_birth_death_pow_measure():
    g = gp.birth_death(1.0, measure_spec=("pow", 2.0))
    assert g.measure(3) == 16.0
    assert g.measure(0) == 1.0


@pytest.mark.parametrize(
    "g,root",
    [
        (gp.lattice(1), (0,)),
        (gp.lattice(3), (0, 0, 0)),
        (gp.regular_tree(3), 1),
        (gp.birth_death(1.7), 0),
    ],
)
def test_symmetry_invariant_random_vertices(g, root):
    # weights must agree bitwise in both directions
    rng = np.random.default_rng(11)
    frontier = [root]
    seen = {root}
    for _ in range(200):
        x = frontier[int(rng.integers(0, len(frontier)))]
        for y, w in g.neighbors(x):
            back = dict(g.neighbors(y))
            assert x in back and back[x] == w
            if y not in seen:
                seen.add(y)
                frontier.append(y)


def test_neighbor_enumeration_deterministic():
    g = gp.birth_death(2.3)
    for n in range(50):
        assert gp.degree(g, n) == gp.degree(g, n)
        assert g.neighbors(n) == g.neighbors(n)


def test_connected_in_window():
    g = gp.path_graph(3)
    assert gp.connected_in_window(g, [0, 1, 2], 0, 2) == [0, 1, 2]
    assert gp.connected_in_window(g, [0, 2], 0, 2) is None
    z = gp.lattice(1)
    path = gp.connected_in_window(z, [(i,) for i in range(-3, 4)], (-3,), (3,))
    assert len(path) == 7


def test_contract():
    u = gp.GraphFunction({0: -1.0, 1: 2.0})
    cu = gp.contract(u, "clamp", 0.0, 1.0)
    assert cu.value(0) == 0.0 and cu.value(1) == 1.0
    au = gp.contract(gp.GraphFunction({0: -1.0}), "abs")
    assert au.value(0) == 1.0
    with pytest.raises(errors.InvalidClampRange):
        gp.contract(u, "clamp", 0.5, 1.0)


def test_graph_function_drops_zeros():
    u = gp.GraphFunction({0: 0.0, 1: 2.0})
    assert len(u) == 1
    assert u.value(0) == 0.0


def test_parse_edge_list_roundtrip():
    text = "# a path\ne 0 1 1.0\ne 1 2 1.0\nm 2 2.5\nc 0 0.25\n"
    g = gp.parse_edge_list(text)
    assert gp.degree(g, "1") == 2.0
    assert g.measure("2") == 2.5
    assert g.potential("0") == 0.25
    again = gp.parse_edge_list(gp.serialize(g, g.vertices))
    assert set(again.vertices) == set(g.vertices)
    for x in g.vertices:
        assert sorted(again.neighbors(x)) == sorted(g.neighbors(x))
        assert again.measure(x) == g.measure(x)
        assert again.potential(x) == g.potential(x)


def test_parse_errors_carry_line_numbers():
    with pytest.raises(errors.ParseError) as exc:
        gp.parse_edge_list("e 0 1 1.0\ne 1 2\n")
    assert exc.value.line == 2
    with pytest.raises(errors.NonPositiveWeight):
        gp.parse_edge_list("e 0 1 -1.0")
    with pytest.raises(errors.ParseError):
        gp.parse_edge_list("q 0 1")


def test_from_spec():
    assert gp.from_spec("lattice:2").kind == "lattice"
    assert gp.from_spec("tree:3").params["k"] == 3
    assert gp.from_spec("bd:1.5").params["beta"] == 1.5
    with pytest.raises(errors.ParseError):
        gp.from_spec("mystery:1")
