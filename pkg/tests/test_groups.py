import json

import numpy as np
import pytest

from cayleyltc import groups
from cayleyltc.groups import (
    GeneratorSet,
    cayley_graph,
    cyclic_group,
    lps_generators,
    psl2,
    schreier_graph,
    symmetric_subset,
)


def test_cyclic_basics():
    g = cyclic_group(5)
    assert g.order == 5
    assert g.inv(2) == 3
    g2 = cyclic_group(2)
    assert all(g2.inv(i) == i for i in range(2))
    with pytest.raises(ValueError):
        cyclic_group(1)


def test_cyclic_element_order():
    g = cyclic_group(12)
    assert g.element_order(5) == 12
    assert g.element_order(4) == 3


def test_cyclic_axioms():
    cyclic_group(12).check_axioms()


@pytest.mark.parametrize("q,order", [(3, 12), (5, 60), (13, 1092)])
def test_psl2_order(q, order):
    assert psl2(q).order == q * (q * q - 1) // 2 == order


def test_psl2_41_order_formula():
    g = psl2(41)
    assert g.order == 34440 == 41 * 1680 // 2


def test_psl2_rejects_bad_q():
    with pytest.raises(ValueError):
        psl2(9)
    with pytest.raises(ValueError):
        psl2(2)


def test_psl2_identity_and_inverse():
    g = psl2(5)
    assert np.array_equal(g.mats[0], [1, 0, 0, 1])
    g.check_axioms(samples=128)
    i = g.index_of([1, 2, 0, 1])
    j = g.inv(i)
    assert g.mul(i, j) == 0


def test_psl2_vectorized_perm_matches_scalar_mul():
    g = psl2(5)
    rng = np.random.default_rng(0)
    s = int(rng.integers(1, g.order))
    lp = g.left_perm(s)
    rp = g.right_perm(s)
    for x in rng.integers(0, g.order, size=20):
        assert lp[x] == g.mul(s, int(x))
        assert rp[x] == g.mul(int(x), s)


def test_psl2_canonical_sign_well_defined():
    g = psl2(13)
    i = g.index_of([2, 1, 1, 1])
    j = g.index_of([11, 12, 12, 12])   # the negation mod 13
    assert i == j


def test_generator_set_validation():
    g = cyclic_group(5)
    with pytest.raises(ValueError):
        GeneratorSet(g, (1,))            # not symmetric: -1 = 4 missing
    with pytest.raises(ValueError):
        GeneratorSet(g, (0, 1, 4))       # identity present
    with pytest.raises(ValueError):
        GeneratorSet(g, (1, 1, 4))       # duplicate
    s = GeneratorSet(g, (1, 4))
    assert list(s.inverse_positions) == [1, 0]


def test_lps_generators_5_41():
    s = lps_generators(5, 41)
    assert len(s) == 6
    inv = {s.group.inv(i) for i in s.indices}
    assert inv == set(s.indices)
    assert s.generates_group()


def test_lps_congruence_errors():
    with pytest.raises(ValueError):
        lps_generators(5, 13)     # 13 != 1 mod 20
    with pytest.raises(ValueError):
        lps_generators(6, 41)     # p not prime
    with pytest.raises(ValueError):
        lps_generators(3, 41)     # p != 1 mod 4


def test_lps_generators_13_53():
    s = lps_generators(13, 53)
    assert len(s) == 14
    assert s.generates_group()
    graph = cayley_graph(s.group, s)
    assert graph.is_connected()


def test_symmetric_subset():
    s = lps_generators(5, 41)
    full = symmetric_subset(s, 6)
    assert set(full.indices) == set(s.indices)
    sub = symmetric_subset(s, 4)
    assert len(sub) == 4
    assert {sub.group.inv(i) for i in sub.indices} == set(sub.indices)
    # deterministic
    assert symmetric_subset(s, 4).indices == sub.indices
    # LPS sets have no self-inverse generators, so odd sizes are unreachable
    with pytest.raises(ValueError):
        symmetric_subset(s, 3)


def test_symmetric_subset_with_involution():
    g = cyclic_group(10)
    s = GeneratorSet(g, (1, 3, 5, 7, 9))
    sub = symmetric_subset(s, 3)
    assert len(sub) == 3
    assert {g.inv(i) for i in sub.indices} == set(sub.indices)


def test_cayley_graph_cycle():
    g = cyclic_group(5)
    s = GeneratorSet(g, (1, 4))
    graph = cayley_graph(g, s, "left")
    assert graph.n_vertices == 5
    assert graph.n_edges() == 5
    assert graph.degree == 2
    assert sorted(graph.edge_pairs()) == [(0, 1), (0, 4), (1, 2), (2, 3), (3, 4)]


def test_cayley_graph_left_right_abelian_equal():
    g = cyclic_group(12)
    s = GeneratorSet(g, (1, 11))
    left = cayley_graph(g, s, "left")
    right = cayley_graph(g, s, "right")
    assert left.edge_pairs() == right.edge_pairs()


def test_cayley_graph_lps_counts():
    s = lps_generators(5, 41)
    graph = cayley_graph(s.group, s, "left")
    assert graph.n_vertices == 34440
    assert graph.n_edges() == 34440 * 6 // 2 == 103320
    assert graph.degree == 6
    assert np.all(graph.degrees() == 6)


def test_schreier_graph_cosets():
    # Z_6 cosets of <3> under the action of {1,5}: a triangle-like quotient
    g = cyclic_group(6)
    s = GeneratorSet(g, (1, 5))
    sch = schreier_graph(g, s, subgroup_generator=3, side="right")
    assert sch.n_vertices == 3
    assert len(sch.arcs) == 6
    assert sch.is_connected()


def test_graph_roundtrip():
    g = cyclic_group(7)
    s = GeneratorSet(g, (1, 6))
    graph = cayley_graph(g, s)
    text = groups.dump_graph(graph)
    loaded = groups.load_graph(text)
    assert loaded.n_vertices == graph.n_vertices
    assert loaded.edge_pairs() == graph.edge_pairs()


def test_group_manifest():
    m = json.loads(groups.group_manifest_json(psl2(5)))
    assert m == {"kind": "psl2", "parameters": {"q": 5}, "order": 60}
