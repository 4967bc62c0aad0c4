import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import cut_by_enumeration
from qaoabatch.errors import CapacityError, ParameterError
from qaoabatch.graph import (
    Graph,
    circulant_graph,
    complement,
    complete_graph,
    cut_size,
    generate,
    gnp_graph,
    max_cut_bruteforce,
    regular_graph,
    star_graph,
)


def test_circulant_cycle():
    g = circulant_graph(4, (1,))
    assert {(u, v) for u, v, _ in g.edges} == {(0, 1), (1, 2), (2, 3), (0, 3)}


def test_star():
    assert [(u, v) for u, v, _ in star_graph(5).edges] == [(0, 1), (0, 2), (0, 3), (0, 4)]


def test_regular_degrees():
    g = regular_graph(20, 4, seed=7)
    assert g.num_edges == 40
    assert set(g.degrees(weighted=False)) == {4}


@pytest.mark.parametrize("family,params", [
    ("regular", {"d": 3, "seed": 0}),  # d*n odd for n=5
    ("circulant", {"offsets": ()}),
    ("circulant", {"offsets": (3,)}),
    ("gnp", {"p": 1.5, "seed": 0}),
    ("nope", {}),
])
def test_bad_family_parameters(family, params):
    with pytest.raises(ParameterError):
        generate(family, 5, **params)


def test_graph_rejects_bad_edges():
    for edges in [((0, 0),), ((0, 3),), ((0, 1), (1, 0)), ((0, 1, float("nan")),)]:
        with pytest.raises(ParameterError):
            Graph(3, edges)


def test_cut_examples():
    assert cut_size(complete_graph(3), (0, 1, 1)) == 2
    assert cut_size(circulant_graph(4, (1,)), (0, 1, 0, 1)) == 4
    assert cut_size(gnp_graph(8, 0.5, 3), (0,) * 8) == 0


def test_cut_length_mismatch():
    with pytest.raises(ParameterError):
        cut_size(complete_graph(3), (0, 1))


def test_bruteforce_small():
    assert max_cut_bruteforce(complete_graph(3))[0] == 2
    assert max_cut_bruteforce(circulant_graph(4, (1,)))[0] == 4


def test_bruteforce_matches_enumeration():
    g = gnp_graph(10, 0.5, 1)
    value, bits = max_cut_bruteforce(g)
    assert value == cut_by_enumeration(g)
    assert cut_size(g, bits) == value
    assert bits[0] == 0


def test_bruteforce_tie_break_lowest():
    # every alternating 4-cycle split ties; lowest value with bit 0 = 0 is 0101
    assert max_cut_bruteforce(circulant_graph(4, (1,)))[1] == (0, 1, 0, 1)


def test_bruteforce_cap():
    with pytest.raises(CapacityError):
        max_cut_bruteforce(circulant_graph(25, (1,)))


def test_generators_reproducible():
    for fam, params in [("gnp", {"p": 0.3}), ("regular", {"d": 4}), ("bipartite", {"p": 0.4})]:
        assert generate(fam, 16, seed=5, **params) == generate(fam, 16, seed=5, **params)


def test_json_round_trip(tmp_path):
    g = Graph(4, ((0, 1, 2.5), (2, 3)))
    g.save(tmp_path / "g.json")
    assert Graph.load(tmp_path / "g.json") == g


graphs = st.integers(2, 9).flatmap(
    lambda n: st.tuples(st.just(n), st.floats(0.1, 1.0), st.integers(0, 2**31 - 1))
)


@settings(max_examples=50, deadline=None)
@given(graphs, st.data())
def test_cut_properties(spec, data):
    n, p, seed = spec
    g = gnp_graph(n, p, seed)
    a = data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    c = cut_size(g, a)
    assert c == cut_size(g, complement(a))
    assert 0 <= c <= g.total_weight()
    assert max_cut_bruteforce(g)[0] >= c
