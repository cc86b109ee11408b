import io

import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_graph, nine_cells, two_cliques
from oracles import best_bipartition
from trustscope.scoping import (
    Scope,
    ScopeAssignment,
    label_propagation,
    scope_index,
    select_terminals,
    single_microcell_scopes,
    write_scopes,
)


@pytest.mark.parametrize("seed", range(10))
def test_edgeless_graph_gives_singletons(seed):
    g = make_graph(range(6), [])
    a = label_propagation(g, seed)
    assert a.labels == {v: v for v in range(6)}
    assert a.converged and a.iterations == 1


def test_two_cliques_match_modularity_oracle():
    g = two_cliques()
    expected = best_bipartition(g.vertices, g.edges)
    assert expected == frozenset({frozenset(range(5)), frozenset(range(5, 10))})
    hits = sum(label_propagation(g, seed).partition() == expected for seed in range(10))
    assert hits >= 9


def test_nine_cell_fixture():
    g = nine_cells()
    groups = frozenset({frozenset(range(1, 6)), frozenset(range(6, 10))})
    recovered = 0
    for seed in range(10):
        a = label_propagation(g, seed)
        if a.partition() == groups:
            recovered += 1
            assert sorted(s.terminal for s in select_terminals(a, g)) == [5, 7]
    assert recovered >= 9


def test_terminal_has_most_outward_edges():
    # scope {1, 2}: 1 links out to 3 and 4, 2 only to 3
    g = make_graph(range(1, 5), [(1, 2, 5), (1, 3, 1), (1, 4, 1), (2, 3, 1), (3, 4, 5)])
    a = ScopeAssignment({1: 1, 2: 1, 3: 3, 4: 3}, True, 1)
    by_id = {s.scope_id: s for s in select_terminals(a, g)}
    assert by_id[1].terminal == 1
    # 3 and 4 both have outward edges: 3 has {1, 2}, 4 has {1}
    assert by_id[3].terminal == 3


def test_terminal_ties_and_isolated_scope():
    g = make_graph(range(1, 4), [(1, 2, 1)])
    a = ScopeAssignment({1: 1, 2: 1, 3: 3}, True, 1)
    scopes = {s.scope_id: s for s in select_terminals(a, g)}
    assert scopes[1].terminal == 1  # no outward edges anywhere: smallest id
    assert scopes[3].terminal == 3


def test_select_terminals_requires_full_cover():
    g = make_graph(range(3), [])
    with pytest.raises(ValueError):
        select_terminals(ScopeAssignment({0: 0, 1: 1}, True, 1), g)


def test_single_microcell_scopes_equal_edgeless_propagation():
    cells = [9, 3, 5]
    g = make_graph(cells, [])
    assert single_microcell_scopes(cells) == select_terminals(label_propagation(g, 2), g)
    assert [s.members for s in single_microcell_scopes(cells)] == [frozenset({3}), frozenset({5}), frozenset({9})]


def test_scope_validation_and_index():
    with pytest.raises(ValueError):
        Scope(0, frozenset(), 0)
    with pytest.raises(ValueError):
        Scope(0, frozenset({1}), 2)
    with pytest.raises(ValueError):
        scope_index([Scope(0, frozenset({1, 2}), 1), Scope(1, frozenset({2}), 2)])


def test_scope_export():
    buf = io.StringIO()
    write_scopes([Scope(7, frozenset({7, 8}), 8), Scope(3, frozenset({3}), 3)], buf)
    assert buf.getvalue() == "3\t3\t1\n7\t7\t0\n8\t7\t1\n"


def test_extra_bridge_tends_to_merge():
    base = two_cliques()
    edges = {k: w for k, w in base.edges.items()}
    edges[(0, 9)] = 1
    bridged = type(base)(base.vertices, edges)
    merged_or_equal = sum(
        len(label_propagation(bridged, s).partition()) <= len(label_propagation(base, s).partition())
        for s in range(10)
    )
    assert merged_or_equal >= 8


graphs = st.integers(1, 12).flatmap(
    lambda n: st.tuples(
        st.just(n),
        st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1), st.integers(1, 4)), max_size=30),
    )
)


@given(graphs, st.integers(0, 1000))
@settings(max_examples=150, deadline=None)
def test_propagation_partitions_vertices(spec, seed):
    n, raw = spec
    g = make_graph(range(n), [(u, v, w) for u, v, w in raw if u != v])
    a = label_propagation(g, seed)
    parts = a.partition()
    assert frozenset().union(*parts) == g.vertices
    assert sum(len(p) for p in parts) == n
    # labels are drawn from member ids
    assert all(label in g.vertices for label in a.labels.values())
    assert label_propagation(g, seed) == a
    scopes = select_terminals(a, g)
    assert len(scope_index(scopes)) == n
