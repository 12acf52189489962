from __future__ import annotations

from collections import deque

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lampwalk.errors import EncodingError, FamilyMismatchError, ParameterError
from lampwalk.graphs import (
    Cycle,
    HomTree,
    Lattice,
    OrientedTree,
    graph_distance,
    height,
    meet,
    neighbors,
    parse_graph,
)

FAMILIES = [Lattice(1), Lattice(2), Lattice(3), HomTree(3), HomTree(4),
            OrientedTree(2), OrientedTree(3), Cycle(2), Cycle(5)]


def bfs(g, source, radius):
    dist = {source: 0}
    queue = deque([source])
    while queue:
        v = queue.popleft()
        if dist[v] == radius:
            continue
        for w in g.neighbors(v):
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def test_lattice_origin_neighbours():
    assert neighbors(Lattice(2), (0, 0)) == [(-1, 0), (0, -1), (0, 1), (1, 0)]


def test_homtree_origin_has_one_neighbour_per_generator():
    assert neighbors(HomTree(3), ()) == [(0,), (1,), (2,)]


def test_oriented_tree_father_and_sons():
    g = OrientedTree(2)
    nb = neighbors(g, g.origin)
    assert nb == [(0, (0,)), (0, (1,)), (1, ())]
    v = (2, (1, 0))
    assert g.father(v) in g.neighbors(v)
    assert sum(height(g, w) - height(g, v) == -1 for w in g.neighbors(v)) == 1


@pytest.mark.parametrize("g", FAMILIES, ids=lambda g: f"{g.family}{g.spec()}")
def test_degree_and_unit_distance(g):
    for v in g.ball(3):
        nb = g.neighbors(v)
        assert len(nb) == len(set(nb)) == g.degree
        assert nb == sorted(nb)
        assert all(g.distance(v, w) == 1 for w in nb)


@pytest.mark.parametrize("g", FAMILIES, ids=lambda g: f"{g.family}{g.spec()}")
def test_distance_matches_bfs_on_ball(g):
    ball = g.ball(3)
    for u in ball[:12]:
        dist = bfs(g, u, 6)
        for v in ball:
            assert g.distance(u, v) == dist[v]


def test_oriented_tree_distance_through_meet():
    g = OrientedTree(3)
    x, y = (0, (2, 1)), (2, (1,))
    m = meet(g, x, y)
    assert m == (2, ())
    assert graph_distance(g, x, y) == height(g, x) + height(g, y) - 2 * height(g, m)
    assert bfs(g, x, 10)[y] == graph_distance(g, x, y)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 3), st.lists(st.integers(0, 2), max_size=3), st.integers(0, 2),
       st.lists(st.integers(0, 2), max_size=3), st.integers(0, 2))
def test_oriented_tree_metric_properties(q, d1, k1, d2, k2):
    g = OrientedTree(q)

    def canon(k, digits):
        digits = tuple(c % q for c in digits)
        if k >= 1 and digits and digits[0] == 0:
            digits = (1,) + digits[1:]
        return (k, digits)

    x, y = canon(k1, d1), canon(k2, d2)
    d = g.distance(x, y)
    assert d == g.distance(y, x)
    assert (d == 0) == (x == y)
    assert d == bfs(g, x, d + 1)[y]
    m = meet(g, x, y)
    assert meet(g, y, x) == m
    assert height(g, m) >= max(height(g, x), height(g, y)) - d


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=3, max_size=3),
       st.lists(st.integers(-5, 5), min_size=3, max_size=3),
       st.lists(st.integers(-5, 5), min_size=3, max_size=3))
def test_lattice_triangle_inequality(a, b, c):
    g = Lattice(3)
    a, b, c = tuple(a), tuple(b), tuple(c)
    assert g.distance(a, c) <= g.distance(a, b) + g.distance(b, c)


def test_height_steps_along_edges():
    g = OrientedTree(2)
    assert height(g, g.origin) == 0
    for v in g.ball(3):
        for w in g.neighbors(v):
            assert abs(height(g, w) - height(g, v)) == 1
        assert height(g, g.father(v)) == height(g, v) - 1


def test_height_on_wrong_family():
    with pytest.raises(FamilyMismatchError):
        height(Lattice(1), (0,))
    with pytest.raises(FamilyMismatchError):
        meet(HomTree(3), (), (0,))


@pytest.mark.parametrize("g, bad", [
    (Lattice(2), (0,)),
    (Lattice(2), (0, 1.5)),
    (HomTree(3), (0, 0)),
    (HomTree(3), (3,)),
    (OrientedTree(2), (1, (0,))),
    (OrientedTree(2), (0, (2,))),
    (OrientedTree(2), (-1, ())),
    (Cycle(3), (3,)),
])
def test_malformed_vertices(g, bad):
    with pytest.raises(EncodingError):
        g.neighbors(bad)


def test_bad_parameters():
    for ctor, arg in ((Lattice, 0), (HomTree, 2), (OrientedTree, 1), (Cycle, 1)):
        with pytest.raises(ParameterError):
            ctor(arg)


def test_parse_graph_and_json_round_trip():
    assert parse_graph("lattice:2") == Lattice(2)
    assert parse_graph({"family": "oriented", "q": 3}) == OrientedTree(3)
    g = OrientedTree(2)
    v = (1, (1, 0))
    assert g.from_json(g.to_json(v)) == v
    with pytest.raises(ParameterError):
        parse_graph("torus:2")
