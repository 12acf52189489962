"""The lamplighter graph Z_2 wr G: states, adjacency, metric and translations."""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .errors import EncodingError, FamilyMismatchError, GraphMismatchError
from .graphs import BaseGraph, Lattice

EXACT_TOUR_LIMIT = 12


@dataclass(frozen=True)
class LampConfiguration:
    """Finitely supported {0,1}-valued function on base vertices."""

    support: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if not isinstance(self.support, frozenset):
            object.__setattr__(self, "support", frozenset(self.support))

    def __call__(self, v) -> int:
        return 1 if v in self.support else 0

    def __len__(self) -> int:
        return len(self.support)

    def __iter__(self):
        return iter(self.sorted())

    def sorted(self) -> list:
        return sorted(self.support)

    def flip(self, v) -> LampConfiguration:
        return LampConfiguration(self.support ^ {v})

    @classmethod
    def delta(cls, *vertices) -> LampConfiguration:
        """Configuration with exactly the given lamps switched on."""
        return cls(frozenset(vertices))


ZERO = LampConfiguration()


@dataclass(frozen=True)
class LamplighterState:
    config: LampConfiguration
    position: object
    graph: BaseGraph

    def sort_key(self):
        return (self.position, tuple(self.config.sorted()))

    def to_json(self) -> dict:
        g = self.graph
        return {
            "position": g.to_json(self.position),
            "lamps": [g.to_json(v) for v in self.config.sorted()],
        }

    @classmethod
    def from_json(cls, graph: BaseGraph, obj: dict) -> LamplighterState:
        try:
            pos = graph.from_json(obj["position"])
            lamps = [graph.from_json(v) for v in obj["lamps"]]
        except (KeyError, TypeError) as exc:
            raise EncodingError(f"bad lamplighter state {obj!r}: {exc}") from None
        return cls(LampConfiguration(frozenset(lamps)), pos, graph)


def make_state(graph: BaseGraph, position=None, lamps: Iterable = ()) -> LamplighterState:
    """Validated constructor; ``position`` defaults to the origin."""
    pos = graph.origin if position is None else graph.validate(position)
    support = frozenset(graph.validate(v) for v in lamps)
    return LamplighterState(LampConfiguration(support), pos, graph)


def _same_graph(s: LamplighterState, t: LamplighterState) -> BaseGraph:
    if s.graph != t.graph:
        raise GraphMismatchError(f"states over different graphs: {s.graph} vs {t.graph}")
    return s.graph


def symmetric_difference(a: LampConfiguration, b: LampConfiguration) -> LampConfiguration:
    return LampConfiguration(a.support ^ b.support)


def is_adjacent(s: LamplighterState, t: LamplighterState) -> bool:
    g = _same_graph(s, t)
    if s.config == t.config:
        return g._distance(s.position, t.position) == 1
    if s.position == t.position:
        return (s.config.support ^ t.config.support) == {s.position}
    return False


def lamplighter_neighbors(s: LamplighterState) -> list[LamplighterState]:
    """Move neighbours (one per base neighbour) plus the single switch neighbour."""
    g = s.graph
    out = [LamplighterState(s.config, w, g) for w in g._neighbors(s.position)]
    out.append(LamplighterState(s.config.flip(s.position), s.position, g))
    out.sort(key=LamplighterState.sort_key)
    return out


def connected_component(start: LamplighterState, limit: int = 100_000) -> list[LamplighterState]:
    """BFS closure of ``start``; meant for finite base graphs such as Cycle(2)."""
    seen = {start}
    order = [start]
    queue = deque([start])
    while queue:
        s = queue.popleft()
        for t in lamplighter_neighbors(s):
            if t not in seen:
                if len(seen) >= limit:
                    raise ValueError(f"component exceeds {limit} states")
                seen.add(t)
                order.append(t)
                queue.append(t)
    return order


class TourLength(NamedTuple):
    value: int
    exact: bool


def _held_karp(ds: np.ndarray, D: np.ndarray, de: np.ndarray) -> int:
    """Shortest open walk start -> (all points, any order) -> end."""
    k = len(ds)
    full = (1 << k) - 1
    dp = np.full((1 << k, k), np.inf)
    for i in range(k):
        dp[1 << i, i] = ds[i]
    bits = [1 << j for j in range(k)]
    for mask in range(1, full):
        row = dp[mask]
        if not np.isfinite(row).any():
            continue
        cand = (row[:, None] + D).min(axis=0)
        for j in range(k):
            if not mask & bits[j]:
                nxt = mask | bits[j]
                if cand[j] < dp[nxt, j]:
                    dp[nxt, j] = cand[j]
    return int((dp[full] + de).min())


def _path_length(order, ds, D, de) -> int:
    total = ds[order[0]] + de[order[-1]]
    for a, b in zip(order, order[1:]):
        total += D[a, b]
    return int(total)


def _nearest_neighbour_two_opt(ds, D, de) -> int:
    k = len(ds)
    remaining = set(range(k))
    cur = min(remaining, key=lambda i: (ds[i], i))
    order = [cur]
    remaining.remove(cur)
    while remaining:
        cur = min(remaining, key=lambda i: (D[order[-1], i], i))
        order.append(cur)
        remaining.remove(cur)
    best = _path_length(order, ds, D, de)
    improved = True
    while improved:
        improved = False
        for i, j in itertools.combinations(range(k), 2):
            cand = order[:i] + order[i:j + 1][::-1] + order[j + 1:]
            length = _path_length(cand, ds, D, de)
            if length < best:
                order, best, improved = cand, length, True
    return best


def tour_length(graph: BaseGraph, start, end, points: Iterable,
                exact_limit: int = EXACT_TOUR_LIMIT) -> TourLength:
    """Length of the shortest walk from ``start`` to ``end`` visiting every
    point at least once. Exact by subset DP up to ``exact_limit`` points,
    otherwise a nearest-neighbour + 2-opt upper bound."""
    pts = sorted(set(points))
    if not pts:
        return TourLength(graph._distance(start, end), True)
    dist = graph._distance
    ds = np.array([dist(start, p) for p in pts], dtype=float)
    de = np.array([dist(p, end) for p in pts], dtype=float)
    D = np.array([[dist(p, r) for r in pts] for p in pts], dtype=float)
    if len(pts) <= exact_limit:
        return TourLength(_held_karp(ds, D, de), True)
    return TourLength(_nearest_neighbour_two_opt(ds, D, de), False)


def lamplighter_distance(s: LamplighterState, t: LamplighterState,
                         exact_limit: int = EXACT_TOUR_LIMIT) -> TourLength:
    """Lamplighter metric: tour length through the differing lamps plus
    the number of differing lamps."""
    g = _same_graph(s, t)
    diff = s.config.support ^ t.config.support
    tour = tour_length(g, s.position, t.position, diff, exact_limit)
    return TourLength(tour.value + len(diff), tour.exact)


def translate(shift, s: LamplighterState) -> LamplighterState:
    """Act by a lattice translation on both the walker and the lamps."""
    g = s.graph
    if not isinstance(g, Lattice):
        raise FamilyMismatchError(f"translations need a lattice base, got {g.family!r}")
    shift = g.validate(tuple(shift))

    def move(v):
        return tuple(a + b for a, b in zip(v, shift))

    support = frozenset(move(v) for v in s.config.support)
    return LamplighterState(LampConfiguration(support), move(s.position), g)
