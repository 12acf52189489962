"""Transition kernels on base graphs and lamplighter graphs.

A kernel is defined by local enumeration: ``transitions(state)`` returns the
aggregated ``(target, probability)`` pairs in canonical order, and
``step(state, u)`` maps a uniform variate to a target with exactly that
distribution. ``run`` draws whole paths; several kernels override it with
vectorised or in-place versions because frozen states are costly to
build at every step.
"""

from __future__ import annotations

import math
from collections import defaultdict, deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import FamilyMismatchError, ParameterError
from .graphs import BaseGraph, HomTree, Lattice, OrientedTree, parse_graph
from .lamplighter import LampConfiguration, LamplighterState, make_state
from .trajectories import LampTrajectory, LatticeTrajectory, Trajectory


def _pick_with_residual(pairs, u: float):
    """Inverse-CDF selection returning ``(target, residual)``; the residual
    is again uniform given the target. ``target`` is ``None`` when ``u``
    falls into the killed mass of a substochastic row."""
    acc = 0.0
    for target, p in pairs:
        p = float(p)
        if u < acc + p:
            return target, (u - acc) / p
        acc += p
    if pairs and acc >= 1.0 - 1e-12:
        return pairs[-1][0], 1.0 - 1e-16
    return None, u


def _pick(pairs, u: float):
    return _pick_with_residual(pairs, u)[0]


class TransitionKernel:
    space = "base"
    graph: BaseGraph

    def transitions(self, state) -> list[tuple[object, float]]:
        raise NotImplementedError

    def step(self, state, u: float):
        return _pick(self.transitions(state), u)

    def sample(self, state, rng: np.random.Generator):
        return self.step(state, rng.random())

    @property
    def origin_state(self):
        return self.graph.origin

    def run(self, start, n: int, rng: np.random.Generator, keep: bool = True):
        """Path of ``n`` steps from ``start``; only the final state if not ``keep``."""
        state = start
        states = [state] if keep else None
        for u in rng.random(n).tolist():
            state = self.step(state, u)
            if keep:
                states.append(state)
        return Trajectory(states) if keep else state

    def lumper(self, x) -> Callable | None:
        """Key function under which the chain started at ``x`` is lumpable."""
        return None

    def spec(self) -> dict:
        raise NotImplementedError


# base-graph kernels


@dataclass(frozen=True)
class LatticeWalk(TransitionKernel):
    """Translation-invariant walk on Z^d with finitely many increments."""

    graph: Lattice
    increments: tuple  # ((vector, prob), ...)

    def __post_init__(self):
        total = sum(p for _, p in self.increments)
        if any(p <= 0 for _, p in self.increments) or abs(total - 1) > 1e-12:
            raise ParameterError(f"bad increment law {self.increments!r}")
        for v, _ in self.increments:
            self.graph.validate(tuple(v))

    def transitions(self, x):
        agg = defaultdict(float)
        for v, p in self.increments:
            agg[tuple(a + b for a, b in zip(x, v))] += p
        return sorted(agg.items())

    def run(self, start, n, rng, keep=True):
        vecs = np.array([v for v, _ in self.increments], dtype=np.int64)
        probs = np.array([p for _, p in self.increments], dtype=float)
        probs = probs / probs.sum()
        idx = rng.choice(len(probs), size=n, p=probs)
        coords = np.empty((n + 1, self.graph.d), dtype=np.int64)
        coords[0] = start
        if n:
            coords[1:] = np.asarray(start, dtype=np.int64) + np.cumsum(vecs[idx], axis=0)
        if keep:
            return LatticeTrajectory(coords)
        return tuple(int(c) for c in coords[-1])

    def spec(self):
        return {"kind": "lattice_walk", "d": self.graph.d,
                "increments": [[list(v), p] for v, p in self.increments]}


@dataclass(frozen=True)
class SimpleRandomWalk(TransitionKernel):
    """Uniform choice among the neighbours."""

    graph: BaseGraph

    def transitions(self, x):
        nb = self.graph._neighbors(x)
        agg = defaultdict(float)
        for w in nb:
            agg[w] += 1.0 / len(nb)
        return sorted(agg.items())

    def step(self, x, u):
        nb = self.graph._neighbors(x)
        return nb[min(int(u * len(nb)), len(nb) - 1)]

    def run(self, start, n, rng, keep=True):
        if not isinstance(self.graph, HomTree):
            return super().run(start, n, rng, keep)
        # reduced words mutated in place: O(1) per step
        word = list(start)
        states = [start] if keep else None
        for g in rng.integers(0, self.graph.M, size=n).tolist():
            if word and word[-1] == g:
                word.pop()
            else:
                word.append(g)
            if keep:
                states.append(tuple(word))
        return Trajectory(states) if keep else tuple(word)

    def lumper(self, x):
        if isinstance(self.graph, (HomTree, OrientedTree)):
            dist = self.graph._distance
            return lambda y: dist(x, y)
        return None

    def spec(self):
        return {"kind": "srw", "graph": self.graph.spec()}


@dataclass(frozen=True)
class OrientedTreeWalk(TransitionKernel):
    """Nearest-neighbour walk on the oriented tree: father with probability
    ``father``, each of the ``q`` sons with ``(1 - father) / q``."""

    graph: OrientedTree
    father: Fraction = Fraction(1, 2)

    def __post_init__(self):
        if not isinstance(self.graph, OrientedTree):
            raise FamilyMismatchError("OrientedTreeWalk needs an oriented tree")
        if not 0 < self.father < 1:
            raise ParameterError(f"father probability must lie in (0,1), got {self.father}")

    @property
    def son_prob(self) -> Fraction:
        return (1 - Fraction(self.father)) / self.graph.q

    def transitions(self, x):
        g = self.graph
        out = [(g.father(x), Fraction(self.father))]
        out += [(s, self.son_prob) for s in g.sons(x)]
        return sorted(out)

    def step(self, x, u):
        g = self.graph
        f = float(self.father)
        if u < f:
            return g.father(x)
        j = min(int((u - f) / (1.0 - f) * g.q), g.q - 1)
        return g.son(x, j)

    def spec(self):
        return {"kind": "oriented", "q": self.graph.q, "father": str(self.father)}


def srw(g: BaseGraph) -> TransitionKernel:
    if isinstance(g, Lattice):
        incs = []
        for i in range(g.d):
            for s in (-1, 1):
                v = [0] * g.d
                v[i] = s
                incs.append((tuple(v), 1.0 / (2 * g.d)))
        return LatticeWalk(g, tuple(sorted(incs)))
    return SimpleRandomWalk(g)


def biased_z(p: float) -> LatticeWalk:
    if not 0.5 < p < 1.0:
        raise ParameterError(f"drift parameter must lie in (1/2, 1), got {p}")
    return LatticeWalk(Lattice(1), (((-1,), 1.0 - p), ((1,), p)))


def oriented_tree_kernel(q: int, father=Fraction(1, 2)) -> OrientedTreeWalk:
    if q < 2:
        raise ParameterError(f"oriented tree kernel needs q >= 2, got {q}")
    return OrientedTreeWalk(OrientedTree(q), Fraction(father))


# lamp kernels


@dataclass(frozen=True)
class LampKernel:
    """Stochastic 2x2 matrix acting on one lamp."""

    matrix: tuple = ((0.5, 0.5), (0.5, 0.5))

    def __post_init__(self):
        m = tuple(tuple(float(x) for x in row) for row in self.matrix)
        if len(m) != 2 or any(len(r) != 2 for r in m):
            raise ParameterError("lamp kernel must be 2x2")
        if any(x < 0 for r in m for x in r) or any(abs(sum(r) - 1) > 1e-12 for r in m):
            raise ParameterError(f"lamp kernel rows must be probability vectors: {m}")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def uniform(cls) -> LampKernel:
        return cls(((0.5, 0.5), (0.5, 0.5)))

    @classmethod
    def flip(cls) -> LampKernel:
        return cls(((0.0, 1.0), (1.0, 0.0)))

    @property
    def is_uniform(self) -> bool:
        return all(x == 0.5 for r in self.matrix for x in r)

    def switch_prob(self, bit: int) -> float:
        return self.matrix[bit][1 - bit]

    def spec(self):
        return "uniform" if self.is_uniform else [list(r) for r in self.matrix]


def _aggregate(dist: dict) -> list:
    out = [(s, p) for s, p in dist.items() if p > 0]
    out.sort(key=lambda sp: sp[0].sort_key())
    return out


class LamplighterKernel(TransitionKernel):
    space = "lamplighter"
    base: TransitionKernel

    @property
    def graph(self):
        return self.base.graph

    @property
    def origin_state(self):
        return make_state(self.graph)


@dataclass(frozen=True)
class WalkOrSwitch(LamplighterKernel):
    """With probability ``a`` move by the base kernel, otherwise apply the
    lamp kernel at the current position."""

    a: float
    base: TransitionKernel
    lamp: LampKernel

    def __post_init__(self):
        if not 0 < self.a < 1:
            raise ParameterError(f"walk probability must lie in (0,1), got {self.a}")

    def transitions(self, s: LamplighterState):
        g, x = self.graph, s.position
        dist = defaultdict(float)
        for y, p in self.base.transitions(x):
            dist[LamplighterState(s.config, y, g)] += self.a * float(p)
        bit = s.config(x)
        sw = self.lamp.switch_prob(bit)
        dist[LamplighterState(s.config.flip(x), x, g)] += (1 - self.a) * sw
        dist[s] += (1 - self.a) * (1 - sw)
        return _aggregate(dist)

    def step(self, s, u):
        x = s.position
        if u < self.a:
            return LamplighterState(s.config, self.base.step(x, u / self.a), s.graph)
        u = (u - self.a) / (1 - self.a)
        if u < self.lamp.switch_prob(s.config(x)):
            return LamplighterState(s.config.flip(x), x, s.graph)
        return s

    def run(self, start, n, rng, keep=True):
        moves = rng.random(n) < self.a
        base_path = self.base.run(start.position, int(moves.sum()), rng, keep=True).states
        lamp_u = rng.random(n).tolist()
        lamps = set(start.config.support)
        positions = [start.position] if keep else None
        flips = [] if keep else None
        x, j = start.position, 0
        for t, mv in enumerate(moves.tolist()):
            toggled = ()
            if mv:
                j += 1
                x = base_path[j]
            else:
                bit = 1 if x in lamps else 0
                if lamp_u[t] < self.lamp.switch_prob(bit):
                    lamps ^= {x}
                    toggled = (x,)
            if keep:
                positions.append(x)
                flips.append(toggled)
        if keep:
            return LampTrajectory(self.graph, start.config, positions, flips)
        return LamplighterState(LampConfiguration(frozenset(lamps)), x, self.graph)

    def spec(self):
        return {"kind": "wos", "a": self.a, "lamp": self.lamp.spec(), "base": self.base.spec()}


@dataclass(frozen=True)
class StagedKernel(LamplighterKernel):
    """Composition of lifted stages, each either ``("lamp", LampKernel)``
    acting at the current position or ``("base", kernel)`` moving the
    walker. Switch-walk-switch is ``(lamp, base, lamp)``."""

    stages: tuple

    def __post_init__(self):
        kinds = [k for k, _ in self.stages]
        if set(kinds) - {"lamp", "base"} or kinds.count("base") != 1:
            raise ParameterError("stages must be lamp stages around exactly one base stage")

    @property
    def base(self):
        return next(k for kind, k in self.stages if kind == "base")

    def transitions(self, s):
        g = self.graph
        dist = {s: 1.0}
        for kind, k in self.stages:
            nxt = defaultdict(float)
            for t, p in dist.items():
                if kind == "lamp":
                    sw = k.switch_prob(t.config(t.position))
                    nxt[LamplighterState(t.config.flip(t.position), t.position, g)] += p * sw
                    nxt[t] += p * (1 - sw)
                else:
                    for y, q in k.transitions(t.position):
                        nxt[LamplighterState(t.config, y, g)] += p * float(q)
            dist = {t: p for t, p in nxt.items() if p > 0}
        return _aggregate(dist)

    def step(self, s, u):
        config, x = s.config, s.position
        for kind, k in self.stages:
            if kind == "lamp":
                sw = k.switch_prob(config(x))
                if u < sw:
                    config = config.flip(x)
                    u = u / sw
                else:
                    u = (u - sw) / (1 - sw)
            else:
                x, u = _pick_with_residual(k.transitions(x), u)
        return LamplighterState(config, x, s.graph)

    def run(self, start, n, rng, keep=True):
        base_path = self.base.run(start.position, n, rng, keep=True).states
        lamp_stages = [(i, k) for i, (kind, k) in enumerate(self.stages) if kind == "lamp"]
        lamp_u = rng.random((n, max(len(lamp_stages), 1))).tolist()
        lamps = set(start.config.support)
        positions = base_path if keep else None
        flips = [] if keep else None
        base_idx = next(i for i, (kind, _) in enumerate(self.stages) if kind == "base")
        for t in range(n):
            toggled = []
            for j, (i, lk) in enumerate(lamp_stages):
                x = base_path[t] if i < base_idx else base_path[t + 1]
                if lamp_u[t][j] < lk.switch_prob(1 if x in lamps else 0):
                    lamps ^= {x}
                    toggled.append(x)
            if keep:
                flips.append(tuple(toggled))
        if keep:
            return LampTrajectory(self.graph, start.config, positions, flips)
        return LamplighterState(LampConfiguration(frozenset(lamps)), base_path[-1], self.graph)

    def spec(self):
        kinds = [k for k, _ in self.stages]
        if kinds == ["lamp", "base", "lamp"] and self.stages[0][1] == self.stages[2][1]:
            return {"kind": "sws", "lamp": self.stages[0][1].spec(), "base": self.base.spec()}
        return {"kind": "staged", "stages": [
            {"lamp": k.spec()} if kind == "lamp" else {"base": k.spec()}
            for kind, k in self.stages]}


def walk_or_switch(a: float, base: TransitionKernel, lamp: LampKernel) -> WalkOrSwitch:
    return WalkOrSwitch(a, base, lamp)


def switch_walk_switch(lamp: LampKernel, base: TransitionKernel) -> StagedKernel:
    return StagedKernel((("lamp", lamp), ("base", base), ("lamp", lamp)))


def project_base(k: LamplighterKernel, x) -> list[tuple[object, float]]:
    """Marginal one-step law of the walker started from ``(0, x)``."""
    if k.space != "lamplighter":
        raise FamilyMismatchError("project_base needs a lamplighter kernel")
    agg = defaultdict(float)
    for t, p in k.transitions(make_state(k.graph, x)):
        agg[t.position] += p
    return sorted(agg.items())


def kernel_ball(k: TransitionKernel, radius: int, start=None) -> list:
    """States reachable from ``start`` in at most ``radius`` kernel steps."""
    s0 = k.origin_state if start is None else start
    seen = {s0: 0}
    order = [s0]
    queue = deque([s0])
    while queue:
        s = queue.popleft()
        if seen[s] == radius:
            continue
        for t, _ in k.transitions(s):
            if t not in seen:
                seen[t] = seen[s] + 1
                order.append(t)
                queue.append(t)
    return order


def check_reversible(k: TransitionKernel, m: Callable, radius: int, start=None,
                     tol: float = 1e-12) -> bool:
    """Detailed balance ``m(x)p(x,y) = m(y)p(y,x)`` on all pairs of the ball."""
    ball = kernel_ball(k, radius, start)
    members = set(ball)
    table = {s: dict(k.transitions(s)) for s in ball}
    for x in ball:
        for y, p in table[x].items():
            if y not in members:
                continue
            lhs = m(x) * float(p)
            rhs = m(y) * float(table[y].get(x, 0.0))
            if not math.isclose(lhs, rhs, rel_tol=tol, abs_tol=tol):
                return False
    return True


def parse_lamp(spec) -> LampKernel:
    if spec in (None, "uniform"):
        return LampKernel.uniform()
    if spec == "flip":
        return LampKernel.flip()
    return LampKernel(tuple(tuple(r) for r in spec))


def parse_kernel(spec) -> TransitionKernel:
    """Build a kernel from a JSON spec or a shorthand string.

    Shorthands: ``srw:lattice:1``, ``srw:homtree:3``, ``biased:0.7``,
    ``oriented:2``, ``sws:<base>``, ``wos:<a>:<base>``.
    """
    if isinstance(spec, str):
        head, _, rest = spec.partition(":")
        if head == "srw":
            return srw(parse_graph(rest))
        if head == "biased":
            return biased_z(float(rest))
        if head == "oriented":
            return oriented_tree_kernel(int(rest))
        if head == "sws":
            return switch_walk_switch(LampKernel.uniform(), parse_kernel(rest))
        if head == "wos":
            a, _, base = rest.partition(":")
            return walk_or_switch(float(a), parse_kernel(base), LampKernel.uniform())
        raise ParameterError(f"cannot parse kernel shorthand {spec!r}")
    kind = spec.get("kind")
    try:
        if kind == "srw":
            return srw(parse_graph(spec["graph"]))
        if kind == "biased":
            return biased_z(float(spec["p"]))
        if kind == "oriented":
            return oriented_tree_kernel(int(spec["q"]), Fraction(spec.get("father", "1/2")))
        if kind == "lattice_walk":
            incs = tuple((tuple(v), float(p)) for v, p in spec["increments"])
            return LatticeWalk(Lattice(int(spec["d"])), incs)
        if kind == "sws":
            return switch_walk_switch(parse_lamp(spec.get("lamp")), parse_kernel(spec["base"]))
        if kind == "wos":
            return walk_or_switch(float(spec["a"]), parse_kernel(spec["base"]),
                                  parse_lamp(spec.get("lamp")))
    except KeyError as exc:
        raise ParameterError(f"kernel spec {spec!r} misses {exc}") from None
    raise ParameterError(f"unknown kernel kind {kind!r}")
