"""Monte-Carlo and pathwise estimators for random walks and lamplighter walks.

Trial ``i`` of a :class:`SimConfig` always draws from the Philox stream keyed
by ``(base_seed, i)``, so serial and threaded runs give bitwise-identical
estimates and trials can be re-run in isolation.
"""

from __future__ import annotations

import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import FamilyMismatchError, ParameterError
from .graphs import Lattice, OrientedTree
from .kernels import (
    LampKernel,
    LamplighterKernel,
    StagedKernel,
    TransitionKernel,
    _pick,
)
from .lamplighter import LampConfiguration, lamplighter_distance
from .trajectories import LampTrajectory, LatticeTrajectory, Trajectory

CUT_WINDOW = 100


@dataclass(frozen=True)
class SimConfig:
    base_seed: int
    horizon: int
    trials: int

    def __post_init__(self):
        if self.horizon < 1 or self.trials < 1:
            raise ParameterError(f"need horizon >= 1 and trials >= 1, got {self}")
        if not 0 <= self.base_seed < 2**64:
            raise ParameterError("base_seed must be a 64-bit unsigned integer")

    def stream(self, trial: int) -> np.random.Generator:
        seq = np.random.SeedSequence(self.base_seed, spawn_key=(trial,))
        return np.random.Generator(np.random.Philox(seq))


@dataclass
class Estimate:
    estimate: float
    stderr: float
    trials: int
    seed: int
    values: np.ndarray = field(repr=False, default=None)

    def summary(self) -> dict:
        return {"estimate": self.estimate, "stderr": self.stderr,
                "trials": self.trials, "seed": self.seed}

    def within(self, target: float, k: float = 4.0) -> bool:
        return abs(self.estimate - target) <= k * self.stderr


def _estimate(values, cfg: SimConfig) -> Estimate:
    v = np.asarray(values, dtype=float)
    se = float(v.std(ddof=1) / math.sqrt(len(v))) if len(v) > 1 else float("nan")
    return Estimate(float(v.mean()), se, len(v), cfg.base_seed, v)


def map_trials(fn: Callable[[np.random.Generator], float], cfg: SimConfig,
               threads: int = 1) -> list[float]:
    """Evaluate ``fn`` on every trial stream; results in trial order."""
    streams = (cfg.stream(i) for i in range(cfg.trials))
    if threads <= 1:
        return [fn(rng) for rng in streams]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, streams))


def run_trajectory(k: TransitionKernel, start, n: int, rng: np.random.Generator):
    return k.run(start, n, rng, keep=True)


def _default_metric(k: TransitionKernel):
    if k.space == "lamplighter":
        return lambda s, t: lamplighter_distance(s, t).value
    return k.graph._distance


def rate_of_escape(k: TransitionKernel, cfg: SimConfig, metric=None, start=None,
                   threads: int = 1) -> Estimate:
    """Mean of ``d(X_0, X_n) / n`` over trials."""
    start = k.origin_state if start is None else start
    metric = metric or _default_metric(k)
    n = cfg.horizon

    def trial(rng):
        return metric(start, k.run(start, n, rng, keep=False)) / n

    return _estimate(map_trials(trial, cfg, threads), cfg)


def support_growth(k: LamplighterKernel, cfg: SimConfig, start=None,
                   threads: int = 1) -> Estimate:
    """Mean of ``|supp(eta_n)| / n``."""
    if k.space != "lamplighter":
        raise FamilyMismatchError("support_growth needs a lamplighter kernel")
    start = k.origin_state if start is None else start
    n = cfg.horizon

    def trial(rng):
        return len(k.run(start, n, rng, keep=False).config) / n

    return _estimate(map_trials(trial, cfg, threads), cfg)


def walk_range(traj: Sequence) -> np.ndarray:
    """``R_j = |{X_1, ..., X_j}|`` for ``j = 1..n`` (the start is excluded)."""
    if isinstance(traj, LatticeTrajectory):
        coords = traj.coords[1:]
        if len(coords) == 0:
            return np.zeros(0, dtype=np.int64)
        _, first = np.unique(coords, axis=0, return_index=True)
        new = np.zeros(len(coords), dtype=np.int64)
        new[first] = 1
        return np.cumsum(new)
    seen = set()
    out = []
    for x in list(traj)[1:]:
        seen.add(x)
        out.append(len(seen))
    return np.array(out, dtype=np.int64)


def _range_at_end(traj) -> int:
    r = walk_range(traj)
    return int(r[-1]) if len(r) else 0


def _sws_base(kernel: TransitionKernel) -> TransitionKernel:
    if isinstance(kernel, StagedKernel):
        kinds = [kind for kind, _ in kernel.stages]
        lamps = [k for kind, k in kernel.stages if kind == "lamp"]
        if kinds != ["lamp", "base", "lamp"] or not all(l.is_uniform for l in lamps):
            raise ParameterError("the range formula needs a switch-walk-switch kernel "
                                 "with uniform lamp kernel")
        return kernel.base
    if kernel.space == "lamplighter":
        raise ParameterError("the range formula needs a switch-walk-switch kernel")
    return kernel


def sws_return_probability(base: TransitionKernel, n: int, cfg: SimConfig, start=None,
                           threads: int = 1) -> Estimate:
    """Monte-Carlo value of ``E_x[2^{-R_n} 1{X_n = x}]``, the n-step return
    probability of the switch-walk-switch walk with uniform lamps.

    ``base`` is the base kernel (an SWS kernel is also accepted and unwrapped).
    """
    base = _sws_base(base)
    x0 = base.origin_state if start is None else start
    if n == 0:
        return _estimate(np.ones(cfg.trials), cfg)

    def trial(rng):
        path = base.run(x0, n, rng, keep=True)
        if path[len(path) - 1] != x0:
            return 0.0
        return 2.0 ** -_range_at_end(path)

    return _estimate(map_trials(trial, cfg, threads), cfg)


def sws_return_probability_exact(base: TransitionKernel, n: int, start=None) -> float:
    """Exact ``E_x[2^{-R_n} 1{X_n = x}]`` by enumerating (position, range set)."""
    base = _sws_base(base)
    x0 = base.origin_state if start is None else start
    if n == 0:
        return 1.0
    dist = {(x0, frozenset()): 1.0}
    for _ in range(n):
        nxt = defaultdict(float)
        for (x, seen), p in dist.items():
            for y, q in base.transitions(x):
                nxt[(y, seen | {y})] += p * float(q)
        dist = nxt
    return sum(p * 2.0 ** -len(seen) for (x, seen), p in dist.items() if x == x0)


def direct_return_frequency(k: TransitionKernel, n: int, cfg: SimConfig, start=None,
                            threads: int = 1) -> Estimate:
    """Monte-Carlo frequency of ``Z_n = Z_0`` for the full chain."""
    start = k.origin_state if start is None else start

    def trial(rng):
        return 1.0 if k.run(start, n, rng, keep=False) == start else 0.0

    return _estimate(map_trials(trial, cfg, threads), cfg)


def laplace_range(base: TransitionKernel, t: float, n: int, cfg: SimConfig, start=None,
                  threads: int = 1) -> Estimate:
    """Monte-Carlo mean of ``exp(-t R_n)``."""
    if t < 0:
        raise ParameterError(f"t must be non-negative, got {t}")
    x0 = base.origin_state if start is None else start

    def trial(rng):
        return math.exp(-t * _range_at_end(base.run(x0, n, rng, keep=True)))

    return _estimate(map_trials(trial, cfg, threads), cfg)


@dataclass(frozen=True)
class LaplaceRange:
    value: float
    dropped: float  # upper bound on the contribution of truncated paths

    @property
    def neg_log(self) -> float:
        return -math.log(self.value)


def laplace_range_srw_z(t: float, n: int, width_cap: int | None = None) -> LaplaceRange:
    """Exact ``E[exp(-t R_n)]`` for simple random walk on Z.

    Dynamic programme over (number of sites ``s`` in the visited interval
    of ``X_0..X_k``, walker offset ``j`` inside it, whether the origin has
    been revisited). While the origin is unrevisited it is the left end of
    the interval (mirror symmetry). Intervals wider than ``width_cap`` are
    dropped; their total weight bounds the error.
    """
    if t < 0:
        raise ParameterError(f"t must be non-negative, got {t}")
    if n == 0:
        return LaplaceRange(1.0, 0.0)
    if width_cap is None:
        width_cap = 200 + math.ceil(100 / max(t, 1e-3))
    cap = min(n + 1, width_cap)
    e = math.exp(-t)
    size = cap + 2
    diag = np.arange(size - 1)
    # w[r, s, j]; r = 1 once the origin has been revisited
    w = np.zeros((2, size, size))
    w[0, 2, 1] = e
    dropped = 0.0
    for _ in range(n - 1):
        h = 0.5 * w
        nw = np.zeros_like(w)
        # step right: offset j -> j + 1, a new site when j = s - 1
        nw[:, :, 1:] += h[:, :, :-1]
        edge = nw[:, diag, diag].copy()
        nw[:, diag, diag] = 0.0
        nw[:, diag + 1, diag] += e * edge
        # step left: j -> j - 1, a new site when j = 0
        nw[:, :, :-1] += h[:, :, 1:]
        nw[1, 1:, 0] += e * h[1, :-1, 0]
        # unrevisited origin sits at j = 0: landing there flips the flag
        nw[1, :, 0] += e * nw[0, :, 0]
        nw[0, :, 0] = 0.0
        dropped += nw[:, cap + 1].sum()
        nw[:, cap + 1] = 0.0
        w = nw
    return LaplaceRange(float(w.sum()), float(dropped))


def modular_drift(k: TransitionKernel):
    """Exact expected one-step height change from the origin."""
    if not isinstance(k.graph, OrientedTree):
        raise FamilyMismatchError("modular drift needs an oriented-tree kernel")
    g = k.graph
    o = g.origin
    return sum(g._height(y) * p for y, p in k.transitions(o))


@dataclass
class InducedChain:
    values: list[int]       # Y_0, Y_1, ...
    exit_times: list[int]   # tau_0, tau_1, ...
    truncated: bool         # no exit from T_0 within the horizon

    def transitions(self) -> list[tuple[int, int]]:
        return list(zip(self.values, self.values[1:]))


def induced_chain(traj: Sequence) -> InducedChain:
    """Spine indices at the successive exit times from the attached trees.

    Vertex ``(k, digits)`` of the oriented tree lies in the tree hanging at
    spine index ``k``, so an exit happens exactly when ``k`` changes.
    """
    states = list(traj)
    if states[0][0] != 0 or states[0][1] != ():
        raise ParameterError("induced chain expects a path started at the origin")
    values, times = [0], [0]
    current = 0
    for t, (k, _) in enumerate(states):
        if k != current:
            current = k
            values.append(k)
            times.append(t)
    return InducedChain(values, times, truncated=len(values) == 1)


@dataclass(frozen=True)
class SpineChain(TransitionKernel):
    """The induced walk on Z_+: ``0 -> 1`` surely, otherwise up with
    probability ``q/(q+1)`` and down with ``1/(q+1)``."""

    q: int

    @property
    def graph(self):
        return Lattice(1)

    def transitions(self, y):
        if y[0] == 0:
            return [((1,), 1.0)]
        up = self.q / (self.q + 1)
        return [((y[0] - 1,), 1.0 - up), ((y[0] + 1,), up)]

    def run(self, start, n, rng, keep=True):
        up = self.q / (self.q + 1)
        y = start[0]
        out = [y]
        for u in rng.random(n).tolist():
            y = 1 if y == 0 else (y + 1 if u < up else y - 1)
            out.append(y)
        coords = np.array(out, dtype=np.int64)[:, None]
        return LatticeTrajectory(coords) if keep else (y,)

    def spec(self):
        return {"kind": "spine", "q": self.q}


@dataclass
class CutPoints:
    times: list[int]
    points: list
    evaluated: int          # indices 0..evaluated-1 were examined
    visited: int            # distinct states among the examined indices
    censored: bool = True   # the tail window is never reported

    @property
    def time_density(self) -> float:
        return len(self.times) / self.evaluated if self.evaluated else 0.0

    @property
    def point_density(self) -> float:
        return len(set(self.points)) / self.visited if self.visited else 0.0


def cut_points(path: Sequence, window: int = CUT_WINDOW) -> CutPoints:
    """Cut times ``n`` with ``{X_0..X_n}`` disjoint from ``{X_{n+1}..}``
    on the finite path; the last ``window`` indices are censored.

    ``point_density`` is the share of visited states that are cut points,
    ``time_density`` the share of examined times that are cut times.
    """
    path = list(path)
    last = {}
    for i, x in enumerate(path):
        last[x] = i
    evaluated = max(len(path) - window, 0)
    times, points = [], []
    reach = -1
    for n in range(evaluated):
        reach = max(reach, last[path[n]])
        if reach <= n and n < len(path) - 1:
            times.append(n)
            points.append(path[n])
    visited = len(set(path[:evaluated]))
    return CutPoints(times, points, evaluated, visited)


def cut_point_density(q: int, cfg: SimConfig, window: int = CUT_WINDOW,
                      threads: int = 1) -> tuple[Estimate, Estimate]:
    """Point and time densities of cut points of the induced spine chain."""
    chain = SpineChain(q)

    def trial(rng):
        cp = cut_points(chain.run((0,), cfg.horizon, rng).coords[:, 0].tolist(), window)
        return cp.point_density, cp.time_density

    res = map_trials(trial, cfg, threads)
    return (_estimate([r[0] for r in res], cfg), _estimate([r[1] for r in res], cfg))


@dataclass
class LimitConfiguration:
    config: LampConfiguration      # lamps inside the ball at the horizon
    stabilization_time: int | None  # last time a ball lamp changed; None if censored
    censored: bool
    last_visit: int


def limit_configuration(traj: LampTrajectory, radius: int,
                        settle_fraction: float = 0.9) -> LimitConfiguration:
    """Lamps on the ball of ``radius`` around the start at the horizon.

    The configuration counts as stabilised when the walker spent the final
    ``settle_fraction`` of the horizon outside the ball; otherwise the
    result is censored.
    """
    g = traj.graph
    ball = set(g.ball(radius, traj.positions[0]))
    n = traj.horizon
    final = traj.config_at(n)
    config = LampConfiguration(frozenset(v for v in final.support if v in ball))
    last_visit = max((t for t, x in enumerate(traj.positions) if x in ball), default=-1)
    if n == 0:
        return LimitConfiguration(config, 0, False, 0)
    last_flip = 0
    for t, toggled in enumerate(traj.flips):
        if any(v in ball for v in toggled):
            last_flip = t + 1
    censored = last_visit >= (1.0 - settle_fraction) * n
    return LimitConfiguration(config, None if censored else last_flip, censored, last_visit)


def stabilization_rate(k: LamplighterKernel, radius: int, cfg: SimConfig,
                       settle_fraction: float = 0.9, threads: int = 1) -> Estimate:
    """Fraction of trials whose ball configuration stabilised."""
    start = k.origin_state

    def trial(rng):
        traj = k.run(start, cfg.horizon, rng, keep=True)
        return 0.0 if limit_configuration(traj, radius, settle_fraction).censored else 1.0

    return _estimate(map_trials(trial, cfg, threads), cfg)


def expected_range(base: TransitionKernel, cfg: SimConfig, threads: int = 1) -> Estimate:
    """Mean of ``R_n / sqrt(n)``."""
    x0 = base.origin_state
    n = cfg.horizon

    def trial(rng):
        return _range_at_end(base.run(x0, n, rng, keep=True)) / math.sqrt(n)

    return _estimate(map_trials(trial, cfg, threads), cfg)


def step_law_check(k: TransitionKernel, state, samples: int, rng) -> dict:
    """Empirical sampler frequencies against the enumerated law."""
    pairs = k.transitions(state)
    counts = defaultdict(int)
    for u in rng.random(samples).tolist():
        counts[k.step(state, u)] += 1
    return {t: (counts.get(t, 0) / samples, float(p)) for t, p in pairs} | {
        t: (c / samples, 0.0) for t, c in counts.items() if t not in dict(pairs)}
