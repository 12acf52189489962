"""Containers for sampled paths.

Base-graph paths are plain state sequences; lattice paths keep their
coordinates in a numpy array and build tuple states on demand. Lamplighter
paths store the base path plus the lamps toggled in each step, which is
far cheaper than one frozen configuration per time.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .lamplighter import LampConfiguration, LamplighterState


class Trajectory(Sequence):
    """States ``X_0, ..., X_n`` of a base-graph walk."""

    def __init__(self, states: list):
        self._states = list(states)

    @property
    def states(self) -> list:
        return self._states

    @property
    def horizon(self) -> int:
        return len(self) - 1

    def __len__(self) -> int:
        return len(self._states)

    def __getitem__(self, i):
        return self._states[i]

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return self.states == other.states

    def __repr__(self):
        return f"{type(self).__name__}(horizon={self.horizon})"


class LatticeTrajectory(Trajectory):
    """Lattice path backed by an ``(n + 1, d)`` integer array."""

    def __init__(self, coords: np.ndarray):
        self.coords = np.asarray(coords, dtype=np.int64)
        self._cache: list | None = None

    @property
    def states(self) -> list:
        if self._cache is None:
            self._cache = list(map(tuple, self.coords.tolist()))
        return self._cache

    def __len__(self) -> int:
        return self.coords.shape[0]

    def __getitem__(self, i):
        if isinstance(i, slice):
            return self.states[i]
        return tuple(int(c) for c in self.coords[i])


class LampTrajectory(Sequence):
    """Lamplighter path ``Z_t = (eta_t, X_t)`` stored as base positions plus
    per-step lamp toggles. ``flips[t]`` lists the vertices toggled while
    going from time ``t`` to ``t + 1``."""

    def __init__(self, graph, start_config: LampConfiguration, positions: list,
                 flips: list[tuple]):
        if len(flips) != len(positions) - 1:
            raise ValueError("need exactly one flip record per step")
        self.graph = graph
        self.start_config = start_config
        self.positions = positions
        self.flips = flips

    @property
    def horizon(self) -> int:
        return len(self.flips)

    def __len__(self) -> int:
        return len(self.positions)

    def config_at(self, t: int) -> LampConfiguration:
        lamps = set(self.start_config.support)
        for step in self.flips[:t]:
            for v in step:
                lamps ^= {v}
        return LampConfiguration(frozenset(lamps))

    def __getitem__(self, t):
        if isinstance(t, slice):
            return [self[i] for i in range(*t.indices(len(self)))]
        if t < 0:
            t += len(self)
        if not 0 <= t < len(self):
            raise IndexError(t)
        return LamplighterState(self.config_at(t), self.positions[t], self.graph)

    def __iter__(self):
        lamps = set(self.start_config.support)
        yield LamplighterState(LampConfiguration(frozenset(lamps)), self.positions[0], self.graph)
        for t, step in enumerate(self.flips):
            for v in step:
                lamps ^= {v}
            yield LamplighterState(LampConfiguration(frozenset(lamps)),
                                   self.positions[t + 1], self.graph)

    @property
    def final(self) -> LamplighterState:
        return self[len(self) - 1]
