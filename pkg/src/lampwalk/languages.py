"""Languages of labelled digraphs: counting, entropy and forbidden factors.

A labelled digraph ``(X, E, l)`` with ``X = {0..n-1}`` is read as an
automaton: ``L_{x,y}`` is the set of label words of paths from ``x`` to
``y`` (the empty path included). Labels are single characters, so words
are plain strings. Restricting to words that avoid a finite factor set
``F`` is done by a product with an Aho-Corasick automaton for ``F``.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from .errors import (
    ConnectivityError,
    DeterminismError,
    DistanceError,
    EncodingError,
    HypothesisViolation,
    ParameterError,
)
from .spectral import PerronPair, SpectralEstimate, h_transform, perron, rho_from_log_sequence

STRICT_TOL = 1e-9


@dataclass(frozen=True)
class LabeledDigraph:
    n: int
    alphabet: tuple[str, ...]
    edges: tuple[tuple[int, str, int], ...]
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.n < 1:
            raise EncodingError("a labelled digraph needs at least one vertex")
        alphabet = tuple(self.alphabet)
        if len(set(alphabet)) != len(alphabet) or any(
                not isinstance(a, str) or len(a) != 1 for a in alphabet):
            raise EncodingError(f"alphabet must be distinct single characters: {alphabet!r}")
        edges = tuple(sorted((int(u), str(a), int(v)) for u, a, v in self.edges))
        if len(set(edges)) != len(edges):
            raise EncodingError("duplicate (source, label, target) edge")
        for u, a, v in edges:
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise EncodingError(f"edge {(u, a, v)} has a vertex out of range")
            if a not in alphabet:
                raise EncodingError(f"edge label {a!r} not in the alphabet")
        if self.names is not None and len(self.names) != self.n:
            raise EncodingError("need one name per vertex")
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "edges", edges)

    @property
    def out(self) -> list[list[tuple[str, int]]]:
        adj = [[] for _ in range(self.n)]
        for u, a, v in self.edges:
            adj[u].append((a, v))
        return adj

    def vertex(self, x) -> int:
        """Vertex index from an index or a vertex name."""
        if isinstance(x, str) and self.names is not None and x in self.names:
            return self.names.index(x)
        try:
            i = int(x)
        except (TypeError, ValueError):
            raise EncodingError(f"unknown vertex {x!r}") from None
        if not 0 <= i < self.n:
            raise EncodingError(f"vertex {x!r} out of range")
        return i

    def adjacency(self) -> np.ndarray:
        """Label-summed adjacency (count-transfer) matrix."""
        A = np.zeros((self.n, self.n))
        for u, _, v in self.edges:
            A[u, v] += 1
        return A

    def to_json(self) -> dict:
        obj = {"vertices": self.n, "alphabet": list(self.alphabet),
               "edges": [list(e) for e in self.edges]}
        if self.names is not None:
            obj["names"] = list(self.names)
        return obj

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, obj: dict) -> LabeledDigraph:
        try:
            return cls(int(obj["vertices"]), tuple(obj["alphabet"]),
                       tuple(tuple(e) for e in obj["edges"]),
                       tuple(obj["names"]) if obj.get("names") else None)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, EncodingError):
                raise
            raise EncodingError(f"bad graph JSON: {exc}") from None


# small named graphs


def full_shift(alphabet: Iterable[str] = "ab") -> LabeledDigraph:
    alphabet = tuple(alphabet)
    return LabeledDigraph(1, alphabet, tuple((0, a, 0) for a in alphabet))


def golden_mean() -> LabeledDigraph:
    """Binary words without the factor ``11``: vertex 1 means "just read 1"."""
    return LabeledDigraph(2, ("0", "1"), ((0, "0", 0), (0, "1", 1), (1, "0", 0)))


def directed_cycle(n: int, label: str = "a") -> LabeledDigraph:
    return LabeledDigraph(n, (label,), tuple((i, label, (i + 1) % n) for i in range(n)))


def four_vertex_example() -> LabeledDigraph:
    """Deterministic example on vertices x, y, z, t over {a, b}."""
    x, y, z, t = range(4)
    edges = ((x, "a", z), (y, "a", z), (z, "a", z), (z, "b", t),
             (t, "a", x), (x, "b", t), (t, "b", y), (y, "b", t))
    return LabeledDigraph(4, ("a", "b"), edges, ("x", "y", "z", "t"))


def random_deterministic_graph(rng: np.random.Generator, max_vertices: int = 6,
                               max_letters: int = 3, density: float = 0.5) -> LabeledDigraph:
    """Random strongly connected deterministic graph.

    A random Hamiltonian cycle (with random labels) guarantees strong
    connectivity; further edges fill free ``(vertex, label)`` slots.
    """
    n = int(rng.integers(1, max_vertices + 1))
    k = int(rng.integers(1, max_letters + 1))
    alphabet = tuple("abc"[:k])
    used = {}
    order = rng.permutation(n).tolist()
    for i, u in enumerate(order):
        used[(u, alphabet[int(rng.integers(k))])] = order[(i + 1) % n]
    for u in range(n):
        for a in alphabet:
            if (u, a) not in used and rng.random() < density:
                used[(u, a)] = int(rng.integers(n))
    return LabeledDigraph(n, alphabet, tuple((u, a, v) for (u, a), v in used.items()))


# structural certification


def check_deterministic(g: LabeledDigraph) -> bool:
    keys = [(u, a) for u, a, _ in g.edges]
    return len(keys) == len(set(keys))


def check_fully_deterministic(g: LabeledDigraph) -> bool:
    return check_deterministic(g) and len(g.edges) == g.n * len(g.alphabet)


def _require_deterministic(g: LabeledDigraph):
    if not check_deterministic(g):
        raise DeterminismError("word counts need a deterministic graph (words differ from paths)")


def strong_connectivity(g: LabeledDigraph) -> bool:
    if g.n == 1:
        return True
    n, _ = connected_components(sparse.csr_matrix(g.adjacency()), directed=True,
                                connection="strong")
    return n == 1


def bfs_distances(g: LabeledDigraph, x: int) -> list[int | None]:
    dist: list[int | None] = [None] * g.n
    dist[x] = 0
    queue = deque([x])
    out = g.out
    while queue:
        u = queue.popleft()
        for _, v in out[u]:
            if dist[v] is None:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def forward_distance(g: LabeledDigraph, x, y) -> int:
    """Length ``d+(x, y)`` of a shortest directed path."""
    x, y = g.vertex(x), g.vertex(y)
    d = bfs_distances(g, x)[y]
    if d is None:
        raise DistanceError(f"vertex {y} is not reachable from {x}")
    return d


def uniform_connectedness(g: LabeledDigraph, K_max: int | None = None) -> int | None:
    """Smallest ``K`` with ``d+(y, x) <= K`` for every edge ``x -> y``, or
    ``None`` when the graph is not strongly connected or ``K > K_max``."""
    if not strong_connectivity(g):
        return None
    dist = [bfs_distances(g, v) for v in range(g.n)]
    K = max((dist[v][u] for u, _, v in g.edges), default=0)
    if K_max is not None and K > K_max:
        return None
    return K


def validate_factors(F: Iterable[str], alphabet: Iterable[str]) -> tuple[str, ...]:
    F = tuple(sorted(set(F)))
    letters = set(alphabet)
    for w in F:
        if not isinstance(w, str) or not w:
            raise ParameterError(f"forbidden words must be non-empty strings, got {w!r}")
        if set(w) - letters:
            raise ParameterError(f"forbidden word {w!r} uses letters outside the alphabet")
    return F


def spellable_from(g: LabeledDigraph, y: int, w: str) -> bool:
    """Whether some path starting at ``y`` carries the label ``w``."""
    current = {y}
    out = g.out
    for a in w:
        current = {v for u in current for b, v in out[u] if b == a}
        if not current:
            return False
    return True


def relative_denseness(g: LabeledDigraph, F: Iterable[str], D_max: int | None = None) -> int | None:
    """Smallest ``D`` such that from every vertex some word of ``F`` can be
    spelled starting within forward distance ``D``; ``None`` on failure."""
    F = validate_factors(F, g.alphabet)
    spots = [y for y in range(g.n) if any(spellable_from(g, y, w) for w in F)]
    if not spots:
        return None
    D = 0
    for x in range(g.n):
        dist = bfs_distances(g, x)
        reach = [dist[y] for y in spots if dist[y] is not None]
        if not reach:
            return None
        D = max(D, min(reach))
    if D_max is not None and D > D_max:
        return None
    return D


# counting


def count_words(g: LabeledDigraph, x, y, n: int) -> int:
    """``|{w in L_{x,y} : |w| = n}|`` by exact integer dynamic programming."""
    return count_sequence(g, x, [y], n)[n]


def count_sequence(g: LabeledDigraph, x, ys: Iterable, n_max: int) -> list[int]:
    """Word counts from ``x`` into the target set ``ys`` for lengths ``0..n_max``."""
    if n_max < 0:
        raise ParameterError(f"length must be non-negative, got {n_max}")
    _require_deterministic(g)
    x = g.vertex(x)
    targets = sorted({g.vertex(y) for y in ys})
    vec = [0] * g.n
    vec[x] = 1
    out = g.out
    counts = [sum(vec[t] for t in targets)]
    for _ in range(n_max):
        nxt = [0] * g.n
        for u, c in enumerate(vec):
            if c:
                for _, v in out[u]:
                    nxt[v] += c
        vec = nxt
        counts.append(sum(vec[t] for t in targets))
    return counts


def brute_force_words(g: LabeledDigraph, x, n_max: int, F: Iterable[str] = ()) -> list[dict]:
    """Sets of words of each length by explicit path enumeration.

    ``result[n][y]`` is the set of labels of length-``n`` paths from ``x``
    to ``y`` whose label contains no word of ``F``. Independent of the
    determinism assumption, so it serves as a counting oracle.
    """
    F = tuple(F)
    x = g.vertex(x)
    out = g.out
    level = {("", x)}
    result = []
    for n in range(n_max + 1):
        if n:
            level = {(w + a, v) for w, u in level for a, v in out[u]
                     if not any(f in w + a for f in F)}
        by_end: dict[int, set] = {}
        for w, v in level:
            by_end.setdefault(v, set()).add(w)
        result.append(by_end)
    return result


def graph_period(g: LabeledDigraph) -> int:
    """Period of a strongly connected graph (gcd of its cycle lengths)."""
    level = bfs_distances(g, 0)
    p = 0
    for u, _, v in g.edges:
        if level[u] is not None and level[v] is not None:
            p = math.gcd(p, level[u] + 1 - level[v])
    return abs(p)


def _perron_root(A: np.ndarray) -> float:
    if A.shape[0] == 1:
        return float(A[0, 0])
    return perron(A).rho


@dataclass
class EntropyResult:
    h: float
    rho: float
    period: int
    raw: list[float] = field(default_factory=list)  # (1/n) log count(n), n >= 1

    def to_json(self) -> dict:
        return {"h": self.h, "rho": self.rho, "period": self.period}


def entropy(g: LabeledDigraph, x=0, y=0, N: int = 0) -> EntropyResult:
    """Entropy ``h(L_{x,y})`` of a strongly connected deterministic graph.

    ``h`` is the log of the Perron root of the count-transfer matrix and
    does not depend on ``(x, y)``. The raw sequence ``(1/n) log count(n)``
    for ``n <= N`` is attached; on periodic graphs it vanishes off one
    residue class, which is why ``period`` is reported.
    """
    if not strong_connectivity(g):
        raise ConnectivityError("entropy needs a strongly connected graph")
    _require_deterministic(g)
    rho = _perron_root(g.adjacency())
    h = math.log(rho) if rho > 0 else -math.inf
    raw = []
    if N:
        counts = count_sequence(g, x, [y], N)
        raw = [math.log(c) / n if c else -math.inf for n, c in enumerate(counts) if n]
    return EntropyResult(h, rho, graph_period(g) if g.edges else 0, raw)


# forbidden factors


class FactorAutomaton:
    """Aho-Corasick automaton for a finite factor set ``F``.

    States are trie nodes (prefixes of words in ``F``); ``delta`` is the
    complete transition function built from failure links. A state is
    dead when some word of ``F`` is a suffix of the text read so far, so
    overlapping occurrences are caught.
    """

    def __init__(self, alphabet: Iterable[str], F: Iterable[str]):
        self.alphabet = tuple(alphabet)
        self.F = validate_factors(F, self.alphabet)
        goto: list[dict[str, int]] = [{}]
        dead = [False]
        self.prefixes = [""]
        for w in self.F:
            s = 0
            for a in w:
                if a not in goto[s]:
                    goto.append({})
                    dead.append(False)
                    self.prefixes.append(self.prefixes[s] + a)
                    goto[s][a] = len(goto) - 1
                s = goto[s][a]
            dead[s] = True
        fail = [0] * len(goto)
        delta = [dict() for _ in goto]
        queue = deque()
        for a in self.alphabet:
            if a in goto[0]:
                s = goto[0][a]
                delta[0][a] = s
                queue.append(s)
            else:
                delta[0][a] = 0
        while queue:
            s = queue.popleft()
            dead[s] = dead[s] or dead[fail[s]]
            for a in self.alphabet:
                if a in goto[s]:
                    t = goto[s][a]
                    fail[t] = delta[fail[s]][a]
                    delta[s][a] = t
                    queue.append(t)
                else:
                    delta[s][a] = delta[fail[s]][a]
        self.delta = delta
        self.fail = fail
        self.dead = dead
        self.root = 0

    @property
    def n_states(self) -> int:
        return len(self.delta)

    def run(self, word: str) -> int:
        s = self.root
        for a in word:
            s = self.delta[s][a]
        return s

    def accepts(self, word: str) -> bool:
        """True iff ``word`` contains no factor from ``F``."""
        s = self.root
        for a in word:
            s = self.delta[s][a]
            if self.dead[s]:
                return False
        return True

    @property
    def max_length(self) -> int:
        return max((len(w) for w in self.F), default=0)


@dataclass
class RestrictedGraph:
    """Product of a labelled digraph with a factor automaton.

    Vertices are the live pairs ``(v, s)`` reachable from some ``(x, root)``;
    ``L^F_{x,y}`` is the set of labels of paths from ``source(x)`` into
    ``targets(y)``.
    """

    base: LabeledDigraph
    automaton: FactorAutomaton
    graph: LabeledDigraph
    pairs: list[tuple[int, int]]

    def __post_init__(self):
        self._index = {p: i for i, p in enumerate(self.pairs)}

    def source(self, x) -> int:
        return self._index[(self.base.vertex(x), self.automaton.root)]

    def targets(self, y) -> list[int]:
        y = self.base.vertex(y)
        return [i for i, (v, _) in enumerate(self.pairs) if v == y]

    def counts(self, x, y, n_max: int) -> list[int]:
        return count_sequence(self.graph, self.source(x), self.targets(y), n_max)

    def count(self, x, y, n: int) -> int:
        return self.counts(x, y, n)[n]


def restrict(g: LabeledDigraph, F: Iterable[str]) -> RestrictedGraph:
    aut = FactorAutomaton(g.alphabet, F)
    out = g.out
    starts = [(x, aut.root) for x in range(g.n)]
    index = {p: i for i, p in enumerate(starts)}
    pairs = list(starts)
    edges = []
    queue = deque(starts)
    while queue:
        v, s = queue.popleft()
        for a, w in out[v]:
            t = aut.delta[s][a]
            if aut.dead[t]:
                continue
            if (w, t) not in index:
                index[(w, t)] = len(pairs)
                pairs.append((w, t))
                queue.append((w, t))
            edges.append((index[(v, s)], a, index[(w, t)]))
    product = LabeledDigraph(len(pairs), g.alphabet, tuple(edges))
    return RestrictedGraph(g, aut, product, pairs)


def _relevant_components(A: np.ndarray, source: int, targets: list[int]) -> list[np.ndarray]:
    """Strong components with at least one internal edge lying on some
    path from ``source`` into ``targets``."""
    n = A.shape[0]
    M = sparse.csr_matrix(A > 0)
    fwd = _reach(M, [source])
    bwd = _reach(M.T.tocsr(), targets)
    ncomp, labels = connected_components(M, directed=True, connection="strong")
    comps = []
    for c in range(ncomp):
        idx = np.flatnonzero(labels == c)
        if not (fwd[idx].all() and bwd[idx].all()):
            continue
        if A[np.ix_(idx, idx)].any():
            comps.append(idx)
    return comps


def _reach(M: sparse.csr_matrix, starts: list[int]) -> np.ndarray:
    seen = np.zeros(M.shape[0], dtype=bool)
    seen[starts] = True
    queue = deque(starts)
    while queue:
        u = queue.popleft()
        for v in M.indices[M.indptr[u]:M.indptr[u + 1]]:
            if not seen[v]:
                seen[v] = True
                queue.append(v)
    return seen


def growth_rate(A: np.ndarray, source: int, targets: list[int]) -> float:
    """``limsup (e_source A^n 1_targets)^(1/n)``: the largest Perron root
    among strong components on a source-to-target path (0 if none)."""
    roots = [_perron_root(A[np.ix_(c, c)]) for c in _relevant_components(A, source, targets)]
    return max(roots, default=0.0)


def restricted_entropy(rg: RestrictedGraph, x, y) -> float:
    """``h(L^F_{x,y})``; ``-inf`` when the language is finite."""
    r = growth_rate(rg.graph.adjacency(), rg.source(x), rg.targets(y))
    return math.log(r) if r > 0 else -math.inf


@dataclass
class GrowthReport:
    h: float
    h_F: dict                   # (x, y) -> h(L^F_{x,y})
    strict: bool
    K: int
    D: int
    F: tuple[str, ...]

    @property
    def sup_h_F(self) -> float:
        return max(self.h_F.values())

    def to_json(self) -> dict:
        def num(v):
            return None if v == -math.inf else v
        return {
            "h": self.h, "sup_h_F": num(self.sup_h_F), "strict": self.strict,
            "K": self.K, "D": self.D, "forbidden": list(self.F),
            "h_F": [[x, y, num(v)] for (x, y), v in sorted(self.h_F.items())],
        }


def certify(g: LabeledDigraph, F: Iterable[str], K_max: int | None = None,
            D_max: int | None = None) -> tuple[int, int]:
    """Check the hypotheses of the growth-sensitivity theorem; returns
    ``(K, D)`` or raises :class:`HypothesisViolation` naming the failures."""
    failures = []
    if not check_deterministic(g):
        failures.append("deterministic")
    K = uniform_connectedness(g, K_max if K_max is not None else g.n)
    if K is None:
        failures.append("uniformly_connected")
    D = relative_denseness(g, F, D_max if D_max is not None else g.n)
    if D is None:
        failures.append("relatively_dense")
    if not tuple(F):
        failures.append("nonempty_F")
    if failures:
        raise HypothesisViolation(failures)
    return K, D


def growth_sensitivity_report(g: LabeledDigraph, F: Iterable[str], K_max: int | None = None,
                              D_max: int | None = None) -> GrowthReport:
    F = validate_factors(F, g.alphabet)
    K, D = certify(g, F, K_max, D_max)
    h = entropy(g).h
    rg = restrict(g, F)
    h_F = {(x, y): restricted_entropy(rg, x, y) for x in range(g.n) for y in range(g.n)}
    strict = max(h_F.values()) < h - STRICT_TOL
    return GrowthReport(h, h_F, strict, K, D, F)


# weighted graphs


@dataclass
class WeightedGraph:
    graph: LabeledDigraph
    weights: dict          # edge (u, a, v) -> probability
    alpha: float

    def __post_init__(self):
        if self.alpha <= 0:
            raise ParameterError("alpha must be positive")
        sums = np.zeros(self.graph.n)
        for e in self.graph.edges:
            p = self.weights[e]
            if p < self.alpha - 1e-15:
                raise ParameterError(f"edge {e} has weight {p} below alpha {self.alpha}")
            sums[e[0]] += float(p)
        if (sums > 1 + 1e-12).any():
            raise ParameterError("out-weights exceed 1")

    def matrix(self) -> np.ndarray:
        P = np.zeros((self.graph.n, self.graph.n))
        for (u, _, v), p in self.weights.items():
            P[u, v] += float(p)
        return P


def uniform_weighting(g: LabeledDigraph) -> WeightedGraph:
    """``p(x, a, y) = 1/|Sigma|``; substochastic because ``g`` is deterministic."""
    _require_deterministic(g)
    p = Fraction(1, len(g.alphabet))
    return WeightedGraph(g, {e: p for e in g.edges}, p)


def restricted_matrix(wg: WeightedGraph, rg: RestrictedGraph) -> np.ndarray:
    """Transition matrix ``P_F`` on the product states."""
    weight = {}
    for (u, a, v), p in wg.weights.items():
        weight[(u, a)] = float(p)
    Q = np.zeros((rg.graph.n, rg.graph.n))
    for i, a, j in rg.graph.edges:
        Q[i, j] += weight[(rg.pairs[i][0], a)]
    return Q


@dataclass
class IdentityCheck:
    h_counting: float
    h_spectral: float
    delta: float
    period: int

    def to_json(self) -> dict:
        return {"h_counting": self.h_counting, "h_spectral": self.h_spectral,
                "delta": self.delta, "period": self.period}


def entropy_spectral_identity_check(g: LabeledDigraph, n: int = 400) -> IdentityCheck:
    """Compare the counting entropy with ``log(rho(P) |Sigma|)`` for the
    uniform weighting ``P``.

    The counting side uses exact integer totals ``c(n)`` of words over all
    pairs and the per-period ratio ``(1/p) log(c(n + p) / c(n))``, which
    stays inside one residue class on periodic graphs.
    """
    if not strong_connectivity(g):
        raise ConnectivityError("identity check needs a strongly connected graph")
    _require_deterministic(g)
    period = max(graph_period(g), 1)
    out = g.out
    vec = [1] * g.n
    totals = []
    for _ in range(n + period + 1):
        totals.append(sum(vec))
        nxt = [0] * g.n
        for u in range(g.n):
            # words of length m+1 starting at u: first edge then a length-m word
            nxt[u] = sum(vec[v] for _, v in out[u])
        vec = nxt
    if totals[n] == 0:
        h_count = -math.inf
    else:
        h_count = (math.log(totals[n + period]) - math.log(totals[n])) / period
    wg = uniform_weighting(g)
    rho = _perron_root(wg.matrix())
    h_spec = math.log(rho * len(g.alphabet)) if rho > 0 else -math.inf
    delta = 0.0 if h_count == h_spec else abs(h_count - h_spec)
    return IdentityCheck(h_count, h_spec, delta, period)


@dataclass
class SubstochasticReport:
    k: int
    eps0: float
    max_row_sum: float
    passed: bool
    powers: dict = field(default_factory=dict)  # m -> (max row of Q^{mk}, (1 - eps0)^m)

    def to_json(self) -> dict:
        return {"k": self.k, "eps0": self.eps0, "max_row_sum": self.max_row_sum,
                "pass": self.passed,
                "powers": {str(m): list(v) for m, v in sorted(self.powers.items())}}


def substochastic_bound_check(wg: WeightedGraph, F: Iterable[str], D: int | None = None,
                              powers: Iterable[int] = (2, 3)) -> SubstochasticReport:
    """Row sums of ``P_F^(k)``, ``k = D + R``, against ``1 - alpha^k``.

    The reported maximum is over rows started at ``(x, root)``, i.e. the
    rows of ``P_F^(k)`` itself; higher powers are checked on every product
    state, which is the stronger statement.
    """
    g = wg.graph
    F = validate_factors(F, g.alphabet)
    failures = []
    if not F:
        failures.append("nonempty_F")
    if not strong_connectivity(g):
        failures.append("strongly_connected")
    D_cert = relative_denseness(g, F) if F else None
    if D_cert is None:
        failures.append("relatively_dense")
    if failures:
        raise HypothesisViolation(failures)
    D = D_cert if D is None else D
    R = max(len(w) for w in F)
    k = D + R
    eps0 = float(wg.alpha) ** k
    rg = restrict(g, F)
    Q = restricted_matrix(wg, rg)
    Qk = np.linalg.matrix_power(Q, k)
    rows = Qk.sum(axis=1)
    sources = [rg.source(x) for x in range(g.n)]
    max_row = float(rows[sources].max())
    passed = max_row <= 1 - eps0 + 1e-12
    checks = {}
    for m in powers:
        mrow = float(np.linalg.matrix_power(Qk, m).sum(axis=1).max())
        bound = (1 - eps0) ** m
        checks[m] = (mrow, bound)
        passed = passed and mrow <= bound + 1e-12
    return SubstochasticReport(k, eps0, max_row, passed, checks)


@dataclass
class RestrictedRho:
    estimate: float            # extrapolated from the DP root sequence
    exact: float               # largest Perron root on a source-to-target path
    sequence: SpectralEstimate | None


def restricted_rho(wg: WeightedGraph, F: Iterable[str], x, y, n_max: int = 400) -> RestrictedRho:
    """``rho_{x,y}(P_F) = limsup p_F^(n)(x, y)^(1/n)``."""
    g = wg.graph
    F = validate_factors(F, g.alphabet)
    if not F:
        raise ParameterError("the forbidden set must be non-empty")
    rg = restrict(g, F)
    Q = restricted_matrix(wg, rg)
    src, tgt = rg.source(x), rg.targets(y)
    exact = growth_rate(Q, src, tgt)
    vec = np.zeros(Q.shape[0])
    vec[src] = 1.0
    logp = np.full(n_max + 1, -np.inf)
    scale = 0.0
    for n in range(n_max + 1):
        if n:
            vec = vec @ Q
            total = vec.sum()
            if total <= 0:
                break
            scale += math.log(total)
            vec /= total
        mass = vec[tgt].sum()
        if mass > 0:
            logp[n] = scale + math.log(mass)
    try:
        seq = rho_from_log_sequence(logp)
        est = seq.rho
    except Exception:
        seq, est = None, 0.0
    return RestrictedRho(est, exact, seq)


@dataclass
class HarmonicTransform:
    pair: PerronPair
    weights: dict        # edge -> p^h(e)
    row_sums: np.ndarray
    K: int
    bound: float         # (alpha / rho)^(K + 1)

    @property
    def min_weight(self) -> float:
        return min(self.weights.values())


def harmonic_transform(wg: WeightedGraph, K: int | None = None) -> HarmonicTransform:
    """h-transform of a strongly connected weighted graph by its Perron pair."""
    g = wg.graph
    if K is None:
        K = uniform_connectedness(g)
        if K is None:
            raise ConnectivityError("h-transform needs a strongly connected graph")
    P = wg.matrix()
    pair = perron(P) if g.n > 1 else PerronPair(float(P[0, 0]), np.ones(1))
    h, rho = pair.h, pair.rho
    if rho <= 0:
        raise ConnectivityError("Perron root is zero")
    weights = {e: float(p) * h[e[2]] / (rho * h[e[0]]) for e, p in wg.weights.items()}
    rows = h_transform(P, h, rho).sum(axis=1)
    return HarmonicTransform(pair, weights, rows, K, (float(wg.alpha) / rho) ** (K + 1))
