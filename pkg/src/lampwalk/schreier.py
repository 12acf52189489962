"""Schreier graphs ``X(G, K, psi)`` and their word-problem languages.

Vertices are right cosets ``Kg`` and every label ``a`` gives an edge
``Kg -> Kg psi(a)``. Cosets get canonical representatives per family:

* finite groups given by a multiplication table: the smallest element
  index in the coset;
* ``Z^d`` modulo a subgroup: reduction against an integer echelon basis
  of the subgroup;
* free products of copies of ``Z_2``: reduced words (trivial ``K`` only).

Infinite quotients are explored breadth first up to a radius. Edges
leaving the explored ball are dropped, so counts of words of length
``n`` are exact only for ``n <= radius``.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import EncodingError, HorizonError, ParameterError, PresentationError
from .languages import LabeledDigraph, count_sequence, restrict


class Group:
    family = ""
    finite = False

    @property
    def identity(self):
        raise NotImplementedError

    def mul(self, g, h):
        raise NotImplementedError

    def parse(self, text: str):
        raise NotImplementedError

    def format(self, g) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class FiniteGroup(Group):
    """Group on ``0..n-1`` given by its multiplication table."""

    table: tuple[tuple[int, ...], ...]
    names: tuple[str, ...] | None = None
    family = "finite"
    finite = True

    def __post_init__(self):
        n = len(self.table)
        t = self.table
        if n == 0 or any(len(r) != n for r in t):
            raise ParameterError("multiplication table must be square and non-empty")
        if any(not 0 <= x < n for r in t for x in r):
            raise ParameterError("table entries out of range")
        ids = [e for e in range(n) if all(t[e][g] == g and t[g][e] == g for g in range(n))]
        if not ids:
            raise ParameterError("table has no identity")
        e = ids[0]
        for g in range(n):
            if not any(t[g][h] == e and t[h][g] == e for h in range(n)):
                raise ParameterError(f"element {g} has no inverse")
        for a, b, c in itertools.product(range(n), repeat=3):
            if t[t[a][b]][c] != t[a][t[b][c]]:
                raise ParameterError(f"table is not associative at {(a, b, c)}")
        if self.names is not None and len(set(self.names)) != n:
            raise ParameterError("need one distinct name per element")

    @property
    def order(self) -> int:
        return len(self.table)

    @property
    def identity(self) -> int:
        n = self.order
        return next(e for e in range(n) if all(self.table[e][g] == g for g in range(n)))

    def mul(self, g, h):
        return self.table[g][h]

    def parse(self, text):
        text = str(text).strip()
        if self.names and text in self.names:
            return self.names.index(text)
        try:
            g = int(text)
        except ValueError:
            raise EncodingError(f"unknown group element {text!r}") from None
        if not 0 <= g < self.order:
            raise EncodingError(f"group element {g} out of range")
        return g

    def format(self, g):
        return self.names[g] if self.names else str(g)


def cyclic_group(m: int) -> FiniteGroup:
    """Z_m with elements named ``1, t, t2, ...``."""
    if m < 1:
        raise ParameterError("cyclic group order must be positive")
    names = tuple("1" if i == 0 else ("t" if i == 1 else f"t{i}") for i in range(m))
    return FiniteGroup(tuple(tuple((i + j) % m for j in range(m)) for i in range(m)), names)


def symmetric_group(n: int) -> FiniteGroup:
    """S_n acting on ``0..n-1``; ``g*h`` applies ``g`` first, then ``h``."""
    perms = list(itertools.permutations(range(n)))
    index = {p: i for i, p in enumerate(perms)}
    table = tuple(tuple(index[tuple(h[g[i]] for i in range(n))] for h in perms) for g in perms)
    names = tuple("".join(map(str, p)) for p in perms)
    return FiniteGroup(table, names)


@dataclass(frozen=True)
class LatticeGroup(Group):
    d: int = 1
    family = "zd"

    @property
    def identity(self):
        return (0,) * self.d

    def mul(self, g, h):
        return tuple(a + b for a, b in zip(g, h))

    def parse(self, text):
        try:
            v = tuple(int(c) for c in str(text).split(":"))
        except ValueError:
            raise EncodingError(f"bad lattice element {text!r}") from None
        if len(v) != self.d:
            raise EncodingError(f"lattice element {text!r} needs {self.d} coordinates")
        return v

    def format(self, g):
        return ":".join(map(str, g))


@dataclass(frozen=True)
class FreeProductZ2(Group):
    """Free product of ``k`` copies of Z_2 on involutions ``s0..s{k-1}``."""

    k: int = 2
    family = "freeprod"

    def __post_init__(self):
        if self.k < 2:
            raise ParameterError("need at least two factors")

    @property
    def identity(self):
        return ()

    def mul(self, g, h):
        w = list(g)
        for s in h:
            if w and w[-1] == s:
                w.pop()
            else:
                w.append(s)
        return tuple(w)

    def parse(self, text):
        text = str(text).strip()
        if text in ("", "1", "e"):
            return ()
        w = ()
        for part in text.split("."):
            if not (part.startswith("s") and part[1:].isdigit() and int(part[1:]) < self.k):
                raise EncodingError(f"bad free-product element {text!r}")
            w = self.mul(w, (int(part[1:]),))
        return w

    def format(self, g):
        return ".".join(f"s{i}" for i in g) or "1"


def echelon_basis(vectors: Iterable[Sequence[int]], d: int) -> list[tuple[int, ...]]:
    """Integer row-echelon basis of the lattice spanned by ``vectors``.

    Pivots are positive and strictly move right from row to row; entries
    of a row left of its pivot vanish.
    """
    rows = [list(v) for v in vectors if any(v)]
    basis = []
    col = 0
    while rows and col < d:
        rows = [r for r in rows if any(r)]
        active = [r for r in rows if r[col] != 0]
        if not active:
            col += 1
            continue
        # Euclid on column ``col`` until a single row keeps a non-zero entry
        while len(active) > 1:
            active.sort(key=lambda r: abs(r[col]))
            p = active[0]
            for r in active[1:]:
                q = r[col] // p[col]
                for i in range(d):
                    r[i] -= q * p[i]
            active = [r for r in active if r[col] != 0]
        pivot = active[0]
        if pivot[col] < 0:
            pivot = [-x for x in pivot]
        basis.append(tuple(pivot))
        rows = [r for r in rows if r[col] == 0]
        col += 1
    return basis


def reduce_mod(v: Sequence[int], basis: list[tuple[int, ...]]) -> tuple[int, ...]:
    """Canonical representative of ``v`` modulo the lattice of ``basis``."""
    v = list(v)
    for row in basis:
        c = next(i for i, x in enumerate(row) if x)
        q = v[c] // row[c]
        if q:
            v = [a - q * b for a, b in zip(v, row)]
    return tuple(v)


@dataclass(frozen=True)
class GroupSpec:
    group: Group
    subgroup: tuple = ()  # generators of K; empty means trivial

    def coset_key(self):
        """Function mapping a group element to its coset representative."""
        G = self.group
        if isinstance(G, FiniteGroup):
            K = subgroup_closure(G, self.subgroup)
            return lambda g: min(G.mul(k, g) for k in K)
        if isinstance(G, LatticeGroup):
            basis = echelon_basis(self.subgroup, G.d)
            return lambda g: reduce_mod(g, basis)
        if isinstance(G, FreeProductZ2):
            if any(s != () for s in self.subgroup):
                raise ParameterError("free products support only the trivial subgroup")
            return lambda g: g
        raise ParameterError(f"unsupported group family {G.family!r}")


def subgroup_closure(G: FiniteGroup, gens: Iterable[int]) -> frozenset:
    K = {G.identity}
    frontier = list(K)
    gens = list(gens)
    while frontier:
        new = []
        for k in frontier:
            for s in gens:
                x = G.mul(k, s)
                if x not in K:
                    K.add(x)
                    new.append(x)
        frontier = new
    return frozenset(K)


def index_by_orbits(G: FiniteGroup, gens: Iterable[int]) -> int:
    """``[G : K]`` by partitioning ``G`` into right cosets ``Kg``."""
    K = subgroup_closure(G, gens)
    seen, count = set(), 0
    for g in range(G.order):
        if g not in seen:
            count += 1
            seen |= {G.mul(k, g) for k in K}
    return count


def check_presentation(G: Group, psi: dict):
    """Raise :class:`PresentationError` unless ``psi(Sigma)`` generates ``G``
    as a semigroup (exhaustive for finite groups; by the presence of
    ``+-e_i`` for lattices and of every involution for free products)."""
    images = list(psi.values())
    if not images:
        raise PresentationError("empty presentation")
    if isinstance(G, FiniteGroup):
        reached = set(images)
        frontier = list(images)
        while frontier:
            new = []
            for g in frontier:
                for s in images:
                    x = G.mul(g, s)
                    if x not in reached:
                        reached.add(x)
                        new.append(x)
            frontier = new
        if len(reached) != G.order:
            raise PresentationError(f"images generate only {len(reached)} of {G.order} elements")
    elif isinstance(G, LatticeGroup):
        for i in range(G.d):
            for s in (1, -1):
                e = tuple(s if j == i else 0 for j in range(G.d))
                if e not in images:
                    raise PresentationError(f"lattice presentation lacks {G.format(e)}")
    elif isinstance(G, FreeProductZ2):
        for i in range(G.k):
            if (i,) not in images:
                raise PresentationError(f"free-product presentation lacks s{i}")


@dataclass
class SchreierGraph:
    graph: LabeledDigraph
    cosets: list          # representative of each vertex; vertex 0 is K
    truncated: bool
    radius: int | None
    spec: GroupSpec
    psi: dict

    @property
    def root(self) -> int:
        return 0

    def to_json(self) -> dict:
        G = self.spec.group
        obj = self.graph.to_json()
        obj["names"] = [G.format(c) for c in self.cosets]
        obj["truncated"] = self.truncated
        obj["radius"] = self.radius
        obj["root"] = self.root
        return obj


def build_schreier(spec: GroupSpec, psi: dict, radius: int | None = None) -> SchreierGraph:
    """Right-coset graph of ``K`` in ``G`` with labels from ``psi``."""
    G = spec.group
    letters = sorted(psi)
    if any(not isinstance(a, str) or len(a) != 1 for a in letters):
        raise PresentationError("labels must be single characters")
    check_presentation(G, psi)
    if not G.finite:
        if radius is None or radius < 1:
            raise ParameterError("infinite groups need radius >= 1")
    key = spec.coset_key()
    root = key(G.identity)
    index = {root: 0}
    depth = [0]
    cosets = [root]
    edges = []
    truncated = False
    queue = deque([root])
    while queue:
        c = queue.popleft()
        i = index[c]
        for a in letters:
            t = key(G.mul(c, psi[a]))
            if t not in index:
                if not G.finite and depth[i] >= radius:
                    truncated = True
                    continue
                index[t] = len(cosets)
                cosets.append(t)
                depth.append(depth[i] + 1)
                queue.append(t)
            edges.append((i, a, index[t]))
    g = LabeledDigraph(len(cosets), tuple(letters), tuple(edges))
    return SchreierGraph(g, cosets, truncated, None if G.finite else radius, spec, dict(psi))


@dataclass
class WordProblem:
    """``L(G, K, psi) = {w : psi(w) in K} = L_{o,o}`` of a Schreier graph."""

    schreier: SchreierGraph

    @property
    def horizon(self) -> int | None:
        sg = self.schreier
        return sg.radius if sg.truncated else None

    def counts(self, n_max: int, F: Iterable[str] = ()) -> list[int]:
        if self.horizon is not None and n_max > self.horizon:
            raise HorizonError(f"counts beyond length {self.horizon} are not exact "
                               "on this truncated graph")
        g = self.schreier.graph
        F = tuple(F)
        if F:
            return restrict(g, F).counts(0, 0, n_max)
        return count_sequence(g, 0, [0], n_max)

    def count(self, n: int, F: Iterable[str] = ()) -> int:
        return self.counts(n, F)[n]


def word_problem_language(sg: SchreierGraph) -> WordProblem:
    return WordProblem(sg)


def brute_force_word_problem(spec: GroupSpec, psi: dict, n: int) -> int:
    """Number of words of length ``n`` whose image lies in ``K``."""
    G, key = spec.group, spec.coset_key()
    root = key(G.identity)
    total = 0
    for word in itertools.product(sorted(psi), repeat=n):
        g = G.identity
        for a in word:
            g = G.mul(g, psi[a])
        total += key(g) == root
    return total


def parse_group(text: str) -> Group:
    """``z2``, ``cyclic:m``, ``sym:n``, ``zd:d`` or ``freeprod:k``."""
    head, _, arg = text.partition(":")
    try:
        if head == "z2":
            return cyclic_group(2)
        if head == "cyclic":
            return cyclic_group(int(arg))
        if head == "sym":
            return symmetric_group(int(arg))
        if head == "zd":
            return LatticeGroup(int(arg))
        if head == "freeprod":
            return FreeProductZ2(int(arg))
    except ValueError:
        pass
    raise ParameterError(f"cannot parse group {text!r}")


def parse_subgroup(G: Group, text: str) -> tuple:
    if text in ("", "trivial"):
        return ()
    return tuple(G.parse(t) for t in text.split(","))


def parse_psi(G: Group, text: str) -> dict:
    psi = {}
    for item in text.split(","):
        label, sep, value = item.partition("=")
        if not sep:
            raise ParameterError(f"bad presentation entry {item!r}; expected a=g")
        psi[label.strip()] = G.parse(value)
    return psi
