"""Base graph families with exact geometry.

Every family is an immutable value exposing an origin, neighbours in
canonical order and an exact graph distance. Vertex encodings are plain
hashable tuples so they can be stored in sets (lamp supports, ranges):

* ``Lattice(d)``: integer coordinate tuple of length ``d``.
* ``HomTree(M)``: freely reduced word over ``M`` involutive generators,
  as a tuple of generator indices with no index repeated adjacently.
* ``OrientedTree(q)``: pair ``(k, digits)``. ``k >= 0`` is the index of
  the vertex ``x ^ o`` on the geodesic from the origin towards the fixed
  end (so the origin's father is ``(1, ())``) and ``digits`` is the path
  of son indices descending from it. Son ``0`` of a spine vertex ``k >= 1``
  is the spine vertex ``k - 1``, hence for ``k >= 1`` a non-empty digit
  string never starts with ``0``.
* ``Cycle(m)``: ``(i,)`` with ``0 <= i < m``; only used for finite examples
  such as the lamplighter graph over the two-vertex graph.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Any, Hashable

from .errors import EncodingError, FamilyMismatchError, ParameterError

Vertex = Hashable


class BaseGraph:
    """Common interface of the infinite (or small finite) base graphs."""

    family: str = ""

    @property
    def origin(self) -> Vertex:
        raise NotImplementedError

    @property
    def degree(self) -> int:
        raise NotImplementedError

    def validate(self, v: Any) -> Vertex:
        raise NotImplementedError

    def _neighbors(self, v: Vertex) -> list[Vertex]:
        raise NotImplementedError

    def _distance(self, u: Vertex, v: Vertex) -> int:
        raise NotImplementedError

    def neighbors(self, v: Any) -> list[Vertex]:
        return self._neighbors(self.validate(v))

    def distance(self, u: Any, v: Any) -> int:
        return self._distance(self.validate(u), self.validate(v))

    def ball(self, radius: int, center: Vertex | None = None) -> list[Vertex]:
        """All vertices within ``radius`` of ``center`` (BFS order)."""
        start = self.origin if center is None else self.validate(center)
        seen = {start: 0}
        order = [start]
        queue = deque([start])
        while queue:
            v = queue.popleft()
            if seen[v] == radius:
                continue
            for w in self._neighbors(v):
                if w not in seen:
                    seen[w] = seen[v] + 1
                    order.append(w)
                    queue.append(w)
        return order

    def spec(self) -> dict:
        raise NotImplementedError

    def to_json(self, v: Vertex) -> Any:
        return list(v)

    def from_json(self, obj: Any) -> Vertex:
        if not isinstance(obj, (list, tuple)):
            raise EncodingError(f"{self.family}: expected a list, got {obj!r}")
        return self.validate(tuple(obj))


def _int_tuple(v: Any, what: str) -> tuple[int, ...]:
    if not isinstance(v, tuple) or not all(
        isinstance(c, int) and not isinstance(c, bool) for c in v
    ):
        raise EncodingError(f"{what}: expected a tuple of ints, got {v!r}")
    return v


@dataclass(frozen=True)
class Lattice(BaseGraph):
    d: int = 1
    family = "lattice"

    def __post_init__(self):
        if self.d < 1:
            raise ParameterError(f"lattice dimension must be >= 1, got {self.d}")

    @property
    def origin(self) -> tuple[int, ...]:
        return (0,) * self.d

    @property
    def degree(self) -> int:
        return 2 * self.d

    def validate(self, v):
        v = _int_tuple(v, "lattice vertex")
        if len(v) != self.d:
            raise EncodingError(f"lattice vertex {v!r} has wrong length (d={self.d})")
        return v

    def _neighbors(self, v):
        out = []
        for i in range(self.d):
            for s in (-1, 1):
                w = list(v)
                w[i] += s
                out.append(tuple(w))
        out.sort()
        return out

    def _distance(self, u, v):
        return sum(abs(a - b) for a, b in zip(u, v))

    def spec(self):
        return {"family": "lattice", "d": self.d}


@dataclass(frozen=True)
class HomTree(BaseGraph):
    """Homogeneous tree of degree ``M``: Cayley graph of the free product of
    ``M`` copies of Z_2."""

    M: int = 3
    family = "homtree"

    def __post_init__(self):
        if self.M < 3:
            raise ParameterError(f"homogeneous tree degree must be >= 3, got {self.M}")

    @property
    def origin(self) -> tuple[int, ...]:
        return ()

    @property
    def degree(self) -> int:
        return self.M

    def validate(self, v):
        v = _int_tuple(v, "tree word")
        for i, g in enumerate(v):
            if not 0 <= g < self.M:
                raise EncodingError(f"generator {g} out of range for M={self.M}")
            if i and v[i - 1] == g:
                raise EncodingError(f"word {v!r} is not freely reduced")
        return v

    def _neighbors(self, v):
        out = []
        for g in range(self.M):
            if v and v[-1] == g:
                out.append(v[:-1])
            else:
                out.append(v + (g,))
        out.sort()
        return out

    def _distance(self, u, v):
        k = 0
        for a, b in zip(u, v):
            if a != b:
                break
            k += 1
        return len(u) + len(v) - 2 * k

    def spec(self):
        return {"family": "homtree", "M": self.M}


@dataclass(frozen=True)
class OrientedTree(BaseGraph):
    """Homogeneous tree of degree ``q + 1`` with a fixed end: every vertex
    has one father (towards the end) and ``q`` sons."""

    q: int = 2
    family = "oriented"

    def __post_init__(self):
        if self.q < 2:
            raise ParameterError(f"oriented tree needs q >= 2, got {self.q}")

    @property
    def origin(self):
        return (0, ())

    @property
    def degree(self) -> int:
        return self.q + 1

    def validate(self, v):
        if not (isinstance(v, tuple) and len(v) == 2):
            raise EncodingError(f"oriented-tree vertex must be (k, digits), got {v!r}")
        k, digits = v
        if not isinstance(k, int) or isinstance(k, bool) or k < 0:
            raise EncodingError(f"spine index must be a non-negative int, got {k!r}")
        digits = _int_tuple(digits, "digit string")
        if any(not 0 <= c < self.q for c in digits):
            raise EncodingError(f"digits {digits!r} outside 0..{self.q - 1}")
        if k >= 1 and digits and digits[0] == 0:
            raise EncodingError(f"non-canonical vertex {v!r}: son 0 of a spine vertex is the spine")
        return v

    # geometry primitives; inputs are assumed canonical
    def father(self, v):
        k, digits = v
        if digits:
            return (k, digits[:-1])
        return (k + 1, ())

    def son(self, v, j: int):
        k, digits = v
        if not digits and k >= 1 and j == 0:
            return (k - 1, ())
        return (k, digits + (j,))

    def sons(self, v):
        return [self.son(v, j) for j in range(self.q)]

    def _height(self, v) -> int:
        return len(v[1]) - v[0]

    def _meet(self, x, y):
        (k1, d1), (k2, d2) = x, y
        if k1 != k2:
            return (max(k1, k2), ())
        n = 0
        for a, b in zip(d1, d2):
            if a != b:
                break
            n += 1
        return (k1, d1[:n])

    def _neighbors(self, v):
        out = [self.father(v)] + self.sons(v)
        out.sort()
        return out

    def _distance(self, u, v):
        m = self._meet(u, v)
        return self._height(u) + self._height(v) - 2 * self._height(m)

    def spec(self):
        return {"family": "oriented", "q": self.q}

    def to_json(self, v):
        return [v[0], list(v[1])]

    def from_json(self, obj):
        if not (isinstance(obj, (list, tuple)) and len(obj) == 2):
            raise EncodingError(f"oriented-tree vertex must be [k, digits], got {obj!r}")
        return self.validate((obj[0], tuple(obj[1])))


@dataclass(frozen=True)
class Cycle(BaseGraph):
    """The cycle Z_m; for ``m = 2`` this is the single edge {a, b}."""

    m: int = 2
    family = "cycle"

    def __post_init__(self):
        if self.m < 2:
            raise ParameterError(f"cycle length must be >= 2, got {self.m}")

    @property
    def origin(self):
        return (0,)

    @property
    def degree(self) -> int:
        return 1 if self.m == 2 else 2

    def validate(self, v):
        v = _int_tuple(v, "cycle vertex")
        if len(v) != 1 or not 0 <= v[0] < self.m:
            raise EncodingError(f"cycle vertex {v!r} out of range for m={self.m}")
        return v

    def _neighbors(self, v):
        i = v[0]
        return sorted({((i - 1) % self.m,), ((i + 1) % self.m,)})

    def _distance(self, u, v):
        k = abs(u[0] - v[0])
        return min(k, self.m - k)

    def spec(self):
        return {"family": "cycle", "m": self.m}


def neighbors(g: BaseGraph, v) -> list:
    return g.neighbors(v)


def graph_distance(g: BaseGraph, u, v) -> int:
    return g.distance(u, v)


def _require_oriented(g: BaseGraph) -> OrientedTree:
    if not isinstance(g, OrientedTree):
        raise FamilyMismatchError(f"operation needs an oriented tree, got family {g.family!r}")
    return g


def height(g: BaseGraph, x) -> int:
    """Busemann height: generation number relative to the origin."""
    g = _require_oriented(g)
    return g._height(g.validate(x))


def meet(g: BaseGraph, x, y):
    """First common vertex of the geodesic rays from ``x`` and ``y`` to the end."""
    g = _require_oriented(g)
    return g._meet(g.validate(x), g.validate(y))


def parse_graph(spec: dict | str) -> BaseGraph:
    """Build a graph from ``{"family": "lattice", "d": 2}`` style specs.

    Short strings ``lattice:2``, ``homtree:3``, ``oriented:2`` and
    ``cycle:2`` are accepted as well.
    """
    if isinstance(spec, str):
        fam, _, arg = spec.partition(":")
        key = {"lattice": "d", "homtree": "M", "oriented": "q", "cycle": "m"}.get(fam)
        if key is None or not arg:
            raise ParameterError(f"cannot parse graph spec {spec!r}")
        spec = {"family": fam, key: int(arg)}
    fam = spec.get("family")
    try:
        if fam == "lattice":
            return Lattice(int(spec["d"]))
        if fam == "homtree":
            return HomTree(int(spec["M"]))
        if fam == "oriented":
            return OrientedTree(int(spec["q"]))
        if fam == "cycle":
            return Cycle(int(spec["m"]))
    except KeyError as exc:
        raise ParameterError(f"graph spec {spec!r} misses parameter {exc}") from None
    raise ParameterError(f"unknown graph family {fam!r}")
