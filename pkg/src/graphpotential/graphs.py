"""Weighted graphs (edge weights b, killing potential c, vertex measure m).

A :class:`GraphSource` is a lazy, immutable view of a possibly infinite
graph: vertices are only ever materialized through ``neighbors``.  The
built-in families are integer lattices, rooted regular trees, and
birth-death half-lines; finite graphs come from explicit edge lists or
the line-oriented text format (see :func:`parse_edge_list`).

Edge weights must be symmetric (b(x,y) = b(y,x)), zero on the diagonal,
and each vertex has finitely many neighbors.  Measures are strictly
positive, potentials nonnegative.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Mapping

from .errors import (
    AsymmetricInput,
    Disconnected,
    DuplicateEdge,
    InvalidClampRange,
    NonPositiveMeasure,
    NonPositiveWeight,
    ParseError,
    SelfLoop,
    UnknownVertex,
)

Vertex = Hashable


@dataclass(frozen=True)
class GraphSource:
    """Lazy weighted graph with measure.

    ``neighbors(x)`` returns the finite list of ``(y, b(x, y))`` pairs
    with ``b(x, y) > 0``; ``potential`` and ``measure`` give c(x) >= 0
    and m(x) > 0.  ``key_of``/``vertex_of`` translate between vertices
    and canonical whitespace-free string keys.  Instances are immutable
    and the callables are pure, so sources can be shared freely across
    threads.
    """

    kind: str
    neighbors: Callable[[Vertex], list[tuple[Vertex, float]]]
    potential: Callable[[Vertex], float]
    measure: Callable[[Vertex], float]
    key_of: Callable[[Vertex], str]
    vertex_of: Callable[[str], Vertex]
    params: dict = field(default_factory=dict)
    vertices: tuple | None = None  # finite graphs only

    @property
    def is_finite(self) -> bool:
        return self.vertices is not None

    def spec_string(self) -> str:
        """One-line reproducible description (echoed in reports)."""
        return self.params.get("spec", self.kind)


class GraphFunction:
    """Finitely supported real function on vertices (sparse map).

    Stored entries are nonzero; everything outside the support is 0.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries: Mapping[Vertex, float] | Iterable[tuple[Vertex, float]] = ()):
        items = entries.items() if isinstance(entries, Mapping) else entries
        self._entries = {x: float(v) for x, v in items if v != 0.0}

    @classmethod
    def delta(cls, x: Vertex, value: float = 1.0) -> "GraphFunction":
        return cls({x: value})

    def value(self, x: Vertex) -> float:
        return self._entries.get(x, 0.0)

    def items(self):
        return self._entries.items()

    def support(self):
        return self._entries.keys()

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other) -> bool:
        if isinstance(other, GraphFunction):
            return self._entries == other._entries
        return NotImplemented

    def __repr__(self) -> str:
        return f"GraphFunction({self._entries!r})"


def contract(u: GraphFunction, kind: str, lo: float = 0.0, hi: float = 1.0) -> GraphFunction:
    """Apply a normal contraction pointwise: ``abs`` or ``clamp`` to [lo, hi].

    Clamping requires lo <= 0 <= hi so that 0 maps to 0 and the result
    stays finitely supported.  Energy never increases under either.
    """
    if kind == "abs":
        return GraphFunction({x: abs(v) for x, v in u.items()})
    if kind == "clamp":
        if not (lo <= 0.0 <= hi):
            raise InvalidClampRange(f"clamp range [{lo}, {hi}] must contain 0")
        return GraphFunction({x: min(max(v, lo), hi) for x, v in u.items()})
    raise InvalidClampRange(f"unknown contraction kind {kind!r}")


def degree(g: GraphSource, x: Vertex) -> float:
    """Generalized vertex degree: sum of incident weights plus c(x)."""
    return sum(w for _, w in g.neighbors(x)) + g.potential(x)


def connected_in_window(
    g: GraphSource, window: Iterable[Vertex], x: Vertex, y: Vertex
) -> list[Vertex] | None:
    """Breadth-first path from x to y staying inside ``window``, or None."""
    members = set(window)
    if x not in members or y not in members:
        raise UnknownVertex(f"{x!r} or {y!r} not in window")
    if x == y:
        return [x]
    parent: dict[Vertex, Vertex] = {x: x}
    queue = deque([x])
    while queue:
        u = queue.popleft()
        for v, _w in g.neighbors(u):
            if v in members and v not in parent:
                parent[v] = u
                if v == y:
                    path = [y]
                    while path[-1] != x:
                        path.append(parent[path[-1]])
                    path.reverse()
                    return path
                queue.append(v)
    return None


# ---------------------------------------------------------------------------
# measure / potential overrides for the built-in families


def _scalar_field(spec: tuple | None, default: float, name: str, allow_pow: bool):
    """Build a vertex->value callable from ('const', v) or ('pow', gamma).

    The power form (n+1)**gamma is only meaningful on the half-line.
    """
    if spec is None:
        return (lambda x: default), f"const:{default}"
    form, value = spec
    if form == "const":
        v = float(value)
        return (lambda x: v), f"const:{v}"
    if form == "pow":
        if not allow_pow:
            raise ParseError(f"{name} pow form only supported on birth_death", 0)
        gamma = float(value)
        return (lambda n: float(n + 1) ** gamma), f"pow:{gamma}"
    raise ParseError(f"unknown {name} spec {form!r}", 0)


def _check_field_signs(measure_spec, potential_spec):
    if measure_spec is not None and measure_spec[0] == "const" and float(measure_spec[1]) <= 0:
        raise NonPositiveMeasure(f"measure {measure_spec[1]} must be > 0")
    if potential_spec is not None and potential_spec[0] == "const" and float(potential_spec[1]) < 0:
        raise NonPositiveWeight(f"potential {potential_spec[1]} must be >= 0")


# ---------------------------------------------------------------------------
# built-in families


def lattice(d: int, measure_spec: tuple | None = None, potential_spec: tuple | None = None) -> GraphSource:
    """Integer lattice Z^d with unit edge weights.

    Vertices are d-tuples of ints; keys are comma-joined coordinates
    ("0,-3").  Defaults m == 1 and c == 0 are overridable by constants.
    """
    if d < 1:
        raise UnknownVertex(f"lattice dimension {d} must be >= 1")
    _check_field_signs(measure_spec, potential_spec)
    m_fn, m_str = _scalar_field(measure_spec, 1.0, "measure", allow_pow=False)
    c_fn, c_str = _scalar_field(potential_spec, 0.0, "potential", allow_pow=False)

    def check(x):
        if not (isinstance(x, tuple) and len(x) == d and all(isinstance(t, int) for t in x)):
            raise UnknownVertex(f"{x!r} is not a Z^{d} vertex")
        return x

    def neighbors(x):
        check(x)
        out = []
        for i in range(d):
            for s in (1, -1):
                y = x[:i] + (x[i] + s,) + x[i + 1 :]
                out.append((y, 1.0))
        return out

    def key_of(x):
        check(x)
        return ",".join(str(t) for t in x)

    def vertex_of(key):
        try:
            coords = tuple(int(t) for t in key.split(","))
        except ValueError:
            raise UnknownVertex(f"bad lattice key {key!r}") from None
        return check(coords)

    return GraphSource(
        kind="lattice",
        neighbors=neighbors,
        potential=lambda x: c_fn(check(x)),
        measure=lambda x: m_fn(check(x)),
        key_of=key_of,
        vertex_of=vertex_of,
        params={"spec": f"lattice:{d}", "d": d, "measure": m_str, "potential": c_str},
    )


def regular_tree(k: int, measure_spec: tuple | None = None, potential_spec: tuple | None = None) -> GraphSource:
    """Rooted tree in which every vertex has k children (unit weights).

    Vertices are heap indices (root = 1, children of v are
    k*(v-1)+2 .. k*(v-1)+k+1); keys are path strings "root", "root.0.1".
    """
    if k < 2:
        raise UnknownVertex(f"branching {k} must be >= 2")
    _check_field_signs(measure_spec, potential_spec)
    m_fn, m_str = _scalar_field(measure_spec, 1.0, "measure", allow_pow=False)
    c_fn, c_str = _scalar_field(potential_spec, 0.0, "potential", allow_pow=False)

    def check(v):
        if not isinstance(v, int) or v < 1:
            raise UnknownVertex(f"{v!r} is not a tree vertex")
        return v

    def neighbors(v):
        check(v)
        first_child = k * (v - 1) + 2
        out = [(first_child + i, 1.0) for i in range(k)]
        if v > 1:
            out.append(((v - 2) // k + 1, 1.0))
        return out

    def key_of(v):
        check(v)
        digits = []
        while v > 1:
            digits.append((v - 2) % k)
            v = (v - 2) // k + 1
        return "root" + "".join(f".{i}" for i in reversed(digits))

    def vertex_of(key):
        parts = key.split(".")
        if parts[0] != "root":
            raise UnknownVertex(f"bad tree key {key!r}")
        v = 1
        for p in parts[1:]:
            try:
                i = int(p)
            except ValueError:
                raise UnknownVertex(f"bad tree key {key!r}") from None
            if not 0 <= i < k:
                raise UnknownVertex(f"child index {i} out of range in {key!r}")
            v = k * (v - 1) + 2 + i
        return v

    return GraphSource(
        kind="regular_tree",
        neighbors=neighbors,
        potential=lambda v: c_fn(check(v)),
        measure=lambda v: m_fn(check(v)),
        key_of=key_of,
        vertex_of=vertex_of,
        params={"spec": f"tree:{k}", "k": k, "measure": m_str, "potential": c_str},
    )


def birth_death(beta: float, measure_spec: tuple | None = None, potential_spec: tuple | None = None) -> GraphSource:
    """Half-line 0 -- 1 -- 2 -- ... with b(n, n+1) = (n+1)**beta.

    Measure and potential accept ('const', v) or ('pow', gamma), the
    latter meaning (n+1)**gamma.
    """
    if beta < 0:
        raise NonPositiveWeight(f"weight exponent {beta} must be >= 0")
    _check_field_signs(measure_spec, potential_spec)
    m_fn, m_str = _scalar_field(measure_spec, 1.0, "measure", allow_pow=True)
    c_fn, c_str = _scalar_field(potential_spec, 0.0, "potential", allow_pow=True)

    def check(n):
        if not isinstance(n, int) or n < 0:
            raise UnknownVertex(f"{n!r} is not a half-line vertex")
        return n

    def edge_weight(low):
        # weight of the edge {low, low+1}; same expression from both ends
        return float(low + 1) ** beta

    def neighbors(n):
        check(n)
        out = [(n + 1, edge_weight(n))]
        if n > 0:
            out.append((n - 1, edge_weight(n - 1)))
        return out

    def vertex_of(key):
        try:
            n = int(key)
        except ValueError:
            raise UnknownVertex(f"bad half-line key {key!r}") from None
        return check(n)

    return GraphSource(
        kind="birth_death",
        neighbors=neighbors,
        potential=lambda n: c_fn(check(n)),
        measure=lambda n: m_fn(check(n)),
        key_of=lambda n: str(check(n)),
        vertex_of=vertex_of,
        params={"spec": f"bd:{beta}", "beta": beta, "measure": m_str, "potential": c_str},
    )


def build_finite(
    edge_list: Iterable[tuple[Vertex, Vertex, float]],
    potential: Mapping[Vertex, float] | None = None,
    measure: Mapping[Vertex, float] | None = None,
) -> GraphSource:
    """Finite graph from an explicit symmetric edge list.

    Each undirected edge may be given once or as a consistent pair
    (x,y,w)/(y,x,w); conflicting weights raise ``AsymmetricInput`` and
    repeated ordered pairs raise ``DuplicateEdge``.  Vertices mentioned
    only in the measure/potential maps become isolated vertices.
    """
    potential = dict(potential or {})
    measure = dict(measure or {})
    adjacency: dict[Vertex, dict[Vertex, float]] = {}
    seen: dict[tuple, float] = {}
    for x, y, w in edge_list:
        if x == y:
            raise SelfLoop(f"self-loop at {x!r}")
        w = float(w)
        if w <= 0:
            raise NonPositiveWeight(f"edge ({x!r}, {y!r}) has weight {w}")
        if (x, y) in seen:
            raise DuplicateEdge(f"edge ({x!r}, {y!r}) listed twice")
        if (y, x) in seen and seen[(y, x)] != w:
            raise AsymmetricInput(
                f"edge ({x!r}, {y!r}) given with weights {seen[(y, x)]} and {w}"
            )
        seen[(x, y)] = w
        adjacency.setdefault(x, {})[y] = w
        adjacency.setdefault(y, {})[x] = w
    for x, c in potential.items():
        if c < 0:
            raise NonPositiveWeight(f"potential c({x!r}) = {c} must be >= 0")
        adjacency.setdefault(x, {})
    for x, m in measure.items():
        if m <= 0:
            raise NonPositiveMeasure(f"measure m({x!r}) = {m} must be > 0")
        adjacency.setdefault(x, {})

    vertices = tuple(adjacency.keys())
    vertex_set = frozenset(vertices)
    nbrs = {x: sorted(d.items(), key=lambda t: str(t[0])) for x, d in adjacency.items()}

    def check(x):
        if x not in vertex_set:
            raise UnknownVertex(f"{x!r} not in graph")
        return x

    return GraphSource(
        kind="finite_explicit",
        neighbors=lambda x: list(nbrs[check(x)]),
        potential=lambda x: float(potential.get(check(x), 0.0)),
        measure=lambda x: float(measure.get(check(x), 1.0)),
        key_of=lambda x: str(check(x)),
        vertex_of=lambda key: check(key),
        params={"spec": f"finite:{len(vertices)}v"},
        vertices=vertices,
    )


def custom(
    neighbors: Callable[[Vertex], list[tuple[Vertex, float]]],
    potential: Callable[[Vertex], float] | None = None,
    measure: Callable[[Vertex], float] | None = None,
    key_of: Callable[[Vertex], str] = str,
    vertex_of: Callable[[str], Vertex] | None = None,
    spec: str = "custom",
) -> GraphSource:
    """Wrap user-supplied pure callables as a graph source."""
    return GraphSource(
        kind="custom",
        neighbors=neighbors,
        potential=potential or (lambda x: 0.0),
        measure=measure or (lambda x: 1.0),
        key_of=key_of,
        vertex_of=vertex_of or (lambda k: k),
        params={"spec": spec},
    )


# ---------------------------------------------------------------------------
# edge-list text format


def parse_edge_list(text: str) -> GraphSource:
    """Parse the line-oriented edge-list format.

    ``e <x> <y> <w>`` declares an edge, ``m <x> <val>`` overrides the
    measure (default 1), ``c <x> <val>`` the potential (default 0);
    ``#`` starts a comment.  Vertex keys are whitespace-free strings.
    """
    edges: list[tuple[str, str, float]] = []
    potential: dict[str, float] = {}
    measure: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        tag = parts[0]
        try:
            if tag == "e":
                if len(parts) != 4:
                    raise ParseError("expected 'e <x> <y> <w>'", lineno)
                edges.append((parts[1], parts[2], float(parts[3])))
            elif tag == "m":
                if len(parts) != 3:
                    raise ParseError("expected 'm <x> <val>'", lineno)
                measure[parts[1]] = float(parts[2])
            elif tag == "c":
                if len(parts) != 3:
                    raise ParseError("expected 'c <x> <val>'", lineno)
                potential[parts[1]] = float(parts[2])
            else:
                raise ParseError(f"unknown record {tag!r}", lineno)
        except ValueError:
            raise ParseError(f"bad number in {line!r}", lineno) from None
    return build_finite(edges, potential=potential, measure=measure)


def serialize(g: GraphSource, window: Iterable[Vertex]) -> str:
    """Serialize the finite subgraph induced by ``window`` to the text format.

    Round-trips through :func:`parse_edge_list` for finite graphs.
    """
    members = list(dict.fromkeys(window))
    member_set = set(members)
    lines = []
    emitted = set()
    for x in members:
        kx = g.key_of(x)
        for y, w in g.neighbors(x):
            if y not in member_set:
                continue
            ky = g.key_of(y)
            if (ky, kx) in emitted:
                continue
            emitted.add((kx, ky))
            lines.append(f"e {kx} {ky} {w!r}")
    for x in members:
        m = g.measure(x)
        if m != 1.0:
            lines.append(f"m {g.key_of(x)} {m!r}")
    for x in members:
        c = g.potential(x)
        if c != 0.0:
            lines.append(f"c {g.key_of(x)} {c!r}")
    return "\n".join(lines) + "\n"


def from_spec(spec: str, measure_spec: tuple | None = None, potential_spec: tuple | None = None) -> GraphSource:
    """Build a graph from a CLI-style spec: lattice:<d>, tree:<k>, bd:<beta>, file:<path>."""
    name, _, arg = spec.partition(":")
    if name == "lattice":
        return lattice(int(arg), measure_spec, potential_spec)
    if name == "tree":
        return regular_tree(int(arg), measure_spec, potential_spec)
    if name == "bd":
        return birth_death(float(arg), measure_spec, potential_spec)
    if name == "file":
        if measure_spec is not None or potential_spec is not None:
            raise ParseError("measure/potential overrides apply to built-in families only", 0)
        with open(arg, "r", encoding="utf-8") as fh:
            return parse_edge_list(fh.read())
    raise ParseError(f"unknown graph spec {spec!r}", 0)


def path_graph(n: int) -> GraphSource:
    """Unit-weight path 0 -- 1 -- ... -- n-1 (test helper)."""
    return build_finite([(i, i + 1, 1.0) for i in range(n - 1)])
