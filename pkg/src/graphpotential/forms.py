"""Energy form, pointwise Laplacian, and window boundary calculus.

Everything here is an exact finite sum over edges touching the supports
involved; identities between these quantities (the summation-by-parts
residual, contraction monotonicity, the path bound) hold to relative
rounding error and are enforced as such by the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt
from typing import Iterable, Mapping, Sequence

from .errors import Disconnected, NotBoundaryVertex, WindowTooSmall
from .graphs import GraphFunction, GraphSource, Vertex, connected_in_window


def fn_value(u, x: Vertex) -> float:
    """Value of a function given as GraphFunction, mapping, callable, or scalar."""
    if isinstance(u, GraphFunction):
        return u.value(x)
    if isinstance(u, Mapping):
        return float(u.get(x, 0.0))
    if callable(u):
        return float(u(x))
    return float(u)


def _support(u) -> Iterable[Vertex]:
    if isinstance(u, GraphFunction):
        return u.support()
    if isinstance(u, Mapping):
        return u.keys()
    raise TypeError("finitely supported function required (GraphFunction or mapping)")


@dataclass(frozen=True)
class EnergyValue:
    """Energy split into its edge and potential parts (both >= 0)."""

    value: float
    edge_part: float
    potential_part: float


@dataclass(frozen=True)
class WindowBoundary:
    """Partition of a finite window into boundary and interior vertices."""

    window: frozenset
    boundary: frozenset
    interior: frozenset


def window_boundary(g: GraphSource, window: Iterable[Vertex]) -> WindowBoundary:
    """Split ``window`` into vertices with/without neighbors outside it."""
    members = frozenset(window)
    bd = frozenset(
        x for x in members if any(y not in members for y, _ in g.neighbors(x))
    )
    return WindowBoundary(window=members, boundary=bd, interior=members - bd)


def apply_laplacian(g: GraphSource, u, x: Vertex) -> float:
    """Pointwise Laplacian (sum of weighted differences plus killing term) / m(x)."""
    ux = fn_value(u, x)
    acc = sum(w * (ux - fn_value(u, y)) for y, w in g.neighbors(x))
    acc += g.potential(x) * ux
    return acc / g.measure(x)


def energy(g: GraphSource, u) -> EnergyValue:
    """Energy of a finitely supported function: edge sum plus potential sum."""
    supp = set(_support(u))
    edge = 0.0
    pot = 0.0
    for x in supp:
        ux = fn_value(u, x)
        for y, w in g.neighbors(x):
            if y in supp:
                edge += 0.5 * w * (ux - fn_value(u, y)) ** 2
            else:
                edge += w * ux * ux
        pot += g.potential(x) * ux * ux
    return EnergyValue(value=edge + pot, edge_part=edge, potential_part=pot)


def energy_pair(g: GraphSource, u, v) -> float:
    """Bilinear extension of the energy; equals energy(u).value when u == v."""
    supp = set(_support(u)) | set(_support(v))
    acc = 0.0
    for x in supp:
        ux, vx = fn_value(u, x), fn_value(v, x)
        for y, w in g.neighbors(x):
            if y in supp:
                acc += 0.5 * w * (ux - fn_value(u, y)) * (vx - fn_value(v, y))
            else:
                acc += w * ux * vx
        acc += g.potential(x) * ux * vx
    return acc


def greens_formula_residual(g: GraphSource, u, v) -> float:
    """Summation-by-parts residual: energy pairing minus the Laplacian pairing.

    Mathematically zero for finitely supported u, v; numerically bounded
    by 1e-12 * (1 + |pairing|).
    """
    pairing = energy_pair(g, u, v)
    lap = sum(
        apply_laplacian(g, u, x) * fn_value(v, x) * g.measure(x) for x in _support(v)
    )
    return pairing - lap


def path_constant(g: GraphSource, x: Vertex, y: Vertex, window: Iterable[Vertex]) -> float:
    """Certified difference bound along a window path.

    Returns K = sqrt(sum of inverse edge weights along a shortest path);
    |u(x) - u(y)| <= K * sqrt(energy(u)) for every finite-energy u.
    """
    path = connected_in_window(g, window, x, y)
    if path is None:
        raise Disconnected(f"{x!r} and {y!r} are not connected in the window")
    if len(path) == 1:
        return 0.0
    acc = 0.0
    for a, b in zip(path, path[1:]):
        w = dict(g.neighbors(a))[b]
        acc += 1.0 / w
    return sqrt(acc)


def normal_derivative(g: GraphSource, u, window: Iterable[Vertex], x: Vertex) -> float:
    """Outward normal derivative at a boundary vertex of a finite window."""
    members = set(window)
    if x not in members or not any(y not in members for y, _ in g.neighbors(x)):
        raise NotBoundaryVertex(f"{x!r} is not a boundary vertex of the window")
    ux = fn_value(u, x)
    return sum(w * (ux - fn_value(u, y)) for y, w in g.neighbors(x) if y in members)


def yamasaki_inner(g: GraphSource, u, v, o: Vertex) -> float:
    """Energy pairing anchored at a base vertex: pairing + u(o) v(o)."""
    return energy_pair(g, u, v) + fn_value(u, o) * fn_value(v, o)


def window_energy_pair(g: GraphSource, u, v, window: Iterable[Vertex]) -> float:
    """Energy pairing restricted to edges with both endpoints in the window."""
    members = set(window)
    acc = 0.0
    for x in members:
        ux, vx = fn_value(u, x), fn_value(v, x)
        for y, w in g.neighbors(x):
            if y in members:
                acc += 0.5 * w * (ux - fn_value(u, y)) * (vx - fn_value(v, y))
        acc += g.potential(x) * ux * vx
    return acc


def boundary_term(g: GraphSource, u, v, window: Iterable[Vertex]) -> float:
    """Boundary pairing sum over bd(window) of u(x) * (outward derivative of v)(x)."""
    wb = window_boundary(g, window)
    acc = 0.0
    for x in wb.boundary:
        ux = fn_value(u, x)
        vx = fn_value(v, x)
        acc += ux * sum(
            w * (vx - fn_value(v, y)) for y, w in g.neighbors(x) if y in wb.window
        )
    return acc


def boundary_term_sequence(g: GraphSource, u, v, exhaustion) -> list[float]:
    """Boundary pairings along an exhaustion.

    Entry n is the bd(K_n) pairing of u against the outward derivative
    of v.  For finitely supported v the support must be interior to the
    first window.  The sequence tends to 0 exactly on recurrent graphs
    for admissible pairs; a monopole-like v keeps it bounded away
    from 0.
    """
    first = exhaustion.window(0)
    if isinstance(u, (GraphFunction, Mapping)) and not callable(u):
        pass  # u may be any bounded window function
    if isinstance(v, GraphFunction) or (isinstance(v, Mapping) and len(v) < len(first)):
        interior = window_boundary(g, first).interior
        supp = set(_support(v)) if isinstance(v, (GraphFunction, Mapping)) else set()
        if supp and not supp <= interior:
            raise WindowTooSmall("support of v must be interior to the first window")
    return [boundary_term(g, u, v, exhaustion.window(i)) for i in range(len(exhaustion))]


def l2_greens_residual(g: GraphSource, u, v, window: Iterable[Vertex]) -> float:
    """Window diagnostic: energy pairing minus the full-window Laplacian pairing.

    Both arguments are treated as window functions; the second slot uses
    the pointwise Laplacian.  On recurrent graphs this residual tends to
    0 along exhaustions for bounded u; it is reported as a diagnostic
    only.
    """
    members = list(window)
    pairing = window_energy_pair(g, u, v, members)
    lap = sum(apply_laplacian(g, v, x) * fn_value(u, x) * g.measure(x) for x in members)
    return pairing - lap


def superharmonic_residuals(
    g: GraphSource, u, window: Iterable[Vertex], tol: float = 1e-12
) -> list[tuple[Vertex, float]]:
    """Interior vertices where the Laplacian of u is negative beyond tol.

    An empty list certifies superharmonicity of u on the window interior.
    """
    wb = window_boundary(g, window)
    out = []
    for x in wb.interior:
        val = apply_laplacian(g, u, x)
        if val < -tol:
            out.append((x, val))
    return out
