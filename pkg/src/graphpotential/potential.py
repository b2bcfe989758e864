"""Capacity, equilibrium potentials, Green functions, monopoles, and the
recurrence/transience classifier.

All quantities are monotone along exhaustions because the window
restriction is absorbing: capacities only decrease as the window grows,
Green values and monopole energies only increase.  Capacity depends on
the weights and killing term alone, never on the measure, and the code
keeps it that way bitwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULTS, Settings
from .errors import DisconnectedWindow, SingularSystem, UnknownVertex
from .exhaustion import (
    Exhaustion,
    LimitReport,
    RestrictedOperator,
    monotone_limit,
    solve_resolvent,
    solve_symmetric,
)
from .graphs import GraphSource, Vertex


def equilibrium_potential(
    g: GraphSource,
    window,
    o: Vertex,
    tol: float | None = None,
    settings: Settings = DEFAULTS,
) -> tuple[dict, float]:
    """Energy minimizer pinned to 1 at ``o`` and supported in the window.

    Solves the absorbing-boundary harmonic problem on window \\ {o} with
    value 1 at o and 0 outside, and returns (potential, capacity) where
    the capacity is the energy of the minimizer.  The potential lies in
    [0, 1] up to solver tolerance.
    """
    from .exhaustion import restrict

    op = window if isinstance(window, RestrictedOperator) else restrict(g, window)
    v = _equilibrium_vector(op, o, tol, settings)
    cap = _capacity_from_vector(op, v)
    return op.as_dict(v), cap


def _equilibrium_vector(
    op: RestrictedOperator, o: Vertex, tol: float | None, settings: Settings
) -> np.ndarray:
    io = op.index_of(o)
    n = op.n
    v = np.zeros(n)
    v[io] = 1.0
    if n == 1:
        return v
    keep = np.ones(n, dtype=bool)
    keep[io] = False
    sub = op.submatrix_operator(keep)
    # boundary data enters through the edges into o
    rhs = np.zeros(n)
    row = op.adjacency.getrow(io).toarray().ravel()
    rhs = row[keep]
    if rhs.any():
        # vertices in pockets with no route to o, no exterior edge, and no
        # killing contribute nothing to the energy; pin them to zero
        try:
            u = solve_symmetric(sub, rhs, tol=tol, settings=settings)
        except SingularSystem:
            u = _solve_with_pockets(sub, rhs, tol, settings)
        v[keep] = u
    return v


def _solve_with_pockets(
    sub: RestrictedOperator, rhs: np.ndarray, tol: float | None, settings: Settings
) -> np.ndarray:
    import scipy.sparse.csgraph as csgraph

    ncomp, labels = csgraph.connected_components(sub.adjacency, directed=False)
    alive = np.zeros(sub.n, dtype=bool)
    candidate = sub.has_exterior | (sub.c > 0) | (rhs != 0)
    for comp in range(ncomp):
        members = labels == comp
        if candidate[members].any():
            alive |= members
    u = np.zeros(sub.n)
    if alive.any():
        inner = sub.submatrix_operator(alive)
        sol = solve_symmetric(inner, rhs[alive], tol=tol, settings=settings)
        u[alive] = sol
    return u


def _capacity_from_vector(op: RestrictedOperator, v: np.ndarray) -> float:
    # energy of the zero-extension of v; the full-degree diagonal already
    # accounts for edges leaving the window
    return float(v @ (op.sym_matrix(0.0) @ v))


def capacity_flux(op: RestrictedOperator, v: np.ndarray, o: Vertex) -> float:
    """Cross-check form of the capacity: measure-weighted Laplacian at the pin."""
    return float((op.sym_matrix(0.0) @ v)[op.index_of(o)])


def capacity_sequence(
    g: GraphSource,
    o: Vertex,
    exhaustion: Exhaustion,
    tol: float | None = None,
    settings: Settings = DEFAULTS,
) -> LimitReport:
    """Nonincreasing window capacities of the point ``o``.

    A limit of zero is recurrence evidence, a positive limit transience
    evidence.  The reported value is the quadratic-form energy; a flux
    cross-check above 1e-8 marks the entry as suspect in ``extra``.
    """
    values = []
    suspect = []
    for i in range(len(exhaustion)):
        op = exhaustion.operator(i)
        v = _equilibrium_vector(op, o, tol, settings)
        cap = _capacity_from_vector(op, v)
        flux = capacity_flux(op, v, o)
        if abs(cap - flux) > 1e-8 * (1.0 + abs(cap)):
            suspect.append(exhaustion.radii[i])
        values.append(cap)
    report = monotone_limit(
        values,
        "nonincreasing",
        tol=settings.transience_cauchy,
        radii=exhaustion.radii,
    )
    if suspect:
        report.extra["flux_mismatch_radii"] = suspect
    return report


def green_estimate(
    g: GraphSource,
    x: Vertex,
    y: Vertex,
    exhaustion: Exhaustion,
    tol: float | None = None,
    settings: Settings = DEFAULTS,
) -> LimitReport:
    """Nondecreasing window Green values G_n(x, y).

    Entry n solves the unshifted absorbing system with a point source at
    x, read at y.  Divergence is recurrence evidence; a finite limit is
    the Green function.
    """
    first = exhaustion.operator(0)
    if x not in first.index or y not in first.index:
        raise DisconnectedWindow(f"{x!r}, {y!r} must lie in the first window")
    values = []
    for i in range(len(exhaustion)):
        op = exhaustion.operator(i)
        u = solve_resolvent(op, 0.0, {x: 1.0}, tol=tol, settings=settings)
        values.append(float(u[op.index_of(y)]))
    return monotone_limit(
        values,
        "nondecreasing",
        tol=settings.transience_cauchy,
        divergence_threshold=settings.green_divergence_threshold,
        radii=exhaustion.radii,
    )


def green_alpha_sweep(
    g: GraphSource,
    x: Vertex,
    y: Vertex,
    exhaustion: Exhaustion,
    alphas=(1.0, 0.1, 0.01, 0.001),
    tol: float | None = None,
    settings: Settings = DEFAULTS,
) -> LimitReport:
    """Shift-to-zero limit on the largest window (the other limit order).

    Nondecreasing as the shift decreases; compare with
    :func:`green_estimate`, which sends the window to infinity first.
    """
    alphas = sorted(alphas, reverse=True)
    op = exhaustion.operator(len(exhaustion) - 1)
    ix, iy = op.index_of(x), op.index_of(y)
    values = []
    for a in alphas:
        u = solve_resolvent(op, a, {x: 1.0}, tol=tol, settings=settings)
        values.append(float(u[iy]))
    report = monotone_limit(
        values,
        "nondecreasing",
        tol=settings.transience_cauchy,
        divergence_threshold=settings.green_divergence_threshold,
        radii=(),
    )
    report.extra["alphas"] = list(alphas)
    return report


def monopole_solve(
    g: GraphSource,
    w: Vertex,
    exhaustion: Exhaustion,
    tol: float | None = None,
    settings: Settings = DEFAULTS,
) -> tuple[list[dict], LimitReport]:
    """Window solutions of (Laplacian u) = delta_w and their energies.

    The energy sequence equals u_n(w) * m(w) and is nondecreasing;
    bounded energies are transience evidence (a finite-energy monopole
    exists), divergence recurrence evidence.
    """
    first = exhaustion.operator(0)
    if w not in first.index:
        raise UnknownVertex(f"{w!r} must lie in the first window")
    solutions = []
    energies = []
    for i in range(len(exhaustion)):
        op = exhaustion.operator(i)
        u = solve_resolvent(op, 0.0, {w: 1.0}, tol=tol, settings=settings)
        solutions.append(op.as_dict(u))
        energies.append(float(u @ (op.sym_matrix(0.0) @ u)))
    report = monotone_limit(
        energies,
        "nondecreasing",
        tol=settings.transience_cauchy,
        divergence_threshold=settings.green_divergence_threshold,
        radii=exhaustion.radii,
    )
    return solutions, report


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class ClassificationReport:
    """Verdict with the monotone evidence that produced it."""

    verdict: str
    evidence: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "evidence": {k: v.as_dict() for k, v in self.evidence.items()},
            "config": dict(self.config),
            "notes": dict(self.notes),
        }


def _decay_fits(radii, values, ratio: float) -> dict | None:
    """Compare the two capacity decay models by least-squares residual.

    Model 'log_decay': value = b / log(radius) (slow decay to zero, the
    two-dimensional signature); model 'flat': value = a (capacity has
    settled at a positive level).  The winner must beat the loser by the
    preference ratio, otherwise neither is chosen.  Radii below 2 are
    excluded.
    """
    pts = [(r, v) for r, v in zip(radii, values) if r >= 2]
    if len(pts) < 3:
        return None
    r = np.array([p[0] for p in pts], dtype=float)
    v = np.array([p[1] for p in pts], dtype=float)
    z = 1.0 / np.log(r)
    b = float(z @ v / (z @ z))
    sse_log = float(np.sum((v - b * z) ** 2))
    a = float(np.mean(v))
    sse_const = float(np.sum((v - a) ** 2))
    if b > 0 and sse_log * ratio <= sse_const:
        chosen = "log_decay"
    elif sse_const * ratio <= sse_log:
        chosen = "flat"
    else:
        chosen = "none"
    return {
        "log_coefficient": b,
        "log_residual": sse_log,
        "const_level": a,
        "const_residual": sse_const,
        "chosen_model": chosen,
    }


def classify(
    g: GraphSource,
    o: Vertex,
    exhaustion: Exhaustion,
    settings: Settings = DEFAULTS,
    measure_check: bool = True,
) -> ClassificationReport:
    """Three-way recurrence/transience verdict from monotone window evidence.

    Transient requires the capacity sequence to settle above the
    transience floor with the Green diagonal settling too; recurrent
    requires the capacity to fall below the recurrence ceiling while
    still decreasing, or the Green diagonal to blow up.  When neither
    fires, the slow-decay model fit decides if one model wins clearly;
    otherwise the verdict is inconclusive.  The capacity computation
    never touches the measure; the optional measure check re-runs it
    under a perturbed measure and records bitwise equality.
    """
    cap_report = capacity_sequence(g, o, exhaustion, settings=settings)
    try:
        green_report = green_estimate(g, o, o, exhaustion, settings=settings)
        green_singular = False
    except SingularSystem:
        # finite graph exhausted by the window with nothing absorbing:
        # the Green function is infinite
        green_report = monotone_limit(
            [float("inf")], "nondecreasing", tol=settings.transience_cauchy
        )
        green_singular = True

    caps = cap_report.values
    mixed = settings.transience_cauchy * (1.0 + abs(caps[-1]))
    sustained_decrease = len(caps) >= 2 and (caps[-2] - caps[-1]) > mixed
    below_ceiling = caps[-1] < settings.recurrence_ceiling

    verdict = "inconclusive"
    reason = ""
    if green_singular or green_report.verdict == "diverging":
        verdict = "recurrent"
        reason = "green diagonal diverges"
    elif below_ceiling and (sustained_decrease or caps[-1] == 0.0):
        verdict = "recurrent"
        reason = "capacity below recurrence ceiling with sustained decrease"
    elif (
        cap_report.verdict == "converged"
        and caps[-1] > settings.transience_floor
        and green_report.verdict == "converged"
    ):
        verdict = "transient"
        reason = "capacity and green diagonal settled above the transience floor"

    fits = _decay_fits(exhaustion.radii, caps, settings.fit_preference_ratio)
    if fits is not None:
        cap_report.extra["decay_fit"] = fits
    if verdict == "inconclusive" and fits is not None:
        if fits["chosen_model"] == "log_decay":
            verdict = "recurrent"
            reason = "capacity follows the slow-decay model clearly better than a constant"
        elif fits["chosen_model"] == "flat" and fits["const_level"] > settings.transience_floor:
            verdict = "transient"
            reason = "capacity follows the constant model clearly better than slow decay"

    notes = {"reason": reason}
    if measure_check:
        notes["measure_independence"] = _measure_independence_note(
            g, o, exhaustion, caps, settings
        )

    return ClassificationReport(
        verdict=verdict,
        evidence={"capacity": cap_report, "green_diagonal": green_report},
        config={
            "graph": g.spec_string(),
            "root": g.key_of(o),
            "radii": list(exhaustion.radii),
            **settings.as_dict(),
        },
        notes=notes,
    )


def _measure_independence_note(
    g: GraphSource, o: Vertex, exhaustion: Exhaustion, caps, settings: Settings
) -> dict:
    """Re-run the capacity under a deterministic measure perturbation.

    Capacity involves only weights and killing, so the values must be
    bitwise identical.
    """
    import zlib

    base_measure = g.measure

    def perturbed(x):
        h = zlib.crc32(g.key_of(x).encode()) / 2**32
        return base_measure(x) * (0.5 + 1.5 * h)

    g2 = GraphSource(
        kind=g.kind,
        neighbors=g.neighbors,
        potential=g.potential,
        measure=perturbed,
        key_of=g.key_of,
        vertex_of=g.vertex_of,
        params=g.params,
        vertices=g.vertices,
    )
    ex2 = Exhaustion(g2, exhaustion.root, exhaustion.radii, shape=exhaustion.shape)
    caps2 = capacity_sequence(g2, o, ex2, settings=settings).values
    identical = all(a == b for a, b in zip(caps, caps2)) and len(caps) == len(caps2)
    return {"bitwise_identical": identical}
