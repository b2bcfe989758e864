"""Discrete-time random walk on a window: transition operator, visit
series, Monte Carlo simulation, and the discrete/continuous bridge.

Steps go to neighbors with probability proportional to the edge weight,
normalized by the full vertex degree; mass stepping outside the window
is absorbed.  The accumulated visit series at a point source reproduces
the unshifted window resolvent, and its time-continuous counterpart is
the heat-semigroup quadrature.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULTS, Settings
from .errors import NonConvergence, PotentialPresent
from .exhaustion import RestrictedOperator, solve_resolvent
from .graphs import Vertex
from .heat import heat_green_quadrature
from .rngstream import RNG_VERSION, block_uniforms


def _require_no_potential(op: RestrictedOperator) -> None:
    if np.any(op.c != 0.0):
        raise PotentialPresent("the walk is defined for vanishing killing term")


def transition_apply(op: RestrictedOperator, u) -> np.ndarray:
    """One step of the window-restricted walk applied to a function.

    (Pu)(x) averages u over the neighbors of x inside the window with
    weights b(x, y) / deg(x); rows at boundary vertices sum to less
    than one.
    """
    _require_no_potential(op)
    uvec = op.vector(u)
    return (op.adjacency @ uvec) / op.bsum


def row_sums(op: RestrictedOperator) -> np.ndarray:
    """Row sums of the restricted transition matrix (1 exactly on the interior)."""
    _require_no_potential(op)
    return (op.adjacency @ np.ones(op.n)) / op.bsum


def green_series(
    op: RestrictedOperator,
    x: Vertex,
    y: Vertex,
    max_steps: int | None = None,
    tol: float | None = None,
    settings: Settings = DEFAULTS,
) -> tuple[np.ndarray, bool]:
    """Partial sums of the expected-visit series at (x, y), scaled by 1/deg(x).

    Marches delta_x through the restricted transition operator and
    accumulates the value at y; on a proper window the series converges
    to the unshifted resolvent at the same points.  Returns the partial
    sums and a flag telling whether the estimated tail fell below tol
    before ``max_steps``.
    """
    _require_no_potential(op)
    tol = settings.series_tol if tol is None else tol
    ix, iy = op.index_of(x), op.index_of(y)
    A = op.adjacency
    deg = op.bsum
    v = np.zeros(op.n)
    v[ix] = 1.0
    acc = v[iy]
    partials = [acc]
    cap = max_steps if max_steps is not None else max(50000, 60 * op.n)
    masses = [1.0]
    for k in range(1, cap + 1):
        v = (A @ v) / deg
        acc += v[iy]
        partials.append(acc)
        mass = float(v.sum())
        masses.append(mass)
        if mass == 0.0:
            return np.asarray(partials) / deg[ix], True
        # two-step mass ratios absorb parity oscillation on bipartite graphs;
        # the remaining series is dominated by the surviving mass geometrically
        if k >= 8:
            q = max(
                masses[-1] / masses[-3],
                masses[-2] / masses[-4],
            )
            if q < 1.0:
                tail = (masses[-1] + masses[-2]) * q / (1.0 - q)
                if tail < tol:
                    return np.asarray(partials) / deg[ix], True
    return np.asarray(partials) / deg[ix], False


@dataclass(frozen=True)
class WalkConfig:
    """Monte Carlo run parameters; identical seeds give identical output."""

    start: Vertex
    steps: int
    trials: int
    seed: int


@dataclass(frozen=True)
class WalkResult:
    mean_visits: dict
    probe_stats: dict
    absorbed_fraction: float
    mean_lifetime: float
    rng_version: str = RNG_VERSION
    config: dict = field(default_factory=dict)


def simulate(
    op: RestrictedOperator,
    cfg: WalkConfig,
    probes=None,
    settings: Settings = DEFAULTS,
) -> WalkResult:
    """Monte Carlo visit counts for the absorbed walk.

    Trials are independent; each derives its uniforms from the
    (seed, trial) counter stream, so results are bitwise reproducible
    for any chunking or thread count.  Probe vertices additionally get
    a 95% normal-approximation half-width for the mean visit count.
    """
    _require_no_potential(op)
    if cfg.steps < 1 or cfg.trials < 1:
        raise ValueError("steps and trials must be >= 1")
    probes = list(probes) if probes is not None else [cfg.start]
    probe_idx = np.array([op.index_of(p) for p in probes], dtype=np.int64)
    start_idx = op.index_of(cfg.start)

    # per-vertex neighbor tables with cached cumulative weights
    n = op.n
    A = op.adjacency
    indptr, indices, data = A.indptr, A.indices, A.data
    max_deg = int(np.max(np.diff(indptr))) if n else 0
    nbr = np.full((n, max_deg), -1, dtype=np.int64)
    cum = np.full((n, max_deg), np.inf)
    for v in range(n):
        lo, hi = indptr[v], indptr[v + 1]
        k = hi - lo
        nbr[v, :k] = indices[lo:hi]
        cum[v, :k] = np.cumsum(data[lo:hi]) / op.bsum[v]

    chunk = max(1, settings.walk_chunk)
    starts = list(range(0, cfg.trials, chunk))

    def run_chunk(first: int) -> tuple:
        count = min(chunk, cfg.trials - first)
        u = block_uniforms(cfg.seed, first, count, cfg.steps)
        pos = np.full(count, start_idx, dtype=np.int64)
        alive = np.ones(count, dtype=bool)
        visits = np.zeros(n)
        probe_counts = np.zeros((count, len(probe_idx)))
        lifetime = np.zeros(count, dtype=np.int64)
        np.add.at(visits, pos, 1.0)
        probe_counts += pos[:, None] == probe_idx[None, :]
        for step in range(cfg.steps):
            if not alive.any():
                break
            act = np.flatnonzero(alive)
            p = pos[act]
            draws = u[act, step]
            k = (draws[:, None] > cum[p]).sum(axis=1)
            absorbed = k >= (nbr[p] >= 0).sum(axis=1)
            new_pos = np.where(absorbed, -1, nbr[p, np.minimum(k, max_deg - 1)])
            pos[act] = new_pos
            lifetime[act] += 1
            alive[act] = new_pos >= 0
            moved = act[new_pos >= 0]
            if moved.size:
                np.add.at(visits, pos[moved], 1.0)
                probe_counts[moved] += pos[moved][:, None] == probe_idx[None, :]
        return visits, probe_counts, int((~alive).sum()), lifetime.sum()

    if settings.threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=settings.threads) as pool:
            results = list(pool.map(run_chunk, starts))
    else:
        results = [run_chunk(first) for first in starts]

    visits = np.zeros(n)
    absorbed = 0
    lifetime_total = 0
    probe_blocks = []
    for v, pc, a, lt in results:
        visits += v
        probe_blocks.append(pc)
        absorbed += a
        lifetime_total += lt
    probe_counts = np.concatenate(probe_blocks, axis=0)
    mean = probe_counts.mean(axis=0)
    std = probe_counts.std(axis=0, ddof=1) if cfg.trials > 1 else np.zeros(len(probes))
    half = 1.959963984540054 * std / np.sqrt(cfg.trials)
    probe_stats = {
        op.g.key_of(p): {"mean": float(mean[i]), "halfwidth_95": float(half[i])}
        for i, p in enumerate(probes)
    }
    return WalkResult(
        mean_visits={op.g.key_of(v): float(visits[i] / cfg.trials) for i, v in enumerate(op.vertices)},
        probe_stats=probe_stats,
        absorbed_fraction=absorbed / cfg.trials,
        mean_lifetime=lifetime_total / cfg.trials,
        config={
            "start": op.g.key_of(cfg.start),
            "steps": cfg.steps,
            "trials": cfg.trials,
            "seed": cfg.seed,
        },
    )


def bridge_residual(
    op: RestrictedOperator,
    x: Vertex,
    y: Vertex,
    tol: float | None = None,
    settings: Settings = DEFAULTS,
) -> dict:
    """Gap between the continuous-time and discrete-time Green values.

    Computes the heat quadrature and the visit series independently on
    the same window (unit measure, no killing) and returns both sides
    with their absolute difference, which stays within the combined
    tolerances.
    """
    _require_no_potential(op)
    if np.any(op.m != 1.0):
        raise PotentialPresent("the bridge identity is stated for unit measure")
    tol = settings.quad_tol if tol is None else tol
    heat_side = heat_green_quadrature(op, x, y, tol=tol, settings=settings)
    partials, converged = green_series(op, x, y, tol=min(tol, settings.series_tol), settings=settings)
    if not converged:
        raise NonConvergence("visit series did not settle within its step budget")
    walk_side = float(partials[-1])
    return {
        "heat_side": heat_side,
        "walk_side": walk_side,
        "residual": abs(heat_side - walk_side),
    }
