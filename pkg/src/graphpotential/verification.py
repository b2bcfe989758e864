"""Executable identity suites: every structural fact the solvers rely on,
run against randomized instances and the built-in families.

Each group reports its instance count, worst deviation, and tolerance;
the CLI ``verify`` subcommand prints one line per group and fails on
any violation.  The groups deliberately pit independent computations
against each other (series vs. factorization, quadrature vs. resolvent,
energy pairing vs. pointwise Laplacian) so a bug in one route cannot
hide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import DEFAULTS, Settings
from .errors import SingularSystem
from . import forms, graphs, heat, potential, walk
from .exhaustion import (
    exhaust,
    neumann_series_resolvent,
    perturbed_resolvent,
    restrict,
    solve_resolvent,
)
from .graphs import GraphFunction


@dataclass
class GroupResult:
    name: str
    passed: bool
    instances: int
    max_deviation: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status} {self.name} ({self.instances} instances, "
            f"max deviation {self.max_deviation:.3e} vs tol {self.tolerance:.1e})"
            + (f" -- {self.detail}" if self.detail else "")
        )


def _rng(seed: int, salt: int) -> np.random.Generator:
    return np.random.default_rng(np.random.Philox(key=np.array([seed, salt], dtype=np.uint64)))


def random_finite_graph(rng: np.random.Generator, n: int, with_measure=True, with_potential=False):
    """Connected weighted graph on n vertices: random tree plus extra edges."""
    edges = {}
    for v in range(1, n):
        u = int(rng.integers(0, v))
        edges[(u, v)] = float(rng.uniform(0.5, 2.0))
    extra = int(rng.integers(0, max(1, n)))
    for _ in range(extra):
        a, b = sorted(rng.choice(n, size=2, replace=False).tolist())
        if (a, b) not in edges:
            edges[(a, b)] = float(rng.uniform(0.5, 2.0))
    measure = (
        {v: float(rng.uniform(0.5, 2.0)) for v in range(n)} if with_measure else None
    )
    pot = None
    if with_potential:
        pot = {v: float(rng.uniform(0.0, 0.5)) if rng.random() < 0.3 else 0.0 for v in range(n)}
    return graphs.build_finite([(a, b, w) for (a, b), w in edges.items()], potential=pot, measure=measure)


def random_function(rng: np.random.Generator, vertices, max_support=None) -> GraphFunction:
    k = int(rng.integers(1, len(vertices) + 1 if max_support is None else max_support + 1))
    chosen = rng.choice(len(vertices), size=min(k, len(vertices)), replace=False)
    return GraphFunction({vertices[i]: float(rng.normal()) for i in chosen})


def _proper_window(rng: np.random.Generator, g) -> list:
    """Random proper subset of a finite graph's vertices (keeps >= 1 outside)."""
    n = len(g.vertices)
    size = int(rng.integers(1, n))
    chosen = rng.choice(n, size=size, replace=False)
    return [g.vertices[i] for i in sorted(chosen)]


# ---------------------------------------------------------------------------
# groups


def check_contraction(seed: int, instances: int = 1000, settings: Settings = DEFAULTS) -> GroupResult:
    """Energy never increases under absolute value or clamping."""
    rng = _rng(seed, 1)
    tol = 1e-12
    worst = -math.inf
    for _ in range(instances):
        g = random_finite_graph(rng, int(rng.integers(3, 12)), with_potential=True)
        u = random_function(rng, list(g.vertices))
        before = forms.energy(g, u).value
        kind = rng.random()
        if kind < 0.5:
            cu = graphs.contract(u, "abs")
        else:
            lo, hi = -float(rng.uniform(0, 2)), float(rng.uniform(0, 2))
            cu = graphs.contract(u, "clamp", lo, hi)
        after = forms.energy(g, cu).value
        worst = max(worst, after - before - tol * (1.0 + before))
    return GroupResult("contraction", worst <= 0, instances, worst + tol, tol)


def check_greens_formula(seed: int, instances: int = 1000, settings: Settings = DEFAULTS) -> GroupResult:
    """Energy pairing equals the Laplacian pairing in both placements."""
    rng = _rng(seed, 2)
    tol = 1e-12
    worst = 0.0
    for _ in range(instances):
        g = random_finite_graph(rng, int(rng.integers(3, 12)), with_potential=True)
        u = random_function(rng, list(g.vertices))
        v = random_function(rng, list(g.vertices))
        q = forms.energy_pair(g, u, v)
        r1 = abs(forms.greens_formula_residual(g, u, v)) / (1.0 + abs(q))
        r2 = abs(forms.greens_formula_residual(g, v, u)) / (1.0 + abs(q))
        worst = max(worst, r1, r2)
    return GroupResult("greens_formula", worst <= tol, instances, worst, tol)


def check_path_bound(seed: int, instances: int = 1000, settings: Settings = DEFAULTS) -> GroupResult:
    """Value differences obey the inverse-weight path constant."""
    rng = _rng(seed, 3)
    tol = 1e-10
    worst = -math.inf
    for _ in range(instances):
        g = random_finite_graph(rng, int(rng.integers(3, 12)))
        verts = list(g.vertices)
        u = random_function(rng, verts)
        x, y = (verts[i] for i in rng.choice(len(verts), size=2, replace=False))
        K = forms.path_constant(g, x, y, verts)
        bound = K * math.sqrt(forms.energy(g, u).value) + tol
        gap = abs(u.value(x) - u.value(y)) - bound
        worst = max(worst, gap)
    return GroupResult("path_bound", worst <= 0, instances, worst + tol, tol)


def check_neumann_series(seed: int, instances: int = 100, settings: Settings = DEFAULTS) -> GroupResult:
    """Geometric-series resolvent agrees with the direct solve."""
    rng = _rng(seed, 4)
    tol = 1e-9
    worst = 0.0
    alphas = [0.1, 1.0, 10.0]
    for i in range(instances):
        g = random_finite_graph(rng, int(rng.integers(4, 16)))
        window = _proper_window(rng, g)
        op = restrict(g, window)
        x = window[int(rng.integers(0, len(window)))]
        alpha = alphas[i % 3]
        series = neumann_series_resolvent(op, alpha, x, tol=1e-11, settings=settings)
        direct = solve_resolvent(op, alpha, GraphFunction.delta(x), tol=1e-12, settings=settings)
        worst = max(worst, float(np.max(np.abs(series - direct))))
    return GroupResult("neumann_series", worst <= tol, instances, worst, tol)


def check_perturbed_resolvent(seed: int, instances: int = 50, settings: Settings = DEFAULTS) -> GroupResult:
    """Exchange identity between the perturbed and plain resolvents."""
    rng = _rng(seed, 5)
    tol = 1e-9
    worst = 0.0
    for _ in range(instances):
        g = random_finite_graph(rng, int(rng.integers(4, 16)))
        window = _proper_window(rng, g)
        op = restrict(g, window)
        gv = rng.uniform(0.2, 2.0, size=op.n)
        f = rng.normal(size=op.n)
        alpha = float(rng.uniform(0.05, 2.0))
        lhs = perturbed_resolvent(op, gv, alpha, f, tol=1e-12, settings=settings)
        rhs = solve_resolvent(op, alpha, f - gv * lhs, tol=1e-12, settings=settings)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return GroupResult("perturbed_resolvent", worst <= tol, instances, worst, tol)


def check_quadrature(seed: int, instances: int = 50, settings: Settings = DEFAULTS) -> GroupResult:
    """Heat-semigroup time integral equals the unshifted resolvent."""
    rng = _rng(seed, 6)
    tol = 1e-6
    worst = 0.0
    for _ in range(instances):
        g = random_finite_graph(rng, int(rng.integers(4, 12)))
        window = _proper_window(rng, g)
        op = restrict(g, window)
        x = window[int(rng.integers(0, len(window)))]
        y = window[int(rng.integers(0, len(window)))]
        q = heat.heat_green_quadrature(op, x, y, tol=1e-8, settings=settings)
        direct = solve_resolvent(op, 0.0, GraphFunction.delta(x), tol=1e-12, settings=settings)
        worst = max(worst, abs(q - float(direct[op.index_of(y)])))
    return GroupResult("quadrature", worst <= tol, instances, worst, tol)


def check_walk_bridge(seed: int, instances: int = 0, settings: Settings = DEFAULTS) -> GroupResult:
    """Visit series and heat quadrature meet on built-in windows."""
    tol = 1e-6
    worst = 0.0
    cases = [
        (graphs.lattice(1), (0,), [6, 12]),
        (graphs.lattice(2), (0, 0), [4, 8]),
        (graphs.regular_tree(2), 1, [4, 7]),
    ]
    count = 0
    for g, root, radii in cases:
        ex = exhaust(g, root, radii)
        for i in range(len(ex)):
            op = ex.operator(i)
            res = walk.bridge_residual(op, root, root, tol=1e-8, settings=settings)
            worst = max(worst, res["residual"])
            count += 1
    return GroupResult("walk_bridge", worst <= tol, count, worst, tol)


def check_capacity_monotone(seed: int, instances: int = 0, settings: Settings = DEFAULTS) -> GroupResult:
    """Capacities fall, Green values rise, and the two are dual at unit measure."""
    tol = 1e-9
    worst = 0.0
    count = 0
    cases = [
        (graphs.lattice(1), (0,), [2, 4, 8, 16]),
        (graphs.lattice(2), (0, 0), [2, 4, 8]),
        (graphs.regular_tree(2), 1, [2, 4, 6]),
        (graphs.birth_death(1.5), 0, [4, 8, 16]),
    ]
    for g, root, radii in cases:
        ex = exhaust(g, root, radii)
        caps = potential.capacity_sequence(g, root, ex, settings=settings)
        green = potential.green_estimate(g, root, root, ex, settings=settings)
        for a, b in zip(caps.values, caps.values[1:]):
            worst = max(worst, b - a - 1e-10)
        for a, b in zip(green.values, green.values[1:]):
            worst = max(worst, a - b - 1e-10)
        for c, gval in zip(caps.values, green.values):
            worst = max(worst, abs(c * gval - 1.0) - tol)
        count += 1
    return GroupResult("capacity_monotone", worst <= 0, count, worst + tol, tol)


def check_mass_telescoping(seed: int, instances: int = 200, settings: Settings = DEFAULTS) -> GroupResult:
    """Interior Laplacian mass plus boundary flux balances the killing term."""
    rng = _rng(seed, 9)
    tol = 1e-10
    worst = 0.0
    for _ in range(instances):
        g = random_finite_graph(rng, int(rng.integers(4, 14)), with_potential=True)
        window = _proper_window(rng, g)
        u = {v: float(rng.normal()) for v in g.vertices}
        res = heat.integral_defect(g, u, window)
        scale = 1.0 + abs(res["interior_sum"]) + abs(res["boundary_flux"])
        worst = max(worst, abs(res["residual"]) / scale)
    return GroupResult("mass_telescoping", worst <= tol, instances, worst, tol)


def check_markov_bounds(seed: int, instances: int = 200, settings: Settings = DEFAULTS) -> GroupResult:
    """Shifted resolvents map [0, 1] data into [0, 1] after scaling."""
    rng = _rng(seed, 10)
    tol = 1e-12
    worst = 0.0
    for _ in range(instances):
        g = random_finite_graph(rng, int(rng.integers(3, 14)))
        window = _proper_window(rng, g)
        op = restrict(g, window)
        f = rng.uniform(0.0, 1.0, size=op.n)
        alpha = float(rng.uniform(0.1, 5.0))
        u = alpha * solve_resolvent(op, alpha, f, tol=1e-12, settings=settings)
        worst = max(worst, float(np.max(u) - 1.0), float(-np.min(u)))
    return GroupResult("markov_bounds", worst <= tol, instances, worst, tol)


def check_classification_consistency(seed: int, instances: int = 0, settings: Settings = DEFAULTS) -> GroupResult:
    """No graph may come out recurrent yet stochastically incomplete."""
    cases = [
        (graphs.lattice(1), (0,), [4, 8, 16, 32]),
        (graphs.lattice(2), (0, 0), [4, 8, 16, 32, 64]),
        (graphs.regular_tree(2), 1, [2, 4, 8, 12]),
        (graphs.birth_death(0.0), 0, [8, 16, 32, 64]),
        (graphs.birth_death(3.0), 0, [64, 128, 256, 512, 1024]),
    ]
    bad = 0
    pairs = []
    for g, root, radii in cases:
        ex = exhaust(g, root, radii)
        cls = potential.classify(g, root, ex, settings=settings, measure_check=False)
        probe = heat.completeness_probe(g, ex, settings=settings)
        pairs.append((g.spec_string(), cls.verdict, probe.verdict))
        if cls.verdict == "recurrent" and probe.verdict == "incomplete":
            bad += 1
    detail = "; ".join(f"{s}:{c}/{p}" for s, c, p in pairs)
    return GroupResult(
        "classification_consistency", bad == 0, len(cases), float(bad), 0.0, detail
    )


def check_measure_covariance(seed: int, instances: int = 20, settings: Settings = DEFAULTS) -> GroupResult:
    """Capacity ignores the measure bitwise; Green values rescale with it."""
    rng = _rng(seed, 12)
    tol = 1e-10
    worst = 0.0
    exact = True
    for _ in range(instances):
        n = int(rng.integers(5, 12))
        edges = {}
        for v in range(1, n):
            u = int(rng.integers(0, v))
            edges[(u, v)] = float(rng.uniform(0.5, 2.0))
        for _ in range(int(rng.integers(0, n))):
            a, b = sorted(rng.choice(n, size=2, replace=False).tolist())
            if (a, b) not in edges:
                edges[(a, b)] = float(rng.uniform(0.5, 2.0))
        edge_list = [(a, b, w) for (a, b), w in edges.items()]
        m1 = {v: float(rng.uniform(0.5, 2.0)) for v in range(n)}
        scale = {v: float(rng.uniform(0.5, 3.0)) for v in range(n)}
        base = graphs.build_finite(edge_list, measure=m1)
        g2 = graphs.build_finite(edge_list, measure={v: m1[v] * scale[v] for v in range(n)})
        window = _proper_window(rng, base)
        o = window[int(rng.integers(0, len(window)))]
        _, cap1 = potential.equilibrium_potential(base, window, o, settings=settings)
        _, cap2 = potential.equilibrium_potential(g2, window, o, settings=settings)
        exact = exact and (cap1 == cap2)
        x = window[int(rng.integers(0, len(window)))]
        op1, op2 = restrict(base, window), restrict(g2, window)
        u1 = solve_resolvent(op1, 0.0, {x: 1.0}, tol=1e-12, settings=settings)
        u2 = solve_resolvent(op2, 0.0, {x: 1.0}, tol=1e-12, settings=settings)
        ratio = scale[x]
        worst = max(worst, float(np.max(np.abs(u2 - ratio * u1))) / (1.0 + float(np.max(np.abs(u1)))))
    return GroupResult(
        "measure_covariance",
        exact and worst <= tol,
        instances,
        worst,
        tol,
        "capacity bitwise invariant" if exact else "capacity changed under measure",
    )


ALL_GROUPS = [
    check_contraction,
    check_greens_formula,
    check_path_bound,
    check_neumann_series,
    check_perturbed_resolvent,
    check_quadrature,
    check_walk_bridge,
    check_capacity_monotone,
    check_mass_telescoping,
    check_markov_bounds,
    check_classification_consistency,
    check_measure_covariance,
]


def run_all(seed: int = 42, scale: float = 1.0, settings: Settings = DEFAULTS) -> list[GroupResult]:
    """Run every group, scaling the randomized instance counts."""
    results = []
    for fn in ALL_GROUPS:
        default = fn.__defaults__[0] if fn.__defaults__ else 0
        instances = max(1, int(default * scale)) if default else 0
        results.append(fn(seed, instances, settings) if default else fn(seed, settings=settings))
    return results
