"""Exhaustions, absorbing window restrictions, and resolvent solvers.

The restriction of the Laplacian to a finite window keeps the full
vertex degree (edges leaving the window act as absorption), which makes
window quantities monotone in the window.  In matrix form the operator
is M^{-1} S with M = diag(m) and the symmetric

    S(alpha) = diag(full weight sum + c + alpha * m) - A_window.

Solves go through the symmetrically scaled system
M^{-1/2} S M^{-1/2}, whose residual norm is exactly the
measure-weighted residual of the original equation.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from math import sqrt
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph
import scipy.sparse.linalg as spla

from .config import DEFAULTS, Settings
from .errors import NonConvergence, NotMonotone, SingularSystem, UnknownVertex
from .graphs import GraphFunction, GraphSource, Vertex


class RestrictedOperator:
    """Absorbing restriction of the Laplacian to a finite vertex window.

    The diagonal keeps the full degree (weights to all of V plus the
    killing term), off-diagonal entries couple window vertices only.
    Immutable after assembly; factorizations are cached per shift.
    """

    def __init__(
        self,
        g: GraphSource,
        vertices: list,
        edges_i: np.ndarray,
        edges_j: np.ndarray,
        edges_w: np.ndarray,
        bsum: np.ndarray,
        c: np.ndarray,
        m: np.ndarray,
        nbr_count: np.ndarray,
    ):
        self.g = g
        self.vertices = vertices
        self.index = {v: i for i, v in enumerate(vertices)}
        self.n = len(vertices)
        self._ei, self._ej, self._ew = edges_i, edges_j, edges_w
        self.bsum = bsum
        self.c = c
        self.m = m
        self._sqrt_m = np.sqrt(m)
        self._nbr_count = nbr_count
        in_count = np.bincount(edges_i, minlength=self.n) + np.bincount(
            edges_j, minlength=self.n
        )
        self.has_exterior = in_count < nbr_count
        self._cache: dict = {}

    # -- assembly ----------------------------------------------------------

    @property
    def adjacency(self) -> sp.csr_matrix:
        """Symmetric weight matrix over the window."""
        A = self._cache.get("A")
        if A is None:
            i = np.concatenate([self._ei, self._ej])
            j = np.concatenate([self._ej, self._ei])
            w = np.concatenate([self._ew, self._ew])
            A = sp.coo_matrix((w, (i, j)), shape=(self.n, self.n)).tocsr()
            self._cache["A"] = A
        return A

    @property
    def diagonal(self) -> np.ndarray:
        """Diagonal of the operator: (full weight sum + c) / m."""
        return (self.bsum + self.c) / self.m

    @property
    def matrix(self) -> sp.csr_matrix:
        """The operator M^{-1} S(0) as a sparse matrix."""
        L = self._cache.get("L")
        if L is None:
            L = sp.diags(1.0 / self.m) @ self.sym_matrix(0.0)
            self._cache["L"] = L.tocsr()
        return self._cache["L"]

    def sym_matrix(self, alpha: float = 0.0) -> sp.csr_matrix:
        """S(alpha) = diag(bsum + c + alpha m) - A; symmetric positive semidefinite."""
        S0 = self._cache.get("S0")
        if S0 is None:
            S0 = sp.diags(self.bsum + self.c) - self.adjacency
            self._cache["S0"] = S0.tocsr()
            S0 = self._cache["S0"]
        if alpha == 0.0:
            return S0
        return (S0 + sp.diags(alpha * self.m)).tocsr()

    def scaled_matrix(self, alpha: float = 0.0) -> sp.csr_matrix:
        """M^{-1/2} S(0) M^{-1/2} + alpha I (shift applied by the caller for alpha != 0)."""
        Shat = self._cache.get("Shat")
        if Shat is None:
            D = sp.diags(1.0 / self._sqrt_m)
            Shat = (D @ self.sym_matrix(0.0) @ D).tocsr()
            self._cache["Shat"] = Shat
        if alpha == 0.0:
            return self._cache["Shat"]
        return (self._cache["Shat"] + alpha * sp.identity(self.n, format="csr")).tocsr()

    # -- vector plumbing ----------------------------------------------------

    def vector(self, f) -> np.ndarray:
        """Convert a function-like object to a window-aligned array."""
        if isinstance(f, np.ndarray):
            if f.shape != (self.n,):
                raise UnknownVertex(f"vector of length {f.shape} does not fit window {self.n}")
            return f.astype(float)
        out = np.zeros(self.n)
        if isinstance(f, GraphFunction):
            items = f.items()
        elif isinstance(f, Mapping):
            items = f.items()
        else:  # scalar constant
            out[:] = float(f)
            return out
        for x, val in items:
            i = self.index.get(x)
            if i is None:
                raise UnknownVertex(f"{x!r} outside the window")
            out[i] = val
        return out

    def as_dict(self, u: np.ndarray) -> dict:
        return {v: float(u[i]) for i, v in enumerate(self.vertices)}

    def index_of(self, x: Vertex) -> int:
        i = self.index.get(x)
        if i is None:
            raise UnknownVertex(f"{x!r} outside the window")
        return i

    def apply(self, u: np.ndarray, alpha: float = 0.0) -> np.ndarray:
        v = self.sym_matrix(0.0) @ u / self.m
        return v + alpha * u if alpha else v

    def interior_mask(self) -> np.ndarray:
        return ~self.has_exterior

    def max_window_degree(self) -> int:
        counts = np.bincount(self._ei, minlength=self.n) + np.bincount(
            self._ej, minlength=self.n
        )
        return int(counts.max()) if self.n else 0

    def submatrix_operator(self, keep: np.ndarray) -> "RestrictedOperator":
        """Restriction to a vertex subset; dropped vertices become absorbing."""
        keep_idx = np.flatnonzero(keep)
        remap = -np.ones(self.n, dtype=np.int64)
        remap[keep_idx] = np.arange(len(keep_idx))
        mask = keep[self._ei] & keep[self._ej]
        return RestrictedOperator(
            self.g,
            [self.vertices[i] for i in keep_idx],
            remap[self._ei[mask]],
            remap[self._ej[mask]],
            self._ew[mask],
            self.bsum[keep_idx],
            self.c[keep_idx],
            self.m[keep_idx],
            self._nbr_count[keep_idx],
        )


def restrict(g: GraphSource, window: Iterable[Vertex]) -> RestrictedOperator:
    """Assemble the absorbing restriction for an explicit finite window."""
    vertices = list(dict.fromkeys(window))
    index = {v: i for i, v in enumerate(vertices)}
    ei, ej, ew = [], [], []
    bsum = np.zeros(len(vertices))
    nbr_count = np.zeros(len(vertices), dtype=np.int64)
    for i, x in enumerate(vertices):
        nbrs = g.neighbors(x)
        nbr_count[i] = len(nbrs)
        total = 0.0
        for y, w in nbrs:
            total += w
            j = index.get(y)
            if j is not None and j > i:
                ei.append(i)
                ej.append(j)
                ew.append(w)
        bsum[i] = total
    c = np.array([g.potential(x) for x in vertices], dtype=float)
    m = np.array([g.measure(x) for x in vertices], dtype=float)
    return RestrictedOperator(
        g,
        vertices,
        np.asarray(ei, dtype=np.int64),
        np.asarray(ej, dtype=np.int64),
        np.asarray(ew, dtype=float),
        bsum,
        c,
        m,
        nbr_count,
    )


class Exhaustion:
    """Nested balls around a root vertex.

    The default shape is the breadth-first (hop-distance) ball; on
    integer lattices ``shape="euclidean"`` takes Euclidean balls
    instead, whose rounder boundary gives visibly faster capacity
    convergence in dimension three.  A single sweep to the largest
    radius orders the vertices so that each window is a prefix; window
    operators are assembled by slicing the shared edge arrays and are
    cached.
    """

    def __init__(
        self, g: GraphSource, root: Vertex, radii: Sequence[int], shape: str = "hop"
    ):
        radii = list(radii)
        if not radii or any(r < 1 for r in radii) or any(
            b <= a for a, b in zip(radii, radii[1:])
        ):
            raise ValueError("radii must be strictly increasing integers >= 1")
        g.neighbors(root)  # validates the root
        self.g = g
        self.root = root
        self.radii = radii
        self.shape = shape
        max_r = radii[-1]

        if shape == "hop":
            order: list = [root]
            dist = {root: 0}
            queue = deque([root])
            while queue:
                x = queue.popleft()
                dx = dist[x]
                if dx == max_r:
                    continue
                for y, _w in g.neighbors(x):
                    if y not in dist:
                        dist[y] = dx + 1
                        order.append(y)
                        queue.append(y)
            self._order = order
            self._dist = dist
            counts = np.bincount(
                np.fromiter((dist[v] for v in order), dtype=np.int64, count=len(order)),
                minlength=max_r + 1,
            )
            csizes = np.cumsum(counts)
            self._sizes = [int(csizes[min(r, len(csizes) - 1)]) for r in radii]
        elif shape == "euclidean":
            if g.kind != "lattice":
                raise ValueError("euclidean windows are defined for lattices only")
            # collect the largest ball, then order by squared norm (exact ints)
            cap2 = max_r * max_r
            norm2 = {root: sum(t * t for t in root)}
            if norm2[root] > cap2:
                raise ValueError("root lies outside the largest ball")
            queue = deque([root])
            while queue:
                x = queue.popleft()
                for y, _w in g.neighbors(x):
                    if y not in norm2:
                        n2 = sum(t * t for t in y)
                        if n2 <= cap2:
                            norm2[y] = n2
                            queue.append(y)
            order = sorted(norm2, key=lambda v: (norm2[v], v))
            self._order = order
            self._dist = norm2
            levels = np.fromiter((norm2[v] for v in order), dtype=np.int64, count=len(order))
            self._sizes = [int(np.searchsorted(levels, r * r, side="right")) for r in radii]
        else:
            raise ValueError(f"unknown window shape {shape!r}")

        n = len(order)
        index = {v: i for i, v in enumerate(order)}
        ei, ej, ew = [], [], []
        bsum = np.zeros(n)
        nbr_count = np.zeros(n, dtype=np.int64)
        for i, x in enumerate(order):
            nbrs = g.neighbors(x)
            nbr_count[i] = len(nbrs)
            total = 0.0
            for y, w in nbrs:
                total += w
                j = index.get(y)
                if j is not None and j > i:
                    ei.append(i)
                    ej.append(j)
                    ew.append(w)
            bsum[i] = total
        self._ei = np.asarray(ei, dtype=np.int64)
        self._ej = np.asarray(ej, dtype=np.int64)
        self._ew = np.asarray(ew, dtype=float)
        self._bsum = bsum
        self._c = np.array([g.potential(x) for x in order], dtype=float)
        self._m = np.array([g.measure(x) for x in order], dtype=float)
        self._nbr_count = nbr_count
        self._ops: dict[int, RestrictedOperator] = {}

    def __len__(self) -> int:
        return len(self.radii)

    def window(self, i: int) -> list:
        return self._order[: self._sizes[i]]

    def window_size(self, i: int) -> int:
        return self._sizes[i]

    def operator(self, i: int) -> RestrictedOperator:
        op = self._ops.get(i)
        if op is None:
            s = self._sizes[i]
            mask = self._ej < s  # edge indices satisfy i < j
            op = RestrictedOperator(
                self.g,
                self._order[:s],
                self._ei[mask],
                self._ej[mask],
                self._ew[mask],
                self._bsum[:s],
                self._c[:s],
                self._m[:s],
                self._nbr_count[:s],
            )
            self._ops[i] = op
        return op

    def contains(self, x: Vertex, i: int | None = None) -> bool:
        d = self._dist.get(x)
        if d is None:
            return False
        r = self.radii[-1 if i is None else i]
        return d <= (r * r if self.shape == "euclidean" else r)


def exhaust(
    g: GraphSource, root: Vertex, radii: Sequence[int], shape: str = "hop"
) -> Exhaustion:
    """Build nested balls of the given radii around ``root``."""
    return Exhaustion(g, root, radii, shape=shape)


def auto_radii(
    g: GraphSource, root: Vertex, settings: Settings = DEFAULTS
) -> list[int]:
    """Default schedule: radii doubling from the configured start until the
    window size cap, extended by the largest still-admissible radius."""
    cap = settings.window_cap
    count = 0
    dist = {root: 0}
    queue = deque([root])
    scanned_r = 0
    while queue:
        x = queue.popleft()
        dx = dist[x]
        scanned_r = dx
        count += 1
        if count > cap:
            break
        for y, _w in g.neighbors(x):
            if y not in dist:
                dist[y] = dx + 1
                queue.append(y)
    # balls up to the last fully scanned radius are completely discovered
    per_r: dict[int, int] = {}
    for d in dist.values():
        if d <= scanned_r:
            per_r[d] = per_r.get(d, 0) + 1
    cum = 0
    admissible = 1
    for r in range(0, scanned_r + 1):
        size_r = per_r.get(r, 0)
        cum += size_r
        if cum <= cap and (size_r > 0 or r == 0):
            admissible = max(admissible, r)
    radii = []
    r = settings.radii_start
    while r <= admissible:
        radii.append(r)
        r *= 2
    if not radii or radii[-1] < admissible:
        radii.append(admissible)
    return sorted(set(radii))


# ---------------------------------------------------------------------------
# solvers


def _check_definite(op: RestrictedOperator, alpha: float) -> None:
    if alpha > 0:
        return
    if alpha < 0:
        raise SingularSystem(f"negative shift {alpha}")
    # alpha = 0: every connected component needs an exterior edge or killing
    candidate = op.has_exterior | (op.c > 0)
    if candidate.all():
        return
    ncomp, labels = csgraph.connected_components(op.adjacency, directed=False)
    for comp in range(ncomp):
        members = labels == comp
        if not candidate[members].any():
            raise SingularSystem(
                "window component without exterior edges or killing term; "
                "the unshifted system is singular"
            )


def _use_direct(op: RestrictedOperator, settings: Settings) -> bool:
    if op.n <= settings.direct_threshold:
        return True
    # path-like windows factor in linear time while being too ill-conditioned
    # for conjugate gradients at any sensible iteration cap
    return settings.chain_direct and op.max_window_degree() <= 2


def _factorized(op: RestrictedOperator, alpha: float):
    key = ("lu", float(alpha))
    lu = op._cache.get(key)
    if lu is None:
        lu = spla.splu(op.scaled_matrix(alpha).tocsc())
        op._cache[key] = lu
    return lu


def solve_resolvent(
    op: RestrictedOperator,
    alpha: float,
    f,
    tol: float | None = None,
    settings: Settings = DEFAULTS,
) -> np.ndarray:
    """Solve (L_window + alpha) u = f with absorbing exterior.

    ``f`` may be a window-aligned array, a GraphFunction/mapping, or a
    scalar (constant on the window).  The residual satisfies
    ||(L+alpha)u - f||_m <= tol * ||f||_m.  Direct sparse factorization
    is used up to the configured window size (and always on path-like
    windows); conjugate gradients with diagonal preconditioning above.
    Solutions with f >= 0 are nonnegative up to rounding.
    """
    tol = settings.solve_tol if tol is None else tol
    _check_definite(op, alpha)
    fvec = op.vector(f)
    rhs = op._sqrt_m * fvec
    if not rhs.any():
        return np.zeros(op.n)
    if _use_direct(op, settings):
        uhat = _factorized(op, alpha).solve(rhs)
        resid = op.scaled_matrix(0.0) @ uhat + alpha * uhat - rhs
        if np.linalg.norm(resid) > max(tol, 1e-9) * np.linalg.norm(rhs):
            raise NonConvergence("direct factorization residual above tolerance")
    else:
        A = op.scaled_matrix(alpha)
        diag = A.diagonal()
        precond = spla.LinearOperator(A.shape, matvec=lambda v: v / diag)
        maxiter = int(settings.cg_iter_factor * sqrt(op.n)) + 10
        uhat, info = spla.cg(A, rhs, rtol=tol, atol=0.0, M=precond, maxiter=maxiter)
        if info != 0:
            raise NonConvergence(
                f"conjugate gradients did not reach tolerance {tol}", iterations=maxiter
            )
    return uhat / op._sqrt_m


def solve_symmetric(
    op: RestrictedOperator,
    rhs: np.ndarray,
    tol: float | None = None,
    settings: Settings = DEFAULTS,
) -> np.ndarray:
    """Solve the unshifted symmetric window system S u = rhs.

    This path never touches the measure, so quantities built on it
    (capacities, equilibrium potentials) are bitwise independent of m.
    """
    tol = settings.solve_tol if tol is None else tol
    _check_definite(op, 0.0)
    if not rhs.any():
        return np.zeros(op.n)
    if _use_direct(op, settings):
        key = ("lu-sym", 0.0)
        lu = op._cache.get(key)
        if lu is None:
            lu = spla.splu(op.sym_matrix(0.0).tocsc())
            op._cache[key] = lu
        u = lu.solve(rhs)
        if np.linalg.norm(op.sym_matrix(0.0) @ u - rhs) > max(tol, 1e-9) * np.linalg.norm(rhs):
            raise NonConvergence("direct factorization residual above tolerance")
        return u
    A = op.sym_matrix(0.0)
    diag = A.diagonal()
    precond = spla.LinearOperator(A.shape, matvec=lambda v: v / diag)
    maxiter = int(settings.cg_iter_factor * sqrt(op.n)) + 10
    u, info = spla.cg(A, rhs, rtol=tol, atol=0.0, M=precond, maxiter=maxiter)
    if info != 0:
        raise NonConvergence(
            f"conjugate gradients did not reach tolerance {tol}", iterations=maxiter
        )
    return u


def neumann_series_resolvent(
    op: RestrictedOperator,
    alpha: float,
    x: Vertex,
    tol: float | None = None,
    settings: Settings = DEFAULTS,
) -> np.ndarray:
    """Geometric-series resolvent at a point source for alpha > 0.

    Splits L + alpha = M^{-1}((Dhat + alpha M) - A) with
    Dhat = diag(full degree) and iterates the entrywise nonnegative
    matrix (Dhat + alpha M)^{-1} A, whose sup-norm is at most
    max deg / (deg + alpha m) < 1.  Partial sums stop once the sup-norm
    increment falls below tol * (1 - rho) / rho for that bound rho.
    """
    if alpha <= 0:
        raise SingularSystem("the series form requires a positive shift")
    tol = settings.series_tol if tol is None else tol
    i0 = op.index_of(x)
    deg = op.bsum + op.c
    scale = 1.0 / (deg + alpha * op.m)
    rho = float(np.max(deg * scale))
    if rho <= 0.0:  # no edges at all
        out = np.zeros(op.n)
        out[i0] = scale[i0]
        return out
    threshold = tol * (1.0 - rho) / rho
    A = op.adjacency
    term = np.zeros(op.n)
    term[i0] = op.m[i0] * scale[i0]
    total = term.copy()
    # bound on the number of terms from the geometric tail, plus headroom
    max_terms = int(np.log(max(threshold, 1e-300)) / np.log(rho)) + 16 if rho < 1 else 10**7
    for _ in range(max_terms):
        term = scale * (A @ term)
        total += term
        if np.max(np.abs(term)) < threshold:
            return total
    raise NonConvergence("series resolvent failed to meet its tail bound", iterations=max_terms)


def perturbed_resolvent(
    op: RestrictedOperator,
    g_fn,
    alpha: float,
    f,
    tol: float | None = None,
    settings: Settings = DEFAULTS,
) -> np.ndarray:
    """Resolvent of the operator perturbed by a strictly positive multiplier.

    Solves ((L + g.) + alpha) u = f where ``g_fn`` acts by pointwise
    multiplication.  Satisfies the exchange identity
    u = (L + alpha)^{-1}[f - g * u] against :func:`solve_resolvent`.
    """
    gvec = op.vector(g_fn)
    if np.any(gvec <= 0):
        raise SingularSystem("perturbation must be strictly positive on the window")
    pert = _PerturbedView(op, gvec)
    return solve_resolvent(pert, alpha, op.vector(f), tol=tol, settings=settings)


class _PerturbedView(RestrictedOperator):
    """Window operator with the killing term increased by m * g."""

    def __init__(self, base: RestrictedOperator, gvec: np.ndarray):
        super().__init__(
            base.g,
            base.vertices,
            base._ei,
            base._ej,
            base._ew,
            base.bsum,
            base.c + base.m * gvec,
            base.m,
            base._nbr_count,
        )


# ---------------------------------------------------------------------------
# monotone limits


@dataclass(frozen=True)
class LimitReport:
    """Monotone evidence sequence with a three-way verdict.

    ``converged`` needs the two trailing increments below
    tol * (1 + |last|); ``diverging`` needs the last value beyond the
    threshold with non-shrinking increments.  ``achieved_tol`` is the
    raw last increment, ``cauchy_tail`` the larger of the two trailing
    increments.
    """

    values: tuple
    direction: str
    verdict: str
    limit: float
    achieved_tol: float
    cauchy_tail: float
    radii: tuple = ()
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "values": list(self.values),
            "radii": list(self.radii),
            "direction": self.direction,
            "verdict": self.verdict,
            "limit": self.limit,
            "achieved_tol": self.achieved_tol,
            "cauchy_tail": self.cauchy_tail,
            "extra": dict(self.extra),
        }


def monotone_limit(
    values: Sequence[float],
    direction: str,
    tol: float,
    divergence_threshold: float = float("inf"),
    radii: Sequence[int] = (),
    slack: float = 1e-12,
) -> LimitReport:
    """Classify a monotone sequence as converged, diverging, or undetermined.

    The declared direction is enforced up to a small slack; violations
    signal an upstream solver bug and raise ``NotMonotone``.
    Convergence and divergence tests use the mixed tolerance
    tol * (1 + |last value|).
    """
    vals = [float(v) for v in values]
    if not vals:
        raise ValueError("empty sequence")
    if direction not in ("nondecreasing", "nonincreasing"):
        raise ValueError(f"unknown direction {direction!r}")
    scale = max(abs(v) for v in vals)
    allowed = slack * (1.0 + scale)
    for a, b in zip(vals, vals[1:]):
        if direction == "nondecreasing" and b < a - allowed:
            raise NotMonotone(f"sequence decreased from {a} to {b}")
        if direction == "nonincreasing" and b > a + allowed:
            raise NotMonotone(f"sequence increased from {a} to {b}")
    last = vals[-1]
    deltas = [abs(b - a) for a, b in zip(vals, vals[1:])]
    achieved = deltas[-1] if deltas else float("inf")
    cauchy = max(deltas[-2:]) if len(deltas) >= 2 else float("inf")
    mixed = tol * (1.0 + abs(last))
    verdict = "undetermined"
    if len(vals) >= 3 and cauchy <= mixed:
        verdict = "converged"
    elif (
        len(vals) >= 3
        and abs(last) >= divergence_threshold
        and achieved > mixed
        and deltas[-1] >= 0.5 * deltas[-2]
    ):
        verdict = "diverging"
    return LimitReport(
        values=tuple(vals),
        direction=direction,
        verdict=verdict,
        limit=last,
        achieved_tol=achieved,
        cauchy_tail=cauchy,
        radii=tuple(radii),
    )
