"""Potential theory on infinite weighted graphs via finite exhaustions.

Computes Green functions, capacities, monopoles, and heat mass on lazy
infinite (or finite) weighted graphs, classifies graphs as recurrent or
transient and as stochastically complete or incomplete, and ships the
supporting identities as an executable verification suite.
"""

from .config import DEFAULTS, Settings, load_settings
from .errors import (
    AsymmetricInput,
    Disconnected,
    DisconnectedWindow,
    DuplicateEdge,
    GraphPotentialError,
    InputError,
    InvalidClampRange,
    NonConvergence,
    NonPositiveMeasure,
    NonPositiveWeight,
    NotBoundaryVertex,
    NotMonotone,
    ParseError,
    PotentialPresent,
    SelfLoop,
    SingularSystem,
    SolverError,
    TimeOverflow,
    UnknownVertex,
    WindowTooSmall,
)
from .graphs import (
    GraphFunction,
    GraphSource,
    birth_death,
    build_finite,
    contract,
    custom,
    degree,
    connected_in_window,
    from_spec,
    lattice,
    parse_edge_list,
    path_graph,
    regular_tree,
    serialize,
)
from .forms import (
    EnergyValue,
    WindowBoundary,
    apply_laplacian,
    boundary_term,
    boundary_term_sequence,
    energy,
    energy_pair,
    greens_formula_residual,
    l2_greens_residual,
    normal_derivative,
    path_constant,
    superharmonic_residuals,
    window_boundary,
    yamasaki_inner,
)
from .exhaustion import (
    Exhaustion,
    LimitReport,
    RestrictedOperator,
    auto_radii,
    exhaust,
    monotone_limit,
    neumann_series_resolvent,
    perturbed_resolvent,
    restrict,
    solve_resolvent,
)

__version__ = "0.1.0"
