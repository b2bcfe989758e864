"""Single configuration layer for tolerances, thresholds, and limits.

Every tunable lives here; the CLI merges flags > config file > defaults
and echoes the resulting settings verbatim into each report.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass


@dataclass(frozen=True)
class Settings:
    # linear solves
    direct_threshold: int = 20000        # direct factorization up to this window size
    chain_direct: bool = True            # always factorize path-like windows (max degree <= 2)
    solve_tol: float = 1e-10             # relative residual in the measure-weighted norm
    cg_iter_factor: float = 50.0         # iteration cap = factor * sqrt(window size)
    series_tol: float = 1e-10            # geometric-series resolvent stopping tolerance
    # heat semigroup / quadrature
    quad_tol: float = 1e-7
    gamma_t_cap: float = 1e6             # uniformization cap on (rate * time)
    lanczos_steps: int = 60
    # classification thresholds
    recurrence_ceiling: float = 1e-3
    transience_floor: float = 1e-2
    transience_cauchy: float = 1e-4
    green_divergence_threshold: float = 50.0
    fit_preference_ratio: float = 1.5    # residual ratio needed for a clear model winner
    # stochastic completeness thresholds
    completeness_ceiling: float = 1e-4
    incompleteness_floor: float = 1e-2
    completeness_cauchy: float = 1e-5
    # exhaustion schedule
    radii_start: int = 5
    window_cap: int = 200000
    # random walk
    walk_chunk: int = 4096
    threads: int = 1

    def replace(self, **kwargs) -> "Settings":
        return dataclasses.replace(self, **kwargs)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


DEFAULTS = Settings()

_ENV_THREADS = "GRAPHPOTENTIAL_THREADS"


def load_settings(config_path: str | None = None, overrides: dict | None = None) -> Settings:
    """Merge defaults, optional JSON config file, env, and explicit overrides."""
    values: dict = {}
    if config_path:
        with open(config_path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        unknown = set(data) - {f.name for f in dataclasses.fields(Settings)}
        if unknown:
            raise ValueError(f"unknown settings in {config_path}: {sorted(unknown)}")
        values.update(data)
    if _ENV_THREADS in os.environ:
        values["threads"] = int(os.environ[_ENV_THREADS])
    for key, val in (overrides or {}).items():
        if val is not None:
            values[key] = val
    settings = Settings(**values)
    if settings.transience_floor <= settings.recurrence_ceiling:
        raise ValueError("transience_floor must exceed recurrence_ceiling")
    if settings.incompleteness_floor <= settings.completeness_ceiling:
        raise ValueError("incompleteness_floor must exceed completeness_ceiling")
    return settings
