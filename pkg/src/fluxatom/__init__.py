"""fluxatom: a two-level photoemissive source driven by coherent light.

Master-equation dynamics, equilibrium, mean photon counting and the
scattering observables (cross sections, Fano profiles, lamp shift) of the
atom-field model with absorption, emission and state-dependent elastic
scattering.
"""

__version__ = "0.1.0"

from .dynamics import (  # noqa: E402
    BlochState,
    BlochTrajectory,
    CountingRecord,
    SteadyState,
    evolve,
    flux_ratio,
    photon_count,
    steady_state,
)
from .jumps import TrajectoryEnsemble, compare_with_rk4, jump_monte_carlo  # noqa: E402
from .model import (  # noqa: E402
    Drive,
    GSystem,
    HPModel,
    RotatingGenerators,
    g_system,
    rotating_generators,
    validate_model,
)
from .spherical import (  # noqa: E402
    LineShape,
    SphericalModel,
    differential_cross_section,
    embed_partial_waves,
    lineshape_scan,
    spherical_scalars,
    steady_state_spherical,
    total_cross_section,
)

__all__ = [
    "BlochState", "BlochTrajectory", "CountingRecord", "SteadyState", "evolve", "flux_ratio",
    "photon_count", "steady_state", "TrajectoryEnsemble", "compare_with_rk4", "jump_monte_carlo",
    "Drive", "GSystem", "HPModel", "RotatingGenerators", "g_system", "rotating_generators",
    "validate_model", "LineShape", "SphericalModel", "differential_cross_section",
    "embed_partial_waves", "lineshape_scan", "spherical_scalars", "steady_state_spherical",
    "total_cross_section",
]
