"""Square-root functional response predator-prey model: analysis, integration
with finite-time prey extinction, and basin mapping."""

from ._core import (
    IntegrationFailure,
    IntegratorConfig,
    ParameterError,
    Params,
    RegimeError,
    Trajectory,
    __version__,
    classify_ic,
    classify_interior,
    eigenvalues,
    envelope,
    equilibria,
    extinction_bound,
    grid_sweep,
    integrate,
    integrate_raw_reference,
    interior_point,
    jacobian,
    k_threshold,
    rhs_raw,
    rhs_regularized,
    separatrix_scan,
    verify_theorem_bounds,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
