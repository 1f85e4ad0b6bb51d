"""Long-horizon portfolio choice under general utilities."""

from ._turnpike import (
    CeRatioPoint,
    ConcaveEnvelope,
    MarketParams,
    NonDifferentiableError,
    ReplicationPortfolio,
    SolveResult,
    TurnpikeError,
    UsageError,
    Utility,
    __version__,
    carr_madan_legs,
    ce_ratio,
    check_param_restriction,
    concave_envelope,
    divergence_exponent,
    effective_risk_aversion,
    grant_value_curve,
    holder_duality_check,
    isoelastic_closed_form,
    lowwealth_ratio_closed_form,
    merton_weight,
    replicate,
    run,
    solve_terminal,
    square_contract_price,
    strike_grid,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
