#pragma once

#include <span>
#include <vector>

#include "turnpike/market.hpp"
#include "turnpike/solver.hpp"
#include "turnpike/utility.hpp"

namespace turnpike {

/// Sufficient condition for the low-wealth failure of the two-piece utility:
/// (mu / (sigma^2 (1-p)))^2 > 2 max(1, 1/(p - p* - 1)) r / sigma^2.
struct RestrictionReport {
    double lhs = 0.0;
    double rhs = 0.0;
    bool satisfied = false;
    double margin = 0.0;  ///< lhs - rhs
};

struct DivergenceReport {
    double exponent = 0.0;
    double qstar_prob = 0.0;
    double lowwealth_ratio = 0.0;  ///< E[X~^{p*} 1{X~ <= 1}] / E[X~^p]
};

/// Requires p < 0 and p_star < p - 1 (parameter error otherwise).
RestrictionReport check_param_restriction(const MarketParams& mkt, double p, double p_star);

/// (p* - p)(r + (p* + 1 - p) mu^2 / (2 (1-p)^2 sigma^2)); same domain as above.
double divergence_exponent(const MarketParams& mkt, double p, double p_star);

/// exp(exponent * T) times the probability, under the measure tilted by X~^{p*},
/// that the Merton wealth for p ends at or below 1.
DivergenceReport lowwealth_ratio_closed_form(const MarketParams& mkt, double p, double p_star, double horizon);

struct CollapsePoint {
    CeRatioPoint ce;
    double eu_ratio = 0.0;  ///< E[U(X~_T)] / E[U~(X~_T)]
};

/// CE ratio of the Merton portfolio under the two-piece utility, per horizon.
/// Contract error unless the parameter restriction holds.
std::vector<CollapsePoint> ce_collapse_curve(const MarketParams& mkt, double p, double p_star,
                                             const InterpolationSpec& interp, std::span<const double> horizons,
                                             const SolverOptions& opts = {});

namespace detail {
double divergence_exponent_formula(const MarketParams& mkt, double p, double p_star);
}

}  // namespace turnpike
