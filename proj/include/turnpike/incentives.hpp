#pragma once

#include <span>
#include <vector>

#include "turnpike/market.hpp"
#include "turnpike/solver.hpp"
#include "turnpike/utility.hpp"

namespace turnpike {

/// gamma* = alpha*gamma + 1 - alpha; wellposedness error unless positive.
double effective_risk_aversion(double alpha, double gamma);

/// One cell of the strike integral, evaluated at its midpoint.
struct ReplicationLeg {
    double strike;  ///< cell midpoint
    double weight;  ///< f''(strike)
    double width;   ///< cell width dk
};

/// Static replication of f(x) = x^alpha: cash f(kbar), f'(kbar) forwards struck
/// at kbar, puts below kbar and calls above it.
struct ReplicationPortfolio {
    double alpha = 1.0;
    double kbar = 0.0;
    double cash = 0.0;
    double forward_qty = 0.0;
    std::vector<ReplicationLeg> put_legs;
    std::vector<ReplicationLeg> call_legs;
    double cover_lo = 0.0;  ///< range of x on which the strike integral is complete
    double cover_hi = 0.0;

    double payoff(double x) const;
};

enum class StrikeSpacing { geometric, uniform };

/// `n` strikes spanning [lo, hi], log-spaced by default.
std::vector<double> strike_grid(double lo, double hi, int n, StrikeSpacing spacing = StrikeSpacing::geometric);

/// Midpoint rule on the cells between consecutive grid points; kbar is added as
/// a cell edge when it is not already on the grid.
ReplicationPortfolio carr_madan_legs(double alpha, double kbar, std::span<const double> strikes);

struct ReplicationResult {
    std::vector<double> values;
    double max_rel_error = 0.0;
};

/// Portfolio payoff at each x against x^alpha; coverage error outside the grid.
ReplicationResult replicate(const ReplicationPortfolio& portfolio, std::span<const double> xs);

struct GrantCurvePoint {
    double horizon = 0.0;
    double ce_plain = 0.0;
    double ce_incentivized = 0.0;
    double premium = 0.0;     ///< ce_incentivized / ce_plain - 1
    double quad_error = 0.0;  ///< relative quadrature error estimate of the premium
};

/// Private value of the option grant in `contract` across horizons: the CE of the
/// concavified incentivized problem against the CE without the options.
std::vector<GrantCurvePoint> grant_value_curve(double p, const Contract& contract, const MarketParams& mkt,
                                               std::span<const double> horizons, const SolverOptions& opts = {});

/// e^{-sigma^2 T} E^Q[S_T^2] at zero interest rate, by Gauss-Hermite quadrature.
double square_contract_price(double s0, double sigma, double horizon);

}  // namespace turnpike
