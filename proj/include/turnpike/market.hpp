#pragma once

#include "turnpike/numerics.hpp"

namespace turnpike {

/// Single-asset Black-Scholes market: dS/S = (mu + r) dt + sigma dW, safe rate r.
/// `mu` is the excess drift, so the market price of risk is mu / sigma.
struct MarketParams {
    double mu = 0.08;
    double sigma = 0.2;
    double r = 0.01;

    /// Throws a parameter error unless sigma > 0 and r > 0.
    void validate() const;

    double market_price_of_risk() const { return mu / sigma; }
};

/// Law of exp(log_mean + shock_sign * log_std * Z) with Z = W_T / sqrt(T).
///
/// Marginally only (log_mean, log_std) matter. `shock_sign` records the sign of
/// the loading on the common Brownian driver so that laws built from the same
/// market can be evaluated jointly at one node z.
struct TerminalLaw {
    double log_mean = 0.0;
    double log_std = 0.0;
    double horizon = 1.0;
    int shock_sign = 1;

    bool deterministic() const { return log_std == 0.0; }

    double value_at(double z) const;

    /// Node z at which value_at(z) == x. Only meaningful when !deterministic().
    double node_of(double x) const;

    double mean() const;
};

/// Unique state-price deflator Y_T = exp(-rT - theta^2 T/2 - theta W_T), theta = mu/sigma.
TerminalLaw deflator_law(const MarketParams& mkt, double horizon);

/// Wealth at T of the constant-proportion strategy holding fraction `pi` in the
/// risky asset, starting from unit capital.
TerminalLaw cp_wealth_law(const MarketParams& mkt, double pi, double horizon);

/// mu / (gamma sigma^2).
double merton_weight(const MarketParams& mkt, double gamma);

/// Monte Carlo estimate of E[f(X)] for X drawn from `law`.
McEstimate mc_expect(const ScalarFn& f, const TerminalLaw& law, const McConfig& cfg,
                     McExecution exec = McExecution::parallel);

}  // namespace turnpike
