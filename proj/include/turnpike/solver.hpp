#pragma once

#include <cstdint>
#include <vector>

#include "turnpike/envelope.hpp"
#include "turnpike/market.hpp"
#include "turnpike/numerics.hpp"
#include "turnpike/utility.hpp"

namespace turnpike {

struct SolveResult {
    double multiplier = 0.0;
    double expected_utility = 0.0;
    double certainty_equivalent = 0.0;
    double duality_gap = 0.0;
    double quad_error = 0.0;  ///< |EU(2n nodes) - EU(n nodes)|
};

struct IsoelasticSolution {
    SolveResult result;
    double weight = 0.0;  ///< Merton fraction in the risky asset
};

struct CeRatioPoint {
    double horizon = 0.0;
    double ce_optimal = 0.0;
    double ce_isoelastic = 0.0;
    double ratio = 0.0;
    double quad_error = 0.0;  ///< |ratio(2n nodes) - ratio(n nodes)|
};

struct SolverOptions {
    int nodes = 201;
    double x0 = 1.0;
};

IsoelasticSolution isoelastic_closed_form(const MarketParams& mkt, double p, double horizon, double x0 = 1.0);

/// E[U(X)] on the nodes of `rule`; exact for deterministic laws.
double expected_utility_of_law(const UtilitySpec& u, const TerminalLaw& law, const QuadratureRule& rule);

/// E[U(X)] on a composite rule of about `nodes` points split at the envelope's wealth knots.
double expected_utility_of_law(const ConcaveEnvelope& u, const TerminalLaw& law, int nodes = 201);

/// Optimal terminal wealth I(y Y_T) with the budget E[Y_T I(y Y_T)] = x0.
SolveResult solve_terminal(const ConcaveEnvelope& u, const MarketParams& mkt, double horizon,
                           const SolverOptions& opts = {});

/// Requires a concave utility; incentivized utilities must go through concave_envelope().
SolveResult solve_terminal(const UtilitySpec& u, const MarketParams& mkt, double horizon,
                           const SolverOptions& opts = {});

/// U^{-1}(expected_utility); range error outside (U(0+), U(inf)).
double certainty_equivalent(const UtilitySpec& u, double expected_utility);
double certainty_equivalent(const ConcaveEnvelope& u, double expected_utility);

/// CE of the Merton portfolio for p_ref relative to the CE of the optimum, both under u
/// (under its concave envelope if u is not concave).
CeRatioPoint ce_ratio(const UtilitySpec& u, const MarketParams& mkt, double p_ref, double horizon,
                      const SolverOptions& opts = {});

/// E[V(y Y_T)] + y x0 - E[U(X*_T)] for each y.
std::vector<double> duality_gap_scan(const UtilitySpec& u, const MarketParams& mkt, double horizon,
                                     const std::vector<double>& ys, const SolverOptions& opts = {});

struct HolderReport {
    int trials = 0;
    int violations = 0;           ///< inequality broken by more than 1e-12 (relative)
    double worst_violation = 0.0;
    int equality_failures = 0;    ///< equality case off by more than 1e-10 (relative)
    double worst_equality_error = 0.0;

    bool passed() const { return violations == 0 && equality_failures == 0; }
};

/// Randomised check of (1/p) E[X^p] <= (1/p) E[Y^q]^{1-p} whenever E[XY] <= 1,
/// with equality when X^{p-1} is proportional to Y.
HolderReport holder_duality_check(int n_trials, std::uint64_t seed);

}  // namespace turnpike
