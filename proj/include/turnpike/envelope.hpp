#pragma once

#include <vector>

#include "turnpike/utility.hpp"

namespace turnpike {

/// Affine piece intercept + slope*x of the envelope on [x_l, x_r].
struct BridgeSegment {
    double x_l;
    double x_r;
    double slope;
    double intercept;
};

/// Preimage of a marginal value under the envelope; an interval on bridge slopes.
struct MarginalPreimage {
    double lo;
    double hi;

    bool set_valued() const { return hi > lo; }
};

/// Smallest concave function dominating a utility. For concave inputs this is
/// the utility itself with no bridges, so the solver works on envelopes only.
class ConcaveEnvelope {
public:
    const UtilitySpec& base() const { return base_; }
    const std::vector<BridgeSegment>& bridges() const { return bridges_; }

    double value(double x) const;  ///< x > 0
    double value_at_zero() const;
    double marginal(double x) const;
    double marginal_at_zero() const;

    MarginalPreimage inverse_marginal(double y) const;

    /// Optimal payoff I(y); the right endpoint x_r when y is a bridge slope.
    double payoff(double y) const;

    /// V(y) = sup_x (envelope(x) - x y).
    double dual(double y) const;

    /// Wealth levels where the envelope is not C^2.
    std::vector<double> wealth_knots() const;

    /// Marginal values where payoff() is not C^1 (bridge slopes, corner at zero, knot slopes).
    std::vector<double> marginal_knots() const;

private:
    friend ConcaveEnvelope concave_envelope(const UtilitySpec& u);
    explicit ConcaveEnvelope(UtilitySpec base) : base_(std::move(base)) {}

    // stretch of wealth between bridges, lying on one payoff piece
    struct Region {
        double lo;
        double hi;
        detail::PayoffPiece piece;
    };

    const BridgeSegment* bridge_containing(double x) const;

    UtilitySpec base_;
    std::vector<BridgeSegment> bridges_;
    std::vector<Region> regions_;  ///< incentivized bases only
};

/// Hull of U sampled on a log grid of 10^5 points, refined by solving for the
/// common tangency slope of each bridge.
ConcaveEnvelope concave_envelope(const UtilitySpec& u);

}  // namespace turnpike
