#include "turnpike/counterexample.hpp"

#include <algorithm>
#include <cmath>

#include "turnpike/envelope.hpp"
#include "turnpike/error.hpp"
#include "turnpike/numerics.hpp"

namespace turnpike {

namespace {

void check_domain(const MarketParams& mkt, double p, double p_star) {
    mkt.validate();
    if (!(p < 0.0) || !std::isfinite(p)) fail(ErrorKind::parameter, "counterexample: need p < 0");
    if (!(p_star < p - 1.0) || !std::isfinite(p_star))
        fail(ErrorKind::parameter, "counterexample: need p_star < p - 1");
}

// log X~ = a T + b W_T for the Merton strategy of risk aversion 1 - p
struct LogWealth {
    double a;
    double b;
};

LogWealth merton_log_wealth(const MarketParams& mkt, double p) {
    const double theta = mkt.market_price_of_risk();
    return {mkt.r + (1.0 - 2.0 * p) * theta * theta / (2.0 * (1.0 - p) * (1.0 - p)), theta / (1.0 - p)};
}

}  // namespace

namespace detail {
double divergence_exponent_formula(const MarketParams& mkt, double p, double p_star) {
    const double s2 = mkt.sigma * mkt.sigma;
    return (p_star - p) * (mkt.r + (p_star + 1.0 - p) * mkt.mu * mkt.mu / (2.0 * (1.0 - p) * (1.0 - p) * s2));
}
}  // namespace detail

RestrictionReport check_param_restriction(const MarketParams& mkt, double p, double p_star) {
    check_domain(mkt, p, p_star);
    const double s2 = mkt.sigma * mkt.sigma;
    RestrictionReport rep;
    const double w = mkt.mu / (s2 * (1.0 - p));
    rep.lhs = w * w;
    rep.rhs = 2.0 * std::max(1.0, 1.0 / (p - p_star - 1.0)) * mkt.r / s2;
    rep.margin = rep.lhs - rep.rhs;
    rep.satisfied = rep.margin > 0.0;
    return rep;
}

double divergence_exponent(const MarketParams& mkt, double p, double p_star) {
    check_domain(mkt, p, p_star);
    return detail::divergence_exponent_formula(mkt, p, p_star);
}

DivergenceReport lowwealth_ratio_closed_form(const MarketParams& mkt, double p, double p_star, double horizon) {
    check_domain(mkt, p, p_star);
    if (!(horizon > 0.0) || !std::isfinite(horizon)) fail(ErrorKind::parameter, "horizon must be finite and > 0");
    const LogWealth lw = merton_log_wealth(mkt, p);
    DivergenceReport rep;
    rep.exponent = detail::divergence_exponent_formula(mkt, p, p_star);
    // under the tilted measure log X~ ~ N((a + p* b^2) T, b^2 T)
    const double tilted_mean = (lw.a + p_star * lw.b * lw.b) * horizon;
    const double sd = std::abs(lw.b) * std::sqrt(horizon);
    if (sd == 0.0) {
        rep.qstar_prob = tilted_mean <= 0.0 ? 1.0 : 0.0;
    } else {
        rep.qstar_prob = normal_cdf(-tilted_mean / sd);
    }
    rep.lowwealth_ratio = std::exp(rep.exponent * horizon) * rep.qstar_prob;
    return rep;
}

std::vector<CollapsePoint> ce_collapse_curve(const MarketParams& mkt, double p, double p_star,
                                             const InterpolationSpec& interp, std::span<const double> horizons,
                                             const SolverOptions& opts) {
    const RestrictionReport rest = check_param_restriction(mkt, p, p_star);
    if (!rest.satisfied) {
        fail(ErrorKind::contract, "ce_collapse_curve: parameter restriction not satisfied (margin " +
                                      std::to_string(rest.margin) + ")");
    }
    const UtilitySpec u = UtilitySpec::two_piece_power(p, p_star, interp);
    const ConcaveEnvelope env = concave_envelope(u);
    const double pi = merton_weight(mkt, 1.0 - p);
    std::vector<CollapsePoint> out;
    out.reserve(horizons.size());
    for (double t : horizons) {
        CollapsePoint pt;
        pt.ce = ce_ratio(u, mkt, p, t, opts);
        TerminalLaw law = cp_wealth_law(mkt, pi, t);
        law.log_mean += std::log(opts.x0);
        const double eu = expected_utility_of_law(env, law, 2 * opts.nodes);
        // E[X~^p]/p in closed form
        const double eu_ref = std::exp(p * law.log_mean + 0.5 * p * p * law.log_std * law.log_std) / p;
        pt.eu_ratio = eu / eu_ref;
        out.push_back(pt);
    }
    return out;
}

}  // namespace turnpike
