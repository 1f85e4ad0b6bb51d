#include "turnpike/incentives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "turnpike/envelope.hpp"
#include "turnpike/error.hpp"
#include "turnpike/numerics.hpp"

namespace turnpike {

double effective_risk_aversion(double alpha, double gamma) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) fail(ErrorKind::parameter, "effective_risk_aversion: alpha must be > 0");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) fail(ErrorKind::parameter, "effective_risk_aversion: gamma must be > 0");
    const double g = alpha * gamma + 1.0 - alpha;
    if (!(g > 0.0)) {
        fail(ErrorKind::wellposedness,
             "effective_risk_aversion: alpha*gamma + 1 - alpha = " + std::to_string(g) + " is not positive");
    }
    return g;
}

std::vector<double> strike_grid(double lo, double hi, int n, StrikeSpacing spacing) {
    if (n < 1) fail(ErrorKind::parameter, "strike_grid: need at least one strike");
    if (spacing == StrikeSpacing::geometric && !(lo > 0.0)) {
        fail(ErrorKind::parameter, "strike_grid: geometric spacing needs lo > 0");
    }
    if (!(lo >= 0.0) || !(hi >= lo) || !std::isfinite(hi)) fail(ErrorKind::parameter, "strike_grid: need 0 <= lo <= hi");
    std::vector<double> k(n);
    for (int i = 0; i < n; ++i) {
        const double t = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
        k[i] = spacing == StrikeSpacing::geometric ? lo * std::pow(hi / lo, t) : lo + (hi - lo) * t;
    }
    k.back() = hi;
    return k;
}

double ReplicationPortfolio::payoff(double x) const {
    double v = cash + forward_qty * (x - kbar);
    for (const auto& leg : put_legs) v += leg.weight * leg.width * std::max(leg.strike - x, 0.0);
    for (const auto& leg : call_legs) v += leg.weight * leg.width * std::max(x - leg.strike, 0.0);
    return v;
}

ReplicationPortfolio carr_madan_legs(double alpha, double kbar, std::span<const double> strikes) {
    if (strikes.empty()) fail(ErrorKind::parameter, "carr_madan_legs: empty strike grid");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) fail(ErrorKind::parameter, "carr_madan_legs: alpha must be > 0");
    if (!(kbar >= 0.0) || !std::isfinite(kbar)) fail(ErrorKind::parameter, "carr_madan_legs: kbar must be >= 0");
    if (alpha < 1.0 && kbar == 0.0) {
        fail(ErrorKind::parameter, "carr_madan_legs: kbar must be > 0 when alpha < 1 (f' is infinite at 0)");
    }
    double prev = -std::numeric_limits<double>::infinity();
    for (double k : strikes) {
        if (!(k >= 0.0) || !std::isfinite(k) || !(k > prev))
            fail(ErrorKind::parameter, "carr_madan_legs: strikes must be nonnegative and strictly increasing");
        prev = k;
    }

    std::vector<double> edges(strikes.begin(), strikes.end());
    edges.push_back(kbar);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    ReplicationPortfolio pf;
    pf.alpha = alpha;
    pf.kbar = kbar;
    pf.cash = std::pow(kbar, alpha);
    pf.forward_qty = alpha == 1.0 ? 1.0 : (kbar > 0.0 ? alpha * std::pow(kbar, alpha - 1.0) : 0.0);
    pf.cover_lo = edges.front();
    pf.cover_hi = edges.back();
    if (alpha == 1.0) return pf;

    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        const double mid = 0.5 * (edges[i] + edges[i + 1]);
        const ReplicationLeg leg{mid, alpha * (alpha - 1.0) * std::pow(mid, alpha - 2.0), edges[i + 1] - edges[i]};
        (edges[i + 1] <= kbar ? pf.put_legs : pf.call_legs).push_back(leg);
    }
    return pf;
}

ReplicationResult replicate(const ReplicationPortfolio& portfolio, std::span<const double> xs) {
    ReplicationResult out;
    out.values.reserve(xs.size());
    for (double x : xs) {
        if (!(x >= portfolio.cover_lo && x <= portfolio.cover_hi)) {
            fail(ErrorKind::coverage, "replicate: x=" + std::to_string(x) + " outside the strike grid [" +
                                          std::to_string(portfolio.cover_lo) + ", " +
                                          std::to_string(portfolio.cover_hi) + "]");
        }
        const double v = portfolio.payoff(x);
        out.values.push_back(v);
        const double target = std::pow(x, portfolio.alpha);
        const double err = target != 0.0 ? std::abs(v - target) / std::abs(target) : std::abs(v);
        out.max_rel_error = std::max(out.max_rel_error, err);
    }
    return out;
}

std::vector<GrantCurvePoint> grant_value_curve(double p, const Contract& contract, const MarketParams& mkt,
                                               std::span<const double> horizons, const SolverOptions& opts) {
    const ConcaveEnvelope incentivized = concave_envelope(effective_utility(p, contract));
    const ConcaveEnvelope plain = concave_envelope(effective_utility(p, contract.without_options()));
    std::vector<GrantCurvePoint> out;
    out.reserve(horizons.size());
    for (double t : horizons) {
        const SolveResult a = solve_terminal(incentivized, mkt, t, opts);
        const SolveResult b = solve_terminal(plain, mkt, t, opts);
        GrantCurvePoint pt;
        pt.horizon = t;
        pt.ce_incentivized = a.certainty_equivalent;
        pt.ce_plain = b.certainty_equivalent;
        pt.premium = pt.ce_incentivized / pt.ce_plain - 1.0;
        // first-order propagation of the EU errors through U^{-1}
        const double rel_a = a.quad_error / std::abs(a.expected_utility * p);
        const double rel_b = b.quad_error / std::abs(b.expected_utility * p);
        pt.quad_error = (1.0 + std::abs(pt.premium)) * (rel_a + rel_b);
        out.push_back(pt);
    }
    return out;
}

double square_contract_price(double s0, double sigma, double horizon) {
    if (!(s0 > 0.0) || !std::isfinite(s0)) fail(ErrorKind::parameter, "square_contract_price: s0 must be > 0");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) fail(ErrorKind::parameter, "square_contract_price: sigma must be > 0");
    if (!(horizon >= 0.0) || !std::isfinite(horizon))
        fail(ErrorKind::parameter, "square_contract_price: horizon must be >= 0");
    if (horizon == 0.0) return s0 * s0;
    const double vol = sigma * std::sqrt(horizon);
    static const QuadratureRule rule = gauss_hermite(80);
    const double second_moment = expect_normal(
        [&](double z) {
            const double s = s0 * std::exp(-0.5 * vol * vol + vol * z);
            return s * s;
        },
        rule);
    return std::exp(-vol * vol) * second_moment;
}

}  // namespace turnpike
