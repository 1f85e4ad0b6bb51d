#include "turnpike/market.hpp"

#include <cmath>
#include <string>

#include "turnpike/error.hpp"

namespace turnpike {

namespace {
void check_horizon(double horizon) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        fail(ErrorKind::parameter, "horizon must be finite and > 0, got " + std::to_string(horizon));
    }
}
}  // namespace

void MarketParams::validate() const {
    if (!std::isfinite(mu)) fail(ErrorKind::parameter, "market: mu must be finite");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) fail(ErrorKind::parameter, "market: sigma must be > 0");
    // the safe asset must grow without bound
    if (!(r > 0.0) || !std::isfinite(r)) fail(ErrorKind::parameter, "market: r must be > 0");
}

double TerminalLaw::value_at(double z) const {
    return std::exp(log_mean + shock_sign * log_std * z);
}

double TerminalLaw::node_of(double x) const {
    return (std::log(x) - log_mean) / (shock_sign * log_std);
}

double TerminalLaw::mean() const { return std::exp(log_mean + 0.5 * log_std * log_std); }

TerminalLaw deflator_law(const MarketParams& mkt, double horizon) {
    mkt.validate();
    check_horizon(horizon);
    const double theta = mkt.market_price_of_risk();
    TerminalLaw law;
    law.log_mean = -(mkt.r + 0.5 * theta * theta) * horizon;
    law.log_std = std::abs(theta) * std::sqrt(horizon);
    law.horizon = horizon;
    law.shock_sign = theta >= 0.0 ? -1 : 1;
    return law;
}

TerminalLaw cp_wealth_law(const MarketParams& mkt, double pi, double horizon) {
    mkt.validate();
    check_horizon(horizon);
    if (!std::isfinite(pi)) fail(ErrorKind::parameter, "cp_wealth_law: weight must be finite");
    TerminalLaw law;
    law.log_mean = (mkt.r + pi * mkt.mu - 0.5 * pi * pi * mkt.sigma * mkt.sigma) * horizon;
    law.log_std = std::abs(pi) * mkt.sigma * std::sqrt(horizon);
    law.horizon = horizon;
    law.shock_sign = pi >= 0.0 ? 1 : -1;
    return law;
}

double merton_weight(const MarketParams& mkt, double gamma) {
    mkt.validate();
    if (!(gamma > 0.0)) fail(ErrorKind::parameter, "merton_weight: gamma must be > 0");
    return mkt.mu / (gamma * mkt.sigma * mkt.sigma);
}

McEstimate mc_expect(const ScalarFn& f, const TerminalLaw& law, const McConfig& cfg, McExecution exec) {
    return mc_expect_normal([&](double z) { return f(law.value_at(z)); }, cfg, exec);
}

}  // namespace turnpike
