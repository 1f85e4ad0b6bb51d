#include "turnpike/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "turnpike/error.hpp"

namespace turnpike {

namespace {

constexpr int kMaxExpansions = 40;
constexpr double kBudgetTol = 1e-13;  // on log y

double env_value(const ConcaveEnvelope& u, double x) { return x > 0.0 ? u.value(x) : u.value_at_zero(); }

template <class F>
double integrate(F&& f, const QuadratureRule& rule, const char* what) {
    try {
        return expect_normal(f, rule);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::evaluation) fail(ErrorKind::wellposedness, std::string(what) + ": " + e.what());
        throw;
    }
}

void check_options(const SolverOptions& opts) {
    if (!(opts.x0 > 0.0) || !std::isfinite(opts.x0)) fail(ErrorKind::parameter, "solver: x0 must be > 0");
    if (opts.nodes < 1) fail(ErrorKind::parameter, "solver: nodes must be >= 1");
}

// composite rule in the deflator's Gaussian variable, split where y*Y crosses a marginal knot
QuadratureRule deflator_rule(const ConcaveEnvelope& u, const TerminalLaw& defl, double y, int nodes) {
    if (defl.deterministic()) return point_rule();
    std::vector<double> breaks;
    for (double k : u.marginal_knots()) breaks.push_back(defl.node_of(k / y));
    return piecewise_normal_rule(breaks, nodes);
}

struct Stage {
    double y = 0.0;
    double eu = 0.0;
    double gap = 0.0;
};

double budget_excess(const ConcaveEnvelope& u, const TerminalLaw& defl, double y, double x0, int nodes) {
    const auto rule = deflator_rule(u, defl, y, nodes);
    return integrate([&](double z) {
        const double yy = defl.value_at(z);
        return yy * u.payoff(y * yy);
    }, rule, "budget") - x0;
}

Stage solve_stage(const ConcaveEnvelope& u, const TerminalLaw& defl, double x0, double y_guess, int nodes) {
    auto g = [&](double s) { return budget_excess(u, defl, std::exp(s), x0, nodes); };
    double lo = std::log(y_guess), hi = lo;
    const double g0 = g(lo);
    if (g0 > 0.0) {
        // payoff too rich: raise the multiplier
        int k = 0;
        for (hi = lo + std::numbers::ln10; g(hi) > 0.0; hi += std::numbers::ln10) {
            lo = hi;
            if (++k >= kMaxExpansions) fail(ErrorKind::bracketing, "solve_terminal: budget root not bracketed");
        }
    } else if (g0 < 0.0) {
        int k = 0;
        for (lo = hi - std::numbers::ln10; g(lo) < 0.0; lo -= std::numbers::ln10) {
            hi = lo;
            if (++k >= kMaxExpansions) fail(ErrorKind::bracketing, "solve_terminal: budget root not bracketed");
        }
    }
    const double s = g0 == 0.0 ? lo : find_root_monotone(g, lo, hi, kBudgetTol);

    Stage st;
    st.y = std::exp(s);
    const auto rule = deflator_rule(u, defl, st.y, nodes);
    st.eu = integrate([&](double z) { return env_value(u, u.payoff(st.y * defl.value_at(z))); }, rule,
                      "expected utility");
    const double dual = integrate([&](double z) { return u.dual(st.y * defl.value_at(z)); }, rule, "dual value");
    st.gap = dual + st.y * x0 - st.eu;
    return st;
}

struct StagePair {
    Stage coarse;
    Stage fine;
};

StagePair solve_pair(const ConcaveEnvelope& u, const MarketParams& mkt, double horizon, const SolverOptions& opts) {
    check_options(opts);
    const TerminalLaw defl = deflator_law(mkt, horizon);
    const double p_ref = reference_power(u.base());
    const double guess = isoelastic_closed_form(mkt, p_ref, horizon, opts.x0).result.multiplier;
    StagePair out;
    out.coarse = solve_stage(u, defl, opts.x0, guess, opts.nodes);
    out.fine = solve_stage(u, defl, opts.x0, out.coarse.y, 2 * opts.nodes);
    return out;
}

// U^{-1}(eu) for an increasing value function of x, by bracketing in log x
template <class V>
double invert_increasing(V&& value, double eu) {
    if (!std::isfinite(eu)) fail(ErrorKind::range, "certainty_equivalent: expected utility is not finite");
    auto g = [&](double s) {
        const double d = value(std::exp(s)) - eu;
        if (std::isnan(d)) fail(ErrorKind::evaluation, "certainty_equivalent: utility is NaN");
        return std::clamp(d, -std::numeric_limits<double>::max(), std::numeric_limits<double>::max());
    };
    constexpr double kLogCap = 700.0;
    double lo = -1.0, hi = 1.0;
    while (g(hi) < 0.0) {
        if (hi >= kLogCap) fail(ErrorKind::range, "certainty_equivalent: value above the range of U");
        lo = hi;
        hi = std::min(2.0 * hi, kLogCap);
    }
    while (g(lo) > 0.0) {
        if (lo <= -kLogCap) fail(ErrorKind::range, "certainty_equivalent: value below the range of U");
        hi = lo;
        lo = std::max(2.0 * lo, -kLogCap);
    }
    return std::exp(find_root_monotone(g, lo, hi, 1e-13));
}

}  // namespace

IsoelasticSolution isoelastic_closed_form(const MarketParams& mkt, double p, double horizon, double x0) {
    mkt.validate();
    if (!(p < 1.0) || !std::isfinite(p)) fail(ErrorKind::parameter, "isoelastic_closed_form: need p < 1");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) fail(ErrorKind::parameter, "horizon must be finite and > 0");
    if (!(x0 > 0.0)) fail(ErrorKind::parameter, "isoelastic_closed_form: x0 must be > 0");
    const double s2 = mkt.sigma * mkt.sigma;
    IsoelasticSolution out;
    out.weight = mkt.mu / ((1.0 - p) * s2);
    const double growth = (mkt.r + mkt.mu * mkt.mu / (2.0 * (1.0 - p) * s2)) * horizon;
    auto& res = out.result;
    res.certainty_equivalent = x0 * std::exp(growth);
    if (p == 0.0) {
        res.expected_utility = std::log(res.certainty_equivalent);
        res.multiplier = 1.0 / x0;
    } else {
        res.expected_utility = std::pow(res.certainty_equivalent, p) / p;
        // E[X~^p] for unit capital, rescaled by the homogeneity of U'
        res.multiplier = std::exp(p * growth) * std::pow(x0, p - 1.0);
    }
    return out;
}

double expected_utility_of_law(const UtilitySpec& u, const TerminalLaw& law, const QuadratureRule& rule) {
    if (law.deterministic()) return evaluate(u, std::exp(law.log_mean));
    return integrate([&](double z) {
        const double x = law.value_at(z);
        return x > 0.0 ? evaluate(u, x) : value_at_zero(u);
    }, rule, "expected utility");
}

double expected_utility_of_law(const ConcaveEnvelope& u, const TerminalLaw& law, int nodes) {
    if (law.deterministic()) return env_value(u, std::exp(law.log_mean));
    std::vector<double> breaks;
    for (double k : u.wealth_knots()) breaks.push_back(law.node_of(k));
    const auto rule = piecewise_normal_rule(breaks, nodes);
    return integrate([&](double z) { return env_value(u, law.value_at(z)); }, rule, "expected utility");
}

SolveResult solve_terminal(const ConcaveEnvelope& u, const MarketParams& mkt, double horizon,
                           const SolverOptions& opts) {
    const StagePair st = solve_pair(u, mkt, horizon, opts);
    SolveResult res;
    res.multiplier = st.fine.y;
    res.expected_utility = st.fine.eu;
    res.certainty_equivalent = certainty_equivalent(u, st.fine.eu);
    res.duality_gap = st.fine.gap;
    res.quad_error = std::abs(st.fine.eu - st.coarse.eu);
    return res;
}

SolveResult solve_terminal(const UtilitySpec& u, const MarketParams& mkt, double horizon, const SolverOptions& opts) {
    if (!is_concave(u)) {
        fail(ErrorKind::contract, "solve_terminal: utility is not concave; pass its concave envelope");
    }
    return solve_terminal(concave_envelope(u), mkt, horizon, opts);
}

double certainty_equivalent(const UtilitySpec& u, double expected_utility) {
    const double eu = expected_utility;
    if (const auto* iso = u.get_if<Isoelastic>()) {
        if (!(iso->p * eu > 0.0) || !std::isfinite(eu))
            fail(ErrorKind::range, "certainty_equivalent: value outside the range of U");
        return std::pow(iso->p * eu, 1.0 / iso->p);
    }
    if (u.get_if<Logarithmic>()) {
        if (!std::isfinite(eu)) fail(ErrorKind::range, "certainty_equivalent: value outside the range of U");
        return std::exp(eu);
    }
    if (const auto* pw = u.get_if<PowerIncentive>()) {
        if (!(pw->p * eu > 0.0) || !std::isfinite(eu))
            fail(ErrorKind::range, "certainty_equivalent: value outside the range of U");
        return std::pow(pw->p * eu, 1.0 / (pw->alpha * pw->p));
    }
    return invert_increasing([&](double x) { return evaluate(u, x); }, eu);
}

double certainty_equivalent(const ConcaveEnvelope& u, double expected_utility) {
    if (u.bridges().empty()) return certainty_equivalent(u.base(), expected_utility);
    return invert_increasing([&](double x) { return u.value(x); }, expected_utility);
}

CeRatioPoint ce_ratio(const UtilitySpec& u, const MarketParams& mkt, double p_ref, double horizon,
                      const SolverOptions& opts) {
    if (!(p_ref < 1.0) || !std::isfinite(p_ref)) fail(ErrorKind::parameter, "ce_ratio: need p_ref < 1");
    const ConcaveEnvelope env = concave_envelope(u);
    const StagePair st = solve_pair(env, mkt, horizon, opts);

    TerminalLaw law = cp_wealth_law(mkt, merton_weight(mkt, 1.0 - p_ref), horizon);
    law.log_mean += std::log(opts.x0);
    const double ce_iso_fine = certainty_equivalent(env, expected_utility_of_law(env, law, 2 * opts.nodes));
    const double ce_iso_coarse = certainty_equivalent(env, expected_utility_of_law(env, law, opts.nodes));
    const double ce_opt_fine = certainty_equivalent(env, st.fine.eu);
    const double ce_opt_coarse = certainty_equivalent(env, st.coarse.eu);

    CeRatioPoint pt;
    pt.horizon = horizon;
    pt.ce_optimal = ce_opt_fine;
    pt.ce_isoelastic = ce_iso_fine;
    pt.ratio = ce_iso_fine / ce_opt_fine;
    pt.quad_error = std::abs(pt.ratio - ce_iso_coarse / ce_opt_coarse);
    return pt;
}

std::vector<double> duality_gap_scan(const UtilitySpec& u, const MarketParams& mkt, double horizon,
                                     const std::vector<double>& ys, const SolverOptions& opts) {
    if (!is_concave(u)) {
        fail(ErrorKind::contract, "duality_gap_scan: utility is not concave; pass its concave envelope");
    }
    const ConcaveEnvelope env = concave_envelope(u);
    const StagePair st = solve_pair(env, mkt, horizon, opts);
    const TerminalLaw defl = deflator_law(mkt, horizon);
    std::vector<double> out;
    out.reserve(ys.size());
    for (double y : ys) {
        if (!(y > 0.0)) fail(ErrorKind::parameter, "duality_gap_scan: multipliers must be > 0");
        const auto rule = deflator_rule(env, defl, y, 2 * opts.nodes);
        const double dual = integrate([&](double z) { return env.dual(y * defl.value_at(z)); }, rule, "dual value");
        out.push_back(dual + y * opts.x0 - st.fine.eu);
    }
    return out;
}

HolderReport holder_duality_check(int n_trials, std::uint64_t seed) {
    if (n_trials < 1) fail(ErrorKind::parameter, "holder_duality_check: n_trials must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> states(1, 12);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    HolderReport rep;
    rep.trials = n_trials;
    for (int t = 0; t < n_trials; ++t) {
        double p;
        do {
            p = -4.0 + 4.99 * unit(rng);
        } while (std::abs(p) < 1e-3);
        const double q = p / (p - 1.0);
        const int m = states(rng);

        std::vector<double> prob(m), x(m), y(m);
        double total = 0.0;
        for (int i = 0; i < m; ++i) {
            prob[i] = 0.05 + unit(rng);
            total += prob[i];
            x[i] = std::exp(gauss(rng));
            y[i] = std::exp(gauss(rng));
        }
        double exy = 0.0;
        for (int i = 0; i < m; ++i) {
            prob[i] /= total;
            exy += prob[i] * x[i] * y[i];
        }
        // budget E[XY] = c <= 1
        const double c = 0.1 + 0.9 * unit(rng);
        for (auto& v : y) v *= c / exy;

        auto sides = [&](const std::vector<double>& xs, const std::vector<double>& ys) {
            double exp_ = 0.0, eyq = 0.0;
            for (int i = 0; i < m; ++i) {
                exp_ += prob[i] * std::pow(xs[i], p);
                eyq += prob[i] * std::pow(ys[i], q);
            }
            return std::pair{exp_ / p, std::pow(eyq, 1.0 - p) / p};
        };

        const auto [lhs, rhs] = sides(x, y);
        const double excess = (lhs - rhs) / std::max(1.0, std::abs(rhs));
        if (excess > 1e-12) ++rep.violations;
        rep.worst_violation = std::max(rep.worst_violation, excess);

        // equality case: Y proportional to X^{p-1} with E[XY] = 1
        double exp_ = 0.0;
        for (int i = 0; i < m; ++i) exp_ += prob[i] * std::pow(x[i], p);
        std::vector<double> y_eq(m);
        for (int i = 0; i < m; ++i) y_eq[i] = std::pow(x[i], p - 1.0) / exp_;
        const auto [l2, r2] = sides(x, y_eq);
        const double err = std::abs(l2 - r2) / std::max(1.0, std::abs(r2));
        if (err > 1e-10) ++rep.equality_failures;
        rep.worst_equality_error = std::max(rep.worst_equality_error, err);
    }
    return rep;
}

}  // namespace turnpike
