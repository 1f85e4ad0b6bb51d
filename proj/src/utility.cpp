#include "turnpike/utility.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "turnpike/error.hpp"

namespace turnpike {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void require_positive_x(double x, const char* op) {
    if (!(x > 0.0) || std::isnan(x)) fail(ErrorKind::domain, std::string(op) + ": wealth must be > 0, got " + num(x));
}

void require_positive_y(double y, const char* op) {
    if (!(y > 0.0) || std::isnan(y)) fail(ErrorKind::domain, std::string(op) + ": y must be > 0, got " + num(y));
}

// power utility x^p/p, log at p == 0
double power_value(double x, double p) { return p == 0.0 ? std::log(x) : std::pow(x, p) / p; }

// Cubic Hermite bridge of the two-piece utility, parametrised by t in [0, 1].
struct Bridge {
    double x0, h, v0, v1, m0, m1;

    double value(double x) const {
        const double t = (x - x0) / h;
        const double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * v0 + (t3 - 2 * t2 + t) * h * m0 + (-2 * t3 + 3 * t2) * v1 +
               (t3 - t2) * h * m1;
    }
    // U'(x) = a t^2 + b t + c
    double qa() const { return 6 * (v0 - v1) / h + 3 * m0 + 3 * m1; }
    double qb() const { return 6 * (v1 - v0) / h - 4 * m0 - 2 * m1; }
    double slope(double x) const {
        const double t = (x - x0) / h;
        return (qa() * t + qb()) * t + m0;
    }
    double curvature(double x) const {
        const double t = (x - x0) / h;
        return (2 * qa() * t + qb()) / h;
    }
    double inverse(double y) const {
        const double a = qa(), b = qb(), c = m0 - y;
        double t;
        if (std::abs(a) <= 1e-14 * (std::abs(b) + std::abs(c))) {
            t = -c / b;
        } else {
            const double disc = std::max(b * b - 4 * a * c, 0.0);
            const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
            const double r1 = q / a;
            const double r2 = q != 0.0 ? c / q : r1;
            t = (r1 >= -1e-12 && r1 <= 1 + 1e-12) ? r1 : r2;
        }
        return x0 + h * std::clamp(t, 0.0, 1.0);
    }
};

Bridge bridge_of(const TwoPiecePower& u) {
    return {1.0, u.interpolation.x_hi - 1.0, u.value_lo, u.value_hi, 1.0, u.slope_hi};
}

double incentive_norm(const Incentivized& u) { return std::pow(u.contract.total_slope(), u.p); }

double payoff_slope_right(const Contract& c, double x) {
    double s = c.stock;
    for (const auto& leg : c.legs)
        if (leg.strike <= x) s += leg.quantity;
    return s;
}

double payoff_slope_left(const Contract& c, double x) {
    double s = c.stock;
    for (const auto& leg : c.legs)
        if (leg.strike < x) s += leg.quantity;
    return s;
}

bool has_options(const Contract& c) {
    return std::any_of(c.legs.begin(), c.legs.end(), [](const OptionLeg& l) { return l.quantity > 0.0; });
}

}  // namespace

// ---------------------------------------------------------------------------
// Contract
// ---------------------------------------------------------------------------

void Contract::validate() const {
    if (!(cash >= 0.0) || !std::isfinite(cash)) fail(ErrorKind::parameter, "contract: cash must be >= 0");
    if (!(stock > 0.0) || !std::isfinite(stock)) fail(ErrorKind::parameter, "contract: stock fraction must be > 0");
    double prev = 0.0;
    for (const auto& leg : legs) {
        if (!(leg.quantity >= 0.0) || !std::isfinite(leg.quantity))
            fail(ErrorKind::parameter, "contract: option quantity must be >= 0");
        if (!(leg.strike > 0.0) || !std::isfinite(leg.strike))
            fail(ErrorKind::parameter, "contract: strike must be > 0");
        if (!(leg.strike > prev)) fail(ErrorKind::parameter, "contract: strikes must be strictly increasing");
        prev = leg.strike;
    }
}

double Contract::payoff(double x) const {
    double w = cash + stock * x;
    for (const auto& leg : legs) w += leg.quantity * std::max(x - leg.strike, 0.0);
    return w;
}

double Contract::total_slope() const {
    double s = stock;
    for (const auto& leg : legs) s += leg.quantity;
    return s;
}

Contract Contract::without_options() const { return Contract{cash, stock, {}}; }

// ---------------------------------------------------------------------------
// Factories
// ---------------------------------------------------------------------------

UtilitySpec UtilitySpec::isoelastic(double p) {
    if (!(p < 1.0) || p == 0.0 || !std::isfinite(p))
        fail(ErrorKind::parameter, "isoelastic: need p < 1 and p != 0, got " + num(p));
    return UtilitySpec(Isoelastic{p});
}

UtilitySpec UtilitySpec::logarithmic() { return UtilitySpec(Logarithmic{}); }

UtilitySpec UtilitySpec::shifted_power(double p, double a) {
    if (!(p < 1.0) || !std::isfinite(p)) fail(ErrorKind::parameter, "shifted: need p < 1, got " + num(p));
    if (!(a >= 0.0) || !std::isfinite(a)) fail(ErrorKind::parameter, "shifted: need a >= 0, got " + num(a));
    return UtilitySpec(ShiftedPower{p, a});
}

UtilitySpec UtilitySpec::two_piece_power(double p, double p_star, InterpolationSpec interp) {
    if (!(p < 0.0) || !std::isfinite(p)) fail(ErrorKind::parameter, "twopiece: need p < 0, got " + num(p));
    if (!(p_star < 0.0) || !std::isfinite(p_star))
        fail(ErrorKind::parameter, "twopiece: need p_star < 0, got " + num(p_star));
    if (!(interp.x_hi > 1.0) || !std::isfinite(interp.x_hi))
        fail(ErrorKind::parameter, "twopiece: need x_hi > 1, got " + num(interp.x_hi));

    TwoPiecePower u{p, p_star, interp};
    const double h = interp.x_hi - 1.0;
    u.slope_hi = std::pow(interp.x_hi, p - 1.0);
    u.value_hi = std::pow(interp.x_hi, p) / p;
    // Secant slope at the centre of the window [(m0+2m1)/3, (2m0+m1)/3] in which
    // the Hermite cubic with end slopes m0 = 1, m1 is concave.
    const double secant = 0.5 * (1.0 + u.slope_hi);
    u.value_lo = u.value_hi - secant * h;
    u.low_shift = u.value_lo - 1.0 / p_star;

    const Bridge b = bridge_of(u);
    const double tol = 1e-12 * (1.0 + 1.0 / h);
    if (b.curvature(1.0) > tol || b.curvature(interp.x_hi) > tol) {
        fail(ErrorKind::parameter, "twopiece: interpolant is not concave for x_hi=" + num(interp.x_hi));
    }
    constexpr int kChecks = 1000;
    for (int i = 0; i <= kChecks; ++i) {
        const double x = 1.0 + h * i / kChecks;
        if (!(b.slope(x) > 0.0)) fail(ErrorKind::parameter, "twopiece: interpolant is not increasing");
    }
    return UtilitySpec(u);
}

UtilitySpec UtilitySpec::incentivized(double p, Contract contract) {
    if (!(p < 1.0) || !std::isfinite(p)) fail(ErrorKind::parameter, "incentive: need p < 1, got " + num(p));
    if (p == 0.0) fail(ErrorKind::parameter, "incentive: p = 0 is not supported (normalisation needs p != 0)");
    contract.validate();
    return UtilitySpec(Incentivized{p, std::move(contract)});
}

UtilitySpec UtilitySpec::power_incentive(double p, double alpha) {
    if (!(p < 1.0) || p == 0.0 || !std::isfinite(p))
        fail(ErrorKind::parameter, "power incentive: need p < 1 and p != 0, got " + num(p));
    if (!(alpha > 0.0) || !std::isfinite(alpha))
        fail(ErrorKind::parameter, "power incentive: need alpha > 0, got " + num(alpha));
    if (!(alpha * p < 1.0))
        fail(ErrorKind::wellposedness, "power incentive: effective risk aversion 1 - alpha*p must be > 0");
    return UtilitySpec(PowerIncentive{p, alpha});
}

std::string UtilitySpec::describe() const {
    return std::visit(
        overloaded{
            [](const Isoelastic& u) { return "isoelastic:p=" + num(u.p); },
            [](const Logarithmic&) { return std::string("log"); },
            [](const ShiftedPower& u) { return "shifted:p=" + num(u.p) + ",a=" + num(u.a); },
            [](const TwoPiecePower& u) {
                return "twopiece:p=" + num(u.p) + ",pstar=" + num(u.p_star) + ",xhi=" + num(u.interpolation.x_hi);
            },
            [](const Incentivized& u) {
                std::string s = "incentive:p=" + num(u.p) + ",c1=" + num(u.contract.cash) +
                                ",c2=" + num(u.contract.stock);
                if (!u.contract.legs.empty()) {
                    s += ",legs=";
                    for (std::size_t i = 0; i < u.contract.legs.size(); ++i) {
                        if (i) s += ";";
                        s += num(u.contract.legs[i].quantity) + "@" + num(u.contract.legs[i].strike);
                    }
                }
                return s;
            },
            [](const PowerIncentive& u) { return "power:p=" + num(u.p) + ",alpha=" + num(u.alpha); },
        },
        v_);
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

double evaluate(const UtilitySpec& spec, double x) {
    require_positive_x(x, "evaluate");
    return std::visit(overloaded{
                          [&](const Isoelastic& u) { return std::pow(x, u.p) / u.p; },
                          [&](const Logarithmic&) { return std::log(x); },
                          [&](const ShiftedPower& u) { return power_value(x + u.a, u.p); },
                          [&](const TwoPiecePower& u) {
                              if (x <= 1.0) return std::pow(x, u.p_star) / u.p_star + u.low_shift;
                              if (x >= u.interpolation.x_hi) return std::pow(x, u.p) / u.p;
                              return bridge_of(u).value(x);
                          },
                          [&](const Incentivized& u) {
                              return std::pow(u.contract.payoff(x), u.p) / u.p / incentive_norm(u);
                          },
                          [&](const PowerIncentive& u) { return std::pow(x, u.alpha * u.p) / u.p; },
                      },
                      spec.variant());
}

double value_at_zero(const UtilitySpec& spec) {
    return std::visit(overloaded{
                          [](const Isoelastic& u) { return u.p > 0.0 ? 0.0 : -kInf; },
                          [](const Logarithmic&) { return -kInf; },
                          [](const ShiftedPower& u) {
                              if (u.a > 0.0) return power_value(u.a, u.p);
                              return u.p > 0.0 ? 0.0 : -kInf;
                          },
                          [](const TwoPiecePower&) { return -kInf; },
                          [](const Incentivized& u) {
                              if (u.contract.cash > 0.0)
                                  return std::pow(u.contract.cash, u.p) / u.p / incentive_norm(u);
                              return u.p > 0.0 ? 0.0 : -kInf;
                          },
                          [](const PowerIncentive& u) { return u.p > 0.0 ? 0.0 : -kInf; },
                      },
                      spec.variant());
}

double marginal(const UtilitySpec& spec, double x) {
    require_positive_x(x, "marginal");
    return std::visit(overloaded{
                          [&](const Isoelastic& u) { return std::pow(x, u.p - 1.0); },
                          [&](const Logarithmic&) { return 1.0 / x; },
                          [&](const ShiftedPower& u) { return std::pow(x + u.a, u.p - 1.0); },
                          [&](const TwoPiecePower& u) {
                              if (x <= 1.0) return std::pow(x, u.p_star - 1.0);
                              if (x >= u.interpolation.x_hi) return std::pow(x, u.p - 1.0);
                              return bridge_of(u).slope(x);
                          },
                          [&](const Incentivized& u) {
                              const double scale =
                                  std::pow(u.contract.payoff(x), u.p - 1.0) / incentive_norm(u);
                              const double left = payoff_slope_left(u.contract, x);
                              const double right = payoff_slope_right(u.contract, x);
                              if (left != right) throw NonDifferentiableError(x, left * scale, right * scale);
                              return right * scale;
                          },
                          [&](const PowerIncentive& u) { return u.alpha * std::pow(x, u.alpha * u.p - 1.0); },
                      },
                      spec.variant());
}

double marginal_at_zero(const UtilitySpec& spec) {
    return std::visit(overloaded{
                          [](const ShiftedPower& u) { return u.a > 0.0 ? std::pow(u.a, u.p - 1.0) : kInf; },
                          [](const Incentivized& u) {
                              if (u.contract.cash > 0.0)
                                  return u.contract.stock * std::pow(u.contract.cash, u.p - 1.0) / incentive_norm(u);
                              return kInf;
                          },
                          [](const auto&) { return kInf; },
                      },
                      spec.variant());
}

double curvature(const UtilitySpec& spec, double x) {
    require_positive_x(x, "curvature");
    return std::visit(overloaded{
                          [&](const Isoelastic& u) { return (u.p - 1.0) * std::pow(x, u.p - 2.0); },
                          [&](const Logarithmic&) { return -1.0 / (x * x); },
                          [&](const ShiftedPower& u) { return (u.p - 1.0) * std::pow(x + u.a, u.p - 2.0); },
                          [&](const TwoPiecePower& u) {
                              if (x <= 1.0) return (u.p_star - 1.0) * std::pow(x, u.p_star - 2.0);
                              if (x >= u.interpolation.x_hi) return (u.p - 1.0) * std::pow(x, u.p - 2.0);
                              return bridge_of(u).curvature(x);
                          },
                          [&](const Incentivized& u) {
                              const double s = payoff_slope_right(u.contract, x);
                              return s * s * (u.p - 1.0) * std::pow(u.contract.payoff(x), u.p - 2.0) /
                                     incentive_norm(u);
                          },
                          [&](const PowerIncentive& u) {
                              const double e = u.alpha * u.p;
                              return u.alpha * (e - 1.0) * std::pow(x, e - 2.0);
                          },
                      },
                      spec.variant());
}

bool is_concave(const UtilitySpec& spec) {
    if (const auto* u = spec.get_if<Incentivized>()) return !has_options(u->contract);
    return true;
}

double inverse_marginal(const UtilitySpec& spec, double y) {
    require_positive_y(y, "inverse_marginal");
    if (!is_concave(spec)) {
        fail(ErrorKind::contract, "inverse_marginal: utility is not concave; take its concave envelope first");
    }
    return std::visit(overloaded{
                          [&](const Isoelastic& u) { return std::pow(y, 1.0 / (u.p - 1.0)); },
                          [&](const Logarithmic&) { return 1.0 / y; },
                          [&](const ShiftedPower& u) {
                              return std::max(std::pow(y, 1.0 / (u.p - 1.0)) - u.a, 0.0);
                          },
                          [&](const TwoPiecePower& u) {
                              if (y >= 1.0) return std::pow(y, 1.0 / (u.p_star - 1.0));
                              if (y <= u.slope_hi) return std::pow(y, 1.0 / (u.p - 1.0));
                              return bridge_of(u).inverse(y);
                          },
                          [&](const Incentivized& u) {
                              const auto pieces = detail::payoff_pieces(u.contract);
                              return detail::incentivized_piece_inverse(u, pieces.back(), y);
                          },
                          [&](const PowerIncentive& u) {
                              return std::pow(y / u.alpha, 1.0 / (u.alpha * u.p - 1.0));
                          },
                      },
                      spec.variant());
}

double dual_eval(const UtilitySpec& spec, double y) {
    require_positive_y(y, "dual_eval");
    if (!is_concave(spec)) {
        fail(ErrorKind::contract, "dual_eval: utility is not concave; take its concave envelope first");
    }
    if (const auto* u = spec.get_if<Isoelastic>()) {
        const double q = u->p / (u->p - 1.0);
        return -std::pow(y, q) / q;
    }
    if (spec.get_if<Logarithmic>()) return -std::log(y) - 1.0;
    const double x = inverse_marginal(spec, y);
    if (x <= 0.0) return value_at_zero(spec);
    return evaluate(spec, x) - x * y;
}

double reference_power(const UtilitySpec& spec) {
    return std::visit(overloaded{
                          [](const Logarithmic&) { return 0.0; },
                          [](const PowerIncentive& u) { return u.alpha * u.p; },
                          [](const auto& u) { return u.p; },
                      },
                      spec.variant());
}

std::vector<double> kinks(const UtilitySpec& spec) {
    if (const auto* u = spec.get_if<TwoPiecePower>()) return {1.0, u->interpolation.x_hi};
    std::vector<double> out;
    if (const auto* u = spec.get_if<Incentivized>()) {
        for (const auto& leg : u->contract.legs)
            if (leg.quantity > 0.0) out.push_back(leg.strike);
    }
    return out;
}

UtilitySpec effective_utility(double p, const Contract& contract) { return UtilitySpec::incentivized(p, contract); }

AssumptionReport validate_assumptions(const UtilitySpec& u, double p_ref) {
    if (!(p_ref < 1.0) || !std::isfinite(p_ref))
        fail(ErrorKind::parameter, "validate_assumptions: need p_ref < 1, got " + num(p_ref));
    AssumptionReport rep;
    rep.p_ref = p_ref;

    for (double x : {1e2, 1e4, 1e6, 1e8}) {
        double m;
        try {
            m = marginal(u, x);
        } catch (const NonDifferentiableError& e) {
            m = e.right_slope();
        }
        rep.high_wealth.emplace_back(x, m / std::pow(x, p_ref - 1.0));
    }
    const double first = std::abs(rep.high_wealth.front().second - 1.0);
    const double last = std::abs(rep.high_wealth.back().second - 1.0);
    rep.high_wealth_converges = std::isfinite(last) && last < 1e-2 && last <= first + 1e-12;

    // U(x) / U~'(x) near zero; a 1/x-type divergence shows up as a 10^6 swing over the grid
    bool finite = true;
    double worst = 0.0;
    for (int k = 2; k <= 8; ++k) {
        const double x = std::pow(10.0, -k);
        const double ratio = evaluate(u, x) / std::pow(x, p_ref - 1.0);
        rep.low_wealth.emplace_back(x, ratio);
        finite = finite && std::isfinite(ratio);
        worst = std::min(worst, ratio);
    }
    const double scale = std::max(1.0, std::abs(rep.low_wealth.front().second));
    rep.low_wealth_bounded = finite && worst >= -100.0 * scale;

    if (const auto* tp = u.get_if<TwoPiecePower>()) rep.analytic_low_wealth = tp->p_star >= tp->p - 1.0;
    return rep;
}

namespace detail {

std::vector<PayoffPiece> payoff_pieces(const Contract& contract) {
    std::vector<PayoffPiece> out;
    double lo = 0.0, slope = contract.stock, intercept = contract.cash;
    for (const auto& leg : contract.legs) {
        if (leg.quantity <= 0.0) continue;
        out.push_back({lo, leg.strike, slope, intercept});
        lo = leg.strike;
        slope += leg.quantity;
        intercept -= leg.quantity * leg.strike;
    }
    out.push_back({lo, kInf, slope, intercept});
    return out;
}

double incentivized_piece_inverse(const Incentivized& u, const PayoffPiece& piece, double y) {
    // slope * w^{p-1} / C^p = y on the piece, w = intercept + slope * x
    const double w = std::pow(y * incentive_norm(u) / piece.slope, 1.0 / (u.p - 1.0));
    const double x = (w - piece.intercept) / piece.slope;
    return std::clamp(x, piece.lo, piece.hi);
}

}  // namespace detail

}  // namespace turnpike
