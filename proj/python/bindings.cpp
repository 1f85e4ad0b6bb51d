#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "turnpike/cli.hpp"
#include "turnpike/counterexample.hpp"
#include "turnpike/envelope.hpp"
#include "turnpike/error.hpp"
#include "turnpike/incentives.hpp"
#include "turnpike/market.hpp"
#include "turnpike/solver.hpp"
#include "turnpike/utility.hpp"

namespace py = pybind11;
using namespace turnpike;

namespace {

Contract make_contract(double cash, double stock, const std::vector<std::pair<double, double>>& legs) {
    Contract c{cash, stock, {}};
    for (const auto& [q, k] : legs) c.legs.push_back({q, k});
    return c;
}

py::dict report_dict(const AssumptionReport& r) {
    py::dict d;
    d["p_ref"] = r.p_ref;
    d["high_wealth"] = r.high_wealth;
    d["high_wealth_converges"] = r.high_wealth_converges;
    d["low_wealth"] = r.low_wealth;
    d["low_wealth_bounded"] = r.low_wealth_bounded;
    d["analytic_low_wealth"] = r.analytic_low_wealth ? py::cast(*r.analytic_low_wealth) : py::none();
    return d;
}

}  // namespace

PYBIND11_MODULE(_turnpike, m) {
    m.doc() = "Long-horizon portfolio choice: turnpike solver, option-grant analytics, counterexample";
    m.attr("__version__") = "0.1.0";

    auto& base = py::register_exception<Error>(m, "TurnpikeError", PyExc_ValueError);
    // translators run newest first, so the subclass is registered after its base
    py::register_exception<NonDifferentiableError>(m, "NonDifferentiableError", base.ptr());
    py::register_exception<cli::UsageError>(m, "UsageError", PyExc_ValueError);

    py::class_<MarketParams>(m, "MarketParams")
        .def(py::init([](double mu, double sigma, double r) {
                 MarketParams p{mu, sigma, r};
                 p.validate();
                 return p;
             }),
             py::arg("mu") = 0.08, py::arg("sigma") = 0.2, py::arg("r") = 0.01)
        .def_readonly("mu", &MarketParams::mu)
        .def_readonly("sigma", &MarketParams::sigma)
        .def_readonly("r", &MarketParams::r)
        .def("__repr__", [](const MarketParams& p) {
            return "MarketParams(mu=" + std::to_string(p.mu) + ", sigma=" + std::to_string(p.sigma) +
                   ", r=" + std::to_string(p.r) + ")";
        });

    py::class_<UtilitySpec>(m, "Utility")
        .def_static("isoelastic", &UtilitySpec::isoelastic, py::arg("p"))
        .def_static("logarithmic", &UtilitySpec::logarithmic)
        .def_static("shifted_power", &UtilitySpec::shifted_power, py::arg("p"), py::arg("a"))
        .def_static(
            "two_piece_power",
            [](double p, double p_star, double x_hi) {
                return UtilitySpec::two_piece_power(p, p_star, InterpolationSpec{InterpolationKind::cubic_hermite, x_hi});
            },
            py::arg("p"), py::arg("p_star"), py::arg("x_hi") = 4.0)
        .def_static(
            "incentivized",
            [](double p, double cash, double stock, const std::vector<std::pair<double, double>>& legs) {
                return UtilitySpec::incentivized(p, make_contract(cash, stock, legs));
            },
            py::arg("p"), py::arg("cash"), py::arg("stock"), py::arg("legs") = std::vector<std::pair<double, double>>{},
            "legs are (quantity, strike) pairs with increasing strikes")
        .def_static("power_incentive", &UtilitySpec::power_incentive, py::arg("p"), py::arg("alpha"))
        .def_static("parse", &cli::parse_utility, py::arg("descriptor"))
        .def("describe", &UtilitySpec::describe)
        .def("__repr__", [](const UtilitySpec& u) { return "Utility(" + u.describe() + ")"; })
        .def("__call__", [](const UtilitySpec& u, double x) { return evaluate(u, x); }, py::arg("x"))
        .def("marginal", [](const UtilitySpec& u, double x) { return marginal(u, x); }, py::arg("x"))
        .def("inverse_marginal", [](const UtilitySpec& u, double y) { return inverse_marginal(u, y); }, py::arg("y"))
        .def("dual", [](const UtilitySpec& u, double y) { return dual_eval(u, y); }, py::arg("y"))
        .def("certainty_equivalent",
             [](const UtilitySpec& u, double eu) { return certainty_equivalent(u, eu); }, py::arg("expected_utility"))
        .def_property_readonly("is_concave", [](const UtilitySpec& u) { return is_concave(u); })
        .def_property_readonly("kinks", [](const UtilitySpec& u) { return kinks(u); })
        .def(
            "validate_assumptions",
            [](const UtilitySpec& u, double p_ref) { return report_dict(validate_assumptions(u, p_ref)); },
            py::arg("p_ref"));

    py::class_<ConcaveEnvelope>(m, "ConcaveEnvelope")
        .def_property_readonly("bridges",
                               [](const ConcaveEnvelope& e) {
                                   py::list out;
                                   for (const auto& b : e.bridges())
                                       out.append(py::make_tuple(b.x_l, b.x_r, b.slope, b.intercept));
                                   return out;
                               })
        .def("__call__", &ConcaveEnvelope::value, py::arg("x"))
        .def("marginal", &ConcaveEnvelope::marginal, py::arg("x"))
        .def("payoff", &ConcaveEnvelope::payoff, py::arg("y"))
        .def("dual", &ConcaveEnvelope::dual, py::arg("y"))
        .def(
            "inverse_marginal",
            [](const ConcaveEnvelope& e, double y) {
                const auto r = e.inverse_marginal(y);
                return py::make_tuple(r.lo, r.hi);
            },
            py::arg("y"));
    m.def("concave_envelope", &concave_envelope, py::arg("utility"));

    py::class_<SolveResult>(m, "SolveResult")
        .def_readonly("multiplier", &SolveResult::multiplier)
        .def_readonly("expected_utility", &SolveResult::expected_utility)
        .def_readonly("certainty_equivalent", &SolveResult::certainty_equivalent)
        .def_readonly("duality_gap", &SolveResult::duality_gap)
        .def_readonly("quad_error", &SolveResult::quad_error);

    py::class_<CeRatioPoint>(m, "CeRatioPoint")
        .def_readonly("horizon", &CeRatioPoint::horizon)
        .def_readonly("ce_optimal", &CeRatioPoint::ce_optimal)
        .def_readonly("ce_isoelastic", &CeRatioPoint::ce_isoelastic)
        .def_readonly("ratio", &CeRatioPoint::ratio)
        .def_readonly("quad_error", &CeRatioPoint::quad_error);

    m.def(
        "solve_terminal",
        [](const UtilitySpec& u, const MarketParams& mkt, double horizon, int nodes, double x0) {
            // non-concave utilities are solved on their envelope
            return solve_terminal(concave_envelope(u), mkt, horizon, SolverOptions{nodes, x0});
        },
        py::arg("utility"), py::arg("market"), py::arg("horizon"), py::arg("nodes") = 201, py::arg("x0") = 1.0);
    m.def(
        "isoelastic_closed_form",
        [](const MarketParams& mkt, double p, double horizon, double x0) {
            const auto s = isoelastic_closed_form(mkt, p, horizon, x0);
            return py::make_tuple(s.result, s.weight);
        },
        py::arg("market"), py::arg("p"), py::arg("horizon"), py::arg("x0") = 1.0,
        "returns (SolveResult, Merton weight)");
    m.def(
        "ce_ratio",
        [](const UtilitySpec& u, const MarketParams& mkt, double p_ref, double horizon, int nodes) {
            return ce_ratio(u, mkt, p_ref, horizon, SolverOptions{nodes, 1.0});
        },
        py::arg("utility"), py::arg("market"), py::arg("p_ref"), py::arg("horizon"), py::arg("nodes") = 201);
    m.def(
        "holder_duality_check",
        [](int n, std::uint64_t seed) {
            const auto r = holder_duality_check(n, seed);
            py::dict d;
            d["trials"] = r.trials;
            d["violations"] = r.violations;
            d["worst_violation"] = r.worst_violation;
            d["equality_failures"] = r.equality_failures;
            d["worst_equality_error"] = r.worst_equality_error;
            d["passed"] = r.passed();
            return d;
        },
        py::arg("n_trials"), py::arg("seed"));
    m.def("merton_weight", &merton_weight, py::arg("market"), py::arg("gamma"));

    m.def("effective_risk_aversion", &effective_risk_aversion, py::arg("alpha"), py::arg("gamma"));
    m.def("strike_grid",
          [](double lo, double hi, int n, bool geometric) {
              return strike_grid(lo, hi, n, geometric ? StrikeSpacing::geometric : StrikeSpacing::uniform);
          },
          py::arg("lo"), py::arg("hi"), py::arg("n"), py::arg("geometric") = true);
    py::class_<ReplicationPortfolio>(m, "ReplicationPortfolio")
        .def_readonly("alpha", &ReplicationPortfolio::alpha)
        .def_readonly("kbar", &ReplicationPortfolio::kbar)
        .def_readonly("cash", &ReplicationPortfolio::cash)
        .def_readonly("forward_qty", &ReplicationPortfolio::forward_qty)
        .def_property_readonly("put_legs",
                               [](const ReplicationPortfolio& p) {
                                   py::list out;
                                   for (const auto& l : p.put_legs) out.append(py::make_tuple(l.strike, l.weight, l.width));
                                   return out;
                               })
        .def_property_readonly("call_legs",
                               [](const ReplicationPortfolio& p) {
                                   py::list out;
                                   for (const auto& l : p.call_legs) out.append(py::make_tuple(l.strike, l.weight, l.width));
                                   return out;
                               })
        .def("__call__", &ReplicationPortfolio::payoff, py::arg("x"));
    m.def(
        "carr_madan_legs",
        [](double alpha, double kbar, const std::vector<double>& strikes) { return carr_madan_legs(alpha, kbar, strikes); },
        py::arg("alpha"), py::arg("kbar"), py::arg("strikes"));
    m.def(
        "replicate",
        [](const ReplicationPortfolio& pf, const std::vector<double>& xs) {
            const auto r = replicate(pf, xs);
            return py::make_tuple(r.values, r.max_rel_error);
        },
        py::arg("portfolio"), py::arg("xs"), "returns (values, max_rel_error)");
    m.def(
        "grant_value_curve",
        [](double p, double cash, double stock, const std::vector<std::pair<double, double>>& legs,
           const MarketParams& mkt, const std::vector<double>& horizons) {
            py::list out;
            for (const auto& g : grant_value_curve(p, make_contract(cash, stock, legs), mkt, horizons)) {
                py::dict d;
                d["horizon"] = g.horizon;
                d["ce_plain"] = g.ce_plain;
                d["ce_incentivized"] = g.ce_incentivized;
                d["premium"] = g.premium;
                d["quad_error"] = g.quad_error;
                out.append(d);
            }
            return out;
        },
        py::arg("p"), py::arg("cash"), py::arg("stock"), py::arg("legs"), py::arg("market"), py::arg("horizons"));
    m.def("square_contract_price", &square_contract_price, py::arg("s0"), py::arg("sigma"), py::arg("horizon"));

    m.def(
        "check_param_restriction",
        [](const MarketParams& mkt, double p, double p_star) {
            const auto r = check_param_restriction(mkt, p, p_star);
            py::dict d;
            d["lhs"] = r.lhs;
            d["rhs"] = r.rhs;
            d["satisfied"] = r.satisfied;
            d["margin"] = r.margin;
            return d;
        },
        py::arg("market"), py::arg("p"), py::arg("p_star"));
    m.def("divergence_exponent", &divergence_exponent, py::arg("market"), py::arg("p"), py::arg("p_star"));
    m.def(
        "lowwealth_ratio_closed_form",
        [](const MarketParams& mkt, double p, double p_star, double horizon) {
            const auto r = lowwealth_ratio_closed_form(mkt, p, p_star, horizon);
            py::dict d;
            d["exponent"] = r.exponent;
            d["qstar_prob"] = r.qstar_prob;
            d["lowwealth_ratio"] = r.lowwealth_ratio;
            return d;
        },
        py::arg("market"), py::arg("p"), py::arg("p_star"), py::arg("horizon"));

    m.def(
        "run",
        [](const std::string& command, const std::map<std::string, std::string>& options) {
            cli::KeyValues kv = options;
            kv["command"] = command;
            const auto cfg = cli::config_from_map(kv);
            cli::Table t;
            {
                py::gil_scoped_release nogil;
                t = cli::run_experiment(cfg);
            }
            py::dict d;
            d["columns"] = t.columns;
            d["rows"] = t.rows;
            d["meta"] = t.meta;
            d["config"] = cli::config_to_map(cfg);
            return d;
        },
        py::arg("command"), py::arg("options") = std::map<std::string, std::string>{},
        "Run a CLI experiment in-process; options take the CLI flag names without dashes");
}
