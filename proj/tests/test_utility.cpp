#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "turnpike/error.hpp"
#include "turnpike/utility.hpp"

using namespace turnpike;

namespace {

template <class F>
ErrorKind kind_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::parameter;
}

Contract figure_contract() {
    return Contract{1.0, 2.0, {{3.0, 4.0}}};
}

std::vector<UtilitySpec> sample_family() {
    return {UtilitySpec::isoelastic(-1.0),
            UtilitySpec::isoelastic(0.5),
            UtilitySpec::logarithmic(),
            UtilitySpec::shifted_power(-1.0, 1.0),
            UtilitySpec::shifted_power(0.0, 0.5),
            UtilitySpec::two_piece_power(-1.0, -3.0),
            UtilitySpec::incentivized(0.5, figure_contract()),
            UtilitySpec::incentivized(-2.0, Contract{0.5, 1.0, {{1.0, 2.0}, {2.0, 10.0}}}),
            UtilitySpec::power_incentive(-1.0, 0.5)};
}

}  // namespace

TEST_CASE("evaluate: worked values") {
    CHECK(evaluate(UtilitySpec::isoelastic(-1.0), 2.0) == doctest::Approx(-0.5).epsilon(1e-15));
    // U~(9)/5^0.5 with U~(x) = 2 sqrt(x)
    CHECK(evaluate(UtilitySpec::incentivized(0.5, figure_contract()), 4.0) ==
          doctest::Approx(6.0 / std::sqrt(5.0)).epsilon(1e-15));
    CHECK(evaluate(UtilitySpec::logarithmic(), 1.0) == 0.0);
    CHECK(evaluate(UtilitySpec::shifted_power(-1.0, 1.0), 1.0) == doctest::Approx(-0.5));
    CHECK(evaluate(UtilitySpec::shifted_power(0.0, 1.0), std::exp(1.0) - 1.0) == doctest::Approx(1.0));
    CHECK(evaluate(UtilitySpec::power_incentive(-1.0, 0.5), 4.0) == doctest::Approx(-0.5));
}

TEST_CASE("evaluate: domain errors") {
    CHECK(kind_of([] { evaluate(UtilitySpec::isoelastic(-1.0), 0.0); }) == ErrorKind::domain);
    CHECK(kind_of([] { evaluate(UtilitySpec::logarithmic(), -1.0); }) == ErrorKind::domain);
}

TEST_CASE("factories validate their parameters") {
    CHECK(kind_of([] { UtilitySpec::isoelastic(0.0); }) == ErrorKind::parameter);
    CHECK(kind_of([] { UtilitySpec::isoelastic(1.0); }) == ErrorKind::parameter);
    CHECK(kind_of([] { UtilitySpec::shifted_power(-1.0, -0.1); }) == ErrorKind::parameter);
    CHECK(kind_of([] { UtilitySpec::two_piece_power(0.5, -3.0); }) == ErrorKind::parameter);
    CHECK(kind_of([] { UtilitySpec::two_piece_power(-1.0, 0.5); }) == ErrorKind::parameter);
    CHECK(kind_of([] { UtilitySpec::two_piece_power(-1.0, -3.0, {InterpolationKind::cubic_hermite, 1.0}); }) ==
          ErrorKind::parameter);
    CHECK(kind_of([] { UtilitySpec::incentivized(0.0, figure_contract()); }) == ErrorKind::parameter);
    CHECK(kind_of([] { UtilitySpec::incentivized(0.5, Contract{-1.0, 1.0, {}}); }) == ErrorKind::parameter);
    CHECK(kind_of([] { UtilitySpec::incentivized(0.5, Contract{0.0, 0.0, {}}); }) == ErrorKind::parameter);
    CHECK(kind_of([] { UtilitySpec::incentivized(0.5, Contract{0.0, 1.0, {{1.0, 5.0}, {1.0, 2.0}}}); }) ==
          ErrorKind::parameter);
    CHECK(kind_of([] { UtilitySpec::power_incentive(0.5, 2.0); }) == ErrorKind::wellposedness);
}

TEST_CASE("marginal: closed forms and the strike") {
    CHECK(marginal(UtilitySpec::isoelastic(-1.0), 2.0) == doctest::Approx(0.25).epsilon(1e-15));
    const auto inc = UtilitySpec::incentivized(0.5, figure_contract());
    try {
        marginal(inc, 4.0);
        FAIL("expected a kink");
    } catch (const NonDifferentiableError& e) {
        CHECK(e.at() == 4.0);
        // left slope 2/(9^0.5 5^0.5), right slope 5/(9^0.5 5^0.5)
        CHECK(e.left_slope() == doctest::Approx(2.0 / (3.0 * std::sqrt(5.0))));
        CHECK(e.right_slope() == doctest::Approx(5.0 / (3.0 * std::sqrt(5.0))));
    }
    // shifted power approaches x^{p-1} at high wealth
    const auto sp = UtilitySpec::shifted_power(-1.0, 1.0);
    double prev = 0.0;
    for (double x : {1e2, 1e4, 1e6, 1e8}) {
        const double r = marginal(sp, x) / std::pow(x, -2.0);
        CHECK(r > prev);
        prev = r;
    }
    CHECK(prev == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("monotonicity on an increasing grid") {
    for (const auto& u : sample_family()) {
        INFO(u.describe());
        double prev = -INFINITY;
        for (int i = 0; i <= 2000; ++i) {
            const double x = std::pow(10.0, -4.0 + 8.0 * i / 2000.0);
            const double v = evaluate(u, x);
            CHECK(v > prev);
            prev = v;
        }
    }
}

TEST_CASE("gradient consistency at random points away from kinks") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> logx(std::log(0.05), std::log(50.0));
    for (const auto& u : sample_family()) {
        INFO(u.describe());
        const auto ks = kinks(u);
        int checked = 0;
        for (int i = 0; i < 1000; ++i) {
            const double x = std::exp(logx(rng));
            const double h = 1e-4 * x;
            bool near = false;
            for (double k : ks) near = near || std::abs(x - k) < 2.0 * h;
            if (near) continue;
            const double fd = (evaluate(u, x + h) - evaluate(u, x - h)) / (2.0 * h);
            const double m = marginal(u, x);
            // O(h^2) truncation: U''' x^2 ~ U' at these scales
            CHECK(std::abs(fd - m) <= 1e-6 * std::abs(m) + 1e-12);
            ++checked;
        }
        CHECK(checked > 900);
    }
}

TEST_CASE("dual_eval: closed forms") {
    CHECK(dual_eval(UtilitySpec::isoelastic(0.5), 2.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(dual_eval(UtilitySpec::logarithmic(), 1.0) == doctest::Approx(-1.0).epsilon(1e-15));
    // -y^q/q, q = p/(p-1) = 1/2 at p = -1
    CHECK(dual_eval(UtilitySpec::isoelastic(-1.0), 4.0) == doctest::Approx(-4.0).epsilon(1e-14));
    CHECK(kind_of([] { dual_eval(UtilitySpec::incentivized(0.5, figure_contract()), 1.0); }) ==
          ErrorKind::contract);
}

TEST_CASE("Fenchel inequality with equality at I(y)") {
    const std::vector<UtilitySpec> concave = {UtilitySpec::isoelastic(-1.0), UtilitySpec::isoelastic(0.5),
                                              UtilitySpec::logarithmic(), UtilitySpec::shifted_power(-1.0, 1.0),
                                              UtilitySpec::two_piece_power(-1.0, -3.0),
                                              UtilitySpec::power_incentive(-1.0, 0.5)};
    for (const auto& u : concave) {
        INFO(u.describe());
        for (double y : {0.01, 0.1, 0.5, 1.0, 3.0}) {
            const double v = dual_eval(u, y);
            for (double x : {0.01, 0.3, 1.0, 2.5, 7.0, 40.0}) {
                CHECK(v >= evaluate(u, x) - x * y - 1e-12 * (1.0 + std::abs(v)));
            }
            const double xi = inverse_marginal(u, y);
            if (xi > 0.0) CHECK(v == doctest::Approx(evaluate(u, xi) - xi * y).epsilon(1e-12));
        }
    }
}

TEST_CASE("dual derivative is minus the inverse marginal") {
    for (const auto& u : {UtilitySpec::isoelastic(-1.0), UtilitySpec::shifted_power(-2.0, 0.5),
                          UtilitySpec::two_piece_power(-1.0, -3.0)}) {
        INFO(u.describe());
        for (double y : {0.05, 0.2, 0.6, 1.5}) {
            const double h = 1e-5 * y;
            const double fd = (dual_eval(u, y + h) - dual_eval(u, y - h)) / (2.0 * h);
            CHECK(fd == doctest::Approx(-inverse_marginal(u, y)).epsilon(1e-7));
        }
    }
}

TEST_CASE("inverse_marginal: closed forms") {
    CHECK(inverse_marginal(UtilitySpec::isoelastic(-1.0), 0.25) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(inverse_marginal(UtilitySpec::logarithmic(), 1.0) == doctest::Approx(1.0));
    const auto sp = UtilitySpec::shifted_power(-1.0, 0.5);
    for (double y : {0.01, 0.1, 1.0}) {
        CHECK(inverse_marginal(sp, y) == doctest::Approx(std::pow(y, -0.5) - 0.5).epsilon(1e-14));
    }
    // U'(0+) = 0.5^{-2} = 4; beyond it the optimum sits at zero
    CHECK(inverse_marginal(sp, 5.0) == 0.0);
    CHECK(kind_of([] { inverse_marginal(UtilitySpec::incentivized(0.5, figure_contract()), 1.0); }) ==
          ErrorKind::contract);
}

TEST_CASE("inverse_marginal inverts marginal") {
    for (const auto& u : {UtilitySpec::two_piece_power(-1.0, -3.0), UtilitySpec::two_piece_power(-0.5, -4.0, {InterpolationKind::cubic_hermite, 8.0}),
                          UtilitySpec::power_incentive(-2.0, 0.3)}) {
        INFO(u.describe());
        for (double x : {0.2, 1.0, 1.7, 3.9, 4.0, 12.0}) {
            CHECK(inverse_marginal(u, marginal(u, x)) == doctest::Approx(x).epsilon(1e-12));
        }
    }
}

TEST_CASE("I(y) y^{1/(1-p)} -> 1 as y -> 0") {
    const auto check = [](const UtilitySpec& u, double p) {
        for (double y : {1e-9, 1e-10, 1e-12}) {
            const double r = inverse_marginal(u, y) * std::pow(y, 1.0 / (1.0 - p));
            CHECK(r >= 0.99);
            CHECK(r <= 1.01);
        }
    };
    check(UtilitySpec::isoelastic(-1.0), -1.0);
    check(UtilitySpec::shifted_power(-1.0, 1.0), -1.0);
    check(UtilitySpec::shifted_power(0.0, 2.0), 0.0);
    check(UtilitySpec::two_piece_power(-1.0, -3.0), -1.0);
}

TEST_CASE("effective_utility") {
    // identity contract is the isoelastic utility itself
    const auto id = effective_utility(-1.5, Contract{0.0, 1.0, {}});
    const auto iso = UtilitySpec::isoelastic(-1.5);
    for (double x : {0.01, 0.5, 3.0, 100.0}) {
        CHECK(evaluate(id, x) == doctest::Approx(evaluate(iso, x)).epsilon(1e-15));
        CHECK(marginal(id, x) == doctest::Approx(marginal(iso, x)).epsilon(1e-15));
    }
    CHECK(is_concave(id));

    const auto fig = effective_utility(0.5, figure_contract());
    CHECK_FALSE(is_concave(fig));
    CHECK(marginal(fig, 4.0 + 1e-9) > marginal(fig, 4.0 - 1e-9));

    // above the last strike U'(x)/x^{p-1} -> 1; with cash, U(x)/x^{p-1} -> 0 at zero
    CHECK(marginal(fig, 1e10) / std::pow(1e10, -0.5) == doctest::Approx(1.0).epsilon(1e-4));
    double prev = INFINITY;
    for (double x : {1e-2, 1e-4, 1e-6, 1e-8}) {
        const double r = evaluate(fig, x) / std::pow(x, -0.5);
        CHECK(r < prev);
        prev = r;
    }
    CHECK(prev < 1e-3);

    CHECK(kind_of([] { effective_utility(0.0, figure_contract()); }) == ErrorKind::parameter);
}

TEST_CASE("contract payoff and pieces") {
    const Contract c{0.5, 1.0, {{1.0, 2.0}, {2.0, 10.0}}};
    CHECK(c.payoff(1.0) == 1.5);
    CHECK(c.payoff(5.0) == 0.5 + 5.0 + 3.0);
    CHECK(c.payoff(12.0) == 0.5 + 12.0 + 10.0 + 4.0);
    CHECK(c.total_slope() == 4.0);
    const auto pieces = detail::payoff_pieces(c);
    REQUIRE(pieces.size() == 3);
    for (const auto& pc : pieces) {
        const double mid = std::isfinite(pc.hi) ? 0.5 * (pc.lo + pc.hi) : pc.lo + 1.0;
        CHECK(pc.intercept + pc.slope * mid == doctest::Approx(c.payoff(mid)));
    }
    CHECK(kinks(UtilitySpec::incentivized(-1.0, c)) == std::vector<double>{2.0, 10.0});
}

TEST_CASE("two-piece construction") {
    const auto u = UtilitySpec::two_piece_power(-1.0, -3.0);
    const auto* tp = u.get_if<TwoPiecePower>();
    REQUIRE(tp != nullptr);
    // marginal is exactly the power on each outer piece
    CHECK(marginal(u, 0.5) == doctest::Approx(std::pow(0.5, -4.0)).epsilon(1e-15));
    CHECK(marginal(u, 9.0) == doctest::Approx(std::pow(9.0, -2.0)).epsilon(1e-15));
    CHECK(evaluate(u, 9.0) == doctest::Approx(-1.0 / 9.0).epsilon(1e-15));
    // C^1 at both knots
    for (double k : {1.0, 4.0}) {
        CHECK(evaluate(u, k * (1 + 1e-12)) == doctest::Approx(evaluate(u, k * (1 - 1e-12))).epsilon(1e-10));
        CHECK(marginal(u, k * (1 + 1e-12)) == doctest::Approx(marginal(u, k * (1 - 1e-12))).epsilon(1e-9));
    }
    // concave on a dense grid of the bridge
    const int n = 4000;
    const double h = 3.0 / n;
    for (int i = 1; i < n; ++i) {
        const double x = 1.0 + i * h;
        const double d2 = evaluate(u, x + h) - 2.0 * evaluate(u, x) + evaluate(u, x - h);
        CHECK(d2 <= 1e-14);
    }
    CHECK(value_at_zero(u) == -INFINITY);
    CHECK(marginal_at_zero(u) == INFINITY);
}

TEST_CASE("validate_assumptions") {
    const auto sp = validate_assumptions(UtilitySpec::shifted_power(-1.0, 1.0), -1.0);
    CHECK(sp.high_wealth_converges);
    CHECK(sp.low_wealth_bounded);
    CHECK_FALSE(sp.analytic_low_wealth.has_value());
    REQUIRE(sp.high_wealth.size() == 4);
    CHECK(sp.high_wealth.back().first == 1e8);

    const auto tp = validate_assumptions(UtilitySpec::two_piece_power(-1.0, -3.0), -1.0);
    CHECK(tp.high_wealth_converges);
    CHECK_FALSE(tp.low_wealth_bounded);
    REQUIRE(tp.analytic_low_wealth.has_value());
    CHECK_FALSE(*tp.analytic_low_wealth);

    for (double p : {-3.0, -1.0, 0.5}) {
        const auto iso = validate_assumptions(UtilitySpec::isoelastic(p), p);
        CHECK(iso.high_wealth_converges);
        CHECK(iso.low_wealth_bounded);
    }
    const auto lg = validate_assumptions(UtilitySpec::logarithmic(), 0.0);
    CHECK(lg.high_wealth_converges);
}

TEST_CASE("describe") {
    CHECK(UtilitySpec::isoelastic(-1.0).describe().find("iso") != std::string::npos);
    CHECK(UtilitySpec::logarithmic().describe() == "log");
}
