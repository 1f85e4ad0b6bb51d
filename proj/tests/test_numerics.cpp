#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "turnpike/error.hpp"
#include "turnpike/numerics.hpp"

using namespace turnpike;

namespace {
// E[Z^k] for a standard normal
double normal_moment(int k) {
    if (k % 2) return 0.0;
    double m = 1.0;
    for (int j = k - 1; j > 0; j -= 2) m *= j;
    return m;
}
}  // namespace

TEST_CASE("gauss_hermite: degenerate and low-order rules") {
    const auto r1 = gauss_hermite(1);
    REQUIRE(r1.size() == 1);
    CHECK(r1.nodes[0] == 0.0);
    CHECK(r1.weights[0] == doctest::Approx(1.0).epsilon(1e-15));

    CHECK(std::abs(expect_normal([](double z) { return z * z; }, gauss_hermite(5)) - 1.0) < 1e-12);
    CHECK(std::abs(expect_normal([](double z) { return z * z * z * z; }, gauss_hermite(3)) - 3.0) < 1e-12);
}

TEST_CASE("gauss_hermite: exact for monomials up to degree 2n-1, n <= 50") {
    for (int n = 1; n <= 50; ++n) {
        const auto rule = gauss_hermite(n);
        for (int k = 0; k <= 2 * n - 1; ++k) {
            const double got = expect_normal([k](double z) { return std::pow(z, k); }, rule);
            const double want = normal_moment(k);
            // odd moments cancel to zero, so scale by the absolute sum
            const double scale =
                std::max(1.0, expect_normal([k](double z) { return std::abs(std::pow(z, k)); }, rule));
            const double err = std::abs(got - want) / scale;
            INFO("n=" << n << " k=" << k);
            CHECK(err < 1e-10);
        }
    }
}

TEST_CASE("gauss_hermite: large n stays normalised and symmetric") {
    const auto rule = gauss_hermite(10000);
    REQUIRE(rule.size() == 10000);
    double sum = 0.0;
    for (double w : rule.weights) {
        CHECK(w >= 0.0);
        sum += w;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 0; i < rule.size(); ++i) CHECK(rule.nodes[i] == -rule.nodes[rule.size() - 1 - i]);
    CHECK(expect_normal([](double z) { return z * z; }, rule) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(expect_normal([](double z) { return std::exp(0.5 * z); }, rule) ==
          doctest::Approx(std::exp(0.125)).epsilon(1e-12));
}

TEST_CASE("gauss_hermite: range checked") {
    CHECK_THROWS_AS(gauss_hermite(0), Error);
    CHECK_THROWS_AS(gauss_hermite(10001), Error);
    try {
        gauss_hermite(0);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::parameter);
    }
}

TEST_CASE("expect_normal examples") {
    const auto rule = gauss_hermite(40);
    CHECK(expect_normal([](double) { return 1.0; }, rule) == doctest::Approx(1.0).epsilon(1e-14));
    // indicators go through the normal CDF, not through nodes
    CHECK(normal_cdf(0.0) == 0.5);
    CHECK(expect_normal([](double z) { return std::exp(0.2 * z); }, rule) ==
          doctest::Approx(std::exp(0.02)).epsilon(1e-13));
    CHECK(std::exp(0.02) == doctest::Approx(1.020201).epsilon(1e-6));
}

TEST_CASE("expect_normal: non-finite integrand names the node") {
    const auto rule = gauss_hermite(3);
    try {
        expect_normal([](double z) { return z > 0.5 ? std::nan("") : 1.0; }, rule);
        FAIL("expected an evaluation error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::evaluation);
        CHECK(std::string(e.what()).find("z=1.73205") != std::string::npos);
    }
}

TEST_CASE("piecewise_normal_rule: smooth and kinked integrands") {
    const auto rule = piecewise_normal_rule({}, 201);
    double sum = 0.0;
    for (double w : rule.weights) sum += w;
    // 201 nodes leave ~5e-13 of truncation; 402 are at rounding level
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(expect_normal([](double z) { return std::exp(1.5 * z); }, rule) ==
          doctest::Approx(std::exp(1.125)).epsilon(1e-12));

    // E[(Z - 0.3)^+] = phi(0.3) - 0.3 (1 - Phi(0.3)), exact once 0.3 is a panel edge
    const double want = normal_pdf(0.3) - 0.3 * (1.0 - normal_cdf(0.3));
    const double kinks[] = {0.3};
    const auto split = piecewise_normal_rule(kinks, 201);
    CHECK(std::abs(expect_normal([](double z) { return std::max(z - 0.3, 0.0); }, split) - want) < 1e-13);
    // an indicator integrates to the CDF when its jump is an edge
    CHECK(std::abs(expect_normal([](double z) { return z <= 0.3 ? 1.0 : 0.0; }, split) - normal_cdf(0.3)) <
          1e-13);
}

TEST_CASE("find_root_monotone examples") {
    CHECK(find_root_monotone([](double x) { return x - 2.0; }, 0.0, 4.0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(std::abs(find_root_monotone([](double x) { return std::exp(x) - 1.0; }, -1.0, 1.0)) < 1e-12);
    CHECK(find_root_monotone([](double y) { return std::exp(-y) - 0.5; }, 0.0, 2.0) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(std::log(2.0) == doctest::Approx(0.693147).epsilon(1e-6));
}

TEST_CASE("find_root_monotone errors") {
    try {
        find_root_monotone([](double x) { return x * x + 1.0; }, -1.0, 1.0);
        FAIL("expected bracketing error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::bracketing);
    }
    try {
        find_root_monotone([](double x) { return std::atan(x - 0.123456789); }, -1e6, 1e6, 1e-15, 3);
        FAIL("expected convergence error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::convergence);
    }
}

TEST_CASE("find_root_monotone never leaves the bracket") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int i = 0; i < 2000; ++i) {
        double lo = u(rng), hi = u(rng);
        if (lo > hi) std::swap(lo, hi);
        const double root = lo + (hi - lo) * (0.5 + 0.5 * std::sin(i));
        const double scale = 0.1 + std::abs(u(rng));
        const double x = find_root_monotone([&](double t) { return std::tanh(scale * (t - root)) * 1e3; }, lo, hi);
        CHECK(x >= lo);
        CHECK(x <= hi);
        CHECK(std::abs(x - root) < 1e-9);
    }
}

TEST_CASE("Philox4x32-10 known-answer vectors") {
    using C = Philox4x32::Counter;
    CHECK(Philox4x32::generate({0, 0, 0, 0}, {0, 0}) == C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(Philox4x32::generate({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
          C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(Philox4x32::generate({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
          C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("normal_pair: moments") {
    double s1 = 0.0, s2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n / 2; ++i) {
        for (double z : normal_pair(11, 3, static_cast<std::uint64_t>(i))) {
            s1 += z;
            s2 += z * z;
        }
    }
    CHECK(std::abs(s1 / n) < 0.01);
    CHECK(std::abs(s2 / n - 1.0) < 0.02);
}

TEST_CASE("mc_expect_normal: constants, determinism and execution independence") {
    McConfig cfg;
    cfg.n_paths = 10000;
    cfg.seed = 42;
    cfg.chunk_size = 333;
    const auto one = mc_expect_normal([](double) { return 1.0; }, cfg);
    CHECK(one.estimate == 1.0);
    CHECK(one.std_error == 0.0);

    const auto f = [](double z) { return std::exp(0.3 * z) + z * z; };
    const auto a = mc_expect_normal(f, cfg, McExecution::parallel);
    const auto b = mc_expect_normal(f, cfg, McExecution::parallel);
    const auto c = mc_expect_normal(f, cfg, McExecution::serial);
    CHECK(a.estimate == b.estimate);
    CHECK(a.std_error == b.std_error);
    CHECK(a.estimate == c.estimate);
    CHECK(a.std_error == c.std_error);

    cfg.n_paths = 1;
    CHECK_THROWS_AS(mc_expect_normal(f, cfg), Error);
}

TEST_CASE("mc_expect_normal agrees with quadrature in >= 99% of seeds") {
    const auto f = [](double z) { return 1.0 / (1.0 + std::exp(z)) + 0.3 * std::cos(z); };
    const double exact = expect_normal(f, gauss_hermite(100));
    int inside = 0;
    const int trials = 200;
    for (int s = 0; s < trials; ++s) {
        McConfig cfg;
        cfg.n_paths = 4000;
        cfg.seed = static_cast<std::uint64_t>(s);
        const auto est = mc_expect_normal(f, cfg);
        if (std::abs(est.estimate - exact) < 5.0 * est.std_error) ++inside;
    }
    CHECK(inside >= 198);
}
