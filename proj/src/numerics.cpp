#include "turnpike/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include "turnpike/error.hpp"

namespace turnpike {

namespace {

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

/// Gauss-Legendre nodes/weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            const double step = p1 / pp;
            z -= step;
            if (std::abs(step) < 1e-16) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
}

struct LegendrePanel {
    std::vector<double> nodes;
    std::vector<double> weights;
};

const LegendrePanel& legendre_panel() {
    static const LegendrePanel panel = [] {
        LegendrePanel p;
        gauss_legendre(kPanelOrder, p.nodes, p.weights);
        return p;
    }();
    return panel;
}

}  // namespace

double normal_pdf(double z) {
    constexpr double kInvSqrt2Pi = 0.39894228040143267794;
    return kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z * std::numbers::sqrt2 / 2.0); }

QuadratureRule gauss_hermite(int n) {
    if (n < 1 || n > 10000) {
        fail(ErrorKind::parameter, "gauss_hermite: n must lie in [1, 10000], got " + std::to_string(n));
    }
    // Newton iteration on the orthonormal physicists' recurrence (weight e^{-x^2}),
    // with rescaling so large n does not overflow; nodes are then scaled by sqrt(2).
    constexpr double kBig = 1e150;
    const double pim4 = std::pow(std::numbers::pi, -0.25);
    std::vector<double> x(n), logw(n);
    const int m = (n + 1) / 2;
    double z = 0.0;
    for (int i = 0; i < m; ++i) {
        {
            // quantization guess: zero k from the top solves T - sin T = pi(4k-1)/nu
            const double nu = 2.0 * n + 1.0;
            const double c = std::numbers::pi * (4.0 * (i + 1) - 1.0) / nu;
            double t = std::cbrt(6.0 * c);
            for (int it = 0; it < 60; ++it) {
                const double dt = (t - std::sin(t) - c) / (1.0 - std::cos(t));
                t -= dt;
                if (std::abs(dt) < 1e-15 * t) break;
            }
            z = std::sqrt(nu) * std::cos(0.5 * t);
        }
        double pp = 0.0, log_scale = 0.0;
        bool converged = false;
        for (int it = 0; it < 200; ++it) {
            double p1 = pim4, p2 = 0.0;
            log_scale = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
                if (std::abs(p1) > kBig) {
                    p1 /= kBig;
                    p2 /= kBig;
                    log_scale += std::log(kBig);
                }
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double step = p1 / pp;
            z -= step;
            if (std::abs(step) <= 1e-14 * std::max(1.0, std::abs(z))) {
                converged = true;
                break;
            }
        }
        if (!converged) {
            fail(ErrorKind::convergence, "gauss_hermite: Newton iteration failed for node " +
                                             std::to_string(i) + " of n=" + std::to_string(n));
        }
        if (n % 2 == 1 && i == m - 1) z = 0.0;  // exact centre node
        x[i] = z;
        // physicists' weight 2/pp^2, divided by sqrt(pi) for the normalized density
        logw[i] = std::log(2.0) - 2.0 * (std::log(std::abs(pp)) + log_scale) -
                  0.5 * std::log(std::numbers::pi);
    }
    QuadratureRule rule;
    rule.order = n;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < m; ++i) {
        const double node = std::numbers::sqrt2 * x[i];
        const double w = std::exp(logw[i]);
        rule.nodes[n - 1 - i] = node;
        rule.nodes[i] = -node;
        rule.weights[i] = rule.weights[n - 1 - i] = w;
    }
    return rule;
}

QuadratureRule piecewise_normal_rule(std::span<const double> breakpoints, int n,
                                     double half_width) {
    if (n < 1) fail(ErrorKind::parameter, "piecewise_normal_rule: n must be >= 1");
    if (!(half_width > 0.0)) fail(ErrorKind::parameter, "piecewise_normal_rule: half_width must be > 0");
    const int panels = std::max(1, (n + kPanelOrder - 1) / kPanelOrder);
    std::vector<double> edges;
    edges.reserve(panels + 1 + breakpoints.size());
    for (int i = 0; i <= panels; ++i) {
        edges.push_back(-half_width + 2.0 * half_width * i / panels);
    }
    for (double b : breakpoints) {
        if (std::isfinite(b) && b > -half_width && b < half_width) edges.push_back(b);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    const auto& gx = legendre_panel().nodes;
    const auto& gw = legendre_panel().weights;
    QuadratureRule rule;
    rule.nodes.reserve((edges.size() - 1) * kPanelOrder);
    rule.weights.reserve((edges.size() - 1) * kPanelOrder);
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
        const double a = edges[k], b = edges[k + 1];
        const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
        if (!(half > 0.0)) continue;
        for (int j = 0; j < kPanelOrder; ++j) {
            const double z = mid + half * gx[j];
            rule.nodes.push_back(z);
            rule.weights.push_back(half * gw[j] * normal_pdf(z));
        }
    }
    rule.order = static_cast<int>(rule.nodes.size());
    return rule;
}

QuadratureRule point_rule() {
    QuadratureRule rule;
    rule.nodes = {0.0};
    rule.weights = {1.0};
    rule.order = 1;
    return rule;
}

double expect_normal(const ScalarFn& f, const QuadratureRule& rule) {
    // Neumaier compensated sum
    double sum = 0.0, comp = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double w = rule.weights[i];
        if (w == 0.0) continue;
        const double v = f(rule.nodes[i]);
        if (!std::isfinite(v)) {
            fail(ErrorKind::evaluation, "integrand is not finite at node z=" + fmt_double(rule.nodes[i]) +
                                            " (value " + fmt_double(v) + ")");
        }
        const double term = w * v;
        const double t = sum + term;
        if (std::abs(sum) >= std::abs(term)) {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    return sum + comp;
}

double find_root_monotone(const ScalarFn& g, double lo, double hi, double tol, int max_iter) {
    if (!(lo <= hi)) std::swap(lo, hi);
    double a = lo, b = hi;
    double fa = g(a), fb = g(b);
    if (!std::isfinite(fa) || !std::isfinite(fb)) {
        fail(ErrorKind::evaluation, "find_root_monotone: non-finite function value at bracket end");
    }
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0.0) == (fb > 0.0)) {
        fail(ErrorKind::bracketing, "find_root_monotone: no sign change on [" + fmt_double(lo) + ", " +
                                        fmt_double(hi) + "] (g=" + fmt_double(fa) + ", " +
                                        fmt_double(fb) + ")");
    }
    // Brent (1973): b is the best iterate, [b, c] always brackets the root.
    double c = a, fc = fa, d = b - a, e = d;
    for (int iter = 0; iter < max_iter; ++iter) {
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a;
            fc = fa;
            d = e = b - a;
        }
        if (std::abs(fc) < std::abs(fb)) {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        const double tol1 = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) + 0.5 * tol;
        const double xm = 0.5 * (c - b);
        if (std::abs(xm) <= tol1 || fb == 0.0) return std::clamp(b, lo, hi);
        if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
            double p, q;
            const double s = fb / fa;
            if (a == c) {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                const double qq = fa / fc, r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q;
            p = std::abs(p);
            const double min1 = 3.0 * xm * q - std::abs(tol1 * q);
            const double min2 = std::abs(e * q);
            if (2.0 * p < std::min(min1, min2)) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += (std::abs(d) > tol1) ? d : (xm > 0.0 ? tol1 : -tol1);
        fb = g(b);
        if (!std::isfinite(fb)) {
            fail(ErrorKind::evaluation, "find_root_monotone: non-finite function value at " + fmt_double(b));
        }
    }
    fail(ErrorKind::convergence, "find_root_monotone: iteration cap of " + std::to_string(max_iter) +
                                     " exceeded");
}

// ---------------------------------------------------------------------------

Philox4x32::Counter Philox4x32::generate(Counter ctr, Key key) {
    constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kW0;
            key[1] += kW1;
        }
        const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

std::array<double, 2> normal_pair(std::uint64_t seed, std::uint64_t chunk, std::uint64_t index) {
    const Philox4x32::Counter ctr = {static_cast<std::uint32_t>(index),
                                     static_cast<std::uint32_t>(index >> 32),
                                     static_cast<std::uint32_t>(chunk),
                                     static_cast<std::uint32_t>(chunk >> 32)};
    const Philox4x32::Key key = {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    const auto out = Philox4x32::generate(ctr, key);
    const auto to_unit = [](std::uint32_t hi, std::uint32_t lo) {
        const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
        return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;  // open interval (0,1)
    };
    const double u1 = to_unit(out[0], out[1]);
    const double u2 = to_unit(out[2], out[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
}

namespace {

struct Moments {
    std::uint64_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void push(double v) {
        ++count;
        const double delta = v - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta * (v - mean);
    }

    void merge(const Moments& other) {
        if (other.count == 0) return;
        if (count == 0) {
            *this = other;
            return;
        }
        const double n1 = static_cast<double>(count), n2 = static_cast<double>(other.count);
        const double delta = other.mean - mean;
        const double n = n1 + n2;
        mean += delta * n2 / n;
        m2 += other.m2 + delta * delta * n1 * n2 / n;
        count += other.count;
    }
};

Moments run_chunk(const ScalarFn& f, const McConfig& cfg, std::uint64_t chunk) {
    Moments acc;
    const std::uint64_t begin = chunk * cfg.chunk_size;
    const std::uint64_t end = std::min(cfg.n_paths, begin + cfg.chunk_size);
    for (std::uint64_t path = begin; path < end; ++path) {
        const std::uint64_t local = path - begin;
        const auto pair = normal_pair(cfg.seed, chunk, local / 2);
        const double z = pair[local % 2];
        const double v = f(z);
        if (!std::isfinite(v)) {
            fail(ErrorKind::evaluation, "mc_expect: non-finite sample at path " + std::to_string(path) +
                                            " (z=" + fmt_double(z) + ")");
        }
        acc.push(v);
    }
    return acc;
}

}  // namespace

McEstimate mc_expect_normal(const ScalarFn& f, const McConfig& cfg, McExecution exec) {
    if (cfg.n_paths < 2) fail(ErrorKind::parameter, "mc_expect: n_paths must be >= 2");
    if (cfg.chunk_size < 1) fail(ErrorKind::parameter, "mc_expect: chunk_size must be >= 1");
    const std::uint64_t chunks = (cfg.n_paths + cfg.chunk_size - 1) / cfg.chunk_size;
    std::vector<Moments> partial(chunks);

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const std::uint64_t workers =
        exec == McExecution::serial ? 1 : std::min<std::uint64_t>(hw, chunks);
    if (workers <= 1) {
        for (std::uint64_t c = 0; c < chunks; ++c) partial[c] = run_chunk(f, cfg, c);
    } else {
        std::vector<std::exception_ptr> errors(workers);
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::uint64_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::uint64_t c = w; c < chunks; c += workers) partial[c] = run_chunk(f, cfg, c);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }
    Moments total;
    for (const auto& m : partial) total.merge(m);
    const double n = static_cast<double>(total.count);
    const double variance = total.m2 / (n - 1.0);
    return {total.mean, std::sqrt(std::max(variance, 0.0) / n)};
}

}  // namespace turnpike
