#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace turnpike {

using ScalarFn = std::function<double(double)>;

// ---------------------------------------------------------------------------
// Quadrature against the standard normal density
// ---------------------------------------------------------------------------

/// Nodes and weights approximating E[f(Z)], Z ~ N(0,1), as sum(w_i f(z_i)).
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    int order = 0;  ///< Gauss-Hermite degree n, or total node count for composite rules

    std::size_t size() const { return nodes.size(); }
};

/// Probabilists' Gauss-Hermite rule with n nodes (1 <= n <= 10^4), weights summing to 1.
QuadratureRule gauss_hermite(int n);

/// Composite Gauss-Legendre rule on [-half_width, half_width] with panel edges
/// forced at every breakpoint, so integrands with kinks or jumps there are
/// integrated piecewise-smoothly. Roughly `n` nodes plus `kPanelOrder` per breakpoint.
QuadratureRule piecewise_normal_rule(std::span<const double> breakpoints, int n,
                                     double half_width = 30.0);

/// Single node at 0; used for deterministic laws.
QuadratureRule point_rule();

inline constexpr int kPanelOrder = 10;

/// sum(w_i f(z_i)); nodes with zero weight are skipped.
double expect_normal(const ScalarFn& f, const QuadratureRule& rule);

double normal_pdf(double z);
double normal_cdf(double z);

// ---------------------------------------------------------------------------
// Root finding
// ---------------------------------------------------------------------------

/// Brent's method on a bracket with g(lo)*g(hi) <= 0. Every iterate stays
/// inside the current bracket; returns once the bracket is narrower than `tol`
/// (plus a few ulps of the iterate) or g hits zero exactly.
double find_root_monotone(const ScalarFn& g, double lo, double hi, double tol = 1e-12,
                          int max_iter = 300);

// ---------------------------------------------------------------------------
// Counter-based random numbers and Monte Carlo
// ---------------------------------------------------------------------------

/// Philox4x32-10 (Salmon et al. 2011). Stateless: output is a pure function
/// of (counter, key).
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter generate(Counter ctr, Key key);
};

/// Two independent N(0,1) draws for the pair `index` of stream (seed, chunk).
std::array<double, 2> normal_pair(std::uint64_t seed, std::uint64_t chunk, std::uint64_t index);

struct McConfig {
    std::uint64_t n_paths = 100000;
    std::uint64_t seed = 0;
    std::uint64_t chunk_size = 4096;
};

struct McEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
};

enum class McExecution { serial, parallel };

/// Sample mean and standard error of f(Z) over n_paths standard normal draws.
/// Chunk c uses the stream keyed by (seed, c); chunks are merged in ascending
/// order, so the result is bit-identical for serial and parallel execution.
McEstimate mc_expect_normal(const ScalarFn& f, const McConfig& cfg,
                            McExecution exec = McExecution::parallel);

}  // namespace turnpike
