#include "turnpike/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "turnpike/error.hpp"
#include "turnpike/numerics.hpp"

namespace turnpike {

namespace {

constexpr int kHullPoints = 100000;

struct Point {
    double x;
    double u;
};

double eval_or_zero(const UtilitySpec& u, double x) { return x > 0.0 ? evaluate(u, x) : value_at_zero(u); }

// upper hull of points sorted by x
std::vector<Point> upper_hull(const std::vector<Point>& pts) {
    std::vector<Point> h;
    for (const auto& q : pts) {
        while (h.size() >= 2) {
            const Point& a = h[h.size() - 2];
            const Point& b = h.back();
            const double cross = (b.x - a.x) * (q.u - a.u) - (b.u - a.u) * (q.x - a.x);
            if (cross < 0.0) break;
            h.pop_back();
        }
        h.push_back(q);
    }
    return h;
}

struct Group {
    std::size_t first;  // kink indices, inclusive
    std::size_t last;
    double slope_guess;
};

struct Tangency {
    double x_l, x_r, slope;
};

Tangency solve_tangency(const Incentivized& inc, const UtilitySpec& u, const detail::PayoffPiece& left,
                        const detail::PayoffPiece& right, double s0) {
    auto endpoints = [&](double s) {
        return std::pair{detail::incentivized_piece_inverse(inc, left, s),
                         detail::incentivized_piece_inverse(inc, right, s)};
    };
    // gap between the tangent line at slope s on the right piece and on the left piece;
    // strictly decreasing in s
    auto gap = [&](double s) {
        const auto [xl, xr] = endpoints(s);
        return eval_or_zero(u, xr) - eval_or_zero(u, xl) - s * (xr - xl);
    };
    double lo = s0, hi = s0;
    int guard = 0;
    while (gap(lo) <= 0.0) {
        lo *= 0.5;
        if (++guard > 200) fail(ErrorKind::convergence, "concave_envelope: cannot bracket tangency slope");
    }
    while (gap(hi) >= 0.0) {
        hi *= 2.0;
        if (++guard > 400) fail(ErrorKind::convergence, "concave_envelope: cannot bracket tangency slope");
    }
    const double s = find_root_monotone(gap, lo, hi, 1e-16 * s0, 500);
    const auto [xl, xr] = endpoints(s);
    return {xl, xr, s};
}

}  // namespace

ConcaveEnvelope concave_envelope(const UtilitySpec& u) {
    ConcaveEnvelope env(u);
    const auto* inc = u.get_if<Incentivized>();
    if (!inc) {
        if (!is_concave(u)) fail(ErrorKind::contract, "concave_envelope: unsupported non-concave utility");
        return env;
    }

    const auto pieces = detail::payoff_pieces(inc->contract);
    std::vector<double> strikes;
    for (std::size_t i = 0; i + 1 < pieces.size(); ++i) strikes.push_back(pieces[i].hi);

    if (!strikes.empty()) {
        // coarse pass: hull of a log grid, used only to decide which kinks share a bridge
        std::vector<Point> pts;
        pts.reserve(kHullPoints + strikes.size() + 1);
        if (std::isfinite(value_at_zero(u))) pts.push_back({0.0, value_at_zero(u)});
        const double a = std::log(strikes.front() * 1e-6);
        const double b = std::log(strikes.back() * 1e4);
        for (int i = 0; i < kHullPoints; ++i) {
            const double x = std::exp(a + (b - a) * i / (kHullPoints - 1));
            pts.push_back({x, evaluate(u, x)});
        }
        for (double k : strikes) pts.push_back({k, evaluate(u, k)});
        std::sort(pts.begin(), pts.end(), [](const Point& p, const Point& q) { return p.x < q.x; });
        const auto hull = upper_hull(pts);

        std::vector<Group> groups;
        for (std::size_t i = 0; i < strikes.size(); ++i) {
            auto it = std::upper_bound(hull.begin(), hull.end(), strikes[i],
                                       [](double x, const Point& p) { return x < p.x; });
            if (it == hull.begin() || it == hull.end())
                fail(ErrorKind::convergence, "concave_envelope: hull does not straddle a strike");
            const Point& r = *it;
            const Point& l = *(it - 1);
            const double slope = (r.u - l.u) / (r.x - l.x);
            if (!groups.empty() && groups.back().slope_guess == slope) {
                groups.back().last = i;
            } else {
                groups.push_back({i, i, slope});
            }
        }

        // refinement, merging groups whose bridges turn out to reach past a neighbouring strike
        std::vector<Tangency> sol;
        for (bool changed = true; changed;) {
            changed = false;
            sol.clear();
            for (std::size_t g = 0; g < groups.size() && !changed; ++g) {
                const auto& left = pieces[groups[g].first];
                const auto& right = pieces[groups[g].last + 1];
                const Tangency t = solve_tangency(*inc, u, left, right, groups[g].slope_guess);
                const bool hits_left = left.lo > 0.0 && t.x_l <= left.lo && g > 0;
                const bool hits_right = std::isfinite(right.hi) && t.x_r >= right.hi && g + 1 < groups.size();
                const bool overlaps = !sol.empty() && sol.back().x_r >= t.x_l;
                if (hits_left || overlaps) {
                    groups[g - 1].last = groups[g].last;
                    groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(g));
                    changed = true;
                } else if (hits_right) {
                    groups[g].last = groups[g + 1].last;
                    groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(g + 1));
                    changed = true;
                } else {
                    sol.push_back(t);
                }
            }
        }
        for (const auto& t : sol) {
            env.bridges_.push_back({t.x_l, t.x_r, t.slope, eval_or_zero(u, t.x_l) - t.slope * t.x_l});
        }
        double lo = 0.0;
        std::size_t piece = 0;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            env.regions_.push_back({lo, sol[g].x_l, pieces[piece]});
            lo = sol[g].x_r;
            piece = groups[g].last + 1;
        }
        env.regions_.push_back({lo, std::numeric_limits<double>::infinity(), pieces[piece]});
    } else {
        env.regions_.push_back({0.0, std::numeric_limits<double>::infinity(), pieces.front()});
    }
    return env;
}

const BridgeSegment* ConcaveEnvelope::bridge_containing(double x) const {
    for (const auto& b : bridges_)
        if (x > b.x_l && x < b.x_r) return &b;
    return nullptr;
}

double ConcaveEnvelope::value(double x) const {
    if (!(x > 0.0)) fail(ErrorKind::domain, "envelope: wealth must be > 0");
    if (const auto* b = bridge_containing(x)) return b->intercept + b->slope * x;
    return evaluate(base_, x);
}

double ConcaveEnvelope::value_at_zero() const { return turnpike::value_at_zero(base_); }

double ConcaveEnvelope::marginal(double x) const {
    if (!(x > 0.0)) fail(ErrorKind::domain, "envelope: wealth must be > 0");
    for (const auto& b : bridges_)
        if (x >= b.x_l && x <= b.x_r) return b.slope;
    return turnpike::marginal(base_, x);
}

double ConcaveEnvelope::marginal_at_zero() const {
    if (!bridges_.empty() && bridges_.front().x_l <= 0.0) return bridges_.front().slope;
    return turnpike::marginal_at_zero(base_);
}

MarginalPreimage ConcaveEnvelope::inverse_marginal(double y) const {
    if (!(y > 0.0)) fail(ErrorKind::domain, "envelope: marginal value must be > 0");
    if (regions_.empty()) {
        const double x = turnpike::inverse_marginal(base_, y);
        return {x, x};
    }
    const auto& inc = *base_.get_if<Incentivized>();
    for (std::size_t k = 0; k < regions_.size(); ++k) {
        if (k > 0 && y == bridges_[k - 1].slope) return {bridges_[k - 1].x_l, bridges_[k - 1].x_r};
        if (k + 1 == regions_.size() || y > bridges_[k].slope) {
            const auto& reg = regions_[k];
            const double x = std::clamp(detail::incentivized_piece_inverse(inc, reg.piece, y), reg.lo, reg.hi);
            return {x, x};
        }
    }
    return {0.0, 0.0};  // unreachable
}

double ConcaveEnvelope::payoff(double y) const { return inverse_marginal(y).hi; }

double ConcaveEnvelope::dual(double y) const {
    const double x = payoff(y);
    if (x <= 0.0) return value_at_zero();
    return value(x) - x * y;
}

std::vector<double> ConcaveEnvelope::wealth_knots() const {
    std::vector<double> out = kinks(base_);
    for (const auto& b : bridges_) {
        if (b.x_l > 0.0) out.push_back(b.x_l);
        out.push_back(b.x_r);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<double> ConcaveEnvelope::marginal_knots() const {
    std::vector<double> out;
    for (const auto& b : bridges_) out.push_back(b.slope);
    const double m0 = marginal_at_zero();
    if (std::isfinite(m0)) out.push_back(m0);
    if (const auto* tp = base_.get_if<TwoPiecePower>()) {
        out.push_back(1.0);
        out.push_back(tp->slope_hi);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace turnpike
