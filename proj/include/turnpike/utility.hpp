#pragma once

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace turnpike {

// ---------------------------------------------------------------------------
// Compensation contracts
// ---------------------------------------------------------------------------

struct OptionLeg {
    double quantity = 0.0;
    double strike = 1.0;
};

/// Cash `cash`, a fraction `stock` of terminal firm value, and call legs.
struct Contract {
    double cash = 0.0;
    double stock = 1.0;
    std::vector<OptionLeg> legs;  ///< strictly increasing strikes

    void validate() const;

    /// cash + stock*x + sum quantity*(x - strike)^+
    double payoff(double x) const;

    /// stock + sum of all leg quantities; the payoff slope beyond the last strike.
    double total_slope() const;

    /// Same cash and stock, no options.
    Contract without_options() const;
};

// ---------------------------------------------------------------------------
// Utility family
// ---------------------------------------------------------------------------

enum class InterpolationKind { cubic_hermite };

struct InterpolationSpec {
    InterpolationKind kind = InterpolationKind::cubic_hermite;
    double x_hi = 4.0;  ///< upper knot; the lower knot is fixed at 1
};

/// x^p / p, p < 1, p != 0.
struct Isoelastic {
    double p;
};

/// log x.
struct Logarithmic {};

/// (x + a)^p / p (log(x + a) when p == 0), a >= 0.
struct ShiftedPower {
    double p;
    double a;
};

/// Power p* below wealth 1, power p above x_hi, C^1 concave cubic Hermite bridge
/// on [1, x_hi]. The low piece is x^{p*}/p* + low_shift, with the additive
/// constant fixed at construction so that the bridge is strictly concave; the
/// marginal utility on (0, 1] is exactly x^{p*-1}.
struct TwoPiecePower {
    double p;
    double p_star;
    InterpolationSpec interpolation;

    // derived at construction
    double low_shift = 0.0;
    double value_lo = 0.0;  ///< U(1)
    double value_hi = 0.0;  ///< U(x_hi)
    double slope_hi = 0.0;  ///< U'(x_hi) = x_hi^{p-1}
};

/// Effective utility of a manager with isoelastic p facing `contract`:
/// U~(payoff(x)) / total_slope^p.
struct Incentivized {
    double p;
    Contract contract;
};

/// U~(x^alpha) = x^{alpha p}/p: isoelastic manager paid a power of firm value.
struct PowerIncentive {
    double p;
    double alpha;
};

/// Immutable tagged utility; construct through the named factories, which validate.
class UtilitySpec {
public:
    using Variant =
        std::variant<Isoelastic, Logarithmic, ShiftedPower, TwoPiecePower, Incentivized, PowerIncentive>;

    static UtilitySpec isoelastic(double p);
    static UtilitySpec logarithmic();
    static UtilitySpec shifted_power(double p, double a);
    static UtilitySpec two_piece_power(double p, double p_star, InterpolationSpec interp = {});
    static UtilitySpec incentivized(double p, Contract contract);
    static UtilitySpec power_incentive(double p, double alpha);

    const Variant& variant() const { return v_; }

    template <class T>
    const T* get_if() const {
        return std::get_if<T>(&v_);
    }

    /// Short human-readable descriptor, e.g. "shifted:p=-1,a=1".
    std::string describe() const;

private:
    explicit UtilitySpec(Variant v) : v_(std::move(v)) {}
    Variant v_;
};

/// U(x) for x > 0.
double evaluate(const UtilitySpec& u, double x);

/// lim_{x -> 0+} U(x); may be -infinity.
double value_at_zero(const UtilitySpec& u);

/// U'(x); throws NonDifferentiableError at option strikes.
double marginal(const UtilitySpec& u, double x);

/// lim_{x -> 0+} U'(x); may be +infinity.
double marginal_at_zero(const UtilitySpec& u);

/// U''(x) away from kinks.
double curvature(const UtilitySpec& u, double x);

/// V(y) = sup_x (U(x) - x y). Requires a concave variant.
double dual_eval(const UtilitySpec& u, double y);

/// I(y) = (U')^{-1}(y), with I(y) = 0 when y >= U'(0+). Requires a concave variant.
double inverse_marginal(const UtilitySpec& u, double y);

bool is_concave(const UtilitySpec& u);

/// The isoelastic exponent U is compared against at high wealth.
double reference_power(const UtilitySpec& u);

/// Points where U is not C^2 (strikes, interpolation knots).
std::vector<double> kinks(const UtilitySpec& u);

/// Incentivized{p, contract}; p == 0 is rejected.
UtilitySpec effective_utility(double p, const Contract& contract);

struct AssumptionReport {
    double p_ref = 0.0;
    std::vector<std::pair<double, double>> high_wealth;  ///< (x, U'(x)/x^{p_ref-1})
    bool high_wealth_converges = false;
    std::vector<std::pair<double, double>> low_wealth;  ///< (x, U(x)/x^{p_ref-1})
    bool low_wealth_bounded = false;
    std::optional<bool> analytic_low_wealth;  ///< two-piece only: p* >= p - 1
};

/// Empirical check of the high- and low-wealth conditions against x^{p_ref}/p_ref.
AssumptionReport validate_assumptions(const UtilitySpec& u, double p_ref);

namespace detail {

/// Piece j of an incentivized payoff, covering [strike_{j}, strike_{j+1}] with
/// strike_0 = 0: payoff(x) = intercept + slope * x.
struct PayoffPiece {
    double lo;
    double hi;
    double slope;
    double intercept;
};

std::vector<PayoffPiece> payoff_pieces(const Contract& contract);

/// Point of piece `piece` where the incentivized marginal equals y, clamped to the piece.
double incentivized_piece_inverse(const Incentivized& u, const PayoffPiece& piece, double y);

}  // namespace detail

}  // namespace turnpike
