#include "turnpike/error.hpp"

#include <sstream>

namespace turnpike {

namespace {
std::string kink_message(double x, double left, double right) {
    std::ostringstream os;
    os.precision(17);
    os << "utility is not differentiable at x=" << x << " (left slope " << left
       << ", right slope " << right << ")";
    return os.str();
}
}  // namespace

NonDifferentiableError::NonDifferentiableError(double x, double left, double right)
    : Error(ErrorKind::domain, kink_message(x, left, right)), x_(x), left_(left), right_(right) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace turnpike
