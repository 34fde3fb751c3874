#include "mvsde/polynomial.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mvsde {

PowerSum::PowerSum(std::initializer_list<Term> terms) : PowerSum(std::vector<Term>(terms)) {}

PowerSum::PowerSum(std::vector<Term> terms) : terms_(std::move(terms)) {
    for (const auto& t : terms_) {
        if (!std::isfinite(t.coefficient) || !std::isfinite(t.exponent) || t.exponent < 0.0)
            throw std::invalid_argument("power sum terms need finite coefficients and exponents >= 0");
    }
}

double PowerSum::operator()(double r) const {
    double s = 0.0;
    for (const auto& t : terms_) s += t.exponent == 0.0 ? t.coefficient : t.coefficient * std::pow(r, t.exponent);
    return s;
}

double PowerSum::derivative(double r) const {
    double s = 0.0;
    for (const auto& t : terms_) {
        if (t.exponent == 0.0) continue;
        if (t.exponent == 1.0) {
            s += t.coefficient;
        } else {
            s += t.coefficient * t.exponent * std::pow(r, t.exponent - 1.0);
        }
    }
    return s;
}

double PowerSum::second_derivative(double r) const {
    double s = 0.0;
    for (const auto& t : terms_) {
        if (t.exponent == 0.0 || t.exponent == 1.0) continue;
        if (t.exponent == 2.0) {
            s += 2.0 * t.coefficient;
        } else {
            s += t.coefficient * t.exponent * (t.exponent - 1.0) * std::pow(r, t.exponent - 2.0);
        }
    }
    return s;
}

double PowerSum::derivative_over_r(double r) const {
    if (r > 0.0) return derivative(r) / r;
    double s = 0.0;
    for (const auto& t : terms_) {
        if (t.exponent == 0.0 || t.coefficient == 0.0) continue;
        if (t.exponent == 2.0) {
            s += 2.0 * t.coefficient;
        } else if (t.exponent < 2.0) {
            s += t.coefficient > 0.0 ? std::numeric_limits<double>::infinity()
                                     : -std::numeric_limits<double>::infinity();
        }
    }
    return s;
}

double PowerSum::degree() const {
    double d = 0.0;
    for (const auto& t : terms_)
        if (t.coefficient != 0.0 && t.exponent > d) d = t.exponent;
    return d;
}

double PowerSum::leading_coefficient() const {
    const double d = degree();
    double c = 0.0;
    for (const auto& t : terms_)
        if (t.exponent == d) c += t.coefficient;
    return c;
}

std::string PowerSum::to_string() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    os.precision(6);
    for (std::size_t k = 0; k < terms_.size(); ++k) {
        if (k) os << " + ";
        os << terms_[k].coefficient;
        if (terms_[k].exponent != 0.0) os << "*r^" << terms_[k].exponent;
    }
    return os.str();
}

} // namespace mvsde
