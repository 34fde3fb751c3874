#pragma once

#include <initializer_list>
#include <string>
#include <vector>

namespace mvsde {

// g(r) = sum_k c_k r^{e_k} on r >= 0, with real exponents e_k >= 0.
class PowerSum {
public:
    struct Term {
        double coefficient;
        double exponent;
    };

    PowerSum() = default;
    PowerSum(std::initializer_list<Term> terms);
    explicit PowerSum(std::vector<Term> terms);

    static PowerSum constant(double c) { return PowerSum{{c, 0.0}}; }

    double operator()(double r) const;
    double derivative(double r) const;
    double second_derivative(double r) const;
    // g'(r)/r, continued to r = 0 where the limit exists (+/-inf otherwise).
    double derivative_over_r(double r) const;

    // Largest exponent with a nonzero coefficient, 0 for the zero polynomial.
    double degree() const;
    // Coefficient of that term.
    double leading_coefficient() const;

    const std::vector<Term>& terms() const noexcept { return terms_; }
    std::string to_string() const;

private:
    std::vector<Term> terms_;
};

} // namespace mvsde
