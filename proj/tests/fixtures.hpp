#pragma once

// Models that break one declared assumption each; the verify checkers must flag them.

#include "mvsde/model.hpp"

namespace fixture {

inline mvsde::CoefficientModel example61_small_local_lipschitz() {
    auto m = mvsde::example61();
    m.growth.local_lipschitz = mvsde::PowerSum::constant(0.01);
    return m;
}

inline mvsde::CoefficientModel example61_small_L3() {
    auto m = mvsde::example61();
    m.growth.L3 = 0.5;
    return m;
}

inline mvsde::CoefficientModel example61_small_sharp_constant() {
    auto m = mvsde::example61();
    m.growth.sharp_coercivity->constant = 1.0;
    return m;
}

inline mvsde::CoefficientModel linear_small_L2() {
    auto m = mvsde::linear_mean_field();
    m.growth.L2 = 0.5;
    return m;
}

inline mvsde::CoefficientModel example61_small_L4() {
    auto m = mvsde::example61();
    m.growth.L4 = 1.0;
    return m;
}

inline mvsde::CoefficientModel example61_weak_lyapunov() {
    auto m = mvsde::example61();
    m.lyapunov->alpha = 0.1;
    m.lyapunov->beta = 0.01;
    return m;
}

// f grows like |x|^{1/2}, slower than L(R) = R^{2/3} + 2.
inline mvsde::CoefficientModel example61_slow_lyapunov() {
    auto m = mvsde::example61();
    m.lyapunov->f = mvsde::PowerSum{{1.0, 0.5}, {1.0, 0.0}};
    return m;
}

inline mvsde::CoefficientModel example61_small_p() {
    auto m = mvsde::example61();
    m.growth.p = 4.0;
    return m;
}

// Declares more dissipation than -2 theta + sigma^2 = -3.75 provides.
inline mvsde::CoefficientModel linear_overclaimed_dissipation() {
    auto m = mvsde::linear_mean_field();
    m.growth.dissipation->L5 = 5.0;
    return m;
}

} // namespace fixture
