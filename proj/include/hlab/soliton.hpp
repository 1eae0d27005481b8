#ifndef HLAB_SOLITON_HPP
#define HLAB_SOLITON_HPP

#include <cmath>

namespace hlab {

// Ground state Q(y) = sech(y/sqrt(2)) of Q'' + (Q^2 - 1/2) Q = 0, with its
// first two derivatives.
struct SolitonValue {
    double Q;
    double dQ;
    double d2Q;
};

inline SolitonValue soliton(double y) {
    const double inv_sqrt2 = 0.70710678118654752440;
    const double z = y * inv_sqrt2;
    // Avoid overflow in cosh for large |y|; sech underflows to 0 harmlessly.
    const double s = (std::abs(z) > 350.0) ? 0.0 : 1.0 / std::cosh(z);
    const double t = std::tanh(z);
    SolitonValue v;
    v.Q = s;
    v.dQ = -s * t * inv_sqrt2;
    v.d2Q = 0.5 * s * (t * t - s * s);
    return v;
}

}  // namespace hlab

#endif
