#ifndef HLAB_ANGULAR_PROFILE_HPP
#define HLAB_ANGULAR_PROFILE_HPP

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "hlab/math_util.hpp"

namespace hlab {

// Index profile at infinity on the unit circle, represented as a trigonometric
// polynomial c0 + sum_k (a_k cos k.theta + b_k sin k.theta).  Analytic
// derivatives up to third order.
class AngularProfile {
public:
    AngularProfile() : c0_(1.0) { update_n0(); }

    explicit AngularProfile(double constant) : c0_(constant) { update_n0(); }

    AngularProfile(double c0, std::vector<double> cos_coeffs, std::vector<double> sin_coeffs)
        : c0_(c0), a_(std::move(cos_coeffs)), b_(std::move(sin_coeffs)) {
        b_.resize(std::max(a_.size(), b_.size()), 0.0);
        a_.resize(b_.size(), 0.0);
        update_n0();
    }

    double eval(double th) const { return deriv<0>(th); }
    double d1(double th) const { return deriv<1>(th); }
    double d2(double th) const { return deriv<2>(th); }
    double d3(double th) const { return deriv<3>(th); }

    // Positive lower bound over the circle (sampled on a fine lattice and
    // polished; exact for the constant profile).
    double n0() const { return n0_; }

    bool is_constant() const {
        for (double a : a_) if (a != 0.0) return false;
        for (double b : b_) if (b != 0.0) return false;
        return true;
    }

    double constant_part() const { return c0_; }
    const std::vector<double>& cos_coeffs() const { return a_; }
    const std::vector<double>& sin_coeffs() const { return b_; }

private:
    template <int Order>
    double deriv(double th) const {
        double s = (Order == 0) ? c0_ : 0.0;
        for (std::size_t k = 1; k <= a_.size(); ++k) {
            const double kk = static_cast<double>(k);
            double ca = a_[k - 1], cb = b_[k - 1];
            // Each d/dtheta maps (cos,sin) -> (k*-sin, k*cos).
            for (int d = 0; d < Order; ++d) {
                const double na = kk * cb, nb = -kk * ca;
                ca = na; cb = nb;
            }
            s += ca * std::cos(kk * th) + cb * std::sin(kk * th);
        }
        return s;
    }

    void update_n0() {
        double lo = std::numeric_limits<double>::infinity();
        const int N = 4096;
        for (int i = 0; i < N; ++i) lo = std::min(lo, eval(2.0 * pi * i / N));
        if (!(lo > 0.0))
            throw std::invalid_argument("AngularProfile: profile must be positive on the circle");
        n0_ = lo;
    }

    double c0_ = 1.0;
    std::vector<double> a_, b_;
    double n0_ = 1.0;
};

}  // namespace hlab

#endif
