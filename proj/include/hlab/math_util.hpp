#ifndef HLAB_MATH_UTIL_HPP
#define HLAB_MATH_UTIL_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace hlab {

inline constexpr double pi = 3.14159265358979323846;

// C2 quintic smoothstep: 0 for t<=0, 1 for t>=1.
inline double smoothstep5(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

inline double smoothstep5_d1(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return t * t * (30.0 + t * (-60.0 + 30.0 * t));
}

inline double smoothstep5_d2(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return t * (60.0 + t * (-180.0 + 120.0 * t));
}

// Quintic Hermite interpolant on [a,b] with endpoint values/derivatives
// (f, f', f'') given at both ends.
struct QuinticHermite {
    double a = 0.0, b = 1.0;
    std::array<double, 6> c{};  // monomial coefficients in s = (x-a)/(b-a)

    QuinticHermite() = default;
    QuinticHermite(double a_, double b_,
                   double f0, double d0, double s0,
                   double f1, double d1, double s1)
        : a(a_), b(b_) {
        const double h = b - a;
        d0 *= h; d1 *= h;          // scale derivatives to s
        s0 *= h * h; s1 *= h * h;
        c[0] = f0;
        c[1] = d0;
        c[2] = 0.5 * s0;
        c[3] = -10.0 * f0 - 6.0 * d0 - 1.5 * s0 + 10.0 * f1 - 4.0 * d1 + 0.5 * s1;
        c[4] = 15.0 * f0 + 8.0 * d0 + 1.5 * s0 - 15.0 * f1 + 7.0 * d1 - s1;
        c[5] = -6.0 * f0 - 3.0 * d0 - 0.5 * s0 + 6.0 * f1 - 3.0 * d1 + 0.5 * s1;
    }

    double eval(double x) const {
        const double s = (x - a) / (b - a);
        return c[0] + s * (c[1] + s * (c[2] + s * (c[3] + s * (c[4] + s * c[5]))));
    }
    double d1(double x) const {
        const double h = b - a, s = (x - a) / h;
        return (c[1] + s * (2 * c[2] + s * (3 * c[3] + s * (4 * c[4] + s * 5 * c[5])))) / h;
    }
    double d2(double x) const {
        const double h = b - a, s = (x - a) / h;
        return (2 * c[2] + s * (6 * c[3] + s * (12 * c[4] + s * 20 * c[5]))) / (h * h);
    }
    double d3(double x) const {
        const double h = b - a, s = (x - a) / h;
        return (6 * c[3] + s * (24 * c[4] + s * 60 * c[5])) / (h * h * h);
    }
};

// Nodes/weights of the n-point Gauss-Legendre rule on [-1,1].
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
}

// Composite Gauss panels over given edges; appends (node, weight) pairs.
inline void gauss_panels(const std::vector<double>& edges, int pts_per_panel,
                         std::vector<double>& nodes, std::vector<double>& weights) {
    std::vector<double> gx, gw;
    gauss_legendre(pts_per_panel, gx, gw);
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        const double a = edges[p], b = edges[p + 1];
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        for (int i = 0; i < pts_per_panel; ++i) {
            nodes.push_back(mid + half * gx[i]);
            weights.push_back(half * gw[i]);
        }
    }
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 1.0;
};

// Least-squares line y = slope*x + intercept.
inline LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("linear_fit: need >= 2 points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i]; sy += y[i];
        sxx += x[i] * x[i]; sxy += x[i] * y[i]; syy += y[i] * y[i];
    }
    LinearFit fit;
    const double den = n * sxx - sx * sx;
    fit.slope = (n * sxy - sx * sy) / den;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss_res = 0, ss_tot = 0;
    const double ybar = sy / n;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double yi = fit.slope * x[i] + fit.intercept;
        ss_res += (y[i] - yi) * (y[i] - yi);
        ss_tot += (y[i] - ybar) * (y[i] - ybar);
    }
    fit.r2 = (ss_tot > 0.0) ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

inline double wrap_2pi(double th) {
    th = std::fmod(th, 2.0 * pi);
    if (th < 0.0) th += 2.0 * pi;
    return th;
}

}  // namespace hlab

#endif
