#ifndef HLAB_INDEX_MODEL_HPP
#define HLAB_INDEX_MODEL_HPP

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hlab/angular_profile.hpp"
#include "hlab/math_util.hpp"
#include "hlab/soliton.hpp"

namespace hlab {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }

struct IndexEval {
    double n;
    Vec2 grad;
};

// Refraction index n(x) = lambda + p(x) with an analytic perturbation p given
// in polar coordinates.  Inside r_moll the perturbation is frozen in radius
// and, closer to the origin, faded to its circle average, so n is C^2 on all
// of R^2 (including the origin) and constant near the origin.
class IndexModel {
public:
    // p(rho, theta) and its partial derivatives, valid for rho >= r_moll/4
    // (everywhere when r_moll = 0).
    using PolarFn = std::function<double(double, double)>;

    IndexModel(std::string id, double lambda, double r_moll,
               PolarFn p, PolarFn dp_drho, PolarFn dp_dtheta,
               std::optional<AngularProfile> limit = std::nullopt,
               double gamma = 0.0, double delta = 1.0)
        : id_(std::move(id)), lambda_(lambda), r_moll_(r_moll),
          p_(std::move(p)), dp_drho_(std::move(dp_drho)), dp_dth_(std::move(dp_dtheta)),
          limit_(std::move(limit)), gamma_(gamma), delta_(delta) {
        if (lambda_ <= 0.0) throw std::invalid_argument("IndexModel: lambda must be positive");
        if (r_moll_ > 0.0) {
            // Circle average of p at r_moll; trapezoid is spectrally accurate here.
            const int N = 512;
            double s = 0.0;
            for (int i = 0; i < N; ++i) s += p_(r_moll_, 2.0 * pi * i / N);
            p_mean_ = s / N;
        } else {
            p_mean_ = p_(0.0, 0.0);
        }
    }

    const std::string& id() const { return id_; }
    double lambda() const { return lambda_; }
    double r_moll() const { return r_moll_; }
    double gamma() const { return gamma_; }
    double delta() const { return delta_; }
    const std::optional<AngularProfile>& limit() const { return limit_; }

    // n at the origin (mollified model; constant near the origin).
    double n_origin() const { return lambda_ + p_mean_; }

    // Declared lower bound n >= n0 when available.
    std::optional<double> n0() const { return n0_; }
    void declare_n0(double v) { n0_ = v; }

    // Split n = n1 + n2 of (the default built-ins use n1 = 0, n2 = n).
    double n1(Vec2 x) const { return n1_ ? n1_(x) : 0.0; }
    double n2(Vec2 x) const { return eval(x).n - n1(x); }
    void set_n1(std::function<double(Vec2)> f) { n1_ = std::move(f); }

    // Sup of |n2| over a deterministic lattice covering |x| <= R.
    double n2_sup(double R) const {
        double s = 0.0;
        const int Nr = 64, Nt = 128;
        for (int i = 1; i <= Nr; ++i)
            for (int j = 0; j < Nt; ++j) {
                const double r = R * i / Nr, th = 2.0 * pi * j / Nt;
                s = std::max(s, std::abs(n2({r * std::cos(th), r * std::sin(th)})));
            }
        return s;
    }

    double p_value(Vec2 x) const { return eval(x).n - lambda_; }

    IndexEval eval(Vec2 x) const {
        const double r = norm(x);
        const double th = (r > 0.0) ? std::atan2(x.y, x.x) : 0.0;
        double p, dpr, dpt;
        eval_polar(r, th, p, dpr, dpt);
        IndexEval out;
        out.n = lambda_ + p;
        if (r > 1e-14) {
            const double c = x.x / r, s = x.y / r;
            out.grad = {dpr * c - dpt / r * s, dpr * s + dpt / r * c};
        } else {
            out.grad = {0.0, 0.0};
        }
        return out;
    }

    // n, dn/dr, dn/dtheta at a polar point (used by assembly and reports).
    void eval_polar(double r, double th, double& p, double& dp_dr, double& dp_dth) const {
        const double rm = r_moll_;
        if (rm <= 0.0 || r >= rm) {
            p = p_(r, th);
            dp_dr = dp_drho_(r, th);
            dp_dth = dp_dth_(r, th);
            return;
        }
        if (r >= 0.5 * rm) {
            // Radius freeze: rho goes C^2-smoothly from r_moll down to r.
            const double t = (r - 0.5 * rm) / (0.5 * rm);
            const double s = smoothstep5(t);
            const double ds = smoothstep5_d1(t) * 2.0 / rm;
            const double rho = (1.0 - s) * rm + s * r;
            const double drho = ds * (r - rm) + s;
            p = p_(rho, th);
            dp_dr = dp_drho_(rho, th) * drho;
            dp_dth = dp_dth_(rho, th);
            return;
        }
        if (r >= 0.25 * rm) {
            // Angular fade toward the circle average.
            const double t = (r - 0.25 * rm) / (0.25 * rm);
            const double b = smoothstep5(t);
            const double db = smoothstep5_d1(t) * 4.0 / rm;
            const double q1 = p_(rm, th);
            p = (1.0 - b) * p_mean_ + b * q1;
            dp_dr = db * (q1 - p_mean_);
            dp_dth = b * dp_dth_(rm, th);
            return;
        }
        p = p_mean_;
        dp_dr = 0.0;
        dp_dth = 0.0;
    }

private:
    std::string id_;
    double lambda_;
    double r_moll_;
    PolarFn p_, dp_drho_, dp_dth_;
    std::optional<AngularProfile> limit_;
    double gamma_, delta_;
    double p_mean_ = 0.0;
    std::optional<double> n0_;
    std::function<double(Vec2)> n1_;
};

// ---------------------------------------------------------------------------
// Built-in model catalog
// ---------------------------------------------------------------------------

inline IndexModel make_constant(double lambda = 1.0) {
    auto zero = [](double, double) { return 0.0; };
    IndexModel m("constant", lambda, 0.0, zero, zero, zero, AngularProfile(lambda));
    m.declare_n0(lambda);
    return m;
}

// Saito's tilt p = -x1/|x| = -cos(theta): n = lambda - cos(theta).
inline IndexModel make_saito_tilt(double lambda = 10.0, double r_moll = 0.1) {
    auto p = [](double, double th) { return -std::cos(th); };
    auto dpr = [](double, double) { return 0.0; };
    auto dpt = [](double, double th) { return std::sin(th); };
    AngularProfile limit(lambda, {-1.0}, {0.0});
    IndexModel m("saito_tilt", lambda, r_moll, p, dpr, dpt, limit, 0.0, 1.0);
    m.declare_n0(lambda - 1.0);
    return m;
}

// n(x) = n_inf(theta) (1 + gamma / r^delta), with n_inf = lambda + trig poly.
inline IndexModel make_angular_limit(double lambda, AngularProfile n_inf,
                                     double gamma = 0.0, double delta = 1.0,
                                     double r_moll = 0.1) {
    if (n_inf.n0() <= 0.0) throw std::invalid_argument("angular_limit: profile must be positive");
    auto p = [n_inf, lambda, gamma, delta](double rho, double th) {
        return n_inf.eval(th) - lambda + n_inf.eval(th) * gamma / std::pow(rho, delta);
    };
    auto dpr = [n_inf, gamma, delta](double rho, double th) {
        return -delta * n_inf.eval(th) * gamma / std::pow(rho, delta + 1.0);
    };
    auto dpt = [n_inf, gamma, delta](double rho, double th) {
        return n_inf.d1(th) * (1.0 + gamma / std::pow(rho, delta));
    };
    IndexModel m("angular_limit", lambda, r_moll, p, dpr, dpt, n_inf, gamma, delta);
    if (gamma == 0.0) m.declare_n0(n_inf.n0());
    return m;
}

// Appendix-style waveguide index n = lw^2 Q(lw y)^2 + 1 - lw^2/2 on the plane,
// with Q the sech soliton.  Constant angular limit 1 - lw^2/2.
inline IndexModel make_waveguide_index(double lw = 0.3) {
    if (!(lw > 0.0 && lw < 0.5))
        throw std::invalid_argument("waveguide index: lambda must be in (0, 1/2)");
    const double lambda = 1.0 - 0.5 * lw * lw;
    auto p = [lw](double rho, double th) {
        const double Q = soliton(lw * rho * std::sin(th)).Q;
        return lw * lw * Q * Q;
    };
    auto dp_dy = [lw](double y) {
        const auto s = soliton(lw * y);
        return 2.0 * lw * lw * lw * s.Q * s.dQ;
    };
    auto dpr = [dp_dy](double rho, double th) {
        return dp_dy(rho * std::sin(th)) * std::sin(th);
    };
    auto dpt = [dp_dy](double rho, double th) {
        return dp_dy(rho * std::sin(th)) * rho * std::cos(th);
    };
    IndexModel m("waveguide", lambda, 0.0, p, dpr, dpt, AngularProfile(lambda));
    m.declare_n0(lambda);
    return m;
}

// ---------------------------------------------------------------------------
// Structural assumption checks
// ---------------------------------------------------------------------------

// 2 sum_j sup_{C(j)} (x.grad n)_- / n over a deterministic polar lattice of
// the dyadic annuli C(j) = {2^j <= |x| <= 2^{j+1}}, j in [j_min, j_max].
inline double beta_coefficient(const IndexModel& model, int j_min, int j_max,
                               int samples_per_annulus = 256) {
    if (j_min > j_max) throw std::invalid_argument("beta_coefficient: j_min > j_max");
    if (samples_per_annulus < 64)
        throw std::invalid_argument("beta_coefficient: need >= 64 samples per annulus");
    const int n_shells = 16;
    double total = 0.0;
    for (int j = j_min; j <= j_max; ++j) {
        double sup = 0.0;
        for (int i = 0; i <= n_shells; ++i) {
            const double r = std::exp2(j + static_cast<double>(i) / n_shells);
            for (int k = 0; k < samples_per_annulus; ++k) {
                const double th = 2.0 * pi * k / samples_per_annulus;
                const Vec2 x{r * std::cos(th), r * std::sin(th)};
                const auto e = model.eval(x);
                if (e.n <= 0.0)
                    throw std::runtime_error("beta_coefficient: n <= 0 at a sample point");
                const double radial = x.x * e.grad.x + x.y * e.grad.y;
                if (radial < 0.0) sup = std::max(sup, -radial / e.n);
            }
        }
        total += sup;
    }
    return 2.0 * total;
}

struct AnnulusEntry {
    int j;
    double sup_ratio;  // sup over C(j) of (x.grad n)_ - / n
};

struct AssumptionReport {
    double beta = 0.0;
    double c0_estimate = 1.0;
    double gamma_fit = 0.0;
    double delta_fit = 0.0;
    double a8_margin = 0.0;
    int j_min = 0, j_max = 0;
    std::vector<AnnulusEntry> annulus_table;
};

// A smooth complex test field with an analytic gradient, for the advisory
// first-eigenvalue-style check.
struct TestField {
    std::function<std::complex<double>(Vec2)> value;
    std::function<std::complex<double>(Vec2)> dx;
    std::function<std::complex<double>(Vec2)> dy;
};

// Fixed library of 20 bump/oscillatory fields on [-8,8]^2.
inline std::vector<TestField> default_test_fields() {
    std::vector<TestField> out;
    const double centers[5][2] = {{0, 0}, {2, 1}, {-3, 2}, {1, -4}, {-2, -2}};
    const double widths[2] = {1.0, 2.5};
    const double waves[2][2] = {{0.0, 0.0}, {1.3, -0.7}};
    for (const auto& c : centers)
        for (double w : widths)
            for (const auto& k : waves) {
                const double cx = c[0], cy = c[1], s2 = w * w, kx = k[0], ky = k[1];
                auto g = [cx, cy, s2](Vec2 x) {
                    const double dx = x.x - cx, dy = x.y - cy;
                    return std::exp(-(dx * dx + dy * dy) / (2.0 * s2));
                };
                TestField f;
                f.value = [g, kx, ky](Vec2 x) {
                    return g(x) * std::exp(std::complex<double>(0.0, kx * x.x + ky * x.y));
                };
                f.dx = [g, cx, s2, kx, ky](Vec2 x) {
                    const std::complex<double> ph =
                        std::exp(std::complex<double>(0.0, kx * x.x + ky * x.y));
                    return g(x) * ph * (std::complex<double>(-(x.x - cx) / s2, kx));
                };
                f.dy = [g, cy, s2, kx, ky](Vec2 x) {
                    const std::complex<double> ph =
                        std::exp(std::complex<double>(0.0, kx * x.x + ky * x.y));
                    return g(x) * ph * (std::complex<double>(-(x.y - cy) / s2, ky));
                };
                out.push_back(std::move(f));
            }
    return out;
}

inline AssumptionReport assumption_report(const IndexModel& model,
                                          const AngularProfile& profile,
                                          const std::vector<double>& radii,
                                          const std::vector<TestField>& test_fields =
                                              default_test_fields()) {
    if (radii.empty()) throw std::invalid_argument("assumption_report: radii empty");
    for (std::size_t i = 1; i < radii.size(); ++i)
        if (radii[i] <= radii[i - 1])
            throw std::invalid_argument("assumption_report: radii must be increasing");

    AssumptionReport rep;
    const int Nt = 256;

    // Gamma from sup |n - n_inf| |x| / n_inf, delta from a log-log fit of
    // |n - n_inf|/n_inf against r.
    std::vector<double> log_r, log_ratio;
    for (double r : radii) {
        double worst = 0.0;
        for (int k = 0; k < Nt; ++k) {
            const double th = 2.0 * pi * k / Nt;
            const Vec2 x{r * std::cos(th), r * std::sin(th)};
            const double n = model.eval(x).n;
            const double ninf = profile.eval(th);
            rep.gamma_fit = std::max(rep.gamma_fit, std::abs(n - ninf) * r / ninf);
            worst = std::max(worst, std::abs(n - ninf) / ninf);
        }
        if (worst > 1e-15) {
            log_r.push_back(std::log(r));
            log_ratio.push_back(std::log(worst));
        }
    }
    rep.delta_fit = (log_r.size() >= 2) ? -linear_fit(log_r, log_ratio).slope : 0.0;

    // Per-annulus sup ratios over the dyadic shells covering the radii.
    rep.j_min = static_cast<int>(std::floor(std::log2(radii.front())));
    rep.j_max = static_cast<int>(std::floor(std::log2(radii.back())));
    for (int j = rep.j_min; j <= rep.j_max; ++j)
        rep.annulus_table.push_back({j, 0.5 * beta_coefficient(model, j, j)});
    rep.beta = 0.0;
    for (const auto& e : rep.annulus_table) rep.beta += 2.0 * e.sup_ratio;

    // Advisory sampling bound: 1 - max ||n1^{1/2} u|| / ||grad u||.
    double worst_ratio = 0.0;
    const int Ng = 48;
    const double half = 8.0, h = 2.0 * half / Ng;
    for (const auto& f : test_fields) {
        double num = 0.0, den = 0.0;
        for (int i = 0; i <= Ng; ++i)
            for (int j = 0; j <= Ng; ++j) {
                const Vec2 x{-half + i * h, -half + j * h};
                const double w = h * h;
                const double n1 = model.n1(x);
                num += w * std::max(n1, 0.0) * std::norm(f.value(x));
                den += w * (std::norm(f.dx(x)) + std::norm(f.dy(x)));
            }
        if (den <= 0.0) continue;  // degenerate field, skipped
        worst_ratio = std::max(worst_ratio, std::sqrt(num / den));
    }
    rep.c0_estimate = 1.0 - worst_ratio;

    // Measured slack of the angular-derivative smallness condition with
    // reference constants beta~ = 1/2, Gbar = 1.
    const double beta_tilde = 0.5, gamma_bar = 1.0;
    double margin = std::numeric_limits<double>::infinity();
    for (double r : radii)
        for (int k = 0; k < Nt; ++k) {
            const double th = 2.0 * pi * k / Nt;
            const Vec2 x{r * std::cos(th), r * std::sin(th)};
            const auto e = model.eval(x);
            // d/dtheta of (n - n_inf), from the Cartesian gradient.
            const double dth_n = r * (-std::sin(th) * e.grad.x + std::cos(th) * e.grad.y);
            const double dth_diff = dth_n - profile.d1(th);
            const double lhs = std::max(-(dth_diff * profile.d1(th)), 0.0);
            const double rhs = beta_tilde * profile.d1(th) * profile.d1(th) +
                               e.n * gamma_bar / std::pow(r, model.delta());
            margin = std::min(margin, rhs - lhs);
        }
    rep.a8_margin = margin;
    return rep;
}

}  // namespace hlab

#endif
