#ifndef HLAB_NORMS_HPP
#define HLAB_NORMS_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hlab/angular_profile.hpp"
#include "hlab/index_model.hpp"
#include "hlab/polar_grid.hpp"

namespace hlab {

struct FluxEntry {
    double R = 0.0;  // snapped to the nearest grid shell
    double surface_flux = 0.0;
    double minus_surface_energy = 0.0;
    double volume_lhs = 0.0;
    double volume_rhs = 0.0;
};

struct NormReport {
    double triple_u = 0.0;
    double triple_nu = 0.0;
    double tangential_energy = 0.0;
    double M2 = 0.0;
    double besov_f = 0.0;
    double concentration = 0.0;
    double sommerfeld = 0.0;
    double weighted_f = 0.0;
    double R0 = 0.0;
    double a = 0.0;
    std::vector<FluxEntry> flux_pairs;
};

namespace detail {

// Per-shell sums of w * g(i,j), plus running ball sums.
template <class G>
std::vector<double> shell_sums(const PolarGrid& g, G&& integrand) {
    std::vector<double> out(g.Nr(), 0.0);
    for (int i = 0; i < g.Nr(); ++i) {
        double s = 0.0;
        for (int j = 0; j < g.Ntheta(); ++j) s += g.weight(i, j) * integrand(i, j);
        out[i] = s;
    }
    return out;
}

// sup over per-shell cumulative sums; the boundary shell enters with half
// weight because its node sits at the middle of its radial cell.  The outer
// ring's node sits at the clipped cell edge r = L, so it counts fully, as
// does everything in `full` mode (the majorant used by the duality
// inequality).
inline double sup_ball_ratio(const PolarGrid& g, const std::vector<double>& shells, double R0,
                             bool full) {
    double ball = 0.0, sup = 0.0;
    for (int i = 0; i < g.Nr(); ++i) {
        const double frac = (full || i == g.Nr() - 1) ? 1.0 : 0.5;
        const double at_shell = ball + frac * shells[i];
        if (g.r(i) > R0) sup = std::max(sup, at_shell / g.r(i));
        ball += shells[i];
    }
    return sup;
}

}  // namespace detail

// sup over grid radii r_i in (R0, L] of (1/r_i) * sum_{r <= r_i} w |u|^2,
// optionally weighted by a pointwise factor (e.g. n for |n^{1/2} u|^2).
// The unresolved disk r < r_inner contributes zero.
inline double triple_norm(const ComplexField& u, double R0,
                          const std::function<double(double, double)>& weight = {}) {
    const auto& g = *u.grid;
    if (R0 >= g.L()) throw std::invalid_argument("triple_norm: R0 must be < L");
    auto shells = detail::shell_sums(g, [&](int i, int j) {
        const double w = weight ? weight(g.r(i), g.theta(j)) : 1.0;
        return w * std::norm(u.at(i, j));
    });
    return detail::sup_ball_ratio(g, shells, R0, false);
}

struct BesovTerm {
    int j;
    double value;   // [2^{j+1} int_{C(j)} |f|^2]^{1/2}
    bool clipped;   // annulus extends past the grid
};

struct BesovDetail {
    double total = 0.0;
    double head = 0.0;  // [R0 int_{B(R0)} |f|^2]^{1/2}
    std::vector<BesovTerm> terms;
};

// Dyadic annulus norm: head term plus sum over annuli C(j) = {2^j <= |x| < 2^{j+1}}
// with j > J, where 2^J <= R0 < 2^{J+1} (all annuli meeting the grid when R0 = 0).
inline BesovDetail besov_detail(const ComplexField& f, double R0) {
    if (R0 < 0.0) throw std::invalid_argument("besov_detail: R0 must be >= 0");
    const auto& g = *f.grid;
    auto shells = detail::shell_sums(g, [&](int i, int j) { return std::norm(f.at(i, j)); });

    BesovDetail out;
    double head_sum = 0.0;
    const int j_lo = static_cast<int>(std::floor(std::log2(std::max(g.r_inner(), 1e-300))));
    const int j_hi = static_cast<int>(std::floor(std::log2(g.L()))) + 1;
    const int J = (R0 > 0.0) ? static_cast<int>(std::floor(std::log2(R0)))
                             : std::numeric_limits<int>::min();
    std::vector<double> annulus(j_hi - j_lo + 1, 0.0);
    for (int i = 0; i < g.Nr(); ++i) {
        const double r = g.r(i);
        if (R0 > 0.0 && r <= R0) head_sum += shells[i];
        const int j = static_cast<int>(std::floor(std::log2(r)));
        if (j >= j_lo && j <= j_hi) annulus[j - j_lo] += shells[i];
    }
    if (R0 > 0.0) {
        out.head = std::sqrt(R0 * head_sum);
        out.total += out.head;
    }
    for (int j = j_lo; j <= j_hi; ++j) {
        if (R0 > 0.0 && j <= J) continue;
        const double mass = annulus[j - j_lo];
        if (mass <= 0.0) continue;
        const bool clipped = (std::pow(2.0, j) < g.r_inner()) || (std::pow(2.0, j + 1) > g.L());
        const double v = std::sqrt(std::pow(2.0, j + 1) * mass);
        out.terms.push_back({j, v, clipped});
        out.total += v;
    }
    return out;
}

inline double besov_norm(const ComplexField& f, double R0) {
    return besov_detail(f, R0).total;
}

// int_{r >= R0} |grad_tau u|^2 / r.
inline double tangential_energy(const ComplexField& u, double R0) {
    const auto& g = *u.grid;
    auto gr = gradient(u);
    double s = 0.0;
    for (int i = 0; i < g.Nr(); ++i) {
        if (g.r(i) < R0) continue;
        for (int j = 0; j < g.Ntheta(); ++j)
            s += g.weight(i, j) * std::norm(gr.du_tau.at(i, j)) / g.r(i);
    }
    return s;
}

// Default truncation radius 1/sqrt(n0) for models declaring a positive floor.
inline double default_R0(const IndexModel& model) {
    const auto n0 = model.n0();
    if (!n0 || *n0 <= 0.0) return 0.0;
    return 1.0 / std::sqrt(*n0);
}

// Fills the gradient/weighted/tangential energy triple; M2 is their sum.
inline NormReport morawetz_report(const ComplexField& u, const IndexModel& model, double R0) {
    const auto& g = *u.grid;
    NormReport rep;
    rep.R0 = R0;
    auto gr = gradient(u);

    auto grad_shells = detail::shell_sums(g, [&](int i, int j) {
        return std::norm(gr.du_r.at(i, j)) + std::norm(gr.du_tau.at(i, j));
    });
    auto nu_shells = detail::shell_sums(g, [&](int i, int j) {
        const double th = g.theta(j);
        return model.eval({g.r(i) * std::cos(th), g.r(i) * std::sin(th)}).n *
               std::norm(u.at(i, j));
    });
    rep.triple_u = detail::sup_ball_ratio(g, grad_shells, R0, false);
    rep.triple_nu = detail::sup_ball_ratio(g, nu_shells, R0, false);
    rep.tangential_energy = tangential_energy(u, R0);
    rep.M2 = rep.triple_u + rep.triple_nu + rep.tangential_energy;
    return rep;
}

// int_{r >= R} |d_theta n_inf|^2 |u|^2 / r.
inline double concentration_integral(const ComplexField& u, const AngularProfile& profile,
                                     double R) {
    const auto& g = *u.grid;
    if (R < g.r_inner() || R >= g.L())
        throw std::invalid_argument("concentration_integral: R outside [r_inner, L)");
    double s = 0.0;
    for (int i = 0; i < g.Nr(); ++i) {
        if (g.r(i) < R) continue;
        for (int j = 0; j < g.Ntheta(); ++j) {
            const double d = profile.d1(g.theta(j));
            s += g.weight(i, j) * d * d * std::norm(u.at(i, j)) / g.r(i);
        }
    }
    return s;
}

enum class SommerfeldWeight { inv_r, inv_one_plus_r };

// Scalar form: int (|d_r u - i s u|^2 + |grad_tau u|^2) * W.
inline double sommerfeld_residual(const ComplexField& u,
                                  const std::function<double(double, double)>& s,
                                  SommerfeldWeight wkind = SommerfeldWeight::inv_one_plus_r) {
    const auto& g = *u.grid;
    auto gr = gradient(u);
    double total = 0.0;
    for (int i = 0; i < g.Nr(); ++i)
        for (int j = 0; j < g.Ntheta(); ++j) {
            const double r = g.r(i), th = g.theta(j);
            const double W = (wkind == SommerfeldWeight::inv_r) ? 1.0 / r : 1.0 / (1.0 + r);
            const Complex res_r = gr.du_r.at(i, j) - Complex(0, s(r, th)) * u.at(i, j);
            total += g.weight(i, j) * W * (std::norm(res_r) + std::norm(gr.du_tau.at(i, j)));
        }
    return total;
}

// Vector form: int |grad u - i G u|^2 * W with G given in Cartesian components.
inline double sommerfeld_residual_vector(const ComplexField& u, const ComplexField& Gx,
                                         const ComplexField& Gy,
                                         SommerfeldWeight wkind =
                                             SommerfeldWeight::inv_one_plus_r) {
    if (!Gx.finite() || !Gy.finite())
        throw std::invalid_argument("sommerfeld_residual_vector: phase field has non-finite entries");
    const auto& g = *u.grid;
    auto gr = gradient(u);
    double total = 0.0;
    for (int i = 0; i < g.Nr(); ++i)
        for (int j = 0; j < g.Ntheta(); ++j) {
            const double r = g.r(i), th = g.theta(j);
            const double c = std::cos(th), sn = std::sin(th);
            const double W = (wkind == SommerfeldWeight::inv_r) ? 1.0 / r : 1.0 / (1.0 + r);
            const Complex Gr = Gx.at(i, j) * c + Gy.at(i, j) * sn;
            const Complex Gt = -Gx.at(i, j) * sn + Gy.at(i, j) * c;
            const Complex rr = gr.du_r.at(i, j) - Complex(0, 1) * Gr * u.at(i, j);
            const Complex rt = gr.du_tau.at(i, j) - Complex(0, 1) * Gt * u.at(i, j);
            total += g.weight(i, j) * W * (std::norm(rr) + std::norm(rt));
        }
    return total;
}

// int |f|^2 (1 + r)^a.
inline double weighted_source_norm(const ComplexField& f, double a) {
    const auto& g = *f.grid;
    double s = 0.0;
    for (int i = 0; i < g.Nr(); ++i)
        for (int j = 0; j < g.Ntheta(); ++j)
            s += g.weight(i, j) * std::norm(f.at(i, j)) * std::pow(1.0 + g.r(i), a);
    return s;
}

// Surface flux pairing against the volume energy identity, one entry per
// requested radius (snapped to the nearest grid shell).
inline std::vector<FluxEntry> flux_report(const ComplexField& u, const ComplexField& f,
                                          const IndexModel& model, const AngularProfile& profile,
                                          const std::vector<double>& radii) {
    const auto& g = *u.grid;
    auto gr = gradient(u);
    auto ninf_half = [&](int j) { return std::sqrt(profile.eval(g.theta(j))); };

    std::vector<FluxEntry> out;
    for (double R : radii) {
        if (R <= g.r_inner() || R > g.L())
            throw std::invalid_argument("flux_report: radius outside (r_inner, L]");
        const int i = g.snap_shell(R);
        FluxEntry e;
        e.R = g.r(i);
        for (int j = 0; j < g.Ntheta(); ++j) {
            const double th = g.theta(j);
            const double n = model.eval({e.R * std::cos(th), e.R * std::sin(th)}).n;
            const Complex ub = std::conj(u.at(i, j));
            const Complex op = gr.du_r.at(i, j) - Complex(0, std::sqrt(n)) * u.at(i, j);
            e.surface_flux += std::imag(ub * op) * e.R * g.dtheta();
            e.minus_surface_energy -= std::sqrt(n) * std::norm(u.at(i, j)) * e.R * g.dtheta();
        }
        for (int k = 0; k <= i; ++k)
            for (int j = 0; j < g.Ntheta(); ++j) {
                e.volume_lhs += g.weight(k, j) * ninf_half(j) * std::norm(u.at(k, j)) / e.R;
                e.volume_rhs -= std::imag(f.at(k, j) * std::conj(u.at(k, j))) * g.weight(k, j);
            }
        out.push_back(e);
    }
    return out;
}

struct DualityResult {
    double lhs = 0.0;  // int |f conj(u)|
    double rhs = 0.0;  // N(f) * |||u|||
    bool ok = false;
};

// Annulus-wise Cauchy-Schwarz: int |f u| <= N_0(f) * sup_R ((1/R) int_B |u|^2)^{1/2}.
// The sup counts boundary cells fully, which makes the inequality an exact
// theorem of the discrete quadrature.
inline DualityResult duality_check(const ComplexField& f, const ComplexField& u) {
    if (f.grid.get() != u.grid.get())
        throw std::invalid_argument("duality_check: fields on different grids");
    const auto& g = *f.grid;
    DualityResult res;
    for (int i = 0; i < g.Nr(); ++i)
        for (int j = 0; j < g.Ntheta(); ++j)
            res.lhs += g.weight(i, j) * std::abs(f.at(i, j) * std::conj(u.at(i, j)));
    auto shells = detail::shell_sums(g, [&](int i, int j) { return std::norm(u.at(i, j)); });
    res.rhs = besov_norm(f, 0.0) * std::sqrt(detail::sup_ball_ratio(g, shells, 0.0, true));
    res.ok = res.lhs <= res.rhs * (1.0 + 1e-12);
    return res;
}

inline void dump_norm_report_json(const NormReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("dump_norm_report_json: cannot open " + path);
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "{\"triple_u\": %.17g, \"triple_nu\": %.17g, \"tangential_energy\": %.17g, "
                  "\"M2\": %.17g, \"besov_f\": %.17g, \"concentration\": %.17g, "
                  "\"sommerfeld\": %.17g, \"weighted_f\": %.17g, \"R0\": %.17g, \"a\": %.17g}\n",
                  rep.triple_u, rep.triple_nu, rep.tangential_energy, rep.M2, rep.besov_f,
                  rep.concentration, rep.sommerfeld, rep.weighted_f, rep.R0, rep.a);
    out << buf;
}

inline void dump_flux_csv(const std::vector<FluxEntry>& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("dump_flux_csv: cannot open " + path);
    out << "R,surface_flux,minus_surface_energy,volume_lhs,volume_rhs\n";
    char buf[256];
    for (const auto& e : table) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g\n", e.R, e.surface_flux,
                      e.minus_surface_energy, e.volume_lhs, e.volume_rhs);
        out << buf;
    }
}

}  // namespace hlab

#endif
