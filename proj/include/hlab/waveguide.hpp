#ifndef HLAB_WAVEGUIDE_HPP
#define HLAB_WAVEGUIDE_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hlab/math_util.hpp"
#include "hlab/polar_grid.hpp"
#include "hlab/soliton.hpp"

namespace hlab {

struct QuadratureUnderResolved : std::runtime_error {
    double coarse;
    double refined;
    QuadratureUnderResolved(double c, double r)
        : std::runtime_error("quadrature under-resolved: coarse " + std::to_string(c) +
                             " vs refined " + std::to_string(r)),
          coarse(c), refined(r) {}
};

struct WaveguideParams {
    double lambda = 0.3;
    double y_max = 40.0;
    double x_max = 0.0;  // 0: choose 20 / eps_min automatically
    int pts_per_panel = 16;

    void validate() const {
        if (!(lambda > 0.0 && lambda < 0.5))
            throw std::invalid_argument("waveguide: lambda must lie in (0, 1/2)");
        if (!(y_max >= 40.0))
            throw std::invalid_argument("waveguide: y_max must be at least 40");
        if (pts_per_panel < 1)
            throw std::invalid_argument("waveguide: need at least 1 point per panel");
    }
};

// C-infinity bump in the first coordinate: 0 for |x| <= 1, 1 for |x| >= 2,
// built from B(s) = exp(-1/s).  Value and two derivatives in t = |x|.
struct BumpValue {
    double theta;
    double dtheta;
    double d2theta;
};

inline BumpValue bump(double t) {
    if (t <= 1.0) return {0.0, 0.0, 0.0};
    if (t >= 2.0) return {1.0, 0.0, 0.0};
    const double s = t - 1.0, c = 1.0 - s;
    const double g = 1.0 / s - 1.0 / c;
    const double g1 = -1.0 / (s * s) - 1.0 / (c * c);
    const double g2 = 2.0 / (s * s * s) - 2.0 / (c * c * c);
    const double e = std::exp(g);
    const double th = 1.0 / (1.0 + e);
    const double w = th * (1.0 - th);
    return {th, -g1 * w, -g2 * w + g1 * g1 * w * (1.0 - 2.0 * th)};
}

namespace wg_detail {

inline double sig(double x) { return (x > 0.0) ? 1.0 : (x < 0.0) ? -1.0 : 0.0; }

inline Complex branch_root(double eps) { return std::sqrt(Complex(1.0, eps)); }

}  // namespace wg_detail

// Closed-form counterexample family u = Q_lambda(y) theta(x) e^{i k |x|},
// k = sqrt(1 + i eps) with positive imaginary part, solving
// Lap u + (n + i eps) u = f with n = lambda^2 Q_lambda^2 + 1 - lambda^2 / 2.
struct WaveguideFields {
    Complex u;
    Complex f;
    double n;
    Complex u_x;
    Complex u_y;
    Complex u_xx;
    Complex u_yy;
};

inline WaveguideFields fields(const WaveguideParams& p, double eps, double x, double y) {
    p.validate();
    if (!(eps >= 0.0 && eps < 1.0))
        throw std::invalid_argument("waveguide: eps must lie in [0, 1)");
    const double lam = p.lambda;
    const Complex k = wg_detail::branch_root(eps);
    const auto q = soliton(lam * y);
    const double Q = q.Q, Qy = lam * q.dQ, Qyy = lam * lam * q.d2Q;
    const double ax = std::abs(x), sg = wg_detail::sig(x);
    const auto b = bump(ax);
    const Complex phase = std::exp(Complex(0.0, 1.0) * k * ax);

    WaveguideFields out;
    out.n = lam * lam * Q * Q + 1.0 - 0.5 * lam * lam;
    out.u = Q * b.theta * phase;
    out.f = (2.0 * Complex(0.0, 1.0) * k * sg * b.dtheta + b.d2theta) * Q * phase;
    const Complex ik = Complex(0.0, 1.0) * k;
    out.u_x = Q * phase * sg * (b.dtheta + ik * b.theta);
    out.u_y = Qy * b.theta * phase;
    out.u_xx = Q * phase * (b.d2theta + 2.0 * ik * b.dtheta + ik * ik * b.theta);
    out.u_yy = Qyy * b.theta * phase;
    return out;
}

// Lap u + (n + i eps) u - f from the analytic second derivatives; vanishes
// identically away from x = 0.
inline Complex pde_residual(const WaveguideParams& p, double eps, double x, double y) {
    auto v = fields(p, eps, x, y);
    return v.u_xx + v.u_yy + (v.n + Complex(0.0, eps)) * v.u - v.f;
}

namespace wg_detail {

inline std::vector<double> x_edges(double x_max) {
    std::vector<double> e{0.0, 0.5, 1.0, 1.25, 1.5, 1.75, 2.0, 3.0, 4.0};
    double r = 4.0;
    while (r < x_max) {
        r = std::min(2.0 * r, x_max);
        e.push_back(r);
    }
    return e;
}

inline std::vector<double> y_edges(double y_max) {
    std::vector<double> e{0.0, 0.5, 1.0, 2.0, 4.0, 8.0};
    double r = 8.0;
    while (r < y_max) {
        r = std::min(2.0 * r, y_max);
        e.push_back(r);
    }
    return e;
}

// Quarter-plane tensor quadrature of |grad_tau u|^2 / (1 + r), doubled twice
// for the two reflection symmetries.
inline double blowup_integral(const WaveguideParams& p, double eps, double x_max, int pts) {
    std::vector<double> xn, xw, yn, yw;
    gauss_panels(x_edges(x_max), pts, xn, xw);
    gauss_panels(y_edges(p.y_max), pts, yn, yw);
    double s = 0.0;
    for (std::size_t a = 0; a < xn.size(); ++a)
        for (std::size_t b = 0; b < yn.size(); ++b) {
            const double x = xn[a], y = yn[b];
            auto v = fields(p, eps, x, y);
            const double r = std::hypot(x, y);
            if (r == 0.0) continue;
            const double e2 = std::norm(v.u_x) + std::norm(v.u_y);
            const Complex radial = (v.u_x * x + v.u_y * y) / r;
            const double tau2 = std::max(0.0, e2 - std::norm(radial));
            s += xw[a] * yw[b] * tau2 / (1.0 + r);
        }
    return 4.0 * s;
}

}  // namespace wg_detail

// Split of |grad_tau u|^2 = |(x u_y - y u_x)/r|^2 into the envelope piece
// |x u_y / r|^2 (carries the log eps divergence), the sweep piece
// |y u_x / r|^2 (bounded uniformly in eps, size ~ 1/lambda), and the signed
// cross product.  envelope + sweep + cross = total.
struct TangentialComponents {
    double total = 0.0;
    double envelope = 0.0;
    double sweep = 0.0;
    double cross = 0.0;
};

inline TangentialComponents tangential_components(const WaveguideParams& p, double eps) {
    p.validate();
    if (!(eps > 1e-5 && eps < 1.0))
        throw std::invalid_argument("waveguide: blow-up eps must lie in (1e-5, 1)");
    const double x_max = (p.x_max > 0.0) ? p.x_max : 20.0 / eps;
    std::vector<double> xn, xw, yn, yw;
    gauss_panels(wg_detail::x_edges(x_max), 2 * p.pts_per_panel, xn, xw);
    gauss_panels(wg_detail::y_edges(p.y_max), 2 * p.pts_per_panel, yn, yw);
    TangentialComponents out;
    for (std::size_t a = 0; a < xn.size(); ++a)
        for (std::size_t b = 0; b < yn.size(); ++b) {
            const double x = xn[a], y = yn[b];
            auto v = fields(p, eps, x, y);
            const double r = std::hypot(x, y);
            if (r == 0.0) continue;
            const double w = 4.0 * xw[a] * yw[b] / (1.0 + r);
            const Complex tau = (x * v.u_y - y * v.u_x) / r;
            out.total += w * std::norm(tau);
            out.envelope += w * std::norm(x * v.u_y / r);
            out.sweep += w * std::norm(y * v.u_x / r);
            out.cross += w * (-2.0) * std::real(std::conj(x * v.u_y / r) * (y * v.u_x / r));
        }
    return out;
}

struct BlowupRow {
    double epsilon;
    double T;
};

struct BlowupResult {
    std::vector<BlowupRow> rows;
    LinearFit fit;  // T against ln(1/eps)
};

inline double tangential_integral(const WaveguideParams& p, double eps) {
    p.validate();
    if (!(eps > 1e-5 && eps < 1.0))
        throw std::invalid_argument("waveguide: blow-up eps must lie in (1e-5, 1)");
    const double x_max = (p.x_max > 0.0) ? p.x_max : 20.0 / eps;
    const double coarse = wg_detail::blowup_integral(p, eps, x_max, p.pts_per_panel);
    const double fine = wg_detail::blowup_integral(p, eps, x_max, 2 * p.pts_per_panel);
    if (std::abs(fine - coarse) > 0.01 * std::abs(fine))
        throw QuadratureUnderResolved(coarse, fine);
    return fine;
}

inline BlowupResult tangential_blowup(const WaveguideParams& p, std::vector<double> eps_list) {
    p.validate();
    if (eps_list.empty()) throw std::invalid_argument("waveguide: empty eps list");
    for (std::size_t i = 1; i < eps_list.size(); ++i)
        if (!(eps_list[i] < eps_list[i - 1]))
            throw std::invalid_argument("waveguide: eps list must be strictly decreasing");
    WaveguideParams q = p;
    if (q.x_max <= 0.0) q.x_max = 20.0 / eps_list.back();
    BlowupResult out;
    std::vector<double> logs, ts;
    for (double e : eps_list) {
        const double T = tangential_integral(q, e);
        out.rows.push_back({e, T});
        logs.push_back(std::log(1.0 / e));
        ts.push_back(T);
    }
    out.fit = linear_fit(logs, ts);
    return out;
}

// Energy of the conjugated field e^{-ik|x|} u = Q_lambda(y) theta(x) over the
// transition strip 1 < |x| < 2; independent of eps by construction.
struct ConjugatedEnergy {
    double value;
    double envelope_integral;  // int (d/dy Q_lambda)^2 dy
};

inline ConjugatedEnergy conjugated_energy(const WaveguideParams& p) {
    p.validate();
    std::vector<double> xn, xw, yn, yw;
    gauss_panels({1.0, 1.25, 1.5, 1.75, 2.0}, p.pts_per_panel, xn, xw);
    gauss_panels(wg_detail::y_edges(p.y_max), p.pts_per_panel, yn, yw);
    double s = 0.0, env = 0.0;
    for (std::size_t b = 0; b < yn.size(); ++b) {
        const auto q = soliton(p.lambda * yn[b]);
        const double Q = q.Q, Qy = p.lambda * q.dQ;
        env += 2.0 * yw[b] * Qy * Qy;
        for (std::size_t a = 0; a < xn.size(); ++a) {
            const auto bu = bump(xn[a]);
            s += 4.0 * xw[a] * yw[b] *
                 (Q * Q * bu.dtheta * bu.dtheta + Qy * Qy * bu.theta * bu.theta);
        }
    }
    return {s, env};
}

// Dyadic source norm and ball-averaged solution mass for the closed forms.
struct SourceNormReport {
    double N_f = 0.0;
    double triple_u = 0.0;
};

inline SourceNormReport source_norms(const WaveguideParams& p, double eps, double R_max = 64.0) {
    p.validate();
    if (R_max < 2.0) throw std::invalid_argument("waveguide: R_max must be at least 2");
    std::vector<double> xn, xw, yn, yw;
    gauss_panels({1.0, 1.25, 1.5, 1.75, 2.0}, p.pts_per_panel, xn, xw);
    gauss_panels(wg_detail::y_edges(p.y_max), p.pts_per_panel, yn, yw);

    // f is supported in 1 < |x| < 2; dyadic annuli in |(x,y)|, no head ball.
    const int jmax = static_cast<int>(std::ceil(std::log2(std::hypot(2.0, p.y_max)))) + 1;
    std::vector<double> annulus(jmax + 1, 0.0);
    for (std::size_t a = 0; a < xn.size(); ++a)
        for (std::size_t b = 0; b < yn.size(); ++b) {
            auto v = fields(p, eps, xn[a], yn[b]);
            const double r = std::hypot(xn[a], yn[b]);
            const int j = std::max(0, static_cast<int>(std::floor(std::log2(r))));
            if (j <= jmax) annulus[j] += 4.0 * xw[a] * yw[b] * std::norm(v.f);
        }
    SourceNormReport out;
    for (int j = 0; j <= jmax; ++j)
        out.N_f += std::sqrt(std::ldexp(1.0, j + 1) * annulus[j]);

    // sup over dyadic R in [1, R_max] of (1/R) int_{B(R)} |u|^2.
    std::vector<double> uxn, uxw;
    std::vector<double> ue{0.0, 0.5, 1.0, 1.25, 1.5, 1.75, 2.0, 3.0, 4.0};
    double rr = 4.0;
    while (rr < R_max) {
        rr = std::min(2.0 * rr, R_max);
        ue.push_back(rr);
    }
    gauss_panels(ue, p.pts_per_panel, uxn, uxw);
    std::vector<double> radii;
    for (double R = 1.0; R <= R_max * (1.0 + 1e-12); R *= 2.0) radii.push_back(R);
    std::vector<double> mass(radii.size(), 0.0);
    for (std::size_t a = 0; a < uxn.size(); ++a)
        for (std::size_t b = 0; b < yn.size(); ++b) {
            auto v = fields(p, eps, uxn[a], yn[b]);
            const double r = std::hypot(uxn[a], yn[b]);
            const double m = 4.0 * uxw[a] * yw[b] * std::norm(v.u);
            for (std::size_t k = 0; k < radii.size(); ++k)
                if (r < radii[k]) mass[k] += m;
        }
    for (std::size_t k = 0; k < radii.size(); ++k)
        out.triple_u = std::max(out.triple_u, mass[k] / radii[k]);
    return out;
}

inline double stability_ratio(const WaveguideParams& p, const std::vector<double>& eps_list,
                              double R_max = 64.0) {
    if (eps_list.empty()) throw std::invalid_argument("waveguide: empty eps list");
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (double e : eps_list) {
        const double nf = source_norms(p, e, R_max).N_f;
        lo = std::min(lo, nf);
        hi = std::max(hi, nf);
    }
    return hi / lo;
}

// One-line diagnostic: phi = i k |x| does not solve |grad phi|^2 = n.
inline bool phase_solves_eikonal(const WaveguideParams& p, double eps, double x, double y) {
    const Complex k = wg_detail::branch_root(eps);
    const Complex g2 = (Complex(0.0, 1.0) * k) * (Complex(0.0, 1.0) * k);
    return std::abs(g2 - fields(p, eps, x, y).n) <= 1e-12;
}

struct WaveguideTableRow {
    double epsilon;
    double T;
    double conjugated_energy;
    double N_f;
    double triple_u;
};

struct WaveguideTable {
    std::vector<WaveguideTableRow> rows;
    LinearFit fit;
};

inline WaveguideTable waveguide_table(const WaveguideParams& p,
                                      const std::vector<double>& eps_list,
                                      double R_max = 64.0) {
    auto blow = tangential_blowup(p, eps_list);
    const auto ce = conjugated_energy(p);
    WaveguideTable out;
    out.fit = blow.fit;
    for (const auto& row : blow.rows) {
        auto sn = source_norms(p, row.epsilon, R_max);
        out.rows.push_back({row.epsilon, row.T, ce.value, sn.N_f, sn.triple_u});
    }
    return out;
}

inline void dump_waveguide_csv(const WaveguideTable& t, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("dump_waveguide_csv: cannot open " + path);
    out << "epsilon,T,conjugated_energy,N_f,triple_u\n";
    char buf[256];
    for (const auto& r : t.rows) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g\n", r.epsilon, r.T,
                      r.conjugated_energy, r.N_f, r.triple_u);
        out << buf;
    }
}

inline void dump_waveguide_fit_json(const WaveguideTable& t, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("dump_waveguide_fit_json: cannot open " + path);
    char buf[256];
    std::snprintf(buf, sizeof(buf), "{\"slope\": %.17g, \"intercept\": %.17g, \"r2\": %.17g}\n",
                  t.fit.slope, t.fit.intercept, t.fit.r2);
    out << buf;
}

}  // namespace hlab

#endif
