#ifndef HLAB_IDENTITIES_HPP
#define HLAB_IDENTITIES_HPP

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>

#include "hlab/angular_profile.hpp"
#include "hlab/helmholtz.hpp"
#include "hlab/index_model.hpp"
#include "hlab/polar_grid.hpp"

namespace hlab {

enum class MultiplierKind { scalar_phi, scalar_psi, vector_Psi_kinked, vector_Psi_q, custom_smooth };

// Evaluators in polar coordinates.  Scalar multipliers need (value, lap) or
// (value, grad); vector multipliers are gradient fields of a potential Psi
// and carry the Hessian in the (e_r, e_theta) frame plus grad(lap Psi).
struct Multiplier {
    MultiplierKind kind = MultiplierKind::custom_smooth;
    std::function<double(double, double)> value;
    std::function<double(double, double)> lap;
    std::function<double(double, double)> grad_r;
    std::function<double(double, double)> grad_tau;  // (1/r) d_theta
    std::function<double(double, double)> H_rr;
    std::function<double(double, double)> H_rt;
    std::function<double(double, double)> H_tt;
    std::function<double(double, double)> dlap_r;
    std::function<double(double, double)> dlap_tau;
    // When lap Psi jumps across a circle, grad(lap Psi) carries a surface part
    // [lap]_out-in * delta_{r = R} e_r on top of the pointwise fields above.
    double lap_jump_radius = 0.0;
    double lap_jump = 0.0;

    static Multiplier scalar_phi(std::function<double(double, double)> v,
                                 std::function<double(double, double)> lap_v) {
        Multiplier m;
        m.kind = MultiplierKind::scalar_phi;
        m.value = std::move(v);
        m.lap = std::move(lap_v);
        return m;
    }

    static Multiplier scalar_psi(std::function<double(double, double)> v,
                                 std::function<double(double, double)> gr,
                                 std::function<double(double, double)> gt) {
        Multiplier m;
        m.kind = MultiplierKind::scalar_psi;
        m.value = std::move(v);
        m.grad_r = std::move(gr);
        m.grad_tau = std::move(gt);
        return m;
    }

    // Psi with grad Psi = x/R inside |x| <= R and x/|x| outside; the Hessian
    // is kinked at |x| = R.
    static Multiplier Psi_kinked(double R) {
        if (R <= 0.0) throw std::invalid_argument("Psi_kinked: R must be positive");
        Multiplier m;
        m.kind = MultiplierKind::vector_Psi_kinked;
        m.grad_r = [R](double r, double) { return (r <= R) ? r / R : 1.0; };
        m.grad_tau = [](double, double) { return 0.0; };
        m.H_rr = [R](double r, double) { return (r <= R) ? 1.0 / R : 0.0; };
        m.H_rt = [](double, double) { return 0.0; };
        m.H_tt = [R](double r, double) { return (r <= R) ? 1.0 / R : 1.0 / r; };
        m.lap = [R](double r, double) { return (r <= R) ? 2.0 / R : 1.0 / r; };
        m.dlap_r = [R](double r, double) { return (r <= R) ? 0.0 : -1.0 / (r * r); };
        m.dlap_tau = [](double, double) { return 0.0; };
        m.lap_jump_radius = R;
        m.lap_jump = -1.0 / R;
        return m;
    }

    // Psi_q(x) = q(|x|/R) n_inf(theta) with the quintic transition
    // q = 0 on [0,1], q(s) = s on [2,inf).
    static Multiplier Psi_q(double R, AngularProfile profile) {
        if (R <= 0.0) throw std::invalid_argument("Psi_q: R must be positive");
        static const QuinticHermite ramp(1.0, 2.0, 0.0, 0.0, 0.0, 2.0, 1.0, 0.0);
        auto q0 = [](double s) { return (s <= 1.0) ? 0.0 : (s >= 2.0) ? s : ramp.eval(s); };
        auto q1 = [](double s) { return (s <= 1.0) ? 0.0 : (s >= 2.0) ? 1.0 : ramp.d1(s); };
        auto q2 = [](double s) { return (s <= 1.0 || s >= 2.0) ? 0.0 : ramp.d2(s); };
        auto q3 = [](double s) { return (s <= 1.0 || s >= 2.0) ? 0.0 : ramp.d3(s); };

        Multiplier m;
        m.kind = MultiplierKind::vector_Psi_q;
        auto N = [profile](double th) { return profile.eval(th); };
        auto N1 = [profile](double th) { return profile.d1(th); };
        auto N2 = [profile](double th) { return profile.d2(th); };
        auto N3 = [profile](double th) { return profile.d3(th); };
        m.value = [=](double r, double th) { return q0(r / R) * N(th); };
        m.grad_r = [=](double r, double th) { return q1(r / R) * N(th) / R; };
        m.grad_tau = [=](double r, double th) { return q0(r / R) * N1(th) / r; };
        m.H_rr = [=](double r, double th) { return q2(r / R) * N(th) / (R * R); };
        m.H_rt = [=](double r, double th) {
            return (q1(r / R) / (R * r) - q0(r / R) / (r * r)) * N1(th);
        };
        m.H_tt = [=](double r, double th) {
            return q0(r / R) * N2(th) / (r * r) + q1(r / R) * N(th) / (R * r);
        };
        m.lap = [=](double r, double th) {
            return q2(r / R) * N(th) / (R * R) + q1(r / R) * N(th) / (R * r) +
                   q0(r / R) * N2(th) / (r * r);
        };
        m.dlap_r = [=](double r, double th) {
            const double s = r / R;
            return q3(s) * N(th) / (R * R * R) + q2(s) * N(th) / (R * R * r) -
                   q1(s) * N(th) / (R * r * r) + q1(s) * N2(th) / (R * r * r) -
                   2.0 * q0(s) * N2(th) / (r * r * r);
        };
        m.dlap_tau = [=](double r, double th) {
            const double s = r / R;
            return (q2(s) * N1(th) / (R * R) + q1(s) * N1(th) / (R * r) +
                    q0(s) * N3(th) / (r * r)) / r;
        };
        return m;
    }

    // Psi = |x|^2 / 2 (identity Hessian, zero bilaplacian).
    static Multiplier Psi_half_square() {
        Multiplier m;
        m.kind = MultiplierKind::custom_smooth;
        m.value = [](double r, double) { return 0.5 * r * r; };
        m.grad_r = [](double r, double) { return r; };
        m.grad_tau = [](double, double) { return 0.0; };
        m.H_rr = [](double, double) { return 1.0; };
        m.H_rt = [](double, double) { return 0.0; };
        m.H_tt = [](double, double) { return 1.0; };
        m.lap = [](double, double) { return 2.0; };
        m.dlap_r = [](double, double) { return 0.0; };
        m.dlap_tau = [](double, double) { return 0.0; };
        return m;
    }
};

struct IdentityReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double abs_residual = 0.0;
    double rel_residual = 0.0;
    std::map<std::string, double> terms;

    void finalize(double floor = 1e-14) {
        abs_residual = std::abs(lhs - rhs);
        rel_residual = abs_residual / std::max({std::abs(lhs), std::abs(rhs), floor});
    }
};

namespace detail {

template <class F>
double quad(const PolarGrid& g, F&& integrand) {
    double s = 0.0;
    for (int i = 0; i < g.Nr(); ++i)
        for (int j = 0; j < g.Ntheta(); ++j) s += g.weight(i, j) * integrand(i, j);
    return s;
}

}  // namespace detail

// Variational identity with a scalar weight:
//   -int phi |grad u|^2 + 1/2 int (lap phi)|u|^2 + int phi n |u|^2
//     = -Re int phi conj(u) f.
inline IdentityReport check_variational(const ComplexField& u, const ComplexField& f,
                                        const IndexModel& model, const Multiplier& phi) {
    if (!phi.value || !phi.lap)
        throw std::invalid_argument("check_variational: multiplier needs value and lap");
    const auto& g = *u.grid;
    auto gr = gradient(u);
    IdentityReport rep;
    const double t_grad = detail::quad(g, [&](int i, int j) {
        return -phi.value(g.r(i), g.theta(j)) *
               (std::norm(gr.du_r.at(i, j)) + std::norm(gr.du_tau.at(i, j)));
    });
    const double t_lap = detail::quad(g, [&](int i, int j) {
        return 0.5 * phi.lap(g.r(i), g.theta(j)) * std::norm(u.at(i, j));
    });
    const double t_pot = detail::quad(g, [&](int i, int j) {
        const double r = g.r(i), th = g.theta(j);
        const double n = model.eval({r * std::cos(th), r * std::sin(th)}).n;
        return phi.value(r, th) * n * std::norm(u.at(i, j));
    });
    const double t_src = detail::quad(g, [&](int i, int j) {
        return -phi.value(g.r(i), g.theta(j)) *
               std::real(std::conj(u.at(i, j)) * f.at(i, j));
    });
    rep.terms["grad"] = t_grad;
    rep.terms["lap_phi"] = t_lap;
    rep.terms["potential"] = t_pot;
    rep.terms["source"] = t_src;
    rep.lhs = t_grad + t_lap + t_pot;
    rep.rhs = t_src;
    rep.finalize();
    return rep;
}

// Flux identity:
//   eps int psi |u|^2 - Im int grad psi . grad u conj(u) = -Im int psi f conj(u).
inline IdentityReport check_flux(const ComplexField& u, const ComplexField& f, double eps,
                                 const Multiplier& psi) {
    if (!psi.value || !psi.grad_r || !psi.grad_tau)
        throw std::invalid_argument("check_flux: multiplier needs value and gradient");
    const auto& g = *u.grid;
    auto gr = gradient(u);
    IdentityReport rep;
    const double t_abs = detail::quad(g, [&](int i, int j) {
        return eps * psi.value(g.r(i), g.theta(j)) * std::norm(u.at(i, j));
    });
    const double t_flux = detail::quad(g, [&](int i, int j) {
        const double r = g.r(i), th = g.theta(j);
        const Complex gdot = psi.grad_r(r, th) * gr.du_r.at(i, j) +
                             psi.grad_tau(r, th) * gr.du_tau.at(i, j);
        return -std::imag(gdot * std::conj(u.at(i, j)));
    });
    const double t_src = detail::quad(g, [&](int i, int j) {
        return -std::imag(psi.value(g.r(i), g.theta(j)) * f.at(i, j) *
                          std::conj(u.at(i, j)));
    });
    rep.terms["absorption"] = t_abs;
    rep.terms["flux"] = t_flux;
    rep.terms["source"] = t_src;
    rep.lhs = t_abs + t_flux;
    rep.rhs = t_src;
    rep.finalize();
    return rep;
}

// Morawetz-multiplier identity with the fourth-order term rewritten through
// one integration by parts (grad lap Psi against grad |u|^2):
//   int [grad conj(u) . D2Psi . grad u] + 1/2 Re int grad(lap Psi) . grad u conj(u)
//     + 1/2 int (grad n . grad Psi) |u|^2
//   = Re int f (grad Psi . grad conj(u) + 1/2 (lap Psi) conj(u))
//     + eps Im int conj(u) grad Psi . grad u.
// Outer-boundary corrections are evaluated separately in the terms map.
inline IdentityReport check_morawetz(const ComplexField& u, const ComplexField& f,
                                     const IndexModel& model, double eps,
                                     const Multiplier& Psi) {
    if (!Psi.grad_r || !Psi.H_rr || !Psi.H_rt || !Psi.H_tt || !Psi.lap || !Psi.dlap_r ||
        !Psi.dlap_tau)
        throw std::invalid_argument("check_morawetz: multiplier needs Hessian and grad lap");
    const auto& g = *u.grid;
    auto gr = gradient(u);
    IdentityReport rep;
    const double t_hess = detail::quad(g, [&](int i, int j) {
        const double r = g.r(i), th = g.theta(j);
        const Complex ur = gr.du_r.at(i, j), ut = gr.du_tau.at(i, j);
        return Psi.H_rr(r, th) * std::norm(ur) +
               2.0 * Psi.H_rt(r, th) * std::real(std::conj(ur) * ut) +
               Psi.H_tt(r, th) * std::norm(ut);
    });
    const double t_bilap = detail::quad(g, [&](int i, int j) {
        const double r = g.r(i), th = g.theta(j);
        const Complex gdot = Psi.dlap_r(r, th) * gr.du_r.at(i, j) +
                             Psi.dlap_tau(r, th) * gr.du_tau.at(i, j);
        return 0.5 * std::real(gdot * std::conj(u.at(i, j)));
    });
    const double t_index = detail::quad(g, [&](int i, int j) {
        const double r = g.r(i), th = g.theta(j);
        const auto e = model.eval({r * std::cos(th), r * std::sin(th)});
        const double dn_r = e.grad.x * std::cos(th) + e.grad.y * std::sin(th);
        const double dn_t = -e.grad.x * std::sin(th) + e.grad.y * std::cos(th);
        return 0.5 * (dn_r * Psi.grad_r(r, th) + dn_t * Psi.grad_tau(r, th)) *
               std::norm(u.at(i, j));
    });
    const double t_src_grad = detail::quad(g, [&](int i, int j) {
        const double r = g.r(i), th = g.theta(j);
        const Complex gdotc = Psi.grad_r(r, th) * std::conj(gr.du_r.at(i, j)) +
                              Psi.grad_tau(r, th) * std::conj(gr.du_tau.at(i, j));
        return std::real(f.at(i, j) * gdotc);
    });
    const double t_src_lap = detail::quad(g, [&](int i, int j) {
        return 0.5 * Psi.lap(g.r(i), g.theta(j)) *
               std::real(f.at(i, j) * std::conj(u.at(i, j)));
    });
    const double t_absorb = eps * detail::quad(g, [&](int i, int j) {
        const double r = g.r(i), th = g.theta(j);
        const Complex gdot = Psi.grad_r(r, th) * gr.du_r.at(i, j) +
                             Psi.grad_tau(r, th) * gr.du_tau.at(i, j);
        return std::imag(std::conj(u.at(i, j)) * gdot);
    });

    double t_jump = 0.0;
    if (Psi.lap_jump != 0.0 && Psi.lap_jump_radius > 0.0 && Psi.lap_jump_radius < g.L()) {
        int ring = static_cast<int>(std::lround(Psi.lap_jump_radius / g.dr() - 0.5));
        ring = std::max(0, std::min(g.Nr() - 1, ring));
        for (int j = 0; j < g.Ntheta(); ++j)
            t_jump += 0.5 * Psi.lap_jump *
                      std::real(gr.du_r.at(ring, j) * std::conj(u.at(ring, j))) * g.r(ring) *
                      g.dtheta();
    }

    // Outer-ring surface corrections (reported, not folded into the balance).
    const int last = g.Nr() - 1;
    double bdry_grad = 0.0, bdry_mixed = 0.0;
    for (int j = 0; j < g.Ntheta(); ++j) {
        const double th = g.theta(j), R = g.L();
        const double e2 = std::norm(gr.du_r.at(last, j)) + std::norm(gr.du_tau.at(last, j));
        bdry_grad += Psi.grad_r(R, th) * e2 * R * g.dtheta();
        const Complex gdotc = Psi.grad_r(R, th) * std::conj(gr.du_r.at(last, j)) +
                              Psi.grad_tau(R, th) * std::conj(gr.du_tau.at(last, j));
        bdry_mixed += std::real(gr.du_r.at(last, j) *
                                (gdotc + 0.5 * Psi.lap(R, th) * std::conj(u.at(last, j)))) *
                      R * g.dtheta();
    }

    rep.terms["hessian"] = t_hess;
    rep.terms["bilap_via_grad"] = t_bilap;
    rep.terms["index_drift"] = t_index;
    rep.terms["source_grad"] = t_src_grad;
    rep.terms["source_lap"] = t_src_lap;
    rep.terms["absorption"] = t_absorb;
    rep.terms["lap_jump_surface"] = t_jump;
    rep.terms["res0_boundary_grad"] = bdry_grad;
    rep.terms["res0_boundary_mixed"] = bdry_mixed;
    rep.lhs = t_hess + t_bilap + t_jump + t_index;
    rep.rhs = t_src_grad + t_src_lap + t_absorb;
    rep.finalize();
    return rep;
}

struct PsiQDecomposition {
    // grad n . grad Psi_q |u|^2 pieces.
    double angular_sq = 0.0;     // q |d_w n_inf|^2 |u|^2 / r^2
    double radial_index = 0.0;   // q' n_inf d_r n |u|^2 / R
    double tangential_gap = 0.0; // q d_w n_inf (d_w n - d_w n_inf) |u|^2 / r^2
    double direct_drift = 0.0;
    // grad conj(u) . D2Psi_q . grad u pieces.
    double rr = 0.0;
    double cross = 0.0;
    double tt_curvature = 0.0;
    double tt_angular = 0.0;
    double direct_hessian = 0.0;
};

inline PsiQDecomposition psi_q_decomposition(const ComplexField& u, const IndexModel& model,
                                             const AngularProfile& profile, double R) {
    const auto& g = *u.grid;
    auto gr = gradient(u);
    auto m = Multiplier::Psi_q(R, profile);
    static const QuinticHermite ramp(1.0, 2.0, 0.0, 0.0, 0.0, 2.0, 1.0, 0.0);
    auto q0 = [](double s) { return (s <= 1.0) ? 0.0 : (s >= 2.0) ? s : ramp.eval(s); };
    auto q1 = [](double s) { return (s <= 1.0) ? 0.0 : (s >= 2.0) ? 1.0 : ramp.d1(s); };

    PsiQDecomposition out;
    for (int i = 0; i < g.Nr(); ++i)
        for (int j = 0; j < g.Ntheta(); ++j) {
            const double r = g.r(i), th = g.theta(j), w = g.weight(i, j);
            const double s = r / R;
            const auto e = model.eval({r * std::cos(th), r * std::sin(th)});
            const double dn_r = e.grad.x * std::cos(th) + e.grad.y * std::sin(th);
            const double dn_th = r * (-e.grad.x * std::sin(th) + e.grad.y * std::cos(th));
            const double N = profile.eval(th), N1 = profile.d1(th);
            const double uu = std::norm(u.at(i, j));

            out.angular_sq += w * q0(s) * N1 * N1 * uu / (r * r);
            out.radial_index += w * q1(s) * N * dn_r * uu / R;
            out.tangential_gap += w * q0(s) * N1 * (dn_th - N1) * uu / (r * r);
            out.direct_drift += w * (dn_r * m.grad_r(r, th) +
                                     (dn_th / r) * m.grad_tau(r, th)) * uu;

            const Complex ur = gr.du_r.at(i, j), ut = gr.du_tau.at(i, j);
            out.rr += w * m.H_rr(r, th) * std::norm(ur);
            out.cross += w * 2.0 * m.H_rt(r, th) * std::real(std::conj(ur) * ut);
            out.tt_curvature += w * q1(s) * N / (R * r) * std::norm(ut);
            out.tt_angular += w * q0(s) * profile.d2(th) / (r * r) * std::norm(ut);
            out.direct_hessian += w * (m.H_rr(r, th) * std::norm(ur) +
                                       2.0 * m.H_rt(r, th) * std::real(std::conj(ur) * ut) +
                                       m.H_tt(r, th) * std::norm(ut));
        }
    return out;
}

inline void dump_identity_report_json(const IdentityReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("dump_identity_report_json: cannot open " + path);
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "{\"lhs\": %.17g, \"rhs\": %.17g, \"abs_residual\": %.17g, "
                  "\"rel_residual\": %.17g, \"terms\": {",
                  rep.lhs, rep.rhs, rep.abs_residual, rep.rel_residual);
    out << buf;
    bool first = true;
    for (const auto& [name, value] : rep.terms) {
        std::snprintf(buf, sizeof(buf), "%s\"%s\": %.17g", first ? "" : ", ", name.c_str(),
                      value);
        out << buf;
        first = false;
    }
    out << "}}\n";
}

}  // namespace hlab

#endif
