#ifndef HLAB_EIKONAL_HPP
#define HLAB_EIKONAL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hlab/index_model.hpp"
#include "hlab/math_util.hpp"

namespace hlab {

struct RayState {
    double t = 0.0;
    Vec2 X{0.0, 0.0};
    Vec2 P{0.0, 0.0};
    double Phi = 0.0;
    double F = 0.0;  // (1/lambda) int_0^t X . grad n ds
};

struct CausticSuspected : std::runtime_error {
    double jacobian;
    explicit CausticSuspected(double jac)
        : std::runtime_error("ray map jacobian is not positive (caustic suspected): " +
                             std::to_string(jac)),
          jacobian(jac) {}
};

struct InversionNoConvergence : std::runtime_error {
    int iterations;
    double miss;
    InversionNoConvergence(int it, double m)
        : std::runtime_error("ray inversion did not converge after " + std::to_string(it) +
                             " iterations (miss " + std::to_string(m) + ")"),
          iterations(it), miss(m) {}
};

namespace detail {

struct RayDeriv {
    Vec2 dX, dP;
    double dPhi, dF;
};

inline RayDeriv ray_rhs(const IndexModel& model, double lambda, const RayState& s) {
    const auto e = model.eval(s.X);
    RayDeriv d;
    d.dX = {2.0 * s.P.x, 2.0 * s.P.y};
    d.dP = {e.grad.x / lambda, e.grad.y / lambda};
    d.dPhi = 2.0 * e.n / lambda;
    d.dF = (s.X.x * e.grad.x + s.X.y * e.grad.y) / lambda;
    return d;
}

inline RayState ray_step(const IndexModel& model, double lambda, const RayState& s, double dt) {
    auto advance = [](const RayState& base, const RayDeriv& d, double h) {
        RayState out = base;
        out.t = base.t + h;
        out.X = {base.X.x + h * d.dX.x, base.X.y + h * d.dX.y};
        out.P = {base.P.x + h * d.dP.x, base.P.y + h * d.dP.y};
        out.Phi = base.Phi + h * d.dPhi;
        out.F = base.F + h * d.dF;
        return out;
    };
    const RayDeriv k1 = ray_rhs(model, lambda, s);
    const RayDeriv k2 = ray_rhs(model, lambda, advance(s, k1, 0.5 * dt));
    const RayDeriv k3 = ray_rhs(model, lambda, advance(s, k2, 0.5 * dt));
    const RayDeriv k4 = ray_rhs(model, lambda, advance(s, k3, dt));
    RayDeriv k;
    k.dX = {(k1.dX.x + 2 * k2.dX.x + 2 * k3.dX.x + k4.dX.x) / 6.0,
            (k1.dX.y + 2 * k2.dX.y + 2 * k3.dX.y + k4.dX.y) / 6.0};
    k.dP = {(k1.dP.x + 2 * k2.dP.x + 2 * k3.dP.x + k4.dP.x) / 6.0,
            (k1.dP.y + 2 * k2.dP.y + 2 * k3.dP.y + k4.dP.y) / 6.0};
    k.dPhi = (k1.dPhi + 2 * k2.dPhi + 2 * k3.dPhi + k4.dPhi) / 6.0;
    k.dF = (k1.dF + 2 * k2.dF + 2 * k3.dF + k4.dF) / 6.0;
    return advance(s, k, dt);
}

// One macro step; inside the mollified core the index is only C^2, so the
// step is deterministically subdivided to keep the conservation drift at the
// 1e-10 level.
inline RayState advance_state(const IndexModel& model, double lambda, const RayState& s,
                              double dt) {
    const double guard = 2.0 * model.r_moll();
    const double r_now = std::hypot(s.X.x, s.X.y);
    const double speed = 2.0 * std::hypot(s.P.x, s.P.y);
    if (guard > 0.0 && r_now - speed * dt < guard) {
        const int sub = 100;
        RayState cur = s;
        for (int k = 0; k < sub; ++k) cur = detail::ray_step(model, lambda, cur, dt / sub);
        return cur;
    }
    return detail::ray_step(model, lambda, s, dt);
}

}  // namespace detail

inline RayState launch_state(const IndexModel& model, double lambda, double alpha) {
    const double n0 = model.n_origin();
    if (!(n0 > 0.0)) throw std::invalid_argument("launch_state: n(0) must be positive");
    RayState s;
    const double p0 = std::sqrt(n0 / lambda);
    s.P = {p0 * std::cos(alpha), p0 * std::sin(alpha)};
    return s;
}

// Classical RK4 over the bicharacteristic system, sampled every step.
inline std::vector<RayState> integrate_ray(const IndexModel& model, double lambda, Vec2 q,
                                           double t_max, double dt,
                                           double safety_radius = 1e4) {
    if (lambda <= 0.0) throw std::invalid_argument("integrate_ray: lambda must be positive");
    if (dt <= 0.0) throw std::invalid_argument("integrate_ray: dt must be positive");
    const double qn = std::hypot(q.x, q.y);
    if (!(qn > 0.0)) throw std::invalid_argument("integrate_ray: zero launch direction");
    RayState s = launch_state(model, lambda, std::atan2(q.y, q.x));
    std::vector<RayState> out;
    const int steps = static_cast<int>(std::ceil(t_max / dt - 1e-12));
    out.reserve(steps + 1);
    out.push_back(s);
    for (int k = 0; k < steps; ++k) {
        s = detail::advance_state(model, lambda, s, dt);
        if (std::hypot(s.X.x, s.X.y) > safety_radius)
            throw std::runtime_error("integrate_ray: trajectory left the safety radius");
        out.push_back(s);
    }
    return out;
}

// Terminal state only; used by the inversion Newton loop.
inline RayState integrate_to(const IndexModel& model, double lambda, double alpha, double t,
                             double dt) {
    RayState s = launch_state(model, lambda, alpha);
    if (t <= 0.0) return s;
    const int steps = static_cast<int>(std::floor(t / dt));
    for (int k = 0; k < steps; ++k) s = detail::advance_state(model, lambda, s, dt);
    const double rem = t - steps * dt;
    if (rem > 1e-15) s = detail::advance_state(model, lambda, s, rem);
    return s;
}

struct RayBundle {
    const IndexModel* model = nullptr;
    double lambda = 0.0;
    int Nq = 720;
    double dt = 1e-3;
    double t_max = 20.0;
    int stride = 20;  // seed-sample subsampling
    std::vector<std::vector<RayState>> samples;  // per launch angle, strided

    double alpha(int k) const { return 2.0 * pi * k / Nq; }
};

inline RayBundle build_bundle(const IndexModel& model, double lambda, double t_max = 20.0,
                              int Nq = 720, double dt = 1e-3) {
    RayBundle b;
    b.model = &model;
    b.lambda = lambda;
    b.Nq = Nq;
    b.dt = dt;
    b.t_max = t_max;
    b.samples.resize(Nq);
    for (int k = 0; k < Nq; ++k) {
        auto traj = integrate_ray(model, lambda, {std::cos(b.alpha(k)), std::sin(b.alpha(k))},
                                  t_max, dt);
        auto& dst = b.samples[k];
        for (std::size_t m = 0; m < traj.size(); m += b.stride) dst.push_back(traj[m]);
        if ((traj.size() - 1) % b.stride != 0) dst.push_back(traj.back());
    }
    return b;
}

struct QueryResult {
    double phi = 0.0;
    Vec2 gphi{0.0, 0.0};
    double t = 0.0;
    double alpha = 0.0;
    double jacobian_det = 0.0;
    double F = 0.0;
};

class EikonalField {
public:
    explicit EikonalField(RayBundle bundle, double tol = 1e-11)
        : bundle_(std::move(bundle)), tol_(tol) {}

    const RayBundle& bundle() const { return bundle_; }
    double tol() const { return tol_; }

    // Newton on (t, alpha) -> X(t; q(alpha)) - x, seeded from the nearest
    // bundle sample; the alpha derivative comes from a central-difference
    // ray pair.
    QueryResult query(Vec2 x) const {
        const auto& m = *bundle_.model;
        const double r = std::hypot(x.x, x.y);
        if (r <= m.r_moll())
            throw std::invalid_argument("EikonalField::query: point inside the mollified core");

        double t = 0.0, alpha = 0.0, best = std::numeric_limits<double>::infinity();
        for (int k = 0; k < bundle_.Nq; ++k)
            for (const auto& s : bundle_.samples[k]) {
                const double d = std::hypot(s.X.x - x.x, s.X.y - x.y);
                if (d < best) {
                    best = d;
                    t = s.t;
                    alpha = bundle_.alpha(k);
                }
            }

        const double dal = 1e-6;
        RayState s{};
        double jac = 0.0;
        for (int it = 0; it < 50; ++it) {
            s = integrate_to(m, bundle_.lambda, alpha, t, bundle_.dt);
            const RayState sp = integrate_to(m, bundle_.lambda, alpha + dal, t, bundle_.dt);
            const RayState sm = integrate_to(m, bundle_.lambda, alpha - dal, t, bundle_.dt);
            const Vec2 dXdt{2.0 * s.P.x, 2.0 * s.P.y};
            const Vec2 dXda{(sp.X.x - sm.X.x) / (2.0 * dal), (sp.X.y - sm.X.y) / (2.0 * dal)};
            jac = dXdt.x * dXda.y - dXdt.y * dXda.x;
            if (!(jac > 0.0)) throw CausticSuspected(jac);
            const Vec2 res{s.X.x - x.x, s.X.y - x.y};
            const double miss = std::hypot(res.x, res.y);
            if (miss <= tol_ * (1.0 + r)) {
                QueryResult out;
                out.phi = s.Phi;
                out.gphi = s.P;
                out.t = t;
                out.alpha = alpha;
                out.jacobian_det = jac;
                out.F = s.F;
                return out;
            }
            const double ddt = (dXda.y * res.x - dXda.x * res.y) / jac;
            const double dda = (-dXdt.y * res.x + dXdt.x * res.y) / jac;
            t -= ddt;
            alpha -= dda;
            if (t < 0.0) t = 0.0;
        }
        const RayState fin = integrate_to(m, bundle_.lambda, alpha, t, bundle_.dt);
        throw InversionNoConvergence(50, std::hypot(fin.X.x - x.x, fin.X.y - x.y));
    }

private:
    RayBundle bundle_;
    double tol_;
};

struct PhasePoint {
    Vec2 x;
    bool ok = false;
    std::string error;
    QueryResult q;
};

// Per-point phase evaluation; failures are flagged, not fatal.
inline std::vector<PhasePoint> phase_field(const EikonalField& field,
                                           const std::vector<Vec2>& points) {
    std::vector<PhasePoint> out;
    out.reserve(points.size());
    for (const auto& x : points) {
        PhasePoint p;
        p.x = x;
        try {
            p.q = field.query(x);
            p.ok = true;
        } catch (const std::exception& e) {
            p.error = e.what();
        }
        out.push_back(p);
    }
    return out;
}

// Circulation around a closed polygonal loop divided by its length.
inline double curl_circulation(const std::function<Vec2(Vec2)>& P,
                               const std::vector<Vec2>& loop) {
    if (loop.size() < 3) throw std::invalid_argument("curl_circulation: need >= 3 loop points");
    double circ = 0.0, len = 0.0;
    for (std::size_t k = 0; k < loop.size(); ++k) {
        const Vec2 a = loop[k], b = loop[(k + 1) % loop.size()];
        const Vec2 mid{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
        const Vec2 d{b.x - a.x, b.y - a.y};
        const Vec2 p = P(mid);
        circ += p.x * d.x + p.y * d.y;
        len += std::hypot(d.x, d.y);
    }
    return circ / len;
}

inline double curl_check(const EikonalField& field, const std::vector<Vec2>& loop) {
    return curl_circulation([&](Vec2 x) { return field.query(x).gphi; }, loop);
}

struct HJReport {
    double g_min = 0.0, g_max = 0.0;
    double sup_xDg = 0.0;        // sup |x| |Dg|
    double sup_r1d_drg = 0.0;    // sup r^{1+delta} |d_r g|
    double delta_used = 0.0;
    bool delta_fitted = false;
    std::vector<double> theta;       // angular lattice
    std::vector<double> g_infinity;  // g at the largest radius
    double hjlim_residual = 0.0;     // sup |g8^2 + |d_w g8|^2 - n8/lambda|
    double ratio_c1 = 0.0, ratio_c2 = 0.0;
    std::vector<std::array<double, 3>> F_table;  // (t, alpha, F)
};

// Lattice diagnostics for g = phi / |x|.  The eikonal here is
// |grad phi|^2 = n/lambda, so the angular limit equation is checked against
// the normalized profile n_inf(theta)/lambda.
inline HJReport hj_report(const EikonalField& field, double delta,
                          const std::vector<double>& radii, int theta_samples) {
    if (radii.empty()) throw std::invalid_argument("hj_report: radii empty");
    if (theta_samples < 8) throw std::invalid_argument("hj_report: need >= 8 theta samples");
    const auto& m = *field.bundle().model;
    const double lambda = field.bundle().lambda;

    HJReport rep;
    rep.delta_used = delta;
    rep.g_min = std::numeric_limits<double>::infinity();
    rep.g_max = -std::numeric_limits<double>::infinity();

    const double R_big = *std::max_element(radii.begin(), radii.end());
    for (double R : radii) {
        for (int k = 0; k < theta_samples; ++k) {
            const double th = 2.0 * pi * k / theta_samples;
            const Vec2 x{R * std::cos(th), R * std::sin(th)};
            const auto q = field.query(x);
            const double g = q.phi / R;
            rep.g_min = std::min(rep.g_min, g);
            rep.g_max = std::max(rep.g_max, g);
            // Dg = grad phi / r - phi x / r^3.
            const Vec2 Dg{q.gphi.x / R - q.phi * x.x / (R * R * R),
                          q.gphi.y / R - q.phi * x.y / (R * R * R)};
            rep.sup_xDg = std::max(rep.sup_xDg, R * std::hypot(Dg.x, Dg.y));
            const double drg = (q.gphi.x * x.x + q.gphi.y * x.y) / R / R - g / R;
            rep.sup_r1d_drg = std::max(rep.sup_r1d_drg, std::pow(R, 1.0 + delta) * std::abs(drg));
            if (R == R_big) {
                rep.theta.push_back(th);
                rep.g_infinity.push_back(g);
                rep.F_table.push_back({q.t, q.alpha, q.F});
            }
        }
    }

    // Angular limit equation and the derivative-ratio bounds.
    const auto& prof = m.limit();
    const int M = theta_samples;
    const double dth = 2.0 * pi / M;
    double c1 = std::numeric_limits<double>::infinity(), c2 = 0.0;
    bool any_ratio = false;
    for (int k = 0; k < M; ++k) {
        const double gk = rep.g_infinity[k];
        const double dg = (rep.g_infinity[(k + 1) % M] - rep.g_infinity[(k - 1 + M) % M]) /
                          (2.0 * dth);
        const double ninf = prof ? prof->eval(rep.theta[k]) / lambda : m.n_origin() / lambda;
        rep.hjlim_residual = std::max(rep.hjlim_residual,
                                      std::abs(gk * gk + dg * dg - ninf));
        if (prof && std::abs(dg) > 1e-8) {
            const double ratio = std::abs(prof->d1(rep.theta[k]) / lambda) / std::abs(dg);
            c1 = std::min(c1, ratio);
            c2 = std::max(c2, ratio);
            any_ratio = true;
        }
    }
    if (any_ratio) {
        rep.ratio_c1 = c1;
        rep.ratio_c2 = c2;
    }
    return rep;
}

inline void dump_trajectory_csv(const std::vector<RayState>& traj, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("dump_trajectory_csv: cannot open " + path);
    out << "t,x1,x2,p1,p2,phi\n";
    char buf[256];
    for (const auto& s : traj) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.t, s.X.x,
                      s.X.y, s.P.x, s.P.y, s.Phi);
        out << buf;
    }
}

// Batch query: input CSV `x1,x2` (header optional), output CSV with the
// documented eight columns.  Failed points emit nan fields.
inline void query_batch_csv(const EikonalField& field, const std::string& in_path,
                            const std::string& out_path) {
    std::ifstream in(in_path);
    if (!in) throw std::runtime_error("query_batch_csv: cannot open " + in_path);
    std::vector<Vec2> pts;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.find("x1") != std::string::npos) continue;
        std::istringstream ss(line);
        Vec2 p;
        char comma;
        if (ss >> p.x >> comma >> p.y) pts.push_back(p);
    }
    auto res = phase_field(field, pts);
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("query_batch_csv: cannot open " + out_path);
    out << "x1,x2,phi,gphi1,gphi2,t,alpha,jac\n";
    char buf[512];
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& p : res) {
        if (p.ok)
            std::snprintf(buf, sizeof(buf),
                          "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", p.x.x, p.x.y,
                          p.q.phi, p.q.gphi.x, p.q.gphi.y, p.q.t, p.q.alpha, p.q.jacobian_det);
        else
            std::snprintf(buf, sizeof(buf),
                          "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", p.x.x, p.x.y,
                          nan, nan, nan, nan, nan, nan);
        out << buf;
    }
}

}  // namespace hlab

#endif
