#ifndef HLAB_EXPERIMENTS_HPP
#define HLAB_EXPERIMENTS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hlab/eikonal.hpp"
#include "hlab/helmholtz.hpp"
#include "hlab/identities.hpp"
#include "hlab/index_model.hpp"
#include "hlab/norms.hpp"
#include "hlab/polar_grid.hpp"
#include "hlab/waveguide.hpp"

namespace hlab {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Config plumbing
// ---------------------------------------------------------------------------

inline Json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    Json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::invalid_argument(std::string("config: parse error: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
    return j;
}

// key=value with value parsed as JSON when possible, else taken as a string.
inline void apply_override(Json& cfg, const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
        throw std::invalid_argument("override must look like key=value: " + kv);
    const std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
    Json parsed = Json::parse(val, nullptr, false);
    if (parsed.is_discarded()) parsed = val;
    cfg[key] = parsed;
}

inline std::uint64_t config_hash(const Json& cfg) {
    const std::string s = cfg.dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

namespace exp_detail {

template <class T>
T get_or(const Json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    return j.at(key).get<T>();
}

inline Json sub(const Json& j, const std::string& key) {
    return j.contains(key) ? j.at(key) : Json::object();
}

inline AngularProfile parse_profile(const Json& j, double fallback_c0) {
    if (j.is_null() || j.empty()) return AngularProfile(fallback_c0);
    const double c0 = get_or(j, "c0", fallback_c0);
    auto a = get_or(j, "cos", std::vector<double>{});
    auto b = get_or(j, "sin", std::vector<double>{});
    return AngularProfile(c0, a, b);
}

}  // namespace exp_detail

inline IndexModel make_model(const Json& m) {
    using exp_detail::get_or;
    const std::string id = get_or(m, "id", std::string("constant"));
    if (id == "constant") return make_constant(get_or(m, "lambda", 1.0));
    if (id == "saito_tilt")
        return make_saito_tilt(get_or(m, "lambda", 10.0), get_or(m, "r_moll", 0.1));
    if (id == "angular_limit") {
        const double lambda = get_or(m, "lambda", 1.0);
        auto profile = exp_detail::parse_profile(exp_detail::sub(m, "profile"), lambda);
        return make_angular_limit(lambda, profile, get_or(m, "gamma", 0.0),
                                  get_or(m, "delta", 1.0), get_or(m, "r_moll", 0.1));
    }
    if (id == "waveguide") return make_waveguide_index(get_or(m, "lw", 0.3));
    throw std::invalid_argument("model: unknown id '" + id + "'");
}

inline std::shared_ptr<const PolarGrid> make_grid(const Json& g) {
    using exp_detail::get_or;
    const int Nr = get_or(g, "Nr", 96);
    const int Nth = get_or(g, "Ntheta", 64);
    const double L = get_or(g, "L", 12.0);
    if (Nr < 8 || Nth < 8) throw std::invalid_argument("grid: Nr and Ntheta must be >= 8");
    if (!(L > 0.0)) throw std::invalid_argument("grid: L must be positive");
    return std::make_shared<PolarGrid>(Nr, Nth, L);
}

// Ring and gaussian sources are scaled to the requested L^2 amplitude.
inline ComplexField make_source(const Json& s, std::shared_ptr<const PolarGrid> grid) {
    using exp_detail::get_or;
    const std::string kind = get_or(s, "kind", std::string("ring"));
    ComplexField f(grid, FieldRole::source);
    double amplitude = get_or(s, "amplitude", 1.0);
    if (amplitude < 0.0) throw std::invalid_argument("source: amplitude must be >= 0");
    if (kind == "ring") {
        const double r0 = get_or(s, "r0", 3.0);
        const double w = get_or(s, "width", 0.5);
        if (!(w > 0.0)) throw std::invalid_argument("source: ring width must be positive");
        f = sample_field(grid, [r0, w](double r, double) {
            return Complex(std::exp(-0.5 * (r - r0) * (r - r0) / (w * w)), 0.0);
        }, FieldRole::source);
    } else if (kind == "gaussian") {
        auto c = get_or(s, "center", std::vector<double>{3.0, 0.0});
        if (c.size() != 2) throw std::invalid_argument("source: center must have 2 entries");
        const double sg = get_or(s, "sigma", 0.5);
        if (!(sg > 0.0)) throw std::invalid_argument("source: sigma must be positive");
        f = sample_field(grid, [&](double r, double th) {
            const double dx = r * std::cos(th) - c[0], dy = r * std::sin(th) - c[1];
            return Complex(std::exp(-0.5 * (dx * dx + dy * dy) / (sg * sg)), 0.0);
        }, FieldRole::source);
    } else if (kind == "file") {
        const std::string path = get_or(s, "path", std::string());
        std::ifstream in(path);
        if (!in) throw std::invalid_argument("source: cannot open " + path);
        std::string line;
        std::getline(in, line);  // header r,theta,re,im
        std::size_t k = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            double r, th, re, im;
            if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &r, &th, &re, &im) != 4)
                throw std::invalid_argument("source: malformed row in " + path);
            if (k >= f.values.size())
                throw std::invalid_argument("source: too many rows for the grid in " + path);
            f.values[k++] = Complex(re, im);
        }
        if (k != f.values.size())
            throw std::invalid_argument("source: row count does not match the grid in " + path);
        return f;
    } else {
        throw std::invalid_argument("source: unknown kind '" + kind + "'");
    }
    double l2 = 0.0;
    for (int i = 0; i < grid->Nr(); ++i)
        for (int j = 0; j < grid->Ntheta(); ++j) l2 += grid->weight(i, j) * std::norm(f.at(i, j));
    l2 = std::sqrt(l2);
    const double scale = (l2 > 0.0) ? amplitude / l2 : 0.0;
    for (auto& v : f.values) v *= scale;
    return f;
}

namespace exp_detail {

struct Workspace {
    std::filesystem::path dir;
    std::vector<std::filesystem::path> written;

    std::string file(const std::string& name) {
        std::filesystem::create_directories(dir);
        auto p = dir / name;
        written.push_back(p);
        return p.string();
    }

    void discard_all() {
        std::error_code ec;
        for (const auto& p : written) std::filesystem::remove(p, ec);
    }
};

inline void write_json(Workspace& ws, const std::string& name, const Json& j) {
    std::ofstream out(ws.file(name));
    out << j.dump(2) << "\n";
}

inline Json identity_to_json(const IdentityReport& rep) {
    Json j;
    j["lhs"] = rep.lhs;
    j["rhs"] = rep.rhs;
    j["abs_residual"] = rep.abs_residual;
    j["rel_residual"] = rep.rel_residual;
    Json t = Json::object();
    for (const auto& [k, v] : rep.terms) t[k] = v;
    j["terms"] = t;
    return j;
}

inline Json hj_to_json(const HJReport& rep) {
    Json j;
    j["g_min"] = rep.g_min;
    j["g_max"] = rep.g_max;
    j["sup_xDg"] = rep.sup_xDg;
    j["sup_r1d_drg"] = rep.sup_r1d_drg;
    j["hjlim_residual"] = rep.hjlim_residual;
    j["ratio_c1"] = rep.ratio_c1;
    j["ratio_c2"] = rep.ratio_c2;
    return j;
}

inline Json norm_to_json(const NormReport& rep) {
    Json j;
    j["triple_u"] = rep.triple_u;
    j["triple_nu"] = rep.triple_nu;
    j["tangential_energy"] = rep.tangential_energy;
    j["M2"] = rep.M2;
    j["besov_f"] = rep.besov_f;
    j["concentration"] = rep.concentration;
    j["sommerfeld"] = rep.sommerfeld;
    j["weighted_f"] = rep.weighted_f;
    j["R0"] = rep.R0;
    j["a"] = rep.a;
    return j;
}

inline BoundaryCondition make_bc(const Json& cfg, const IndexModel& model) {
    const std::string kind = get_or(cfg, "bc", std::string("outgoing"));
    if (kind == "dirichlet") return BoundaryCondition::dirichlet0();
    if (kind == "outgoing") {
        if (!model.limit())
            throw std::invalid_argument("bc: outgoing condition needs a model with a limit profile");
        return BoundaryCondition::outgoing(*model.limit());
    }
    throw std::invalid_argument("bc: unknown kind '" + kind + "'");
}

inline SolveOptions make_solver(const Json& cfg) {
    SolveOptions opts;
    const std::string m = get_or(cfg, "solver", std::string("direct"));
    if (m == "direct") opts.method = SolveMethod::direct;
    else if (m == "bicgstab") opts.method = SolveMethod::bicgstab;
    else throw std::invalid_argument("solver: unknown method '" + m + "'");
    opts.tol = get_or(cfg, "solver_tol", 1e-12);
    opts.max_iter = get_or(cfg, "solver_max_iter", 2000);
    return opts;
}

inline std::vector<std::string> absorption_warnings(const Json& cfg, double epsilon, double L) {
    std::vector<std::string> w;
    const std::string kind = get_or(cfg, "bc", std::string("outgoing"));
    if (kind == "dirichlet" && epsilon * L < 4.0)
        w.push_back("absorption-dominated run has epsilon*L < 4; enlarge L or use bc=outgoing");
    return w;
}

struct SolveBundle {
    std::shared_ptr<const PolarGrid> grid;
    IndexModel model;
    double epsilon;
    ComplexField f;
    SolveResult sol;
    std::vector<std::string> warnings;
};

inline SolveBundle run_solve(const Json& cfg, double epsilon) {
    SolveBundle b{nullptr, make_model(sub(cfg, "model")), epsilon, {}, {}, {}};
    b.grid = make_grid(sub(cfg, "grid"));
    b.f = make_source(sub(cfg, "source"), b.grid);
    auto bc = make_bc(cfg, b.model);
    b.warnings = absorption_warnings(cfg, epsilon, b.grid->L());
    auto sys = assemble(b.grid, b.model, epsilon, bc);
    b.sol = solve(sys, b.f, make_solver(cfg));
    return b;
}

inline std::vector<double> angular_critical_set(const AngularProfile& profile) {
    // Sign changes of N' on a fine lattice, polished by bisection.
    std::vector<double> out;
    const int N = 2048;
    double prev = profile.d1(0.0);
    for (int k = 1; k <= N; ++k) {
        const double th = 2.0 * pi * k / N;
        const double cur = profile.d1(th);
        if (prev == 0.0) out.push_back(2.0 * pi * (k - 1) / N);
        else if (prev * cur < 0.0) {
            double lo = 2.0 * pi * (k - 1) / N, hi = th;
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (profile.d1(lo) * profile.d1(mid) <= 0.0) hi = mid;
                else lo = mid;
            }
            out.push_back(0.5 * (lo + hi));
        }
        prev = cur;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Experiment runners: each fills report/CSV artifacts in the workspace.
// ---------------------------------------------------------------------------

inline void run_solve_experiment(const Json& cfg, Workspace& ws, Json& report) {
    auto b = run_solve(cfg, get_or(cfg, "epsilon", 0.01));
    dump_field_csv(b.sol.u, ws.file("u.csv"));
    report["residual_norm"] = b.sol.residual_norm;
    report["iterations"] = b.sol.iterations;
    report["epsilon"] = b.epsilon;
    report["warnings"] = b.warnings;
}

inline void run_norms_experiment(const Json& cfg, Workspace& ws, Json& report) {
    auto b = run_solve(cfg, get_or(cfg, "epsilon", 0.01));
    const Json np = sub(cfg, "norms");
    const double R0 = get_or(np, "R0", default_R0(b.model));
    const double a = get_or(np, "a", 1.1);
    NormReport rep = morawetz_report(b.sol.u, b.model, R0);
    rep.a = a;
    rep.besov_f = besov_norm(b.f, R0);
    rep.weighted_f = weighted_source_norm(b.f, a);
    const auto& profile = b.model.limit();
    if (profile) {
        rep.sommerfeld = sommerfeld_residual(
            b.sol.u, [&](double, double th) { return std::sqrt(profile->eval(th)); });
        if (!profile->is_constant())
            rep.concentration = concentration_integral(b.sol.u, *profile, 0.5 * b.grid->L());
        std::vector<double> radii = get_or(np, "radii", std::vector<double>{
            0.4 * b.grid->L(), 0.6 * b.grid->L(), 0.8 * b.grid->L()});
        rep.flux_pairs = flux_report(b.sol.u, b.f, b.model, *profile, radii);
        dump_flux_csv(rep.flux_pairs, ws.file("flux.csv"));
    }
    dump_norm_report_json(rep, ws.file("norms.json"));
    report["norms"] = norm_to_json(rep);
    report["warnings"] = b.warnings;
}

inline void run_rays_experiment(const Json& cfg, Workspace& ws, Json& report) {
    auto model = make_model(sub(cfg, "model"));
    const Json rp = sub(cfg, "rays");
    const double lambda = get_or(rp, "lambda", model.lambda());
    const double t_max = get_or(rp, "t_max", 20.0);
    const int Nq = get_or(rp, "Nq", 720);
    const double dt = get_or(rp, "dt", 1e-3);
    const double delta = get_or(rp, "delta", 1.0);
    auto radii = get_or(rp, "radii", std::vector<double>{5.0, 10.0});
    EikonalField field(build_bundle(model, lambda, t_max, Nq, dt));

    std::vector<Vec2> pts;
    const int Na = get_or(rp, "angles", 16);
    for (double R : radii)
        for (int k = 0; k < Na; ++k)
            pts.push_back({R * std::cos(2.0 * pi * k / Na), R * std::sin(2.0 * pi * k / Na)});
    auto rows = phase_field(field, pts);
    {
        std::ofstream out(ws.file("phase_table.csv"));
        out << "x1,x2,phi,gphi1,gphi2,t,alpha,jac\n";
        char buf[320];
        for (const auto& p : rows) {
            if (p.ok)
                std::snprintf(buf, sizeof(buf),
                              "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", p.x.x, p.x.y,
                              p.q.phi, p.q.gphi.x, p.q.gphi.y, p.q.t, p.q.alpha,
                              p.q.jacobian_det);
            else
                std::snprintf(buf, sizeof(buf), "%.17g,%.17g,nan,nan,nan,nan,nan,nan\n", p.x.x,
                              p.x.y);
            out << buf;
        }
    }
    auto hj = hj_report(field, delta, radii, get_or(rp, "theta_samples", 64));
    report["hj"] = hj_to_json(hj);
    report["lambda"] = lambda;
}

inline void run_identities_experiment(const Json& cfg, Workspace& ws, Json& report) {
    const double eps = get_or(cfg, "epsilon", 0.1);
    auto b = run_solve(cfg, eps);
    auto one_psi = Multiplier::scalar_psi([](double, double) { return 1.0; },
                                          [](double, double) { return 0.0; },
                                          [](double, double) { return 0.0; });
    auto phi = Multiplier::scalar_phi(
        [](double r, double) { return std::exp(-r * r); },
        [](double r, double) { return std::exp(-r * r) * (4.0 * r * r - 4.0); });

    const Json ip = sub(cfg, "identities");
    const std::string mult = get_or(ip, "multiplier", std::string("quadratic"));
    const double R = get_or(ip, "R", 0.5 * b.grid->L());
    Multiplier Psi = Multiplier::Psi_half_square();
    if (mult == "kinked") Psi = Multiplier::Psi_kinked(R);
    else if (mult == "psi_q") {
        AngularProfile prof = b.model.limit() ? *b.model.limit()
                                              : AngularProfile(b.model.lambda());
        Psi = Multiplier::Psi_q(R, prof);
    } else if (mult != "quadratic")
        throw std::invalid_argument("identities: unknown multiplier '" + mult + "'");

    report["flux"] = identity_to_json(check_flux(b.sol.u, b.f, eps, one_psi));
    report["variational"] = identity_to_json(check_variational(b.sol.u, b.f, b.model, phi));
    report["morawetz"] = identity_to_json(check_morawetz(b.sol.u, b.f, b.model, eps, Psi));
    report["multiplier"] = mult;
    report["warnings"] = b.warnings;
    write_json(ws, "identities.json", report);
}

inline void run_waveguide_experiment(const Json& cfg, Workspace& ws, Json& report) {
    const Json wp = sub(cfg, "waveguide");
    WaveguideParams p;
    p.lambda = get_or(wp, "lambda", get_or(cfg, "lambda", 0.3));
    p.y_max = get_or(wp, "y_max", 40.0);
    p.x_max = get_or(wp, "x_max", 0.0);
    p.pts_per_panel = get_or(wp, "pts_per_panel", 16);
    p.validate();
    auto eps_list = get_or(cfg, "eps_list",
                           std::vector<double>{1e-1, 3e-2, 1e-2, 3e-3, 1e-3});
    auto table = waveguide_table(p, eps_list, get_or(wp, "R_max", 64.0));
    dump_waveguide_csv(table, ws.file("waveguide.csv"));
    dump_waveguide_fit_json(table, ws.file("fit.json"));
    report["slope"] = table.fit.slope;
    report["intercept"] = table.fit.intercept;
    report["r2"] = table.fit.r2;
    report["stability_ratio"] = stability_ratio(p, eps_list, get_or(wp, "R_max", 64.0));
    report["conjugated_energy"] = conjugated_energy(p).value;
}

inline void run_concentration_experiment(const Json& cfg, Workspace& ws, Json& report) {
    auto model = make_model(sub(cfg, "model"));
    if (!model.limit() || model.limit()->is_constant())
        throw std::invalid_argument("concentration: model profile must be non-constant");
    auto L_list = get_or(cfg, "L_list", std::vector<double>{20.0, 30.0, 40.0});
    if (L_list.size() < 3)
        throw std::invalid_argument("concentration: need at least 3 domain sizes");
    for (std::size_t i = 1; i < L_list.size(); ++i)
        if (!(L_list[i] > L_list[i - 1]))
            throw std::invalid_argument("concentration: L_list must be increasing");
    const auto& profile = *model.limit();
    auto critical = angular_critical_set(profile);
    const double eps = get_or(cfg, "epsilon", 0.0);

    std::ofstream csv(ws.file("concentration.csv"));
    csv << "L,concentration,annulus_mass,ratio,critical_fraction,flux_lhs,flux_rhs\n";
    Json rows = Json::array();
    char buf[320];
    for (double L : L_list) {
        Json gcfg = sub(cfg, "grid");
        gcfg["L"] = L;
        auto grid = make_grid(gcfg);
        auto f = make_source(sub(cfg, "source"), grid);
        auto sys = assemble(grid, model, eps, BoundaryCondition::outgoing(profile));
        auto sol = solve(sys, f, make_solver(cfg));

        const double conc = concentration_integral(sol.u, profile, 0.5 * L);
        double mass = 0.0;
        for (int i = 0; i < grid->Nr(); ++i) {
            if (grid->r(i) < 0.5 * L) continue;
            for (int j = 0; j < grid->Ntheta(); ++j)
                mass += grid->weight(i, j) * std::norm(sol.u.at(i, j)) / grid->r(i);
        }
        const double ratio = (mass > 0.0) ? conc / mass : 0.0;

        // Angular histogram on the outermost interior ring.
        const int shell = grid->Nr() - 2;
        double total = 0.0, near_critical = 0.0;
        for (int j = 0; j < grid->Ntheta(); ++j) {
            const double e = std::norm(sol.u.at(shell, j));
            total += e;
            for (double th0 : critical)
                if (std::abs(std::remainder(grid->theta(j) - th0, 2.0 * pi)) <=
                    pi * 15.0 / 180.0) {
                    near_critical += e;
                    break;
                }
        }
        const double frac = (total > 0.0) ? near_critical / total : 0.0;
        auto flux = flux_report(sol.u, f, model, profile, {0.8 * L});
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", L, conc,
                      mass, ratio, frac, flux[0].volume_lhs, flux[0].volume_rhs);
        csv << buf;
        Json row;
        row["L"] = L;
        row["concentration"] = conc;
        row["annulus_mass"] = mass;
        row["ratio"] = ratio;
        row["critical_fraction"] = frac;
        row["flux_lhs"] = flux[0].volume_lhs;
        row["flux_rhs"] = flux[0].volume_rhs;
        rows.push_back(row);
    }
    report["rows"] = rows;
    Json crit = Json::array();
    for (double c : critical) crit.push_back(c);
    report["critical_angles"] = crit;
}

inline void run_sommerfeld_experiment(const Json& cfg, Workspace& ws, Json& report) {
    auto b = run_solve(cfg, get_or(cfg, "epsilon", 0.01));
    const auto& g = *b.grid;
    const auto& profile = *b.model.limit();

    // Weighted gradient energy used to normalize every residual.
    auto gr = gradient(b.sol.u);
    double energy = 0.0;
    for (int i = 0; i < g.Nr(); ++i)
        for (int j = 0; j < g.Ntheta(); ++j)
            energy += g.weight(i, j) / (1.0 + g.r(i)) *
                      (std::norm(gr.du_r.at(i, j)) + std::norm(gr.du_tau.at(i, j)));
    if (energy <= 0.0) energy = 1.0;

    auto radial_s = [&](auto nfun) {
        return sommerfeld_residual(b.sol.u, nfun, SommerfeldWeight::inv_one_plus_r);
    };
    auto n_at = [&](double r, double th) {
        return b.model.eval({r * std::cos(th), r * std::sin(th)}).n;
    };
    const double r_n = radial_s([&](double r, double th) { return std::sqrt(n_at(r, th)); });
    const double r_ninf =
        radial_s([&](double, double th) { return std::sqrt(profile.eval(th)); });
    const double r_control =
        radial_s([&](double r, double th) { return -std::sqrt(n_at(r, th)); });

    // Eikonal candidate sqrt(lambda) grad phi; nodes the ray map cannot reach
    // (inside the mollified core) fall back to the radial sqrt(n) phase.
    const Json rp = sub(cfg, "rays");
    const double lambda = get_or(rp, "lambda", b.model.lambda());
    EikonalField field(build_bundle(b.model, lambda, get_or(rp, "t_max", 20.0),
                                    get_or(rp, "Nq", 720), get_or(rp, "dt", 1e-3)));
    ComplexField Gx(b.grid), Gy(b.grid);
    double bridging = 0.0;
    const double sl = std::sqrt(lambda);
    for (int i = 0; i < g.Nr(); ++i)
        for (int j = 0; j < g.Ntheta(); ++j) {
            const double r = g.r(i), th = g.theta(j);
            const double c = std::cos(th), sn = std::sin(th);
            bool ok = r > field.bundle().model->r_moll();
            QueryResult q{};
            if (ok) {
                try {
                    q = field.query({r * c, r * sn});
                } catch (const std::exception&) {
                    ok = false;
                }
            }
            if (ok) {
                Gx.at(i, j) = sl * q.gphi.x;
                Gy.at(i, j) = sl * q.gphi.y;
                const double gt = -q.gphi.x * sn + q.gphi.y * c;
                bridging += g.weight(i, j) / (1.0 + r) * lambda * gt * gt *
                            std::norm(b.sol.u.at(i, j));
            } else {
                const double s = std::sqrt(n_at(r, th));
                Gx.at(i, j) = s * c;
                Gy.at(i, j) = s * sn;
            }
        }
    const double r_eik = sommerfeld_residual_vector(b.sol.u, Gx, Gy);

    std::ofstream csv(ws.file("sommerfeld.csv"));
    csv << "candidate,residual,ratio\n";
    char buf[200];
    auto row = [&](const char* name, double res) {
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g\n", name, res, res / energy);
        csv << buf;
        Json r;
        r["candidate"] = name;
        r["residual"] = res;
        r["ratio"] = res / energy;
        return r;
    };
    Json rows = Json::array();
    rows.push_back(row("sqrt_n", r_n));
    rows.push_back(row("sqrt_n_inf", r_ninf));
    rows.push_back(row("sqrt_lambda_grad_phi", r_eik));
    rows.push_back(row("control_incoming", r_control));
    report["rows"] = rows;
    report["weighted_gradient_energy"] = energy;
    report["bridging_tangential_phase"] = bridging;
    report["warnings"] = b.warnings;
}

inline void run_eps_sweep_experiment(const Json& cfg, Workspace& ws, Json& report) {
    auto eps_list = get_or(cfg, "eps_list", std::vector<double>{0.1, 0.03, 0.01});
    if (eps_list.size() < 3) throw std::invalid_argument("eps-sweep: need at least 3 values");
    for (std::size_t i = 1; i < eps_list.size(); ++i)
        if (!(eps_list[i] < eps_list[i - 1]))
            throw std::invalid_argument("eps-sweep: eps list must be strictly decreasing");

    std::ofstream csv(ws.file("eps_sweep.csv"));
    csv << "epsilon,M2,triple_u,triple_nu,tangential_energy,N_f_scaled,ratio\n";
    Json rows = Json::array();
    char buf[320];
    for (double eps : eps_list) {
        auto b = run_solve(cfg, eps);
        const double R0 = get_or(sub(cfg, "norms"), "R0", default_R0(b.model));
        auto rep = morawetz_report(b.sol.u, b.model, R0);
        // N(f / sqrt(n)) through the dyadic formula.
        ComplexField fs(b.grid, FieldRole::source);
        for (int i = 0; i < b.grid->Nr(); ++i)
            for (int j = 0; j < b.grid->Ntheta(); ++j) {
                const double th = b.grid->theta(j);
                const double n = b.model
                                     .eval({b.grid->r(i) * std::cos(th),
                                            b.grid->r(i) * std::sin(th)})
                                     .n;
                fs.at(i, j) = b.f.at(i, j) / std::sqrt(n);
            }
        const double nf = besov_norm(fs, R0);
        const double n2s = b.model.n2_sup(b.grid->L());
        const double denom = (eps + n2s) * nf * nf;
        const double ratio = (denom > 0.0) ? rep.M2 / denom : 0.0;
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", eps,
                      rep.M2, rep.triple_u, rep.triple_nu, rep.tangential_energy, nf, ratio);
        csv << buf;
        Json row;
        row["epsilon"] = eps;
        row["M2"] = rep.M2;
        row["N_f_scaled"] = nf;
        row["ratio"] = ratio;
        rows.push_back(row);
    }
    report["rows"] = rows;
}

}  // namespace exp_detail

// ---------------------------------------------------------------------------
// Entry point shared by the CLI binary and the tests.
// ---------------------------------------------------------------------------

inline int run_experiment(Json cfg, const std::string& out_dir) {
    exp_detail::Workspace ws{out_dir, {}};
    try {
        const std::string experiment =
            exp_detail::get_or(cfg, "experiment", std::string());
        if (experiment.empty())
            throw std::invalid_argument("config: missing 'experiment'");

        Json report;
        report["experiment"] = experiment;
        if (experiment == "solve") exp_detail::run_solve_experiment(cfg, ws, report);
        else if (experiment == "norms") exp_detail::run_norms_experiment(cfg, ws, report);
        else if (experiment == "rays") exp_detail::run_rays_experiment(cfg, ws, report);
        else if (experiment == "identities")
            exp_detail::run_identities_experiment(cfg, ws, report);
        else if (experiment == "waveguide")
            exp_detail::run_waveguide_experiment(cfg, ws, report);
        else if (experiment == "concentration")
            exp_detail::run_concentration_experiment(cfg, ws, report);
        else if (experiment == "sommerfeld-compare")
            exp_detail::run_sommerfeld_experiment(cfg, ws, report);
        else if (experiment == "eps-sweep")
            exp_detail::run_eps_sweep_experiment(cfg, ws, report);
        else
            throw std::invalid_argument("config: unknown experiment '" + experiment + "'");

        Json prov;
        prov["config"] = cfg;
        prov["config_hash"] = config_hash(cfg);
        prov["version"] = "1.0.0";
        if (cfg.contains("grid")) {
            auto grid = make_grid(exp_detail::sub(cfg, "grid"));
            Json gj;
            gj["Nr"] = grid->Nr();
            gj["Ntheta"] = grid->Ntheta();
            gj["L"] = grid->L();
            gj["dr"] = grid->dr();
            gj["dtheta"] = grid->dtheta();
            prov["grid"] = gj;
        }
        exp_detail::write_json(ws, "report.json", report);
        exp_detail::write_json(ws, "provenance.json", prov);
        return 0;
    } catch (const NonConvergence& e) {
        std::cerr << "error: " << e.what() << "\n";
        ws.discard_all();
        return 3;
    } catch (const QuadratureUnderResolved& e) {
        std::cerr << "error: " << e.what() << "\n";
        ws.discard_all();
        return 3;
    } catch (const CausticSuspected& e) {
        std::cerr << "error: " << e.what() << "\n";
        ws.discard_all();
        return 4;
    } catch (const InversionNoConvergence& e) {
        std::cerr << "error: " << e.what() << "\n";
        ws.discard_all();
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        ws.discard_all();
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        ws.discard_all();
        return 1;
    }
}

}  // namespace hlab

#endif
