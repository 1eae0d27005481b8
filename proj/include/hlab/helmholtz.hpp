#ifndef HLAB_HELMHOLTZ_HPP
#define HLAB_HELMHOLTZ_HPP

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hlab/index_model.hpp"
#include "hlab/polar_grid.hpp"

namespace hlab {

enum class BoundaryKind { outgoing, dirichlet0 };

struct BoundaryCondition {
    BoundaryKind kind = BoundaryKind::dirichlet0;
    std::optional<AngularProfile> profile;  // required for outgoing

    static BoundaryCondition dirichlet0() { return {BoundaryKind::dirichlet0, std::nullopt}; }
    static BoundaryCondition outgoing(AngularProfile p) {
        return {BoundaryKind::outgoing, std::move(p)};
    }
};

// Discretization of i*eps*u + Lap u + n u = -f, compressed row storage.
struct DiscreteSystem {
    std::shared_ptr<const PolarGrid> grid;
    double epsilon = 0.0;
    BoundaryCondition bc;
    std::vector<int> row_ptr;
    std::vector<int> col;
    std::vector<Complex> val;
    std::vector<char> is_bc_row;

    int rows() const { return static_cast<int>(row_ptr.size()) - 1; }

    void matvec(const std::vector<Complex>& x, std::vector<Complex>& y) const {
        const int n = rows();
        y.assign(n, Complex(0, 0));
        for (int r = 0; r < n; ++r) {
            Complex s(0, 0);
            for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k) s += val[k] * x[col[k]];
            y[r] = s;
        }
    }
};

struct NonConvergence : std::runtime_error {
    int iterations;
    double residual;
    NonConvergence(int it, double res)
        : std::runtime_error("linear solver did not converge after " + std::to_string(it) +
                             " iterations (residual " + std::to_string(res) + ")"),
          iterations(it), residual(res) {}
};

// Five-point polar stencil in conservative (flux) form, self-adjoint against
// the grid quadrature weights.  Ring 0 closes across the pole: its inner
// neighbor is the antipodal node (r_inner, theta + pi), whose coefficient
// vanishes because the pole face has zero radius (staggered-pole closure).
inline DiscreteSystem assemble(std::shared_ptr<const PolarGrid> grid, const IndexModel& model,
                               double epsilon, BoundaryCondition bc, bool laplacian = true) {
    if (epsilon < 0.0) throw std::invalid_argument("assemble: epsilon must be >= 0");
    if (epsilon == 0.0 && bc.kind == BoundaryKind::dirichlet0)
        throw std::invalid_argument(
            "assemble: eps = 0 with dirichlet0 is ill-posed; use the outgoing condition");
    if (bc.kind == BoundaryKind::outgoing && !bc.profile)
        throw std::invalid_argument("assemble: outgoing condition needs an AngularProfile");

    const auto& g = *grid;
    const int Nr = g.Nr(), Nth = g.Ntheta();
    const double dr = g.dr(), dth = g.dtheta();

    DiscreteSystem sys;
    sys.grid = grid;
    sys.epsilon = epsilon;
    sys.bc = bc;
    sys.is_bc_row.assign(g.size(), 0);
    sys.row_ptr.reserve(g.size() + 1);
    sys.row_ptr.push_back(0);
    sys.col.reserve(5 * g.size());
    sys.val.reserve(5 * g.size());

    // Entries of one row, sorted by column for determinism.
    std::vector<std::pair<int, Complex>> entries;
    for (int i = 0; i < Nr; ++i) {
        const double ri = g.r(i);
        for (int j = 0; j < Nth; ++j) {
            entries.clear();
            if (i == Nr - 1) {
                sys.is_bc_row[g.index(i, j)] = 1;
                if (bc.kind == BoundaryKind::dirichlet0) {
                    entries.emplace_back(g.index(i, j), Complex(1.0, 0.0));
                } else {
                    // d_r u - i sqrt(n_inf) u = 0, one-sided difference.
                    const double s = std::sqrt(bc.profile->eval(g.theta(j)));
                    entries.emplace_back(g.index(i - 1, j), Complex(-1.0 / dr, 0.0));
                    entries.emplace_back(g.index(i, j), Complex(1.0 / dr, -s));
                }
            } else {
                Complex diag(0.0, epsilon);
                const double th = g.theta(j);
                diag += model.eval({ri * std::cos(th), ri * std::sin(th)}).n;
                if (laplacian) {
                    const double V = g.radial_cell(i);
                    const double a_out = g.face_radius(i + 1) / (dr * V);
                    const double a_in = g.face_radius(i) / (dr * V);
                    const double c_th = 1.0 / (ri * ri * dth * dth);
                    diag += -(a_out + a_in) - 2.0 * c_th;
                    entries.emplace_back(g.index(i + 1, j), Complex(a_out, 0.0));
                    const int inner = (i == 0) ? g.index(0, g.antipode(j)) : g.index(i - 1, j);
                    entries.emplace_back(inner, Complex(a_in, 0.0));
                    entries.emplace_back(g.index(i, (j + 1) % Nth), Complex(c_th, 0.0));
                    entries.emplace_back(g.index(i, (j - 1 + Nth) % Nth), Complex(c_th, 0.0));
                }
                entries.emplace_back(g.index(i, j), diag);
            }
            std::sort(entries.begin(), entries.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            for (const auto& [c, v] : entries) {
                sys.col.push_back(c);
                sys.val.push_back(v);
            }
            sys.row_ptr.push_back(static_cast<int>(sys.col.size()));
        }
    }
    return sys;
}

enum class SolveMethod { direct, bicgstab };

struct SolveOptions {
    SolveMethod method = SolveMethod::direct;
    double tol = 1e-12;
    int max_iter = 2000;
};

struct SolveResult {
    ComplexField u;
    double residual_norm = 0.0;  // relative algebraic residual
    int iterations = 0;
};

namespace detail {

inline std::vector<Complex> rhs_from_source(const DiscreteSystem& sys, const ComplexField& f) {
    std::vector<Complex> b(sys.rows());
    for (int r = 0; r < sys.rows(); ++r) b[r] = sys.is_bc_row[r] ? Complex(0, 0) : -f.values[r];
    return b;
}

inline double vec_norm(const std::vector<Complex>& v) {
    double s = 0.0;
    for (const auto& z : v) s += std::norm(z);
    return std::sqrt(s);
}

inline SolveResult solve_direct(const DiscreteSystem& sys, const std::vector<Complex>& b) {
    const int n = sys.rows();
    Eigen::SparseMatrix<Complex> A(n, n);
    std::vector<Eigen::Triplet<Complex>> trip;
    trip.reserve(sys.val.size());
    for (int r = 0; r < n; ++r)
        for (int k = sys.row_ptr[r]; k < sys.row_ptr[r + 1]; ++k)
            trip.emplace_back(r, sys.col[k], sys.val[k]);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<Complex>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) throw NonConvergence(0, std::numeric_limits<double>::infinity());
    Eigen::VectorXcd bb(n);
    for (int r = 0; r < n; ++r) bb[r] = b[r];
    Eigen::VectorXcd x = lu.solve(bb);

    SolveResult res;
    res.u = ComplexField(sys.grid, FieldRole::solution);
    for (int r = 0; r < n; ++r) res.u.values[r] = x[r];
    std::vector<Complex> Ax;
    sys.matvec(res.u.values, Ax);
    double rnorm = 0.0;
    for (int r = 0; r < n; ++r) rnorm += std::norm(Ax[r] - b[r]);
    const double bnorm = vec_norm(b);
    res.residual_norm = (bnorm > 0.0) ? std::sqrt(rnorm) / bnorm : std::sqrt(rnorm);
    res.iterations = 0;
    return res;
}

// Jacobi-preconditioned BiCGStab, zero initial guess, fixed reduction order.
inline SolveResult solve_bicgstab(const DiscreteSystem& sys, const std::vector<Complex>& b,
                                  double tol, int max_iter) {
    const int n = sys.rows();
    std::vector<Complex> diag(n, Complex(1, 0));
    for (int r = 0; r < n; ++r)
        for (int k = sys.row_ptr[r]; k < sys.row_ptr[r + 1]; ++k)
            if (sys.col[k] == r && sys.val[k] != Complex(0, 0)) diag[r] = sys.val[k];

    auto dot = [](const std::vector<Complex>& a, const std::vector<Complex>& c) {
        Complex s(0, 0);
        for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * c[i];
        return s;
    };

    std::vector<Complex> x(n, Complex(0, 0)), r(b), r0(b), p(n), v(n), s(n), t(n), y(n), z(n);
    const double bnorm = vec_norm(b);
    if (bnorm == 0.0) {
        SolveResult res;
        res.u = ComplexField(sys.grid, FieldRole::solution);
        return res;
    }
    Complex rho_old(1, 0), alpha(1, 0), omega(1, 0);
    std::fill(p.begin(), p.end(), Complex(0, 0));
    std::fill(v.begin(), v.end(), Complex(0, 0));
    double rel = 1.0;
    for (int it = 1; it <= max_iter; ++it) {
        const Complex rho = dot(r0, r);
        if (std::abs(rho) < 1e-300) throw NonConvergence(it, rel);
        const Complex beta = (rho / rho_old) * (alpha / omega);
        for (int i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
        for (int i = 0; i < n; ++i) y[i] = p[i] / diag[i];
        sys.matvec(y, v);
        alpha = rho / dot(r0, v);
        for (int i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
        for (int i = 0; i < n; ++i) z[i] = s[i] / diag[i];
        sys.matvec(z, t);
        const double tt = std::real(dot(t, t));
        omega = (tt > 0.0) ? dot(t, s) / tt : Complex(0, 0);
        for (int i = 0; i < n; ++i) x[i] += alpha * y[i] + omega * z[i];
        for (int i = 0; i < n; ++i) r[i] = s[i] - omega * t[i];
        rel = vec_norm(r) / bnorm;
        if (rel <= tol) {
            SolveResult res;
            res.u = ComplexField(sys.grid, FieldRole::solution);
            res.u.values = std::move(x);
            res.residual_norm = rel;
            res.iterations = it;
            return res;
        }
        rho_old = rho;
    }
    throw NonConvergence(max_iter, rel);
}

}  // namespace detail

inline SolveResult solve(const DiscreteSystem& sys, const ComplexField& f,
                         SolveOptions opts = {}) {
    if (f.grid.get() != sys.grid.get())
        throw std::invalid_argument("solve: source lives on a different grid");
    if (opts.tol <= 0.0) throw std::invalid_argument("solve: tol must be positive");
    const auto b = detail::rhs_from_source(sys, f);
    if (opts.method == SolveMethod::direct) return detail::solve_direct(sys, b);
    return detail::solve_bicgstab(sys, b, opts.tol, opts.max_iter);
}

struct ConvergenceEntry {
    int N;
    double h;
    double error;  // max norm against the manufactured solution
};

// Manufactured solution u* = r cos(theta) e^{-r^2} (smooth through the pole);
// f is its analytic image under -(i eps + Lap + n).
inline std::vector<ConvergenceEntry> manufactured_convergence(const IndexModel& model,
                                                              double epsilon,
                                                              const std::vector<int>& levels,
                                                              double L = 4.0) {
    if (levels.size() < 3)
        throw std::invalid_argument("manufactured_convergence: need >= 3 levels");
    std::vector<ConvergenceEntry> out;
    for (int N : levels) {
        auto grid = std::make_shared<PolarGrid>(N, N, L);
        auto ustar = [](double r, double th) {
            return Complex(r * std::cos(th) * std::exp(-r * r), 0.0);
        };
        auto f = sample_field(
            grid,
            [&](double r, double th) {
                const double u = r * std::cos(th) * std::exp(-r * r);
                const double lap = std::cos(th) * std::exp(-r * r) * (4.0 * r * r * r - 8.0 * r);
                const double n =
                    model.eval({r * std::cos(th), r * std::sin(th)}).n;
                return -(Complex(0.0, epsilon) * u + lap + n * u);
            },
            FieldRole::source);
        auto sys = assemble(grid, model, epsilon, BoundaryCondition::dirichlet0());
        auto res = solve(sys, f);
        double err = 0.0;
        for (int i = 0; i < grid->Nr(); ++i)
            for (int j = 0; j < grid->Ntheta(); ++j)
                err = std::max(err, std::abs(res.u.at(i, j) - ustar(grid->r(i), grid->theta(j))));
        out.push_back({N, grid->dr(), err});
    }
    return out;
}

inline std::vector<double> observed_orders(const std::vector<ConvergenceEntry>& table) {
    std::vector<double> p;
    for (std::size_t i = 1; i < table.size(); ++i)
        p.push_back(std::log(table[i - 1].error / table[i].error) /
                    std::log(table[i - 1].h / table[i].h));
    return p;
}

}  // namespace hlab

#endif
