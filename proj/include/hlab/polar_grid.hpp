#ifndef HLAB_POLAR_GRID_HPP
#define HLAB_POLAR_GRID_HPP

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "hlab/math_util.hpp"

namespace hlab {

using Complex = std::complex<double>;

// Node-centered polar grid with r_inner = dr/2; nodes sit at cell centers of
// [0, dr], [dr, 2dr], ..., with the outer cell clipped at L.  Quadrature
// weights are exact cell integrals of r dr dtheta, so interior weights equal
// r_i * dr * dtheta and the total is the disk area pi L^2.  The unresolved
// disk r < r_inner is attributed to ring 0.
class PolarGrid {
public:
    PolarGrid(int Nr, int Ntheta, double L) : Nr_(Nr), Nth_(Ntheta), L_(L) {
        if (Nr < 4) throw std::invalid_argument("PolarGrid: Nr must be >= 4");
        if (Ntheta < 8 || Ntheta % 2 != 0)
            throw std::invalid_argument("PolarGrid: Ntheta must be even and >= 8");
        if (L <= 0.0) throw std::invalid_argument("PolarGrid: L must be positive");
        dr_ = L / (Nr - 0.5);
        dth_ = 2.0 * pi / Ntheta;
        r_.resize(Nr);
        radial_weight_.resize(Nr);
        for (int i = 0; i < Nr; ++i) r_[i] = (i + 0.5) * dr_;
        for (int i = 0; i < Nr - 1; ++i) radial_weight_[i] = r_[i] * dr_;
        radial_weight_[Nr - 1] = 0.5 * L * dr_ - 0.125 * dr_ * dr_;  // cell [L - dr/2, L]
    }

    int Nr() const { return Nr_; }
    int Ntheta() const { return Nth_; }
    double L() const { return L_; }
    double dr() const { return dr_; }
    double dtheta() const { return dth_; }
    double r_inner() const { return 0.5 * dr_; }
    double r(int i) const { return r_[i]; }
    double theta(int j) const { return j * dth_; }
    int size() const { return Nr_ * Nth_; }
    int index(int i, int j) const { return i * Nth_ + j; }
    int antipode(int j) const { return (j + Nth_ / 2) % Nth_; }

    // Quadrature weight of node (i,j); the weights sum to the disk area.
    double weight(int i, int) const { return radial_weight_[i] * dth_; }
    // Radial cell integral of r dr (weight / dtheta).
    double radial_cell(int i) const { return radial_weight_[i]; }

    // Radius of the cell face between rings i-1 and i; face 0 sits at the
    // pole, so the flux through it vanishes.
    double face_radius(int i) const { return i * dr_; }

    // Nearest grid shell to a requested radius.
    int snap_shell(double R) const {
        int i = static_cast<int>(std::lround(R / dr_ - 0.5));
        if (i < 0) i = 0;
        if (i >= Nr_) i = Nr_ - 1;
        return i;
    }

private:
    int Nr_, Nth_;
    double L_, dr_, dth_;
    std::vector<double> r_;
    std::vector<double> radial_weight_;
};

enum class FieldRole { solution, source, derived };

struct ComplexField {
    std::shared_ptr<const PolarGrid> grid;
    std::vector<Complex> values;
    FieldRole role = FieldRole::derived;

    ComplexField() = default;
    explicit ComplexField(std::shared_ptr<const PolarGrid> g, FieldRole role_ = FieldRole::derived)
        : grid(std::move(g)), values(grid->size(), Complex(0.0, 0.0)), role(role_) {}

    Complex& at(int i, int j) { return values[grid->index(i, j)]; }
    Complex at(int i, int j) const { return values[grid->index(i, j)]; }

    bool finite() const {
        for (const auto& v : values)
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
        return true;
    }
};

template <class F>
ComplexField sample_field(std::shared_ptr<const PolarGrid> grid, F&& f,
                          FieldRole role = FieldRole::derived) {
    ComplexField out(grid, role);
    for (int i = 0; i < grid->Nr(); ++i)
        for (int j = 0; j < grid->Ntheta(); ++j)
            out.at(i, j) = f(grid->r(i), grid->theta(j));
    return out;
}

struct GradientField {
    ComplexField du_r;    // radial derivative
    ComplexField du_tau;  // tangential derivative (1/r) d/dtheta
};

// Centered differences; second-order one-sided rows at the radial boundaries.
inline GradientField gradient(const ComplexField& u) {
    const auto& g = *u.grid;
    GradientField out{ComplexField(u.grid), ComplexField(u.grid)};
    const double dr = g.dr(), dth = g.dtheta();
    for (int j = 0; j < g.Ntheta(); ++j) {
        for (int i = 0; i < g.Nr(); ++i) {
            Complex dur;
            if (i == 0)
                dur = (-1.5 * u.at(0, j) + 2.0 * u.at(1, j) - 0.5 * u.at(2, j)) / dr;
            else if (i == g.Nr() - 1)
                dur = (1.5 * u.at(i, j) - 2.0 * u.at(i - 1, j) + 0.5 * u.at(i - 2, j)) / dr;
            else
                dur = (u.at(i + 1, j) - u.at(i - 1, j)) / (2.0 * dr);
            out.du_r.at(i, j) = dur;
            const int jp = (j + 1) % g.Ntheta(), jm = (j - 1 + g.Ntheta()) % g.Ntheta();
            out.du_tau.at(i, j) = (u.at(i, jp) - u.at(i, jm)) / (2.0 * dth * g.r(i));
        }
    }
    return out;
}

// CSV dump: header r,theta,re,im, row-major over (i,j), 17 significant digits.
inline void dump_field_csv(const ComplexField& u, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("dump_field_csv: cannot open " + path);
    out << "r,theta,re,im\n";
    char buf[160];
    const auto& g = *u.grid;
    for (int i = 0; i < g.Nr(); ++i)
        for (int j = 0; j < g.Ntheta(); ++j) {
            const Complex v = u.at(i, j);
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n",
                          g.r(i), g.theta(j), v.real(), v.imag());
            out << buf;
        }
}

inline void dump_grid_json(const PolarGrid& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("dump_grid_json: cannot open " + path);
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "{\"Nr\": %d, \"Ntheta\": %d, \"L\": %.17g, \"r_inner\": %.17g}\n",
                  g.Nr(), g.Ntheta(), g.L(), g.r_inner());
    out << buf;
}

}  // namespace hlab

#endif
