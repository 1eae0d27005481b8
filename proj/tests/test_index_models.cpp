#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hlab/index_model.hpp"
#include "hlab/soliton.hpp"

using namespace hlab;

TEST_CASE("angular profile: 2 + cos 2theta derivatives") {
    AngularProfile p(2.0, {0.0, 1.0}, {0.0, 0.0});
    CHECK(p.eval(0.0) == Catch::Approx(3.0).margin(1e-14));
    CHECK(p.d1(0.0) == Catch::Approx(0.0).margin(1e-14));
    CHECK(p.d2(0.0) == Catch::Approx(-4.0).margin(1e-14));
    CHECK(p.eval(pi / 4) == Catch::Approx(2.0).margin(1e-14));
    CHECK(p.d1(pi / 4) == Catch::Approx(-2.0).margin(1e-14));
    CHECK(p.d2(pi / 4) == Catch::Approx(0.0).margin(1e-13));

    AngularProfile c(1.0);
    for (double th : {0.0, 1.0, 2.5, 6.0}) {
        CHECK(c.eval(th) == 1.0);
        CHECK(c.d1(th) == 0.0);
        CHECK(c.d2(th) == 0.0);
    }
}

TEST_CASE("angular profile: periodicity, positivity, d1 consistency") {
    AngularProfile p(2.0, {0.5, 1.0, 0.0}, {0.0, 0.2, -0.1});
    for (int k = 0; k < 64; ++k) {
        const double th = 2.0 * pi * k / 64.0 - 3.0;
        CHECK(p.eval(th) == Catch::Approx(p.eval(th + 2.0 * pi)).margin(1e-12));
        CHECK(p.eval(th) >= p.n0());
        const double h = 1e-5;
        const double fd = (p.eval(th + h) - p.eval(th - h)) / (2.0 * h);
        CHECK(p.d1(th) == Catch::Approx(fd).margin(1e-8));
    }
    CHECK(p.n0() > 0.0);
}

TEST_CASE("model eval examples") {
    auto saito = make_saito_tilt(10.0, 0.1);
    auto e = saito.eval({1.0, 0.0});
    CHECK(e.n == Catch::Approx(9.0).margin(1e-14));
    CHECK(e.grad.x == Catch::Approx(0.0).margin(1e-14));
    CHECK(e.grad.y == Catch::Approx(0.0).margin(1e-14));

    auto cst = make_constant(1.0);
    for (double xx : {0.3, -2.0, 17.0}) {
        auto ec = cst.eval({xx, 0.5 * xx});
        CHECK(ec.n == 1.0);
        CHECK(ec.grad.x == 0.0);
        CHECK(ec.grad.y == 0.0);
    }

    auto wg = make_waveguide_index(0.3);
    auto ew = wg.eval({5.0, 0.0});
    CHECK(ew.n == Catch::Approx(0.09 + 1.0 - 0.045).margin(1e-14));
    CHECK(ew.grad.x == Catch::Approx(0.0).margin(1e-14));
    CHECK(ew.grad.y == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("soliton identity feeds the waveguide index") {
    auto s = soliton(0.0);
    CHECK(s.Q == Catch::Approx(1.0).margin(1e-15));
    CHECK(s.dQ == Catch::Approx(0.0).margin(1e-15));
    CHECK(s.d2Q == Catch::Approx(-0.5).margin(1e-15));
}

TEST_CASE("gradient consistency on a polar lattice") {
    const double h = 1e-4;
    std::vector<IndexModel> models;
    models.push_back(make_constant(1.0));
    models.push_back(make_saito_tilt(10.0, 0.1));
    models.push_back(make_angular_limit(2.0, AngularProfile(2.0, {0.0, 1.0}, {}), 0.5, 1.0));
    models.push_back(make_waveguide_index(0.3));
    for (const auto& m : models) {
        for (int i = 0; i < 32; ++i)
            for (int j = 0; j < 32; ++j) {
                const double r = 0.5 * std::pow(100.0, i / 31.0);
                const double th = 2.0 * pi * j / 32.0 + 0.05;
                const Vec2 x{r * std::cos(th), r * std::sin(th)};
                const auto e = m.eval(x);
                const double fdx = (m.eval({x.x + h, x.y}).n - m.eval({x.x - h, x.y}).n) / (2 * h);
                const double fdy = (m.eval({x.x, x.y + h}).n - m.eval({x.x, x.y - h}).n) / (2 * h);
                const double tol = 1e-5 * (1.0 + std::hypot(e.grad.x, e.grad.y));
                CHECK(std::abs(e.grad.x - fdx) <= tol);
                CHECK(std::abs(e.grad.y - fdy) <= tol);
            }
    }
}

TEST_CASE("mollification is local: exact values outside r_moll") {
    auto saito = make_saito_tilt(10.0, 0.1);
    for (int k = 0; k < 32; ++k) {
        const double th = 2.0 * pi * k / 32.0;
        for (double r : {0.100000001, 0.2, 1.0, 30.0}) {
            const auto e = saito.eval({r * std::cos(th), r * std::sin(th)});
            CHECK(e.n == Catch::Approx(10.0 - std::cos(th)).margin(1e-12));
        }
    }
    // Inside the fade region the model is finite, positive and C0-close to
    // the frozen circle value.
    auto near0 = saito.eval({1e-6, 1e-6});
    CHECK(near0.n == Catch::Approx(10.0).margin(1e-9));  // circle average of -cos is 0
    CHECK(near0.grad.x == 0.0);
}

TEST_CASE("beta coefficient") {
    CHECK(beta_coefficient(make_constant(1.0), -3, 5) == 0.0);

    // Radially increasing n: gamma < 0 makes x.grad n > 0 everywhere.
    auto incr = make_angular_limit(2.0, AngularProfile(2.0), -0.3, 1.0);
    CHECK(beta_coefficient(incr, 0, 4) == 0.0);

    // Waveguide annuli at r > 1: dense-sampling oracle for the sup, and the
    // smallness scale 2 C lambda^2 from the sech envelope.
    const double lw = 0.3;
    auto wg = make_waveguide_index(lw);
    for (int j = 0; j <= 2; ++j) {
        const double coarse = 0.5 * beta_coefficient(wg, j, j, 128);
        const double dense = 0.5 * beta_coefficient(wg, j, j, 1024);
        CHECK(coarse <= dense + 1e-15);       // lattice sup is monotone in sampling
        CHECK(dense <= coarse * 1.10 + 1e-12);
        CHECK(dense <= 2.0 * lw * lw);        // measured C < 1 for this family
    }
}

TEST_CASE("assumption report") {
    AngularProfile prof(2.0, {0.0, 0.4}, {});
    SECTION("plug-in Gamma for n = n_inf (1 + 1/(2r))") {
        auto m = make_angular_limit(2.0, prof, 0.5, 1.0);
        std::vector<double> radii;
        for (int k = 0; k <= 20; ++k) radii.push_back(1.0 + 99.0 * k / 20.0);
        auto rep = assumption_report(m, prof, radii);
        CHECK(rep.gamma_fit == Catch::Approx(0.5).epsilon(0.01));
        CHECK(rep.delta_fit == Catch::Approx(1.0).epsilon(0.05));
        CHECK(rep.beta >= 0.0);
        for (const auto& e : rep.annulus_table) CHECK(e.sup_ratio >= 0.0);
    }
    SECTION("constant model with matching profile") {
        auto m = make_constant(2.0);
        auto rep = assumption_report(m, AngularProfile(2.0), {1.0, 2.0, 5.0, 10.0});
        CHECK(rep.gamma_fit == 0.0);
        CHECK(rep.beta == 0.0);
        CHECK(rep.c0_estimate == 1.0);  // n1 = 0 split
    }
}
