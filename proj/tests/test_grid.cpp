#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "hlab/polar_grid.hpp"

using namespace hlab;

TEST_CASE("quadrature weights integrate the disk exactly") {
    for (auto [Nr, Nth, L] : {std::tuple{32, 32, 2.0}, {64, 128, 20.0}, {17, 8, 5.0}}) {
        PolarGrid g(Nr, Nth, L);
        double sum = 0.0;
        for (int i = 0; i < g.Nr(); ++i)
            for (int j = 0; j < g.Ntheta(); ++j) sum += g.weight(i, j);
        CHECK(sum == Catch::Approx(pi * L * L).epsilon(1e-10));
        CHECK(g.r(g.Nr() - 1) == Catch::Approx(L).margin(1e-12));
    }
}

TEST_CASE("grid validation") {
    CHECK_THROWS(PolarGrid(32, 7, 1.0));   // odd Ntheta
    CHECK_THROWS(PolarGrid(32, 6, 1.0));   // too few angles
    CHECK_THROWS(PolarGrid(32, 32, -1.0));
}

TEST_CASE("discrete gradient on reference fields") {
    auto grid = std::make_shared<PolarGrid>(64, 64, 2.0);

    SECTION("u = r") {
        auto u = sample_field(grid, [](double r, double) { return Complex(r, 0); });
        auto gr = gradient(u);
        for (int i = 0; i < grid->Nr(); ++i)
            for (int j = 0; j < grid->Ntheta(); ++j) {
                CHECK(gr.du_r.at(i, j).real() == Catch::Approx(1.0).margin(1e-11));
                CHECK(std::abs(gr.du_tau.at(i, j)) <= 1e-12);
            }
    }
    SECTION("u = e^{i theta}") {
        auto u = sample_field(grid, [](double, double th) {
            return std::exp(Complex(0, th));
        });
        auto gr = gradient(u);
        const double dth = grid->dtheta();
        const double expected_factor = std::sin(dth) / dth;  // centered-difference symbol
        for (int i = 4; i < grid->Nr(); i += 13)
            for (int j = 0; j < grid->Ntheta(); j += 7) {
                CHECK(std::abs(gr.du_r.at(i, j)) <= 1e-11);
                CHECK(std::abs(gr.du_tau.at(i, j)) ==
                      Catch::Approx(expected_factor / grid->r(i)).margin(1e-11));
            }
    }
    SECTION("u = e^{i r}") {
        auto u = sample_field(grid, [](double r, double) { return std::exp(Complex(0, r)); });
        auto gr = gradient(u);
        const double h = grid->dr();
        for (int i = 1; i < grid->Nr() - 1; i += 11)
            for (int j = 0; j < grid->Ntheta(); j += 9) {
                const Complex exact = Complex(0, 1) * std::exp(Complex(0, grid->r(i)));
                CHECK(std::abs(gr.du_r.at(i, j) - exact) <= 0.5 * h * h);
                CHECK(std::abs(gr.du_tau.at(i, j)) <= 1e-12);
            }
    }
}

TEST_CASE("field CSV dump") {
    auto grid = std::make_shared<PolarGrid>(8, 8, 1.0);
    auto u = sample_field(grid, [](double r, double th) { return Complex(r, th); });
    const std::string path = "test_field_dump.csv";
    dump_field_csv(u, path);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "r,theta,re,im");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == grid->size());
    std::remove(path.c_str());
}
