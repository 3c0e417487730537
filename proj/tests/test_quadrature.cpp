#include <doctest.h>

#include "she/errors.hpp"
#include "she/quadrature.hpp"

#include "expected_values.hpp"

#include <cmath>
#include <vector>

using namespace she;

namespace {
double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(1e-300, std::abs(want));
}
} // namespace

TEST_CASE("time grid basics") {
    TimeGrid g(2.0, 8);
    CHECK(g.dt() == doctest::Approx(0.25));
    CHECK(g.node(0) == 0.0);
    CHECK(g.node(8) == doctest::Approx(2.0));
    CHECK(g.size() == 9);
    CHECK_THROWS_AS(TimeGrid(-1.0, 8), ConfigError);
    CHECK_THROWS_AS(TimeGrid(1.0, 0), ConfigError);
    TimeGrid s = TimeGrid::standard(2.0);
    CHECK(s.n_steps == 1024);
    CHECK(TimeGrid::standard(0.01).n_steps >= 64);
    CHECK(TimeGrid::standard(3.0).n_steps % 2 == 0);
}

TEST_CASE("singular weight validation") {
    CHECK_NOTHROW(SingularWeight(-0.5));
    CHECK_NOTHROW(SingularWeight(0.0));
    CHECK_THROWS_AS(SingularWeight(-1.0), ConfigError);
    CHECK_THROWS_AS(SingularWeight(0.5), ConfigError);
}

TEST_CASE("adaptive integration of smooth functions") {
    CHECK(rel_err(integrate([](double s) { return std::cos(s); }, 0.0, 1.0),
                  std::sin(1.0)) < 1e-10);
    CHECK(rel_err(integrate([](double s) { return std::sin(s); }, 0.0, M_PI), 2.0) < 1e-10);
    // oscillatory + decaying
    const double want = 0.5; // int_0^inf e^{-s} cos(s) ds
    CHECK(rel_err(integrate_to_inf(
                      [](double s) { return std::exp(-s) * std::cos(s); }, 0.0),
                  want) < 1e-8);
    CHECK(integrate([](double) { return 1.0; }, 2.0, 2.0) == 0.0);
}

TEST_CASE("endpoint singularities via power substitution") {
    // int_0^1 s^{-1/2} ds = 2
    const double v = integrate_singular([](double) { return 1.0; }, 0.0, 1.0,
                                        SingularWeight(-0.5));
    CHECK(rel_err(v, 2.0) < 1e-10);
    // frozen references
    const double a = integrate_singular([](double s) { return std::cos(s); }, 0.0, 1.0,
                                        SingularWeight(-0.3));
    CHECK(rel_err(a, expected::quad_vals::int_s_m03_cos) < 1e-9);
    const double b = integrate_singular([](double s) { return std::exp(-s); }, 0.0, 2.0,
                                        SingularWeight(-0.7));
    CHECK(rel_err(b, expected::quad_vals::int_s_m07_exp) < 1e-9);
    // shifted left endpoint: int_1^2 (s-1)^{-1/2} ds = 2
    const double c = integrate_singular([](double) { return 1.0; }, 1.0, 2.0,
                                        SingularWeight(-0.5));
    CHECK(rel_err(c, 2.0) < 1e-10);
}

TEST_CASE("integration to infinity") {
    CHECK(rel_err(integrate_to_inf([](double s) { return std::exp(-s); }, 0.0), 1.0) <
          1e-10);
    CHECK(rel_err(integrate_to_inf([](double s) { return std::exp(-s * s); }, 0.0),
                  0.5 * std::sqrt(M_PI)) < 1e-10);
    CHECK_THROWS_AS(integrate_to_inf([](double s) { return 1.0 / (1.0 + s); }, 0.0),
                    DivergentIntegral);
}

TEST_CASE("sphere surface") {
    CHECK(rel_err(sphere_surface(1), 2.0) < 1e-14);
    CHECK(rel_err(sphere_surface(2), 2.0 * M_PI) < 1e-14);
    CHECK(rel_err(sphere_surface(3), 4.0 * M_PI) < 1e-14);
    CHECK(rel_err(sphere_surface(4), 2.0 * M_PI * M_PI) < 1e-14);
}

TEST_CASE("radial reduction of d-dimensional integrals") {
    // Gaussian mass in d = 1, 2, 3: int G(t, z) dz = 1
    for (int d = 1; d <= 3; ++d) {
        for (double vt : {1e-3, 1.0, 50.0}) {
            const double norm = std::pow(2.0 * M_PI * vt, -0.5 * d);
            auto gauss = [&](double r) { return std::exp(-r * r / (2.0 * vt)); };
            const double got = radial_integral([&](double) { return norm; }, gauss, d,
                                               std::sqrt(vt));
            CHECK(rel_err(got, 1.0) < 1e-8);
        }
    }
    // frozen: int_{R^3} e^{-|z|} / (1 + |z|^2) dz
    const double got = radial_integral([](double r) { return 1.0 / (1.0 + r * r); },
                                       [](double r) { return std::exp(-r); }, 3, 1.0);
    CHECK(rel_err(got, expected::quad_vals::radial_d3_exp_over_1pr2) < 1e-8);
    // singular origin: int_{R^3} |z|^{-3/2} e^{-|z|^2/2} dz
    //   = surface * int_0^inf r^{1/2} e^{-r^2/2} dr = 4 pi 2^{-1/4} Gamma(3/4)
    const double want = 4.0 * M_PI * std::pow(2.0, -0.25) * std::tgamma(0.75);
    const double sing = radial_integral([](double r) { return std::pow(r, -1.5); },
                                        [](double r) { return std::exp(-0.5 * r * r); },
                                        3, 1.0, -1.5);
    CHECK(rel_err(sing, want) < 1e-8);
    // singular head path (negative combined power): int_R |z|^{-1/2} e^{-|z|} dz
    const double one_d = radial_integral([](double r) { return std::pow(r, -0.5); },
                                         [](double r) { return std::exp(-r); }, 1, 1.0,
                                         -0.5);
    CHECK(rel_err(one_d, 2.0 * std::sqrt(M_PI)) < 1e-8);
    // non-integrable origin is rejected
    CHECK_THROWS_AS(radial_integral([](double r) { return std::pow(r, -3.0); },
                                    [](double r) { return std::exp(-r); }, 3, 1.0, -3.0),
                    DivergentIntegral);
}

TEST_CASE("grid convolution reproduces closed forms") {
    TimeGrid grid(1.0, 512);
    std::vector<double> ones(grid.size(), 1.0);

    SUBCASE("left and right constant, no weight: result is t") {
        auto c = convolve_on_grid(grid, ones, SingularWeight(0.0), ones);
        for (int j = 0; j <= grid.n_steps; j += 64)
            CHECK(std::abs(c[j] - grid.node(j)) < 1e-12);
    }
    SUBCASE("weight -1/2 with constant factors: result is 2 sqrt(t)") {
        auto c = convolve_on_grid(grid, ones, SingularWeight(-0.5), ones);
        for (int j = 64; j <= grid.n_steps; j += 64)
            CHECK(rel_err(c[j], 2.0 * std::sqrt(grid.node(j))) < 1e-9);
    }
    SUBCASE("linear times constant: int_0^t tau dtau = t^2/2") {
        std::vector<double> lin(grid.size());
        for (int j = 0; j < grid.size(); ++j) lin[j] = grid.node(j);
        auto c = convolve_on_grid(grid, lin, SingularWeight(0.0), ones);
        for (int j = 64; j <= grid.n_steps; j += 64)
            CHECK(rel_err(c[j], 0.5 * grid.node(j) * grid.node(j)) < 1e-12);
    }
    SUBCASE("weighted against linear right factor: (4/3) t^{3/2}") {
        // int_0^t tau^{-1/2} (t - tau) dtau = (4/3) t^{3/2}
        std::vector<double> lin(grid.size());
        for (int j = 0; j < grid.size(); ++j) lin[j] = grid.node(j);
        auto c = convolve_on_grid(grid, ones, SingularWeight(-0.5), lin);
        for (int j = 64; j <= grid.n_steps; j += 64)
            CHECK(rel_err(c[j], (4.0 / 3.0) * std::pow(grid.node(j), 1.5)) < 1e-9);
    }
    SUBCASE("smooth factors: int_0^t e^{-tau} e^{-(t-tau)} dtau = t e^{-t}") {
        std::vector<double> e(grid.size());
        for (int j = 0; j < grid.size(); ++j) e[j] = std::exp(-grid.node(j));
        auto c = convolve_on_grid(grid, e, SingularWeight(0.0), e);
        for (int j = 64; j <= grid.n_steps; j += 64)
            CHECK(rel_err(c[j], grid.node(j) * std::exp(-grid.node(j))) < 1e-5);
    }
    SUBCASE("positivity and monotonicity are preserved exactly") {
        std::vector<double> l(grid.size()), r(grid.size());
        for (int j = 0; j < grid.size(); ++j) {
            l[j] = 1.0 + std::sin(0.5 * grid.node(j));
            r[j] = std::exp(grid.node(j));
        }
        auto c = convolve_on_grid(grid, l, SingularWeight(-0.5), r);
        for (int j = 1; j <= grid.n_steps; ++j) {
            CHECK(c[j] >= 0.0);
            CHECK(c[j] >= c[j - 1] - 1e-15);
        }
    }
    SUBCASE("size mismatch is rejected") {
        std::vector<double> bad(grid.size() - 1, 1.0);
        CHECK_THROWS_AS(convolve_on_grid(grid, bad, SingularWeight(0.0), ones),
                        GridMismatch);
    }
}

TEST_CASE("singular cell moments") {
    TimeGrid grid(1.0, 16);
    auto mom = singular_cell_moments(grid, -0.5);
    // sum of q=0 moments telescopes to int_0^1 tau^{-1/2} dtau = 2
    double total = 0.0;
    for (const auto& m : mom) total += m[0];
    CHECK(rel_err(total, 2.0) < 1e-12);
    // p = 0 gives exact polynomial moments dt, dt/2, dt/3 in every cell
    auto flat = singular_cell_moments(grid, 0.0);
    for (const auto& m : flat) {
        CHECK(rel_err(m[0], grid.dt()) < 1e-13);
        CHECK(rel_err(m[1], grid.dt() / 2.0) < 1e-13);
        CHECK(rel_err(m[2], grid.dt() / 3.0) < 1e-13);
    }
}
