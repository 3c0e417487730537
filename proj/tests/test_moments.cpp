#include <doctest.h>

#include "expected_values.hpp"
#include "she/errors.hpp"
#include "she/moments.hpp"
#include "she/special.hpp"

#include <cmath>
#include <sstream>
#include <vector>

using namespace she;

namespace {

double rel(double got, double want) {
    return std::abs(got - want) / std::abs(want);
}

const HeatParams p1(1.0, 1);

} // namespace

TEST_CASE("ladder values match independent nested quadrature") {
    SUBCASE("gaussian-decay kernel, y = 0") {
        auto kern = CorrelationKernel::ornstein_uhlenbeck(2.0, 1.0, 1);
        HFamily fam = compute_h_family(kern, p1, 0.0, TimeGrid::standard(2.0), 3);
        CHECK(rel(fam.h(2, 1.0), expected::h_vals::ou2_c1_d1_h2_t1) < 2e-5);
        CHECK(rel(fam.h(2, 2.0), expected::h_vals::ou2_c1_d1_h2_t2) < 2e-5);
        CHECK(rel(fam.h(3, 1.0), expected::h_vals::ou2_c1_d1_h3_t1) < 2e-5);
    }
    SUBCASE("white noise, offset 0.5") {
        auto kern = CorrelationKernel::white_noise_1d();
        HFamily fam = compute_h_family(kern, p1, 0.5, TimeGrid::standard(1.0), 2);
        CHECK(rel(fam.h(1, 1.0), expected::h_vals::wn_d1_h1_t1_y05) < 2e-5);
        CHECK(rel(fam.h(2, 1.0), expected::h_vals::wn_d1_h2_t1_y05) < 2e-4);
    }
    SUBCASE("gaussian-decay kernel in d = 2, offset 0.5") {
        auto kern = CorrelationKernel::ornstein_uhlenbeck(2.0, 1.0, 2);
        HeatParams p2(1.0, 2);
        HFamily fam = compute_h_family(kern, p2, 0.5, TimeGrid::standard(1.0), 1);
        CHECK(rel(fam.h(1, 1.0), expected::h_vals::ou2_c1_d2_h1_t1_y05) < 2e-5);
    }
}

TEST_CASE("closed ladders reproduce the grid recursion") {
    SUBCASE("constant kernel: h_n(t) = t^n / n!") {
        auto kern = CorrelationKernel::constant(1.0, 1);
        HFamily fam = compute_h_family(kern, p1, 0.0, TimeGrid::standard(1.5), 6);
        for (double t : {0.5, 1.0, 1.5})
            for (int n = 1; n <= 6; ++n) {
                const double want = std::pow(t, n) / std::tgamma(n + 1.0);
                // discretization error of the product-integration ladder
                // compounds with the order, so the cross-check is looser
                // than the low-order oracle comparisons
                CHECK(rel(fam.h(n, t), want) < 1e-3);
            }
    }
    SUBCASE("singular kernel ladder") {
        auto kern = CorrelationKernel::riesz(1.0, 3);
        HeatParams p3(1.0, 3);
        HFamily fam = compute_h_family(kern, p3, 0.0, TimeGrid::standard(1.0), 4);
        for (double t : {0.25, 0.75, 1.0})
            for (int n = 1; n <= 4; ++n) {
                const double want = std::exp(log_h_closed(kern, p3, n, t));
                CHECK(rel(fam.h(n, t), want) < 1e-3);
            }
    }
    SUBCASE("white-noise ladder and h1 quadrature vs closed") {
        auto kern = CorrelationKernel::white_noise_1d();
        HFamily fam = compute_h_family(kern, p1, 0.0, TimeGrid::standard(1.0), 3);
        for (double t : {0.25, 0.5, 1.0}) {
            CHECK(rel(fam.h(1, t), h1_closed(kern, p1, t)) < 2e-5);
            CHECK(rel(h1(kern, p1, t, 0.0), std::sqrt(2.0 * t / M_PI)) < 1e-8);
            const double want = std::exp(log_h_closed(kern, p1, 3, t));
            CHECK(rel(fam.h(3, t), want) < 1e-3);
        }
    }
    SUBCASE("gaussian-decay h1 closed forms vs quadrature") {
        for (int d : {1, 2, 3, 5}) {
            HeatParams pd(1.0, d);
            auto kern = CorrelationKernel::ornstein_uhlenbeck(2.0, 1.0, d);
            for (double t : {0.3, 1.0, 4.0})
                CHECK(rel(h1_closed(kern, pd, t), h1(kern, pd, t, 0.0)) < 1e-8);
        }
        // d = 1 statement: h_1(t) = nu^{-1} (sqrt(2 nu t + 1) - 1)
        auto k1 = CorrelationKernel::ornstein_uhlenbeck(2.0, 1.0, 1);
        for (double nu : {0.5, 1.0, 2.0}) {
            HeatParams pn(nu, 1);
            CHECK(rel(h1_closed(k1, pn, 1.3),
                      (std::sqrt(2.0 * nu * 1.3 + 1.0) - 1.0) / nu) < 1e-12);
            CHECK(rel(h1_closed(k1, pn, 1.3), h1(k1, pn, 1.3, 0.0)) < 1e-8);
        }
    }
}

TEST_CASE("ladder series") {
    SUBCASE("gamma = 0 keeps only h_0") {
        auto kern = CorrelationKernel::constant(1.0, 1);
        HFamily fam = compute_h_family(kern, p1, 0.0, TimeGrid::standard(1.0), 2);
        auto s = h_series(fam, 0.0, 1.0);
        CHECK(s.value == 1.0);
        CHECK(s.tail_bound == 0.0);
    }
    SUBCASE("constant kernel sums to the exponential") {
        auto kern = CorrelationKernel::constant(1.0, 1);
        HFamily fam = compute_h_family(kern, p1, 0.0, TimeGrid::standard(1.5), 4);
        auto s = h_series(fam, 0.8, 1.5);
        CHECK(rel(s.value, std::exp(0.8 * 1.5)) < 1e-5);
        CHECK(s.tail_bound < 1e-7 * s.value);
    }
    SUBCASE("singular kernel sums to a fractional exponential") {
        auto kern = CorrelationKernel::riesz(1.0, 3);
        HeatParams p3(1.0, 3);
        HFamily fam = compute_h_family(kern, p3, 0.0, TimeGrid::standard(1.0), 8);
        const double c = std::pow(2.0, -0.5) * std::tgamma(1.0) / std::tgamma(1.5);
        for (double t : {0.5, 1.0}) {
            const double z = c * std::tgamma(0.5) * std::sqrt(t);
            const double want = mittag_leffler(MittagLefflerParams(0.5, 1.0), z);
            auto s = h_series(fam, 1.0, t);
            CHECK(rel(s.value, want) < 5e-4);
        }
    }
    SUBCASE("log-series of the closed ladders") {
        auto wn = CorrelationKernel::white_noise_1d();
        for (double nu : {0.5, 2.0}) {
            HeatParams pn(nu, 1);
            for (double gamma : {0.6, 2.0})
                for (double t : {1.0, 30.0}) {
                    const double z = gamma * std::sqrt(t / (2.0 * nu));
                    const double want =
                        log_mittag_leffler(MittagLefflerParams(0.5, 1.0), z);
                    CHECK(rel(log_h_series_closed(wn, pn, gamma, t), want) < 1e-9);
                }
        }
        auto cst = CorrelationKernel::constant(2.0, 3);
        HeatParams p3(1.0, 3);
        CHECK(rel(log_h_series_closed(cst, p3, 0.7, 5.0), 0.7 * 2.0 * 5.0) < 1e-12);
    }
    SUBCASE("series with no geometric decay within the cap reports truncation") {
        auto kern = CorrelationKernel::constant(1.0, 1);
        HFamily fam = compute_h_family(kern, p1, 0.0, TimeGrid(1.0, 64), 4);
        CHECK_THROWS_AS((void)h_series(fam, 1e8, 1.0), TruncationNotConverged);
    }
}

TEST_CASE("lower series") {
    SUBCASE("dominated by the full series") {
        auto kern = CorrelationKernel::white_noise_1d();
        HFamily fam = compute_h_family(kern, p1, 0.0, TimeGrid::standard(1.0), 4);
        auto full = h_series(fam, 1.0, 1.0);
        auto star = h_star(kern, p1, 1.0, 1.0, 0.0);
        CHECK(star.value <= full.value * (1.0 + 1e-9));
        CHECK(star.value >= 1.0 + h1_closed(kern, p1, 1.0) * (1.0 - 1e-12));
    }
    SUBCASE("exponential growth floor once gamma clears e / h_1(a)") {
        auto kern = CorrelationKernel::white_noise_1d();
        const double a = 0.5;
        const double gamma = std::exp(1.0) / h1_closed(kern, p1, a);
        const double t = 3.0;
        const double floor =
            (std::exp(t / a) - 1.0) / (std::exp(1.0) - 1.0);
        CHECK(h_star(kern, p1, gamma, t, 0.0).value >= floor * 0.999);
    }
}

TEST_CASE("ladder invariants across the kernel catalog") {
    std::vector<std::pair<CorrelationKernel, HeatParams>> cases;
    cases.emplace_back(CorrelationKernel::constant(1.0, 1), HeatParams(1.0, 1));
    cases.emplace_back(CorrelationKernel::white_noise_1d(), HeatParams(1.0, 1));
    cases.emplace_back(CorrelationKernel::ornstein_uhlenbeck(2.0, 1.0, 1),
                       HeatParams(1.0, 1));
    cases.emplace_back(CorrelationKernel::ornstein_uhlenbeck(1.0, 1.0, 3),
                       HeatParams(1.0, 3));
    cases.emplace_back(CorrelationKernel::riesz(0.5, 1), HeatParams(1.0, 1));
    cases.emplace_back(CorrelationKernel::poisson(3), HeatParams(1.0, 3));
    cases.emplace_back(CorrelationKernel::cauchy(1), HeatParams(1.0, 1));
    cases.emplace_back(CorrelationKernel::box_indicator(1.0, 1), HeatParams(1.0, 1));
    for (auto& [kern, pp] : cases) {
        CAPTURE(static_cast<int>(kern.variant));
        HFamily fam = compute_h_family(kern, pp, 0.0, TimeGrid::standard(1.0), 8);
        for (int n = 0; n <= 8; ++n)
            for (int j = 0; j + 1 < fam.grid.size(); ++j)
                CHECK(fam.values[n][j] <= fam.values[n][j + 1] * (1.0 + 1e-12) + 1e-300);
        for (int n = 2; n <= 8; ++n)
            for (double t : {0.25, 0.5, 1.0}) {
                const double floor = std::pow(fam.h(1, t / n), n);
                CHECK(fam.h(n, t) >= floor * (1.0 - 1e-6) - 1e-300);
            }
    }
}

TEST_CASE("two-point base kernels") {
    SUBCASE("first iterate matches its independent evaluation") {
        auto gauss = CorrelationKernel::ornstein_uhlenbeck(2.0, 1.0, 1);
        CHECK(rel(l1_exact(gauss, p1, 1.0, {0.3}, {-0.2}, {0.4}),
                  expected::l1_vals::ou2_c1_t1) < 1e-8);
        auto wn = CorrelationKernel::white_noise_1d();
        CHECK(rel(l1_exact(wn, p1, 1.0, {0.3}, {-0.2}, {0.4}),
                  expected::l1_vals::wn_t1) < 1e-8);
    }
    SUBCASE("constant kernel collapses to L_0 times level t") {
        auto cst = CorrelationKernel::constant(1.7, 1);
        const double got = l1_exact(cst, p1, 0.8, {0.2}, {0.5}, {-0.3});
        CHECK(rel(got, l0(p1, 0.8, {0.2}, {0.5}) * 1.7 * 0.8) < 1e-10);
    }
    SUBCASE("swap symmetry") {
        auto gauss = CorrelationKernel::ornstein_uhlenbeck(2.0, 1.0, 1);
        const double a = l1_exact(gauss, p1, 1.0, {0.3}, {-0.2}, {0.4});
        const double b = l1_exact(gauss, p1, 1.0, {-0.2}, {0.3}, {-0.4});
        CHECK(rel(a, b) < 1e-9);
    }
    SUBCASE("coincident points reduce to the time-changed trace") {
        auto pois = CorrelationKernel::poisson(3);
        HeatParams p3(1.0, 3);
        const std::vector<double> x{0.1, 0.2, -0.1};
        const double t = 0.5;
        auto inner = [&](double s) {
            return k_of_t(pois, p3, 2.0 * s * (t - s) / t);
        };
        const double q = integrate(inner, 0.0, 0.5 * t) + integrate(inner, 0.5 * t, t);
        const double want = l0(p3, t, x, x) * q;
        CHECK(rel(l1_exact(pois, p3, t, x, x, {0.0, 0.0, 0.0}), want) < 1e-8);
    }
    SUBCASE("sandwich around the first iterate") {
        const double t = 1.0;
        const std::vector<double> x{0.3}, xp{-0.2}, y{0.4};
        for (auto kern : {CorrelationKernel::ornstein_uhlenbeck(2.0, 1.0, 1),
                          CorrelationKernel::white_noise_1d()}) {
            const double v = l1_exact(kern, p1, t, x, xp, y);
            const double up = 2.0 * l0(p1, t, x, xp) * h1(kern, p1, t, 0.0);
            const double low = std::pow(2.0 * std::sqrt(3.0), -1) *
                               l0(p1, t, x, xp) * gauss_factor(p1, t, {0.5}) *
                               h1(kern, p1, 0.5 * t, 0.4);
            CHECK(v <= up * (1.0 + 1e-9));
            CHECK(v >= low * (1.0 - 1e-9));
        }
    }
}

TEST_CASE("series envelopes for the two-point kernel") {
    auto gauss = CorrelationKernel::ornstein_uhlenbeck(2.0, 1.0, 1);
    const std::vector<double> x{0.3}, xp{-0.2}, y{0.4};
    SUBCASE("ordering and degenerate noise") {
        const double up = k_upper(gauss, p1, 0.7, 1.0, x, xp);
        const double low = k_lower(gauss, p1, 0.7, 1.0, x, xp, y);
        CHECK(low <= up);
        CHECK(low >= l0(p1, 1.0, x, xp) * gauss_factor(p1, 1.0, {0.5}) *
                         (1.0 - 1e-12));
        CHECK(k_upper(gauss, p1, 0.0, 1.0, x, xp) == l0(p1, 1.0, x, xp));
        CHECK(rel(k_lower(gauss, p1, 0.0, 1.0, x, xp, y),
                  l0(p1, 1.0, x, xp) * gauss_factor(p1, 1.0, {0.5})) < 1e-12);
    }
    SUBCASE("upper envelope against the closed fractional exponential") {
        auto rz = CorrelationKernel::riesz(1.0, 3);
        HeatParams p3(1.0, 3);
        const std::vector<double> a{0.1, 0.0, -0.2}, b{0.0, 0.1, 0.1};
        const double lam = 0.6;
        const double c = std::pow(2.0, -0.5) / std::tgamma(1.5);
        const double z = 2.0 * lam * lam * c * std::tgamma(0.5);
        const double want = l0(p3, 1.0, a, b) *
                            mittag_leffler(MittagLefflerParams(0.5, 1.0), z);
        CHECK(rel(k_upper(rz, p3, lam, 1.0, a, b), want) < 2e-4);
    }
}

TEST_CASE("two-point moment envelopes for measure initial data") {
    auto gauss = CorrelationKernel::ornstein_uhlenbeck(2.0, 1.0, 1);
    SUBCASE("point mass collapses the double integral") {
        auto mu = InitialMeasure::dirac_at({0.0});
        const double lam = 0.6;
        auto mb = two_point_bounds(mu, gauss, p1, lam, lam, 1.0, {0.0}, {0.0});
        CHECK(mb.mode == BoundMode::ExactLinear);
        CHECK(mb.lower <= mb.upper);
        const double g0 = heat_kernel(p1, 1.0, {0.0});
        CHECK(rel(mb.upper, k_upper(gauss, p1, lam, 1.0, {0.0}, {0.0})) < 1e-10);
        CHECK(rel(mb.lower, k_lower(gauss, p1, lam, 1.0, {0.0}, {0.0},
                                    {0.0})) < 1e-6);
        CHECK(mb.upper >= g0 * g0); // the noise can only raise the moment
    }
    SUBCASE("no noise returns the deterministic product") {
        auto mu = InitialMeasure::atoms({{{-0.3}, 0.6}, {{0.4}, 1.0}});
        auto mb = two_point_bounds(mu, gauss, p1, 0.0, 0.0, 0.7, {0.1}, {-0.2});
        const double want = j0(mu, p1, 0.7, {0.1}) * j0(mu, p1, 0.7, {-0.2});
        CHECK(rel(mb.lower, want) < 1e-12);
        CHECK(rel(mb.upper, want) < 1e-12);
        CHECK(mb.mode == BoundMode::ExactLinear);
    }
    SUBCASE("flat data with flat correlation brackets the exponential moment") {
        auto mu = InitialMeasure::lebesgue(1.0);
        auto cst = CorrelationKernel::constant(1.0, 1);
        const double lam = 0.8, t = 1.0;
        auto mb = two_point_bounds(mu, cst, p1, lam, lam, t, {0.0}, {0.0});
        const double exact = std::exp(lam * lam * t);
        CHECK(mb.lower <= exact * (1.0 + 1e-9));
        CHECK(mb.upper >= exact * (1.0 - 1e-9));
    }
    SUBCASE("mixed regularity widens the envelope") {
        auto mu = InitialMeasure::dirac_at({0.0});
        auto mb = two_point_bounds(mu, gauss, p1, 0.3, 0.6, 1.0, {0.1}, {0.0});
        CHECK(mb.mode == BoundMode::Envelope);
        auto tight = two_point_bounds(mu, gauss, p1, 0.6, 0.6, 1.0, {0.1}, {0.0});
        CHECK(mb.lower <= tight.lower * (1.0 + 1e-12));
        CHECK(mb.upper >= tight.upper * (1.0 - 1e-12));
    }
    SUBCASE("density initial data stays ordered") {
        auto mu = InitialMeasure::density(
            [](double z) { return std::exp(-z * z); }, 6.0);
        auto mb = two_point_bounds(mu, gauss, p1, 0.4, 0.4, 0.5, {0.2}, {-0.1});
        CHECK(mb.lower > 0.0);
        CHECK(mb.lower <= mb.upper);
        CHECK(std::isfinite(mb.upper));
    }
}

TEST_CASE("ladder family round-trips through CSV") {
    auto kern = CorrelationKernel::ornstein_uhlenbeck(2.0, 1.0, 1);
    HFamily fam = compute_h_family(kern, p1, 0.3, TimeGrid(1.0, 64), 4);
    std::stringstream ss;
    write_h_family_csv(ss, fam);
    HFamily back = read_h_family_csv(ss, kern, p1, 0.3);
    REQUIRE(back.max_order() == fam.max_order());
    REQUIRE(back.grid.n_steps == fam.grid.n_steps);
    CHECK(back.grid.t_max == fam.grid.t_max);
    for (int n = 0; n <= fam.max_order(); ++n)
        for (int j = 0; j < fam.grid.size(); ++j)
            CHECK(back.values[n][j] == fam.values[n][j]);
    std::stringstream bad("x,y\n1,2\n");
    CHECK_THROWS_AS((void)read_h_family_csv(bad, kern, p1, 0.0), ConfigError);
}
