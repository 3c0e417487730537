#include <doctest.h>

#include "she/asymptotics.hpp"
#include "she/errors.hpp"
#include "she/spectral.hpp"

#include <cmath>

using namespace she;

namespace {

double rel(double got, double want) {
    return std::abs(got - want) / std::abs(want);
}

const HeatParams p1(1.0, 1);
const HeatParams p3(1.0, 3);
const double kE = std::exp(1.0);
const double kGammaEff1 = std::pow(2.0 * std::sqrt(3.0), -1); // d = 1
const double kGammaEff3 = std::pow(2.0 * std::sqrt(3.0), -3); // d = 3

} // namespace

TEST_CASE("envelope rate solves the spectral threshold equation") {
    SUBCASE("constant kernel: theta equals gamma times the level") {
        for (double nu : {0.5, 1.0, 2.0})
            for (double g : {0.3, 1.0, 2.5}) {
                auto kern = CorrelationKernel::constant(1.0, 1);
                CHECK(rel(theta(HeatParams(nu, 1), g, kern), g) < 1e-7);
            }
        auto k2 = CorrelationKernel::constant(1.7, 2);
        CHECK(rel(theta(HeatParams(1.0, 2), 0.9, k2), 0.9 * 1.7) < 1e-7);
    }
    SUBCASE("white noise: theta = gamma^2 / (2 nu)") {
        auto wn = CorrelationKernel::white_noise_1d();
        for (double nu : {0.5, 1.0, 2.0})
            for (double g : {0.4, 1.0, 3.0})
                CHECK(rel(theta(HeatParams(nu, 1), g, wn), g * g / (2.0 * nu)) <
                      1e-7);
    }
    SUBCASE("riesz: closed inversion of the decay transform") {
        // theta = [gamma c Gamma(1 - alpha/2)]^{2/(2-alpha)}
        auto rz = CorrelationKernel::riesz(1.0, 3);
        CHECK(rel(theta(p3, 1.0, rz), 2.0) < 1e-7);
        auto rz2 = CorrelationKernel::riesz(0.5, 3);
        const double c = std::pow(2.0, -0.25) * std::tgamma(1.25) /
                         std::tgamma(1.5);
        const double want = std::pow(c * std::tgamma(0.75), 2.0 / 1.5);
        CHECK(rel(theta(p3, 1.0, rz2), want) < 1e-7);
    }
    SUBCASE("subcritical gaussian-decay kernel has rate zero") {
        auto kern = CorrelationKernel::ornstein_uhlenbeck(2.0, 1.0, 3);
        CHECK(theta(p3, 0.2, kern) == 0.0);
        CHECK(theta(p3, 0.0, kern) == 0.0);
    }
    SUBCASE("monotone in gamma, antitone in nu") {
        auto kern = CorrelationKernel::ornstein_uhlenbeck(2.0, 1.0, 1);
        double prev = 0.0;
        for (double g : {0.5, 1.0, 2.0}) {
            const double th = theta(p1, g, kern);
            CHECK(th >= prev);
            prev = th;
        }
        double prev_nu = std::numeric_limits<double>::infinity();
        for (double nu : {0.5, 1.0, 2.0}) {
            const double th = theta(HeatParams(nu, 1), 1.0, kern);
            CHECK(th <= prev_nu + 1e-12);
            prev_nu = th;
        }
    }
}

TEST_CASE("series envelopes hold in their regimes") {
    SUBCASE("constant kernel: exponential envelope is an equality") {
        auto kern = CorrelationKernel::constant(1.0, 1);
        HFamily fam = compute_h_family(kern, p1, 0.0, TimeGrid::standard(2.0), 8);
        EnvelopeCheck rec = est_ht_bounds(fam, 0.8, 1e-3);
        CHECK(rec.theta_rate == doctest::Approx(0.8).epsilon(1e-7));
        CHECK(rec.max_ratio > 1.0 - 1e-9);
        CHECK(rec.max_ratio < 1.0 + 1e-3); // grid ladder bias only
        CHECK(!rec.uniform_bound.has_value());
    }
    SUBCASE("subcritical gaussian-decay kernel: uniform bound with margin") {
        auto kern = CorrelationKernel::ornstein_uhlenbeck(2.0, 1.0, 3);
        HFamily fam = compute_h_family(kern, p3, 0.0, TimeGrid::standard(2.0), 6);
        EnvelopeCheck rec = est_ht_bounds(fam, 0.2);
        CHECK(rec.theta_rate == 0.0);
        CHECK(rec.max_ratio == 0.0);
        REQUIRE(rec.uniform_bound.has_value());
        CHECK(rel(*rec.uniform_bound, 1.25) < 1e-5); // Upsilon(0) = 1/2
        CHECK(rec.max_uniform_ratio < 1.0);
        CHECK(rec.max_uniform_ratio > 0.8); // approached from below
    }
    SUBCASE("white noise: ratio approaches the renewal constant, not one") {
        auto wn = CorrelationKernel::white_noise_1d();
        HFamily fam = compute_h_family(wn, p1, 0.0, TimeGrid::standard(2.0), 4);
        CHECK_THROWS_AS((void)est_ht_bounds(fam, 1.0), BoundViolated);
        EnvelopeCheck rec = est_ht_bounds(fam, 1.0, 1.0);
        // H(t) e^{-t/2} = erfc(-sqrt(t/2)), increasing toward 2
        CHECK(rec.worst_t == doctest::Approx(2.0));
        CHECK(rel(rec.max_ratio, std::erfc(-1.0)) < 2e-3);
    }
}

TEST_CASE("lower growth rate: lemma bound and fitted slope") {
    SUBCASE("white noise closed values") {
        auto wn = CorrelationKernel::white_noise_1d();
        ThetaStarResult ts = theta_star(p1, 1.0, wn);
        CHECK(ts.lemma_solvable);
        CHECK(rel(ts.lemma_lower_bound, 1.0 / (6.0 * M_PI * kE * kE)) < 1e-8);
        CHECK(ts.slope_stabilized);
        const double limit = kGammaEff1 * kGammaEff1 / (M_PI * kE);
        CHECK(rel(ts.numeric_limit, limit) < 0.02);
        CHECK(ts.numeric_limit >= ts.lemma_lower_bound - 1e-6);
    }
    SUBCASE("constant kernel: slope meets the lemma value") {
        auto kern = CorrelationKernel::constant(1.0, 1);
        ThetaStarResult ts = theta_star(p1, 1.0, kern);
        CHECK(ts.lemma_solvable);
        CHECK(rel(ts.lemma_lower_bound, kGammaEff1 / kE) < 1e-9);
        CHECK(ts.slope_stabilized);
        CHECK(rel(ts.numeric_limit, kGammaEff1 / kE) < 0.02);
        CHECK(ts.numeric_limit >= ts.lemma_lower_bound - 1e-6);
    }
    SUBCASE("riesz closed values") {
        auto rz = CorrelationKernel::riesz(1.0, 3);
        ThetaStarResult ts = theta_star(p3, 1.0, rz);
        const double c = std::sqrt(2.0 / M_PI); // h_1(t) = 2 c sqrt(t)
        const double b = 2.0 * c * kGammaEff3;
        CHECK(ts.lemma_solvable);
        CHECK(rel(ts.lemma_lower_bound, b * b / (kE * kE)) < 1e-8);
        CHECK(ts.slope_stabilized);
        CHECK(rel(ts.numeric_limit, b * b / (2.0 * kE)) < 0.02);
    }
    SUBCASE("bounded ladder below the solvability level") {
        auto kern = CorrelationKernel::ornstein_uhlenbeck(2.0, 1.0, 3);
        ThetaStarResult ts = theta_star(p3, 1.0, kern); // h_1(inf) = 1
        CHECK(!ts.lemma_solvable);
        CHECK(ts.lemma_lower_bound == 0.0);
        CHECK(ts.slope_stabilized);
        CHECK(ts.numeric_limit == 0.0);
    }
}

TEST_CASE("phase classification matches the spectral verdicts") {
    SUBCASE("transition for integrable kernels in d >= 3") {
        auto kern = CorrelationKernel::ornstein_uhlenbeck(2.0, 1.0, 3);
        PhaseReport rep = phase_classify(kern, p3, 0.3, 0.3);
        CHECK(rep.verdict == PhaseVerdict::PhaseTransition);
        CHECK(rep.upsilon_zero_finite);
        REQUIRE(rep.lambda_c_lower.has_value());
        CHECK(rel(*rep.lambda_c_lower, std::sqrt(0.5)) < 1e-5);
        REQUIRE(rep.lambda_c_upper_estimate.has_value());
        const double up = std::sqrt(std::pow(2.0 * std::sqrt(3.0), 3) * kE);
        CHECK(rel(*rep.lambda_c_upper_estimate, up) < 1e-5);
        CHECK(*rep.lambda_c_upper_estimate > *rep.lambda_c_lower);
        REQUIRE(rep.theta_subcritical_bound.has_value());
        CHECK(rel(*rep.theta_subcritical_bound, 1.0 / (1.0 - 0.09)) < 1e-5);
    }
    SUBCASE("no transition for scale-free kernels or low dimension") {
        CHECK(phase_classify(CorrelationKernel::riesz(1.0, 3), p3, 1.0, 1.0)
                  .verdict == PhaseVerdict::FullyIntermittentAllLambda);
        CHECK(phase_classify(CorrelationKernel::poisson(1), p1, 1.0, 1.0)
                  .verdict == PhaseVerdict::FullyIntermittentAllLambda);
        CHECK(phase_classify(CorrelationKernel::cauchy(2), HeatParams(1.0, 2),
                             1.0, 1.0)
                  .verdict == PhaseVerdict::FullyIntermittentAllLambda);
    }
    SUBCASE("verdict agrees with the three-way equivalence report") {
        const struct { CorrelationKernel k; HeatParams p; } cases[] = {
            {CorrelationKernel::riesz(1.0, 3), p3},
            {CorrelationKernel::ornstein_uhlenbeck(2.0, 1.0, 3), p3},
            {CorrelationKernel::poisson(3), p3},
            {CorrelationKernel::constant(1.0, 1), p1},
            {CorrelationKernel::white_noise_1d(), p1},
        };
        for (const auto& tc : cases) {
            PhaseReport rep = phase_classify(tc.k, tc.p, 0.5, 0.5);
            SpectralReport sr = equivalence_report(tc.k, tc.p);
            CHECK((rep.verdict == PhaseVerdict::PhaseTransition) ==
                  !sr.upsilon_zero.divergent);
        }
    }
    SUBCASE("parameter validation") {
        auto kern = CorrelationKernel::poisson(3);
        CHECK_THROWS_AS((void)phase_classify(kern, p3, 0.0, 1.0), ConfigError);
        CHECK_THROWS_AS((void)phase_classify(kern, p3, 2.0, 1.0), ConfigError);
    }
}

TEST_CASE("heat-mass lower bounds on a centered box") {
    SUBCASE("closed values") {
        CHECK(lowind(1.0, p3, 0.0).first == 1.0);
        // c = 1 when a = sqrt(nu pi / 2)
        const double a = std::sqrt(M_PI / 2.0);
        auto [mass, integral] = lowind(a, p3, 3.0);
        CHECK(rel(mass, 0.125) < 1e-12);
        CHECK(rel(integral, 1.0) < 1e-12);
    }
    SUBCASE("d = 1 bound is dominated by the true box mass") {
        for (double nu : {0.5, 1.0})
            for (double a : {0.5, 1.0, 2.0})
                for (double t : {0.1, 1.0, 10.0}) {
                    HeatParams p(nu, 1);
                    const double exact = std::erf(a / std::sqrt(2.0 * nu * t));
                    const double low = lowind(a, p, t).first;
                    CHECK(low <= exact * (1.0 + 1e-12));
                    CHECK(low <= 1.0);
                }
    }
    SUBCASE("d = 2 integral is the logarithmic form") {
        HeatParams p2(1.0, 2);
        const double c = M_PI / 2.0; // a = 1
        CHECK(rel(lowind(1.0, p2, 2.0).second, std::log1p(2.0 * c) / c) <
              1e-12);
    }
}

TEST_CASE("exponential-moment bound dominates the squared heat solution") {
    SUBCASE("point mass at the origin") {
        auto mu = InitialMeasure::dirac_at({0.0});
        mu.with_exp_moment(0.8, 1.0);
        for (double t : {0.5, 2.0})
            for (double x : {-2.0, -0.5, 0.0, 0.5, 2.0}) {
                const double j = j0(mu, p1, t, {x});
                CHECK(j0_exp_bound(mu, p1, t, {x}) >= j * j * (1.0 - 1e-12));
            }
        // equality on the matching ray |x| = nu beta t
        const double t = 1.5, x = 0.8 * 1.5;
        const double j = j0(mu, p1, t, {x});
        CHECK(rel(j0_exp_bound(mu, p1, t, {x}), j * j) < 1e-12);
    }
    SUBCASE("two atoms with their true exponential moment") {
        auto mu = InitialMeasure::atoms({{{-1.0}, 0.5}, {{1.0}, 0.5}});
        mu.with_exp_moment(1.0, std::exp(1.0)); // int e^{|x|} mu = e
        for (double x : {-3.0, -1.0, 0.0, 0.4, 2.0}) {
            const double j = j0(mu, p1, 0.7, {x});
            CHECK(j0_exp_bound(mu, p1, 0.7, {x}) >= j * j * (1.0 - 1e-12));
        }
    }
    SUBCASE("vanishing beta reduces to the flat prefactor") {
        auto mu = InitialMeasure::dirac_at({0.0});
        mu.with_exp_moment(1e-12, 1.0);
        CHECK(rel(j0_exp_bound(mu, p1, 2.0, {0.0}),
                  std::pow(4.0 * M_PI, -1.0)) < 1e-9);
    }
    SUBCASE("missing moment data is reported") {
        auto mu = InitialMeasure::dirac_at({0.0});
        CHECK_THROWS_AS((void)j0_exp_bound(mu, p1, 1.0, {0.0}),
                        MissingExpMoment);
    }
}

TEST_CASE("front indices bracket the spreading rate") {
    SUBCASE("white noise reference values") {
        auto wn = CorrelationKernel::white_noise_1d();
        FrontReport rep = growth_indices(wn, p1, 1.0, 1.0, 1.0, true);
        CHECK(rel(rep.theta_rate, 0.5) < 1e-7);
        CHECK(rel(rep.lower_index_lemma, 0.0847335) < 1e-6);
        CHECK(rel(rep.upper_index, 0.75) < 1e-7);
        REQUIRE(rep.upper_index_alt.has_value());
        CHECK(rel(*rep.upper_index_alt, 1.0) < 1e-7);
        REQUIRE(rep.optimized_upper.has_value());
        CHECK(rel(*rep.optimized_upper, std::sqrt(0.5)) < 1e-7);
        CHECK(rep.lower_index <= rep.upper_index);
        CHECK(rep.lower_index_lemma <= rep.lower_index + 1e-9);
    }
    SUBCASE("interval ordering across the catalog") {
        const struct {
            CorrelationKernel k;
            HeatParams p;
            double lip, Lip, beta;
        } cases[] = {
            {CorrelationKernel::constant(1.0, 1), p1, 0.6, 0.6, 1.0},
            {CorrelationKernel::riesz(1.0, 3), p3, 0.5, 0.8, 1.2},
            {CorrelationKernel::ornstein_uhlenbeck(2.0, 1.0, 3), p3, 0.4, 0.9, 1.0},
            {CorrelationKernel::poisson(3), p3, 0.3, 0.5, 0.7},
            {CorrelationKernel::white_noise_1d(), HeatParams(2.0, 1), 0.7, 1.1, 0.9},
        };
        for (const auto& tc : cases) {
            FrontReport rep = growth_indices(tc.k, tc.p, tc.lip, tc.Lip, tc.beta);
            CHECK(rep.lower_index >= 0.0);
            CHECK(rep.lower_index <= rep.upper_index + 1e-12);
            CHECK(rep.theta_star_numeric >= rep.theta_star_lemma - 1e-6);
        }
    }
    SUBCASE("degenerate noise") {
        auto wn = CorrelationKernel::white_noise_1d();
        FrontReport rep = growth_indices(wn, p1, 0.0, 0.0, 1.0);
        CHECK(rep.lower_index == 0.0);
        CHECK(rep.theta_rate == 0.0);
        CHECK(rep.notes.find("degenerate") != std::string::npos);
    }
    SUBCASE("parameter validation") {
        auto wn = CorrelationKernel::white_noise_1d();
        CHECK_THROWS_AS((void)growth_indices(wn, p1, 1.0, 0.5, 1.0), ConfigError);
        CHECK_THROWS_AS((void)growth_indices(wn, p1, 0.5, 1.0, 0.0), ConfigError);
    }
}

TEST_CASE("long-horizon rate fitting reproduces closed rates") {
    CHECK(rel(lyapunov_rate(CorrelationKernel::white_noise_1d(), p1, 1.0), 0.5) <
          1e-3);
    CHECK(rel(lyapunov_rate(CorrelationKernel::riesz(1.0, 3), p3, 1.0), 2.0) <
          1e-3);
    CHECK(rel(lyapunov_rate(CorrelationKernel::constant(1.0, 1), p1, 0.7), 0.7) <
          1e-9);
    CHECK_THROWS_AS(
        (void)lyapunov_rate(CorrelationKernel::white_noise_1d(), p1, 1.0, 5.0, 2.0),
        ConfigError);
}

TEST_CASE("reports serialize to flat key-value rows") {
    auto kern = CorrelationKernel::ornstein_uhlenbeck(2.0, 1.0, 3);
    auto kv = to_kv(phase_classify(kern, p3, 0.3, 0.3));
    REQUIRE(!kv.empty());
    CHECK(kv[0].first == "verdict");
    CHECK(kv[0].second == "PHASE_TRANSITION");
    bool saw_lower = false;
    for (const auto& [k, v] : kv)
        if (k == "lambda_c_lower") {
            saw_lower = true;
            CHECK(v.substr(0, 8) == "0.707106");
        }
    CHECK(saw_lower);
    auto fkv = to_kv(growth_indices(CorrelationKernel::white_noise_1d(), p1,
                                    1.0, 1.0, 1.0));
    bool saw_opt = false;
    for (const auto& [k, v] : fkv)
        if (k == "optimized_upper") {
            saw_opt = true;
            CHECK(v == "NONE");
        }
    CHECK(saw_opt);
}
