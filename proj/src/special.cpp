#include "she/special.hpp"

#include "she/errors.hpp"

#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>

namespace she {

namespace {

constexpr long double kPiL = 3.141592653589793238462643383279503L;

// sin(pi x) with argument reduction, accurate near the zeros
long double sinpi_l(long double x) {
    const long double n = nearbyintl(x);
    const long double r = x - n;
    const long double s = sinl(kPiL * r);
    return (static_cast<long long>(n) % 2 == 0) ? s : -s;
}

// 1/Gamma(x) in extended precision, zero at the poles
long double recip_gamma_l(long double x) {
    if (x > 0.5L) return expl(-lgammal(x));
    if (x <= 0.0L && x == nearbyintl(x)) return 0.0L;
    // reflection: 1/Gamma(x) = sin(pi x) Gamma(1-x) / pi
    return sinpi_l(x) * expl(lgammal(1.0L - x)) / kPiL;
}

struct SeriesResult {
    long double sum;
    long double max_term;
};

// brute-force power series sum_{n>=0} z^n / Gamma(alpha n + beta)
SeriesResult ml_series(double alpha, double beta, double z) {
    if (z == 0.0) return {recip_gamma_l(beta), 1.0L};
    const long double lz = logl(fabsl(static_cast<long double>(z)));
    const bool neg = z < 0.0;
    long double sum = 0.0L;
    long double comp = 0.0L; // Kahan compensation
    long double mx = 0.0L;
    int consecutive_small = 0;
    const int cap = 200000;
    for (int n = 0; n < cap; ++n) {
        const long double arg = static_cast<long double>(alpha) * n + beta;
        long double term = 0.0L;
        bool have_term = false;
        bool negative_gamma = false;
        long double lt = 0.0L;
        if (arg > 0.5L) {
            // stay in log space: exponentiating 1/Gamma first would
            // underflow long before n * log|z| - lgamma does
            lt = n * lz - lgammal(arg);
            have_term = true;
        } else {
            const long double rg = recip_gamma_l(arg);
            if (rg != 0.0L) { // zero means a gamma pole, term vanishes
                lt = n * lz + logl(fabsl(rg));
                have_term = true;
                negative_gamma = rg < 0.0L;
            }
        }
        if (have_term) {
            if (lt > 11300.0L) {
                if (!neg) return {std::numeric_limits<long double>::infinity(), mx};
                throw NonconvergentSeries(
                    "mittag_leffler: series term overflows extended precision");
            }
            term = expl(lt);
            if ((neg && n % 2 == 1) != negative_gamma) term = -term;
        }
        const long double yk = term - comp;
        const long double tk = sum + yk;
        comp = (tk - sum) - yk;
        sum = tk;
        mx = std::max(mx, fabsl(term));
        if (fabsl(term) <= 1e-24L * (fabsl(sum) + 1e-300L) && n >= 2) {
            if (++consecutive_small >= 3) return {sum, mx};
        } else {
            consecutive_small = 0;
        }
    }
    throw NonconvergentSeries("mittag_leffler: series term cap exceeded");
}

// sum_{k>=1} z^{-k} / Gamma(beta - alpha k) with optimal truncation
double asym_correction(double alpha, double beta, double z) {
    double acc = 0.0;
    double prev = std::numeric_limits<double>::infinity();
    double zp = 1.0;
    for (int k = 1; k <= 25; ++k) {
        zp /= z;
        const double term = zp * static_cast<double>(recip_gamma_l(beta - alpha * k));
        if (term == 0.0) continue; // reciprocal-gamma pole, not a converged tail
        if (std::abs(term) > prev) break;
        acc += term;
        prev = std::abs(term);
        if (std::abs(term) < 1e-17 * (std::abs(acc) + 1e-300)) break;
    }
    return acc;
}

double ml_asymptotic_positive(double alpha, double beta, double z) {
    const double u = std::pow(z, 1.0 / alpha);
    const double lead_log = u + (1.0 - beta) / alpha * std::log(z) - std::log(alpha);
    const double lead = lead_log > 709.0 ? std::numeric_limits<double>::infinity()
                                         : std::exp(lead_log);
    return lead - asym_correction(alpha, beta, z);
}

bool negative_asymptotic_valid(double alpha, double z) {
    return alpha <= 1.95 && z <= -5.0;
}

} // namespace

MittagLefflerParams::MittagLefflerParams(double a, double b, double r)
    : alpha(a), beta(b), switch_radius(r) {
    if (!(a > 0.0) || a > 2.0)
        throw ConfigError("MittagLefflerParams: alpha must be in (0, 2]");
    if (!std::isfinite(b)) throw ConfigError("MittagLefflerParams: beta must be finite");
    if (!(r > 0.0))
        throw ConfigError("MittagLefflerParams: switch_radius must be positive");
}

double mittag_leffler(const MittagLefflerParams& params, double z) {
    const double a = params.alpha;
    const double b = params.beta;
    if (!std::isfinite(z)) throw ConfigError("mittag_leffler: z must be finite");
    if (a == 1.0 && b == 1.0) return std::exp(z); // exact reduction
    if (z > params.switch_radius) return ml_asymptotic_positive(a, b, z);
    if (z < -params.switch_radius && negative_asymptotic_valid(a, z)) {
        const double v = -asym_correction(a, b, z);
        // every algebraic term can sit on a gamma pole (e.g. alpha = 1);
        // then the expansion carries no information and the series must decide
        if (v != 0.0) return v;
    }
    SeriesResult s = ml_series(a, b, z);
    if (z < 0.0 && s.max_term > fabsl(s.sum) * 1e12L) {
        // catastrophic alternating cancellation: fall back to the
        // algebraic-decay expansion when it applies
        if (negative_asymptotic_valid(a, z)) {
            const double v = -asym_correction(a, b, z);
            if (v != 0.0) return v;
        }
        if (s.max_term > fabsl(s.sum) * 1e15L)
            throw NonconvergentSeries(
                "mittag_leffler: series cancellation exhausts extended precision");
    }
    return static_cast<double>(s.sum);
}

double log_mittag_leffler(const MittagLefflerParams& params, double z) {
    if (z < 0.0) throw ConfigError("log_mittag_leffler: requires z >= 0");
    if (params.alpha == 1.0 && params.beta == 1.0) return z;
    if (z <= params.switch_radius) {
        // keep extended precision here: the series sum can exceed double
        // range long before its logarithm does
        SeriesResult s = ml_series(params.alpha, params.beta, z);
        if (!(s.sum > 0.0L))
            throw NumericError("log_mittag_leffler: function value is not positive");
        return static_cast<double>(logl(s.sum));
    }
    const double a = params.alpha;
    const double b = params.beta;
    const double u = std::pow(z, 1.0 / a);
    const double base = (1.0 - b) / a * std::log(z) - std::log(a);
    double rel = 0.0;
    if (u < 700.0)
        rel = asym_correction(a, b, z) * a * std::pow(z, (b - 1.0) / a) * std::exp(-u);
    return u + base + std::log1p(-rel);
}

double reciprocal_gamma(double x) {
    return static_cast<double>(recip_gamma_l(static_cast<long double>(x)));
}

double upper_incomplete_gamma(double s, double x) {
    if (!(x > 0.0)) throw ConfigError("upper_incomplete_gamma: requires x > 0");
    if (s > 0.0) return boost::math::tgamma(s, x);
    if (s == std::rint(s)) {
        // Gamma(-m, x) = x^{-m} E_{m+1}(x)
        const int m = static_cast<int>(-s);
        return std::pow(x, s) * boost::math::expint(static_cast<unsigned>(m) + 1, x);
    }
    // shift to positive order, then recurse back down:
    // Gamma(a-1, x) = (Gamma(a, x) - x^{a-1} e^{-x}) / (a-1)
    const int m = static_cast<int>(std::ceil(-s));
    double g = boost::math::tgamma(s + m, x);
    const double ex = std::exp(-x);
    for (int j = m; j >= 1; --j) {
        const double a1 = s + j - 1.0;
        g = (g - std::pow(x, a1) * ex) / a1;
    }
    return g;
}

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x * M_SQRT1_2);
}

double erfcx(double x) {
    if (x <= 20.0) return std::exp(x * x) * std::erfc(x);
    // asymptotic: erfcx(x) = 1/(x sqrt(pi)) sum_k (-1)^k (2k-1)!! / (2x^2)^k
    const double inv2x2 = 1.0 / (2.0 * x * x);
    double term = 1.0;
    double acc = 1.0;
    for (int k = 1; k <= 8; ++k) {
        term *= -(2.0 * k - 1.0) * inv2x2;
        acc += term;
        if (std::abs(term) < 1e-18) break;
    }
    return acc / (x * std::sqrt(M_PI));
}

} // namespace she
