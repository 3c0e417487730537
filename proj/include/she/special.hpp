#pragma once

namespace she {

/// Parameters of the two-parameter Mittag-Leffler function E_{alpha,beta}.
/// alpha must lie in (0, 2]; the asymptotic branches require alpha < 2, so
/// for alpha close to 2 only the power series is used. switch_radius controls
/// where evaluation switches from the series to the asymptotic expansions.
struct MittagLefflerParams {
    double alpha;
    double beta = 1.0;
    double switch_radius = 25.0;

    MittagLefflerParams(double a, double b = 1.0, double r = 25.0);
};

/// E_{alpha,beta}(z) on the real axis. Power series in extended precision for
/// |z| <= switch_radius; the exponential asymptotic expansion for large
/// positive z; the algebraic-decay expansion for large negative z (alpha well
/// below 2). May return +inf when the true value overflows double range.
double mittag_leffler(const MittagLefflerParams& params, double z);

/// log E_{alpha,beta}(z) for z >= 0, remaining finite where E itself
/// overflows; used for Lyapunov-slope fits at large times.
double log_mittag_leffler(const MittagLefflerParams& params, double z);

/// 1/Gamma(x) with the convention 1/Gamma = 0 at the poles x = 0, -1, -2, ...
double reciprocal_gamma(double x);

/// Upper incomplete gamma Gamma(s, x) = int_x^inf t^{s-1} e^{-t} dt for
/// x > 0 and any real s, including negative s.
double upper_incomplete_gamma(double s, double x);

/// Standard normal distribution function, absolute error below 1e-12.
double normal_cdf(double x);

/// Scaled complementary error function e^{x^2} erfc(x), stable for large x.
double erfcx(double x);

} // namespace she
