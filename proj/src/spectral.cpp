#include "she/spectral.hpp"

#include "she/errors.hpp"
#include "she/quadrature.hpp"
#include "she/special.hpp"

#include <cmath>
#include <functional>

#include <boost/math/special_functions/gamma.hpp>

namespace she {

namespace {

// Divergence-detection heuristics (documented in the module notes).
constexpr double kValueCap = 1e12;      // accumulated value above this diverges
constexpr double kGrowthPerStep = 0.01; // relative growth still counted as moving
constexpr int kMaxHalvings = 45;
constexpr int kMaxOctaves = 80;
constexpr int kGrowthStreak = 6;

// Integrates fn over [0, inf) by a unit head plus octave segments with
// divergence detection. fn ~ t^head_exponent near 0 (head_exponent in (-1,0]).
LimitValue octave_limit(const std::function<double(double)>& fn,
                        double head_exponent) {
    double acc;
    if (head_exponent < 0.0) {
        acc = integrate_singular(
            [&](double t) { return fn(t) * std::pow(t, -head_exponent); }, 0.0, 1.0,
            SingularWeight(head_exponent));
    } else {
        acc = integrate(fn, 0.0, 1.0);
    }
    double left = 1.0;
    double prev_seg = -1.0;
    int negligible = 0;
    int growing = 0;
    for (int j = 0; j < kMaxOctaves; ++j) {
        const double seg = integrate(fn, left, 2.0 * left);
        acc += seg;
        left *= 2.0;
        if (!(acc < kValueCap)) return LimitValue::diverged();
        const double floor = std::max(1e-14, 1e-10 * std::abs(acc));
        if (std::abs(seg) <= floor) {
            if (++negligible >= 2) return LimitValue::finite(acc);
            growing = 0;
        } else {
            negligible = 0;
            // non-decaying octave contributions signal a divergent tail
            if (prev_seg >= 0.0 && seg >= 0.999 * prev_seg) {
                if (++growing >= kGrowthStreak) return LimitValue::diverged();
            } else {
                growing = 0;
            }
        }
        prev_seg = seg;
    }
    return LimitValue::diverged(); // horizon exhausted without settling
}

double upsilon_via_laplace(const CorrelationKernel& kernel, double beta) {
    HeatParams unit(1.0, kernel.dim);
    return 0.5 * laplace_of_k(kernel, unit, 0.5 * beta);
}

double riesz_constant_nu1(const CorrelationKernel& kernel) {
    return std::pow(2.0, -0.5 * kernel.alpha) *
           boost::math::tgamma(0.5 * (kernel.dim - kernel.alpha)) /
           boost::math::tgamma(0.5 * kernel.dim);
}

} // namespace

double upsilon(const CorrelationKernel& kernel, double beta) {
    if (!(beta > 0.0)) throw ConfigError("upsilon: requires beta > 0");
    const int d = kernel.dim;
    switch (kernel.variant) {
    case KernelVariant::WhiteNoise1D: return 0.5 / std::sqrt(beta);
    case KernelVariant::Constant: return kernel.level / beta;
    case KernelVariant::Riesz: {
        const double a = kernel.alpha;
        return 0.5 * riesz_constant_nu1(kernel) * boost::math::tgamma(1.0 - 0.5 * a) *
               std::pow(0.5 * beta, 0.5 * a - 1.0);
    }
    case KernelVariant::OrnsteinUhlenbeck: {
        if (kernel.alpha != 2.0) return upsilon_via_laplace(kernel, beta);
        const double x = 0.25 * beta / kernel.c;
        // the incomplete-gamma form degrades once exp(x) overwhelms it
        if (x > 600.0) return upsilon_via_laplace(kernel, beta);
        return std::pow(4.0 * kernel.c, -0.5 * d) * std::exp(x) *
               std::pow(beta, 0.5 * d - 1.0) *
               upper_incomplete_gamma(1.0 - 0.5 * d, x);
    }
    default: return upsilon_via_laplace(kernel, beta);
    }
}

double laplace_of_k(const CorrelationKernel& kernel, const HeatParams& p,
                    double beta) {
    if (!(beta > 0.0)) throw ConfigError("laplace_of_k: requires beta > 0");
    const double head_exponent = kernel_singularity_exponent(kernel);
    auto fn = [&](double t) { return std::exp(-beta * t) * k_of_t(kernel, p, t); };
    double head;
    if (head_exponent < 0.0) {
        head = integrate_singular(
            [&](double t) { return fn(t) * std::pow(t, -head_exponent); }, 0.0, 1.0,
            SingularWeight(head_exponent));
    } else {
        head = integrate(fn, 0.0, 1.0);
    }
    return head + integrate_to_inf(fn, 1.0);
}

LimitValue upsilon_zero(const CorrelationKernel& kernel) {
    double v_prev2 = 0.0, v_prev = 0.0;
    double ext_prev = 0.0;
    bool have_ext = false;
    int settled = 0;
    double v = 0.0;
    for (int k = 0; k <= kMaxHalvings; ++k) {
        v = upsilon(kernel, std::pow(2.0, -k));
        if (!(v < kValueCap)) return LimitValue::diverged();
        if (k >= 1) {
            const double change = std::abs(v - v_prev) / std::max(std::abs(v), 1e-300);
            if (change < 1e-9) return LimitValue::finite(v);
            if (k >= 2) {
                // Aitken extrapolation of the geometric approach to the limit
                const double d1 = v_prev - v_prev2;
                const double d2 = v - v_prev;
                double ext = v;
                if (std::abs(d2) < std::abs(d1) && d1 != d2)
                    ext = v + d2 * d2 / (d1 - d2);
                if (have_ext && std::abs(ext - ext_prev) <
                                    1e-7 * std::max(std::abs(ext), 1e-300)) {
                    if (++settled >= 2) return LimitValue::finite(ext);
                } else {
                    settled = 0;
                }
                ext_prev = ext;
                have_ext = true;
            }
        }
        v_prev2 = v_prev;
        v_prev = v;
    }
    // horizon exhausted: still growing faster than the threshold => divergent
    const double last_change = std::abs(v - v_prev2) / (2.0 * std::max(std::abs(v), 1e-300));
    if (last_change > kGrowthPerStep) return LimitValue::diverged();
    return LimitValue::finite(have_ext ? ext_prev : v);
}

LimitValue iff2_integral(const CorrelationKernel& kernel) {
    const int d = kernel.dim;
    if (d <= 2) return LimitValue::diverged();
    if (kernel.is_radial()) {
        // int f(z) |z|^{2-d} dz = S_{d-1} int_0^inf f(r) r dr
        const bool riesz = kernel.variant == KernelVariant::Riesz;
        const double head_exponent = riesz ? std::min(0.0, 1.0 - kernel.alpha) : 0.0;
        const LimitValue inner = octave_limit(
            [&](double r) { return eval_f_radial(kernel, r) * r; }, head_exponent);
        if (inner.divergent) return LimitValue::diverged();
        return LimitValue::finite(sphere_surface(d) * inner.value);
    }
    // non-radial kernels go through the subordination identity
    // int f(z) |z|^{2-d} dz = 2 pi^{d/2} / Gamma(d/2 - 1) * int_0^inf k_1(s) ds
    HeatParams unit(1.0, d);
    const LimitValue inner =
        octave_limit([&](double s) { return k_of_t(kernel, unit, s); },
                     kernel_singularity_exponent(kernel));
    if (inner.divergent) return LimitValue::diverged();
    const double factor =
        2.0 * std::pow(M_PI, 0.5 * d) / boost::math::tgamma(0.5 * d - 1.0);
    return LimitValue::finite(factor * inner.value);
}

namespace {

LimitValue h1_limit_impl(const CorrelationKernel& kernel, const HeatParams& p,
                         const LimitValue& ups0) {
    const LimitValue direct =
        octave_limit([&](double t) { return k_of_t(kernel, p, t); },
                     kernel_singularity_exponent(kernel));
    if (direct.divergent != ups0.divergent)
        throw InconsistentLimits(
            "h1_limit: direct k-integral and Upsilon(0) route disagree on divergence");
    if (direct.divergent) return LimitValue::diverged();
    const double via_upsilon = 2.0 / p.nu * ups0.value;
    const double rel =
        std::abs(direct.value - via_upsilon) / std::max(std::abs(direct.value), 1e-300);
    if (rel > 0.01)
        throw InconsistentLimits("h1_limit: direct and spectral routes differ beyond 1%");
    return LimitValue::finite(direct.value);
}

} // namespace

LimitValue h1_limit(const CorrelationKernel& kernel, const HeatParams& p) {
    return h1_limit_impl(kernel, p, upsilon_zero(kernel));
}

SpectralReport equivalence_report(const CorrelationKernel& kernel,
                                  const HeatParams& p) {
    SpectralReport report;
    const double betas[] = {8.0, 4.0, 2.0, 1.0, 0.5, 0.25};
    for (double b : betas) report.upsilon_at.emplace_back(b, upsilon(kernel, b));
    for (std::size_t i = 1; i < report.upsilon_at.size(); ++i) {
        if (report.upsilon_at[i].second < report.upsilon_at[i - 1].second)
            throw EquivalenceViolation("equivalence_report: Upsilon not nonincreasing in beta");
    }
    try {
        upsilon(kernel, 1.0);
        report.dalang_ok = true;
    } catch (const DivergentIntegral&) {
        report.dalang_ok = false;
    }
    report.upsilon_zero = upsilon_zero(kernel);
    report.iff2_value = iff2_integral(kernel);
    report.h1_limit = h1_limit_impl(kernel, p, report.upsilon_zero);
    if (report.iff2_value.divergent != report.upsilon_zero.divergent ||
        report.h1_limit.divergent != report.upsilon_zero.divergent)
        throw EquivalenceViolation(
            "equivalence_report: the three equivalent conditions disagree");
    return report;
}

} // namespace she
