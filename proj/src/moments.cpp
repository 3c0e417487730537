#include "she/moments.hpp"

#include "she/errors.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

namespace she {

namespace {

constexpr int kOrderCap = 512;

double sq_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double c : v) s += c * c;
    return s;
}

void check_dim(const std::vector<double>& v, int dim, const char* what) {
    if (static_cast<int>(v.size()) != dim)
        throw ConfigError(std::string(what) + ": point dimension mismatch");
}

// T_{nu/4}(tau, y) = exp(-4 y^2 / (nu tau)) evaluated radially
double t_quarter(double nu, double tau, double y) {
    if (y == 0.0) return 1.0;
    if (!(tau > 0.0)) return 0.0;
    return std::exp(-4.0 * y * y / (nu * tau));
}

// limit of k(tau) tau^{-p} as tau -> 0 with p the kernel's endpoint exponent
double k_regularized_at0(const CorrelationKernel& kernel, const HeatParams& p) {
    switch (kernel.variant) {
    case KernelVariant::WhiteNoise1D: return std::pow(2.0 * M_PI * p.nu, -0.5);
    case KernelVariant::Riesz:
        return std::pow(2.0 * p.nu, -0.5 * kernel.alpha) *
               boost::math::tgamma(0.5 * (kernel.dim - kernel.alpha)) /
               boost::math::tgamma(0.5 * kernel.dim);
    default: return eval_f(kernel, std::vector<double>(kernel.dim, 0.0));
    }
}

// node samples of the regularized left factor k(tau) tau^{-p} T_{nu/4}(tau, y)
std::vector<double> ladder_left_factor(const CorrelationKernel& kernel,
                                       const HeatParams& p, double y,
                                       const TimeGrid& grid) {
    const double pexp = kernel_singularity_exponent(kernel);
    std::vector<double> left(static_cast<std::size_t>(grid.size()));
    left[0] = k_regularized_at0(kernel, p) * (y == 0.0 ? 1.0 : 0.0);
    for (int j = 1; j < grid.size(); ++j) {
        const double tau = grid.node(j);
        double v = k_of_t(kernel, p, tau);
        if (pexp < 0.0) v *= std::pow(tau, -pexp);
        left[static_cast<std::size_t>(j)] = v * t_quarter(p.nu, tau, y);
    }
    return left;
}

double interp_row(const std::vector<double>& row, const TimeGrid& grid, double t) {
    if (!(t >= 0.0) || t > grid.t_max * (1.0 + 1e-12))
        throw ConfigError("HFamily: time outside the grid range");
    const double pos = std::min(t, grid.t_max) / grid.dt();
    const int j = std::min(static_cast<int>(pos), grid.n_steps - 1);
    const double frac = pos - j;
    const auto ju = static_cast<std::size_t>(j);
    return row[ju] + frac * (row[ju + 1] - row[ju]);
}

} // namespace

double HFamily::h(int n, double t) const {
    if (n < 0 || n > max_order()) throw ConfigError("HFamily: order out of range");
    return interp_row(values[static_cast<std::size_t>(n)], grid, t);
}

int HFamily::node_index(double t) const {
    const double pos = t / grid.dt();
    const int j = static_cast<int>(std::lround(pos));
    if (j < 0 || j > grid.n_steps ||
        std::abs(t - grid.node(j)) > 1e-9 * std::max(1.0, grid.t_max))
        throw ConfigError("HFamily: time is not a grid node");
    return j;
}

HFamily compute_h_family(const CorrelationKernel& kernel, const HeatParams& p,
                         double y, const TimeGrid& grid, int max_order) {
    if (max_order < 1) throw ConfigError("compute_h_family: max_order must be >= 1");
    if (kernel.dim != p.dim)
        throw ConfigError("compute_h_family: kernel and heat dimensions differ");
    HFamily fam{kernel, p, std::abs(y), grid, {}};
    fam.values.reserve(static_cast<std::size_t>(max_order) + 1);
    fam.values.emplace_back(static_cast<std::size_t>(grid.size()), 1.0);
    extend_h_family(fam, max_order);
    return fam;
}

void extend_h_family(HFamily& fam, int new_max_order) {
    if (new_max_order <= fam.max_order()) return;
    const SingularWeight w(kernel_singularity_exponent(fam.kernel));
    const std::vector<double> left =
        ladder_left_factor(fam.kernel, fam.p, fam.y, fam.grid);
    while (fam.max_order() < new_max_order)
        fam.values.push_back(convolve_on_grid(fam.grid, left, w, fam.values.back()));
}

SeriesValue h_series(HFamily& fam, double gamma, double t, double tol) {
    if (!(gamma >= 0.0)) throw ConfigError("h_series: gamma must be >= 0");
    const int j = fam.node_index(t);
    const auto ju = static_cast<std::size_t>(j);
    SeriesValue out;
    double g_pow = 1.0;
    double prev_term = 0.0;
    double ratio = std::numeric_limits<double>::infinity();
    int n = 0;
    while (true) {
        if (n > fam.max_order()) {
            if (fam.max_order() >= kOrderCap)
                throw TruncationNotConverged(
                    "h_series: ladder order cap reached before the tail settled",
                    out.value, prev_term * 10.0);
            extend_h_family(fam, std::min(2 * fam.max_order(), kOrderCap));
        }
        const double term = g_pow * fam.values[static_cast<std::size_t>(n)][ju];
        out.value += term;
        out.terms = n + 1;
        if (n >= 1) {
            if (term == 0.0) { // the ladder vanishes identically from here on
                out.tail_bound = 0.0;
                return out;
            }
            ratio = term / prev_term;
            if (ratio < 0.9) {
                out.tail_bound = term * ratio / (1.0 - ratio);
                if (out.tail_bound <= tol * std::max(out.value, 1e-300)) return out;
            }
        }
        prev_term = term;
        g_pow *= gamma;
        if (gamma == 0.0) { // only h_0 survives
            out.tail_bound = 0.0;
            return out;
        }
        ++n;
        if (n > kOrderCap)
            throw TruncationNotConverged(
                "h_series: no geometric decay within the order cap", out.value,
                prev_term * 10.0);
    }
}

namespace {

bool has_closed_h1(const CorrelationKernel& kernel) {
    switch (kernel.variant) {
    case KernelVariant::Constant:
    case KernelVariant::WhiteNoise1D:
    case KernelVariant::Riesz: return true;
    case KernelVariant::OrnsteinUhlenbeck: return kernel.alpha == 2.0;
    default: return false;
    }
}

double h1_eval(const CorrelationKernel& kernel, const HeatParams& p, double t,
               double y) {
    if (y == 0.0 && has_closed_h1(kernel)) return h1_closed(kernel, p, t);
    return h1(kernel, p, t, y);
}

// shared core of h_star / log_h_star: returns log of the sum and the sum's
// linear value when representable
struct StarSum {
    double log_value;
    SeriesValue linear;
};

StarSum h_star_core(const CorrelationKernel& kernel, const HeatParams& p,
                    double gamma, double t, double y) {
    if (!(gamma >= 0.0)) throw ConfigError("h_star: gamma must be >= 0");
    if (!(t > 0.0)) throw NonpositiveTime("h_star: t must be positive");
    // streaming log-sum-exp over log terms n (log gamma + log h_1(t/n, y))
    double lmax = 0.0; // n = 0 term is 1
    double scaled = 1.0;
    int small_streak = 0;
    int terms = 1;
    const double lg = std::log(gamma);
    // no fixed order cap: the dominant order grows linearly with t, so the
    // loop runs until terms fall away from the running maximum
    constexpr int kHardCap = 5000000;
    int n = 1;
    for (; n <= kHardCap; ++n) {
        const double h1n = h1_eval(kernel, p, t / n, y);
        double lt;
        if (h1n <= 0.0) {
            lt = -std::numeric_limits<double>::infinity();
        } else {
            lt = n * (lg + std::log(h1n));
        }
        if (std::isfinite(lt)) {
            if (lt > lmax) {
                scaled = scaled * std::exp(lmax - lt) + 1.0;
                lmax = lt;
            } else {
                scaled += std::exp(lt - lmax);
            }
            ++terms;
        }
        if (lt < lmax + std::log(1e-16)) {
            if (++small_streak >= 10) break;
        } else {
            small_streak = 0;
        }
    }
    if (n > kHardCap)
        throw TruncationNotConverged("h_star: series did not settle",
                                     std::exp(lmax) * scaled, 0.0);
    StarSum out;
    out.log_value = lmax + std::log(scaled);
    out.linear.value = std::exp(out.log_value);
    out.linear.terms = terms;
    out.linear.tail_bound = out.linear.value * 1e-15;
    return out;
}

} // namespace

SeriesValue h_star(const CorrelationKernel& kernel, const HeatParams& p,
                   double gamma, double t, double y) {
    return h_star_core(kernel, p, gamma, t, y).linear;
}

double log_h_star(const CorrelationKernel& kernel, const HeatParams& p,
                  double gamma, double t, double y) {
    return h_star_core(kernel, p, gamma, t, y).log_value;
}

double h1(const CorrelationKernel& kernel, const HeatParams& p, double t,
          double y) {
    if (!(t > 0.0)) throw NonpositiveTime("h1: t must be positive");
    if (kernel.dim != p.dim) throw ConfigError("h1: dimension mismatch");
    const double pexp = kernel_singularity_exponent(kernel);
    const double ay = std::abs(y);
    auto reg = [&](double s) {
        double v = k_of_t(kernel, p, s);
        if (pexp < 0.0) v *= std::pow(s, -pexp);
        return v * t_quarter(p.nu, s, ay);
    };
    return integrate_singular(reg, 0.0, t, SingularWeight(pexp));
}

double h1_closed(const CorrelationKernel& kernel, const HeatParams& p, double t) {
    if (!(t > 0.0)) throw NonpositiveTime("h1_closed: t must be positive");
    const double nu = p.nu;
    const int d = kernel.dim;
    switch (kernel.variant) {
    case KernelVariant::Constant: return kernel.level * t;
    case KernelVariant::WhiteNoise1D: return std::sqrt(2.0 * t / (M_PI * nu));
    case KernelVariant::Riesz: {
        const double b = 1.0 - 0.5 * kernel.alpha;
        const double c = std::pow(2.0 * nu, -0.5 * kernel.alpha) *
                         boost::math::tgamma(0.5 * (d - kernel.alpha)) /
                         boost::math::tgamma(0.5 * d);
        return c * std::pow(t, b) / b;
    }
    case KernelVariant::OrnsteinUhlenbeck: {
        if (kernel.alpha != 2.0) break;
        const double cn = kernel.c * nu;
        const double u = 1.0 + 2.0 * cn * t;
        if (d == 1) return (std::sqrt(u) - 1.0) / cn;
        if (d == 2) return std::log(u) / (2.0 * cn);
        return (1.0 - std::pow(u, 1.0 - 0.5 * d)) / ((d - 2) * cn);
    }
    default: break;
    }
    throw ConfigError("h1_closed: no closed form for this kernel");
}

namespace {

// log h_n(t, 0) for the fully closed ladders, as a function of n
double log_h_term(const CorrelationKernel& kernel, const HeatParams& p, int n,
                  double t) {
    switch (kernel.variant) {
    case KernelVariant::Constant:
        return n * std::log(kernel.level * t) - std::lgamma(n + 1.0);
    case KernelVariant::WhiteNoise1D: {
        const double c = std::pow(2.0 * M_PI * p.nu, -0.5);
        return n * std::log(c * std::sqrt(M_PI * t)) - std::lgamma(0.5 * n + 1.0);
    }
    case KernelVariant::Riesz: {
        const double b = 1.0 - 0.5 * kernel.alpha;
        const double c = std::pow(2.0 * p.nu, -0.5 * kernel.alpha) *
                         boost::math::tgamma(0.5 * (kernel.dim - kernel.alpha)) /
                         boost::math::tgamma(0.5 * kernel.dim);
        return n * (std::log(c) + b * std::log(t) + std::lgamma(b)) -
               std::lgamma(n * b + 1.0);
    }
    default:
        throw ConfigError("log_h_closed: kernel has no closed ladder");
    }
}

} // namespace

double log_h_closed(const CorrelationKernel& kernel, const HeatParams& p, int n,
                    double t) {
    if (n < 0) throw ConfigError("log_h_closed: order must be >= 0");
    if (!(t > 0.0)) throw NonpositiveTime("log_h_closed: t must be positive");
    if (n == 0) return 0.0;
    return log_h_term(kernel, p, n, t);
}

double log_h_series_closed(const CorrelationKernel& kernel, const HeatParams& p,
                           double gamma, double t) {
    if (!(gamma > 0.0)) throw ConfigError("log_h_series_closed: gamma must be > 0");
    if (!(t > 0.0)) throw NonpositiveTime("log_h_series_closed: t must be positive");
    const double lg = std::log(gamma);
    double lmax = 0.0; // n = 0 contributes 1
    double scaled = 1.0;
    int falling = 0;
    double prev_lt = 0.0;
    for (int n = 1; n < 2000000; ++n) {
        const double lt = n * lg + log_h_term(kernel, p, n, t);
        if (lt > lmax) {
            scaled = scaled * std::exp(lmax - lt) + 1.0;
            lmax = lt;
        } else {
            scaled += std::exp(lt - lmax);
        }
        if (n > 1 && lt < prev_lt) {
            if (++falling >= 5 && lt < lmax - 40.0) return lmax + std::log(scaled);
        } else {
            falling = 0;
        }
        prev_lt = lt;
    }
    throw TruncationNotConverged("log_h_series_closed: series did not pass its peak",
                                 lmax, lmax);
}

double l0(const HeatParams& p, double t, const std::vector<double>& x,
          const std::vector<double>& xp) {
    return heat_kernel(p, t, x) * heat_kernel(p, t, xp);
}

double f_heat_inner(const CorrelationKernel& kernel, const HeatParams& p,
                    double tau, const std::vector<double>& m) {
    if (!(tau > 0.0)) throw NonpositiveTime("f_heat_inner: tau must be positive");
    check_dim(m, p.dim, "f_heat_inner");
    const double m2 = sq_norm(m);
    switch (kernel.variant) {
    case KernelVariant::Constant: return kernel.level;
    case KernelVariant::WhiteNoise1D:
        return heat_kernel_r(p.nu, 1, tau, std::sqrt(m2));
    case KernelVariant::OrnsteinUhlenbeck:
        if (kernel.alpha == 2.0) {
            const double den = 1.0 + 2.0 * kernel.c * p.nu * tau;
            return std::pow(den, -0.5 * p.dim) * std::exp(-kernel.c * m2 / den);
        }
        break;
    default: break;
    }
    if (m2 == 0.0) return k_of_t(kernel, p, tau); // same integral, recentered
    if (p.dim != 1)
        throw ConfigError(
            "f_heat_inner: displaced convolution needs d = 1 or a closed form");
    const double mm = m[0];
    const double half = 10.0 * std::sqrt(p.nu * tau);
    const double a = -mm - half, b = -mm + half;
    auto g = [&](double z) {
        return eval_f_radial(kernel, std::abs(z)) *
               heat_kernel_r(p.nu, 1, tau, std::abs(z + mm));
    };
    if (kernel.variant == KernelVariant::Riesz && a < 0.0 && b > 0.0) {
        // split at the kernel singularity; each side carries |z|^{-alpha}
        const SingularWeight w(-kernel.alpha);
        auto right = [&](double z) { return heat_kernel_r(p.nu, 1, tau, std::abs(z + mm)); };
        auto left = [&](double u) { return heat_kernel_r(p.nu, 1, tau, std::abs(mm - u)); };
        return integrate_singular(right, 0.0, b, w) +
               integrate_singular(left, 0.0, -a, w);
    }
    return integrate(g, a, b);
}

double l1_exact(const CorrelationKernel& kernel, const HeatParams& p, double t,
                const std::vector<double>& x, const std::vector<double>& xp,
                const std::vector<double>& y) {
    if (!(t > 0.0)) throw NonpositiveTime("l1_exact: t must be positive");
    check_dim(x, p.dim, "l1_exact");
    check_dim(xp, p.dim, "l1_exact");
    check_dim(y, p.dim, "l1_exact");
    std::vector<double> delta(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) delta[i] = x[i] - xp[i];
    std::vector<double> m(x.size());
    auto inner = [&](double s) {
        const double tau = 2.0 * s * (t - s) / t;
        if (!(tau > 0.0)) return 0.0; // endpoint limit never sampled by GK
        for (std::size_t i = 0; i < m.size(); ++i)
            m[i] = y[i] - (s / t) * delta[i];
        return f_heat_inner(kernel, p, tau, m);
    };
    const double q =
        integrate(inner, 0.0, 0.5 * t) + integrate(inner, 0.5 * t, t);
    return l0(p, t, x, xp) * q;
}

double k_upper(const CorrelationKernel& kernel, const HeatParams& p, double lam,
               double t, const std::vector<double>& x,
               const std::vector<double>& xp) {
    const double base = l0(p, t, x, xp);
    if (lam == 0.0) return base;
    HFamily fam = compute_h_family(kernel, p, 0.0, TimeGrid::standard(t), 64);
    return base * h_series(fam, 2.0 * lam * lam, t).value;
}

double k_lower(const CorrelationKernel& kernel, const HeatParams& p, double lam,
               double t, const std::vector<double>& x,
               const std::vector<double>& xp, const std::vector<double>& y) {
    check_dim(y, p.dim, "k_lower");
    std::vector<double> delta(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) delta[i] = x[i] - xp[i];
    const double base = l0(p, t, x, xp) * gauss_factor(p, t, delta);
    if (lam == 0.0) return base;
    const double gamma = std::pow(2.0 * std::sqrt(3.0), -p.dim) * lam * lam;
    HFamily fam = compute_h_family(kernel, p, std::sqrt(sq_norm(y)),
                                   TimeGrid::standard(t), 64);
    return base * h_series(fam, gamma, 0.5 * t).value;
}

namespace {

struct MeasureParts {
    std::vector<std::pair<std::vector<double>, double>> atoms;
    bool continuous = false;
    // continuous part in d = 1: density value and integration window
    std::function<double(double)> density;
    double lo = 0.0, hi = 0.0;
};

MeasureParts split_measure(const InitialMeasure& mu, const HeatParams& p,
                           double t, const std::vector<double>& x_near) {
    MeasureParts parts;
    switch (mu.kind) {
    case InitialMeasure::Kind::DiracAt:
        parts.atoms.emplace_back(mu.point, 1.0);
        return parts;
    case InitialMeasure::Kind::Atoms:
        parts.atoms = mu.atom_list;
        return parts;
    case InitialMeasure::Kind::Density: {
        if (p.dim != 1)
            throw UnsupportedMeasure("two_point_bounds: densities require d = 1");
        parts.continuous = true;
        parts.density = mu.density_fn;
        parts.lo = -mu.density_half_width;
        parts.hi = mu.density_half_width;
        return parts;
    }
    case InitialMeasure::Kind::LebesgueScaled: {
        if (p.dim != 1)
            throw UnsupportedMeasure(
                "two_point_bounds: flat initial data beyond d = 1 is handled "
                "by the factorized route only");
        parts.continuous = true;
        const double c = mu.scale;
        parts.density = [c](double) { return c; };
        const double window = 9.0 * std::sqrt(p.nu * t);
        parts.lo = x_near[0] - window;
        parts.hi = x_near[0] + window;
        return parts;
    }
    }
    throw ConfigError("two_point_bounds: unknown measure kind");
}

} // namespace

MomentBound two_point_bounds(const InitialMeasure& mu,
                             const CorrelationKernel& kernel,
                             const HeatParams& p, double lip, double Lip,
                             double t, const std::vector<double>& x,
                             const std::vector<double>& xp) {
    if (!(t > 0.0)) throw NonpositiveTime("two_point_bounds: t must be positive");
    if (!(lip >= 0.0) || !(Lip >= lip))
        throw ConfigError("two_point_bounds: needs 0 <= lip <= Lip");
    check_dim(x, p.dim, "two_point_bounds");
    check_dim(xp, p.dim, "two_point_bounds");

    MomentBound out;
    out.t = t;
    out.x = x;
    out.xp = xp;
    out.lam_lower = lip;
    out.lam_upper = Lip;
    out.mode = (lip == Lip) ? BoundMode::ExactLinear : BoundMode::Envelope;

    const double j0x = j0(mu, p, t, x);
    const double j0xp = j0(mu, p, t, xp);
    if (Lip == 0.0) { // noiseless: the exact moment is the deterministic product
        out.lower = out.upper = j0x * j0xp;
        return out;
    }

    // upper envelope factorizes through the homogeneous solution
    {
        HFamily fam = compute_h_family(kernel, p, 0.0, TimeGrid::standard(t), 64);
        out.upper = h_series(fam, 2.0 * Lip * Lip, t).value * j0x * j0xp;
    }

    // lower envelope: integrate the offset-dependent bound against mu x mu
    const double gamma = std::pow(2.0 * std::sqrt(3.0), -p.dim) * lip * lip;
    // H(t/2, |offset|; gamma) interpolated from a family per offset node
    const double window = 9.0 * std::sqrt(p.nu * t);
    double reach = window;
    for (double c : x) reach = std::max(reach, window + std::abs(c));
    for (double c : xp) reach = std::max(reach, window + std::abs(c));
    const double y_max = 2.0 * reach;
    const int n_y = 41;
    std::vector<double> h_at_y(n_y);
    for (int i = 0; i < n_y; ++i) {
        const double yy = y_max * i / (n_y - 1);
        if (gamma == 0.0) {
            h_at_y[static_cast<std::size_t>(i)] = 1.0;
        } else {
            HFamily fam = compute_h_family(kernel, p, yy, TimeGrid::standard(t), 64);
            h_at_y[static_cast<std::size_t>(i)] = h_series(fam, gamma, 0.5 * t).value;
        }
    }
    auto h_lower = [&](double yy) {
        const double pos = std::min(std::abs(yy), y_max) / y_max * (n_y - 1);
        const int i = std::min(static_cast<int>(pos), n_y - 2);
        const double frac = pos - i;
        const auto iu = static_cast<std::size_t>(i);
        return h_at_y[iu] + frac * (h_at_y[iu + 1] - h_at_y[iu]);
    };

    auto pair_term = [&](const std::vector<double>& z,
                         const std::vector<double>& zp) {
        std::vector<double> u(x.size()), up(x.size()), du(x.size());
        double off2 = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            u[i] = x[i] - z[i];
            up[i] = xp[i] - zp[i];
            du[i] = u[i] - up[i];
            const double o = zp[i] - z[i];
            off2 += o * o;
        }
        return heat_kernel(p, t, u) * heat_kernel(p, t, up) *
               gauss_factor(p, t, du) * h_lower(std::sqrt(off2));
    };

    const MeasureParts mz = split_measure(mu, p, t, x);
    const MeasureParts mzp = split_measure(mu, p, t, xp);

    double lower = 0.0;
    if (!mz.continuous && !mzp.continuous) {
        for (const auto& [z, wz] : mz.atoms)
            for (const auto& [zp, wzp] : mzp.atoms)
                lower += wz * wzp * pair_term(z, zp);
    } else if (!mz.continuous || !mzp.continuous) {
        const MeasureParts& at = mz.continuous ? mzp : mz;
        const MeasureParts& ct = mz.continuous ? mz : mzp;
        for (const auto& [z, wz] : at.atoms) {
            const double wz_copy = wz;
            const auto& z_copy = z;
            lower += wz_copy *
                     integrate(
                         [&](double zp1) {
                             const std::vector<double> zp{zp1};
                             return ct.density(zp1) *
                                    (mz.continuous ? pair_term(zp, z_copy)
                                                   : pair_term(z_copy, zp));
                         },
                         ct.lo, ct.hi);
        }
    } else {
        lower = integrate(
            [&](double z1) {
                const std::vector<double> z{z1};
                return mz.density(z1) * integrate(
                                            [&](double zp1) {
                                                const std::vector<double> zp{zp1};
                                                return mzp.density(zp1) *
                                                       pair_term(z, zp);
                                            },
                                            mzp.lo, mzp.hi);
            },
            mz.lo, mz.hi);
    }
    out.lower = lower;
    if (out.lower > out.upper)
        throw BoundViolated("two_point_bounds: envelope ordering failed");
    return out;
}

void write_h_family_csv(std::ostream& os, const HFamily& fam) {
    os << "n,t,value\n";
    char buf[64];
    for (int n = 0; n <= fam.max_order(); ++n) {
        for (int j = 0; j < fam.grid.size(); ++j) {
            std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", n, fam.grid.node(j),
                          fam.values[static_cast<std::size_t>(n)]
                                    [static_cast<std::size_t>(j)]);
            os << buf;
        }
    }
}

HFamily read_h_family_csv(std::istream& is, const CorrelationKernel& kernel,
                          const HeatParams& p, double y) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("n,t,value", 0) != 0)
        throw ConfigError("read_h_family_csv: missing n,t,value header");
    std::vector<std::vector<double>> rows;
    std::vector<double> times;
    int prev_n = -1;
    std::size_t col = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        int n = 0;
        double tval = 0.0, v = 0.0;
        char c1 = 0, c2 = 0;
        if (!(ls >> n >> c1 >> tval >> c2 >> v) || c1 != ',' || c2 != ',')
            throw ConfigError("read_h_family_csv: malformed row: " + line);
        if (n == prev_n + 1) {
            rows.emplace_back();
            prev_n = n;
            col = 0;
        } else if (n != prev_n) {
            throw ConfigError("read_h_family_csv: ladder orders out of sequence");
        }
        if (n == 0) {
            times.push_back(tval);
        } else {
            if (col >= times.size() || std::abs(times[col] - tval) > 1e-9)
                throw ConfigError("read_h_family_csv: inconsistent time column");
        }
        rows.back().push_back(v);
        ++col;
    }
    if (rows.empty() || times.size() < 2)
        throw ConfigError("read_h_family_csv: no data rows");
    const int n_steps = static_cast<int>(times.size()) - 1;
    const double t_max = times.back();
    TimeGrid grid(t_max, n_steps);
    for (std::size_t j = 0; j < times.size(); ++j)
        if (std::abs(times[j] - grid.node(static_cast<int>(j))) >
            1e-9 * std::max(1.0, t_max))
            throw ConfigError("read_h_family_csv: time column is not uniform");
    for (const auto& row : rows)
        if (row.size() != times.size())
            throw ConfigError("read_h_family_csv: ragged rows");
    HFamily fam{kernel, p, std::abs(y), grid, std::move(rows)};
    return fam;
}

} // namespace she
