#include "she/kernels.hpp"

#include "she/errors.hpp"
#include "she/quadrature.hpp"
#include "she/special.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

namespace she {

namespace {

double norm_of(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

void require_dim(const CorrelationKernel& kernel, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != kernel.dim)
        throw ConfigError("eval_f: point dimension does not match kernel dimension");
}

void require_positive_time(double t) {
    if (!(t > 0.0)) throw NonpositiveTime("requires t > 0");
}

// Linear interpolation of a tabulated radial profile; constant below the
// first sample, zero beyond the last (documented truncation).
double tabulated_value(const std::vector<std::pair<double, double>>& samples,
                       double r) {
    if (r <= samples.front().first) return samples.front().second;
    if (r == samples.back().first) return samples.back().second;
    if (r > samples.back().first) return 0.0;
    auto hi = std::upper_bound(
        samples.begin(), samples.end(), r,
        [](double v, const std::pair<double, double>& s) { return v < s.first; });
    auto lo = hi - 1;
    const double w = (r - lo->first) / (hi->first - lo->first);
    return lo->second + w * (hi->second - lo->second);
}

} // namespace

CorrelationKernel CorrelationKernel::riesz(double alpha, int dim) {
    if (dim < 1) throw ConfigError("riesz: dim must be >= 1");
    if (!(alpha > 0.0) || alpha >= std::min(2.0, static_cast<double>(dim)))
        throw ConfigError("riesz: requires 0 < alpha < min(2, d)");
    CorrelationKernel k;
    k.variant = KernelVariant::Riesz;
    k.dim = dim;
    k.alpha = alpha;
    return k;
}

CorrelationKernel CorrelationKernel::ornstein_uhlenbeck(double alpha, double c,
                                                        int dim) {
    if (dim < 1) throw ConfigError("ornstein_uhlenbeck: dim must be >= 1");
    if (!(alpha > 0.0) || alpha > 2.0)
        throw ConfigError("ornstein_uhlenbeck: requires 0 < alpha <= 2");
    if (!(c > 0.0)) throw ConfigError("ornstein_uhlenbeck: requires c > 0");
    if (alpha != 2.0 && dim > 6)
        throw ConfigError("ornstein_uhlenbeck: quadrature path capped at d <= 6");
    CorrelationKernel k;
    k.variant = KernelVariant::OrnsteinUhlenbeck;
    k.dim = dim;
    k.alpha = alpha;
    k.c = c;
    return k;
}

CorrelationKernel CorrelationKernel::poisson(int dim) {
    if (dim < 1) throw ConfigError("poisson: dim must be >= 1");
    if (dim > 6) throw ConfigError("poisson: quadrature path capped at d <= 6");
    CorrelationKernel k;
    k.variant = KernelVariant::Poisson;
    k.dim = dim;
    return k;
}

CorrelationKernel CorrelationKernel::cauchy(int dim) {
    if (dim < 1) throw ConfigError("cauchy: dim must be >= 1");
    CorrelationKernel k;
    k.variant = KernelVariant::Cauchy;
    k.dim = dim;
    return k;
}

CorrelationKernel CorrelationKernel::constant(double level, int dim) {
    if (dim < 1) throw ConfigError("constant: dim must be >= 1");
    if (!(level > 0.0)) throw ConfigError("constant: level must be positive");
    CorrelationKernel k;
    k.variant = KernelVariant::Constant;
    k.dim = dim;
    k.level = level;
    return k;
}

CorrelationKernel CorrelationKernel::white_noise_1d() {
    CorrelationKernel k;
    k.variant = KernelVariant::WhiteNoise1D;
    k.dim = 1;
    return k;
}

CorrelationKernel CorrelationKernel::box_indicator(double a, int dim) {
    if (dim < 1) throw ConfigError("box_indicator: dim must be >= 1");
    if (!(a > 0.0)) throw ConfigError("box_indicator: half width must be positive");
    CorrelationKernel k;
    k.variant = KernelVariant::BoxIndicator;
    k.dim = dim;
    k.half_width = a;
    return k;
}

CorrelationKernel CorrelationKernel::tabulated_radial(
    std::vector<std::pair<double, double>> samples, int dim) {
    if (dim < 1) throw ConfigError("tabulated_radial: dim must be >= 1");
    if (dim > 6)
        throw ConfigError("tabulated_radial: quadrature path capped at d <= 6");
    if (samples.size() < 2)
        throw ConfigError("tabulated_radial: needs at least two samples");
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].first < 0.0 || samples[i].second < 0.0)
            throw ConfigError("tabulated_radial: radii and values must be >= 0");
        if (i > 0 && samples[i].first <= samples[i - 1].first)
            throw ConfigError("tabulated_radial: radii must be strictly increasing");
    }
    CorrelationKernel k;
    k.variant = KernelVariant::TabulatedRadial;
    k.dim = dim;
    k.samples = std::move(samples);
    return k;
}

bool CorrelationKernel::is_radial() const {
    if (dim == 1) return true;
    return variant != KernelVariant::Cauchy && variant != KernelVariant::BoxIndicator;
}

bool CorrelationKernel::k_needs_quadrature() const {
    switch (variant) {
    case KernelVariant::OrnsteinUhlenbeck: return alpha != 2.0;
    case KernelVariant::Poisson:
    case KernelVariant::TabulatedRadial: return true;
    default: return false;
    }
}

CorrelationKernel load_tabulated_radial(const std::string& path, int dim) {
    std::ifstream in(path);
    if (!in) throw ConfigError("load_tabulated_radial: cannot open " + path);
    std::vector<std::pair<double, double>> samples;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        double r, v;
        if (!(row >> r >> v))
            throw ConfigError("load_tabulated_radial: malformed row '" + line + "'");
        samples.emplace_back(r, v);
    }
    return CorrelationKernel::tabulated_radial(std::move(samples), dim);
}

HeatParams::HeatParams(double nu_, int dim_) : nu(nu_), dim(dim_) {
    if (!(nu > 0.0)) throw ConfigError("HeatParams: nu must be positive");
    if (dim < 1) throw ConfigError("HeatParams: dim must be >= 1");
}

InitialMeasure InitialMeasure::dirac_at(std::vector<double> z0) {
    InitialMeasure m{};
    m.kind = Kind::DiracAt;
    m.point = std::move(z0);
    return m;
}

InitialMeasure InitialMeasure::atoms(
    std::vector<std::pair<std::vector<double>, double>> atom_list) {
    if (atom_list.empty()) throw ConfigError("atoms: needs at least one atom");
    const std::size_t d = atom_list.front().first.size();
    for (const auto& [pt, w] : atom_list) {
        if (pt.size() != d) throw ConfigError("atoms: mixed point dimensions");
        if (!(w >= 0.0)) throw ConfigError("atoms: weights must be nonnegative");
    }
    InitialMeasure m{};
    m.kind = Kind::Atoms;
    m.atom_list = std::move(atom_list);
    return m;
}

InitialMeasure InitialMeasure::density(std::function<double(double)> rho,
                                       double half_width) {
    if (!rho) throw ConfigError("density: callable required");
    if (!(half_width > 0.0))
        throw ConfigError("density: support half width must be positive");
    InitialMeasure m{};
    m.kind = Kind::Density;
    m.density_fn = std::move(rho);
    m.density_half_width = half_width;
    return m;
}

InitialMeasure InitialMeasure::lebesgue(double C) {
    if (!(C > 0.0)) throw ConfigError("lebesgue: scale must be positive");
    InitialMeasure m{};
    m.kind = Kind::LebesgueScaled;
    m.scale = C;
    return m;
}

InitialMeasure& InitialMeasure::with_exp_moment(double beta, double value) {
    if (!(beta > 0.0))
        throw ConfigError("with_exp_moment: beta must be positive");
    if (!(value > 0.0) || !std::isfinite(value))
        throw ConfigError("with_exp_moment: moment value must be positive finite");
    exp_moment_beta = beta;
    exp_moment_value = value;
    return *this;
}

double eval_f(const CorrelationKernel& kernel, const std::vector<double>& x) {
    require_dim(kernel, x);
    switch (kernel.variant) {
    case KernelVariant::Cauchy: {
        double prod = 1.0;
        for (double v : x) prod /= 1.0 + v * v;
        return prod;
    }
    case KernelVariant::BoxIndicator:
        for (double v : x)
            if (std::abs(v) > kernel.half_width) return 0.0;
        return 1.0;
    default: return eval_f_radial(kernel, norm_of(x));
    }
}

double eval_f_radial(const CorrelationKernel& kernel, double r) {
    if (r < 0.0) throw ConfigError("eval_f_radial: r must be >= 0");
    switch (kernel.variant) {
    case KernelVariant::Riesz:
        if (r == 0.0) throw SingularAtOrigin("Riesz kernel is singular at the origin");
        return std::pow(r, -kernel.alpha);
    case KernelVariant::OrnsteinUhlenbeck:
        return std::exp(-kernel.c * std::pow(r, kernel.alpha));
    case KernelVariant::Poisson:
        return std::pow(1.0 + r * r, -0.5 * (kernel.dim + 1));
    case KernelVariant::Constant: return kernel.level;
    case KernelVariant::WhiteNoise1D:
        throw NotPointwise("white noise kernel has no pointwise values");
    case KernelVariant::TabulatedRadial: return tabulated_value(kernel.samples, r);
    case KernelVariant::Cauchy:
        if (kernel.dim == 1) return 1.0 / (1.0 + r * r);
        throw ConfigError("eval_f_radial: Cauchy kernel is not radial for d >= 2");
    case KernelVariant::BoxIndicator:
        if (kernel.dim == 1) return r <= kernel.half_width ? 1.0 : 0.0;
        throw ConfigError("eval_f_radial: box kernel is not radial for d >= 2");
    }
    throw ConfigError("eval_f_radial: unknown variant");
}

double heat_kernel(const HeatParams& p, double t, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != p.dim)
        throw ConfigError("heat_kernel: point dimension does not match params");
    return heat_kernel_r(p.nu, p.dim, t, norm_of(x));
}

double heat_kernel_r(double nu, int dim, double t, double r) {
    require_positive_time(t);
    const double s = nu * t;
    return std::pow(2.0 * M_PI * s, -0.5 * dim) * std::exp(-r * r / (2.0 * s));
}

double gauss_factor(const HeatParams& p, double t, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != p.dim)
        throw ConfigError("gauss_factor: point dimension does not match params");
    return gauss_factor_r(p.nu, t, norm_of(x));
}

double gauss_factor_r(double nu, double t, double r) {
    require_positive_time(t);
    return std::exp(-r * r / (nu * t));
}

double k_of_t(const CorrelationKernel& kernel, const HeatParams& p, double t) {
    require_positive_time(t);
    const double nu = p.nu;
    const int d = kernel.dim;
    switch (kernel.variant) {
    case KernelVariant::Constant: return kernel.level;
    case KernelVariant::WhiteNoise1D:
        return std::pow(2.0 * M_PI * nu * t, -0.5);
    case KernelVariant::Riesz: {
        const double C = std::pow(2.0 * nu, -0.5 * kernel.alpha) *
                         boost::math::tgamma(0.5 * (d - kernel.alpha)) /
                         boost::math::tgamma(0.5 * d);
        return C * std::pow(t, -0.5 * kernel.alpha);
    }
    case KernelVariant::OrnsteinUhlenbeck:
        if (kernel.alpha == 2.0)
            return std::pow(1.0 + 2.0 * kernel.c * nu * t, -0.5 * d);
        return k_of_t_quadrature(kernel, p, t);
    case KernelVariant::Cauchy: {
        const double s = std::sqrt(2.0 * nu * t);
        const double q = std::sqrt(M_PI) / s * erfcx(1.0 / s);
        return std::pow(q, d);
    }
    case KernelVariant::BoxIndicator: {
        const double q =
            2.0 * normal_cdf(kernel.half_width / std::sqrt(nu * t)) - 1.0;
        return std::pow(q, d);
    }
    default: return k_of_t_quadrature(kernel, p, t);
    }
}

double k_of_t_quadrature(const CorrelationKernel& kernel, const HeatParams& p,
                         double t) {
    require_positive_time(t);
    const double nu = p.nu;
    const int d = kernel.dim;
    switch (kernel.variant) {
    case KernelVariant::WhiteNoise1D: {
        // spectral route: the white-noise spectral density is flat, so
        // k(t) = (2 pi)^{-1} int exp(-nu t  xi^2 / 2) dxi
        const double v =
            integrate_to_inf([&](double xi) { return std::exp(-0.5 * nu * t * xi * xi); },
                             0.0);
        return v / M_PI;
    }
    case KernelVariant::Cauchy: {
        // the d-dimensional integral factorizes across coordinates
        const double q = 2.0 * integrate_to_inf(
                                   [&](double z) {
                                       return heat_kernel_r(nu, 1, t, z) / (1.0 + z * z);
                                   },
                                   0.0);
        return std::pow(q, d);
    }
    case KernelVariant::BoxIndicator: {
        const double q =
            2.0 * integrate([&](double z) { return heat_kernel_r(nu, 1, t, z); }, 0.0,
                            kernel.half_width);
        return std::pow(q, d);
    }
    default: {
        const double origin_exponent =
            kernel.variant == KernelVariant::Riesz ? -kernel.alpha : 0.0;
        return radial_integral(
            [&](double r) { return eval_f_radial(kernel, r); },
            [&](double r) { return heat_kernel_r(nu, d, t, r); }, d,
            std::sqrt(nu * t), origin_exponent);
    }
    }
}

double kernel_singularity_exponent(const CorrelationKernel& kernel) {
    switch (kernel.variant) {
    case KernelVariant::Riesz: return -0.5 * kernel.alpha;
    case KernelVariant::WhiteNoise1D: return -0.5;
    default: return 0.0;
    }
}

double j0(const InitialMeasure& mu, const HeatParams& p, double t,
          const std::vector<double>& x) {
    require_positive_time(t);
    if (static_cast<int>(x.size()) != p.dim)
        throw ConfigError("j0: point dimension does not match params");
    switch (mu.kind) {
    case InitialMeasure::Kind::LebesgueScaled: return mu.scale;
    case InitialMeasure::Kind::DiracAt: {
        if (mu.point.size() != x.size())
            throw ConfigError("j0: measure dimension does not match params");
        std::vector<double> diff(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) diff[i] = x[i] - mu.point[i];
        return heat_kernel(p, t, diff);
    }
    case InitialMeasure::Kind::Atoms: {
        double acc = 0.0;
        std::vector<double> diff(x.size());
        for (const auto& [pt, w] : mu.atom_list) {
            if (pt.size() != x.size())
                throw ConfigError("j0: measure dimension does not match params");
            for (std::size_t i = 0; i < x.size(); ++i) diff[i] = x[i] - pt[i];
            acc += w * heat_kernel(p, t, diff);
        }
        return acc;
    }
    case InitialMeasure::Kind::Density: {
        if (p.dim != 1)
            throw UnsupportedMeasure("j0: density measures are supported in d = 1 only");
        const double x0 = x[0];
        return integrate(
            [&](double z) {
                const double rho = mu.density_fn(z);
                if (rho < 0.0)
                    throw QuadratureFailure("j0: density returned a negative value");
                return rho * heat_kernel_r(p.nu, 1, t, x0 - z);
            },
            -mu.density_half_width, mu.density_half_width);
    }
    }
    throw ConfigError("j0: unknown measure kind");
}

} // namespace she
