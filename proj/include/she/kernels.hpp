#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace she {

/// Spatial correlation kernel families of the noise.
enum class KernelVariant {
    Riesz,             // f(x) = |x|^{-alpha}
    OrnsteinUhlenbeck, // f(x) = exp(-|x|^alpha), decay rate c: exp(-c |x|^alpha)
    Poisson,           // f(x) = (1 + |x|^2)^{-(d+1)/2}
    Cauchy,            // f(x) = prod_j (1 + x_j^2)^{-1}
    Constant,          // f(x) = level
    WhiteNoise1D,      // f = delta_0 (distributional, d = 1)
    BoxIndicator,      // f(x) = 1{ |x_j| <= a for all j }
    TabulatedRadial    // piecewise-linear radial profile from samples
};

/// Nonnegative, symmetric, nonnegative-definite correlation function
/// together with its ambient dimension. Immutable after construction.
struct CorrelationKernel {
    KernelVariant variant = KernelVariant::Constant;
    int dim = 1;
    double alpha = 0.0;      // Riesz / OrnsteinUhlenbeck exponent
    double c = 1.0;          // OrnsteinUhlenbeck decay rate
    double level = 1.0;      // Constant value
    double half_width = 1.0; // BoxIndicator half width a
    std::vector<std::pair<double, double>> samples; // TabulatedRadial (r, f(r))

    static CorrelationKernel riesz(double alpha, int dim);
    static CorrelationKernel ornstein_uhlenbeck(double alpha, double c, int dim);
    static CorrelationKernel poisson(int dim);
    static CorrelationKernel cauchy(int dim);
    static CorrelationKernel constant(double level, int dim);
    static CorrelationKernel white_noise_1d();
    static CorrelationKernel box_indicator(double a, int dim);
    static CorrelationKernel tabulated_radial(
        std::vector<std::pair<double, double>> samples, int dim);

    /// True when f depends on x only through |x|.
    bool is_radial() const;
    /// True when k(t) evaluation must fall back to quadrature.
    bool k_needs_quadrature() const;
};

/// Loads a TabulatedRadial kernel from a two-column CSV (radius, value)
/// with strictly increasing radii.
CorrelationKernel load_tabulated_radial(const std::string& path, int dim);

/// Heat-equation parameters: diffusion coefficient and dimension.
struct HeatParams {
    double nu;
    int dim;

    HeatParams(double nu_, int dim_);
};

/// Initial condition as a nonnegative measure.
struct InitialMeasure {
    enum class Kind { DiracAt, Atoms, Density, LebesgueScaled };

    Kind kind;
    std::vector<double> point; // DiracAt location
    std::vector<std::pair<std::vector<double>, double>> atom_list; // (point, weight)
    std::function<double(double)> density_fn; // d = 1 pointwise density
    double density_half_width = 0.0;          // density support is [-R, R]
    double scale = 1.0;                       // LebesgueScaled constant C
    // Optional exponential moment: beta together with int e^{beta |x|} mu(dx).
    std::optional<double> exp_moment_beta;
    std::optional<double> exp_moment_value;

    static InitialMeasure dirac_at(std::vector<double> z0);
    static InitialMeasure atoms(
        std::vector<std::pair<std::vector<double>, double>> atom_list);
    static InitialMeasure density(std::function<double(double)> rho,
                                  double half_width);
    static InitialMeasure lebesgue(double C);

    /// Attaches the exponential-moment data used by the front bounds.
    InitialMeasure& with_exp_moment(double beta, double value);
};

/// Pointwise kernel value f(x).
/// Throws SingularAtOrigin (Riesz at 0) and NotPointwise (white noise).
double eval_f(const CorrelationKernel& kernel, const std::vector<double>& x);

/// Radial profile f(r) for radial kernels (same errors as eval_f).
double eval_f_radial(const CorrelationKernel& kernel, double r);

/// Heat kernel G(t,x) = (2 pi nu t)^{-d/2} exp(-|x|^2 / (2 nu t)).
double heat_kernel(const HeatParams& p, double t, const std::vector<double>& x);

/// Heat kernel as a function of r = |x|.
double heat_kernel_r(double nu, int dim, double t, double r);

/// Gaussian factor T_nu(t,x) = exp(-|x|^2 / (nu t)), in (0, 1].
double gauss_factor(const HeatParams& p, double t, const std::vector<double>& x);

/// Gaussian factor as a function of r = |x|, with explicit nu.
double gauss_factor_r(double nu, double t, double r);

/// k(t) = int f(z) G(t,z) dz: closed form where available, otherwise
/// quadrature. Nonincreasing in t.
double k_of_t(const CorrelationKernel& kernel, const HeatParams& p, double t);

/// Forces the quadrature evaluation of k(t) (white noise integrates its
/// flat spectral density instead, constant integrates f against G).
double k_of_t_quadrature(const CorrelationKernel& kernel, const HeatParams& p,
                         double t);

/// Power p of the leading singularity k(t) ~ t^p as t -> 0
/// (0 for bounded kernels, -alpha/2 for Riesz, -1/2 for white noise).
double kernel_singularity_exponent(const CorrelationKernel& kernel);

/// Homogeneous heat solution J_0(t,x) = (mu * G(t, .))(x).
double j0(const InitialMeasure& mu, const HeatParams& p, double t,
          const std::vector<double>& x);

} // namespace she
