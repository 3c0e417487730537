#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

namespace she {

/// Uniform time grid on [0, t_max] with n_steps cells.
struct TimeGrid {
    double t_max;
    int n_steps;

    TimeGrid(double t_max_, int n_steps_);

    double dt() const { return t_max / n_steps; }
    double node(int j) const { return t_max * j / n_steps; }
    int size() const { return n_steps + 1; }

    /// Grid with the default resolution of 512 cells per unit time
    /// (at least 64 cells for short horizons).
    static TimeGrid standard(double t_max);
};

/// Endpoint behavior s^exponent with exponent in (-1, 0].
struct SingularWeight {
    double exponent = 0.0;

    explicit SingularWeight(double e = 0.0);
};

using Integrand = std::function<double(double)>;

/// Adaptive Gauss-Kronrod integration of g over [a, b].
/// Absolute error target max(1e-10, 1e-8 * |result|).
double integrate(const Integrand& g, double a, double b);

/// Integrates s^w.exponent * g(s) over [a, b] where the weight is centered at
/// the left endpoint a (the singular factor is (s-a)^exponent). The power
/// substitution (s-a) = u^q removes the singularity analytically.
double integrate_singular(const Integrand& g, double a, double b, SingularWeight w);

/// Integrates g over [a, inf) by segment doubling; g must decay. Throws
/// DivergentIntegral when the partial sums fail to stabilize.
double integrate_to_inf(const Integrand& g, double a);

/// Computes the d-dimensional integral of f(|z|) w(|z|) dz as a 1-D radial
/// integral with surface weight d pi^{d/2}/Gamma(1+d/2) r^{d-1}.
/// origin_exponent is the power behavior of f*w at r = 0 (0 for bounded
/// integrands); the tail is truncated where `weight` falls below 1e-18 of its
/// value at r_scale and the radius is doubled until the result is stable.
double radial_integral(const Integrand& f_radial, const Integrand& weight, int d,
                       double r_scale, double origin_exponent = 0.0);

/// Surface measure of the unit sphere in R^d.
double sphere_surface(int d);

/// Volterra convolution on a uniform grid by product integration:
///   c_j = int_0^{t_j} tau^{w.exponent} L(tau) R(t_j - tau) dtau
/// where L and R are the piecewise-linear interpolants of left_reg and right.
/// left_reg holds the regularized left factor (the full left factor divided by
/// tau^exponent). The tau^p moments are integrated exactly against the local
/// linear basis, so nonnegative monotone inputs give nonnegative monotone
/// outputs and linear data is reproduced exactly.
std::vector<double> convolve_on_grid(const TimeGrid& grid, std::span<const double> left_reg,
                                     SingularWeight w, std::span<const double> right);

/// Cell moments used by convolve_on_grid, exposed for reuse: moments[m][q] =
/// int_{t_m}^{t_{m+1}} tau^p ((tau-t_m)/dt)^q dtau for q = 0,1,2.
std::vector<std::array<double, 3>> singular_cell_moments(const TimeGrid& grid, double p);

} // namespace she
