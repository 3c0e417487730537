#pragma once

#include "she/kernels.hpp"
#include "she/quadrature.hpp"

#include <iosfwd>
#include <vector>

namespace she {

/// Ladder of iterated kernels at a fixed spatial offset:
///   h_0 = 1,  h_n(t,y) = int_0^t h_{n-1}(s,y) k(t-s) T_{nu/4}(t-s,y) ds
/// with T_{nu/4}(s,y) = exp(-4 |y|^2 / (nu s)), sampled on a uniform time
/// grid. Rows are nondecreasing in t and dominated by the y = 0 ladder.
struct HFamily {
    CorrelationKernel kernel;
    HeatParams p;
    double y = 0.0; // radial offset |y|; the ladder depends on y through |y|
    TimeGrid grid;
    std::vector<std::vector<double>> values; // values[n][j] = h_n(t_j, y)

    int max_order() const { return static_cast<int>(values.size()) - 1; }
    /// h_n(t, y) with linear interpolation between grid nodes.
    double h(int n, double t) const;
    /// Index of the grid node matching t; ConfigError when t is off-grid.
    int node_index(double t) const;
};

/// Builds the ladder up to order max_order by product-integrated Volterra
/// convolutions; the kernel's endpoint singularity is handled by the
/// singular weight of the grid convolution.
HFamily compute_h_family(const CorrelationKernel& kernel, const HeatParams& p,
                         double y, const TimeGrid& grid, int max_order);

/// Appends ladder rows in place until max_order reaches new_max_order.
void extend_h_family(HFamily& fam, int new_max_order);

/// Truncated power-series sum with an estimated bound on the dropped tail.
struct SeriesValue {
    double value = 0.0;
    double tail_bound = 0.0;
    int terms = 0;
};

/// H(t, y; gamma) = sum_n gamma^n h_n(t,y) at a grid node of fam. Extends the
/// ladder adaptively until the geometric tail estimate falls below tol
/// relative (order cap 512); throws TruncationNotConverged past the cap.
SeriesValue h_series(HFamily& fam, double gamma, double t, double tol = 1e-8);

/// Lower series H*(t, y; gamma) = sum_n gamma^n h_1(t/n, y)^n, summed until
/// terms stay below 1e-16 of the running maximum for 10 consecutive orders.
SeriesValue h_star(const CorrelationKernel& kernel, const HeatParams& p,
                   double gamma, double t, double y);

/// log H*(t, y; gamma), summed in the log domain so that horizons far past
/// the double-precision overflow point remain usable for rate fitting.
double log_h_star(const CorrelationKernel& kernel, const HeatParams& p,
                  double gamma, double t, double y);

/// h_1(t, y) by adaptive quadrature with the kernel's endpoint weight.
double h1(const CorrelationKernel& kernel, const HeatParams& p, double t,
          double y);

/// Closed form of h_1(t, 0) (constant, white-noise, Riesz, gaussian decay);
/// ConfigError for kernels without one.
double h1_closed(const CorrelationKernel& kernel, const HeatParams& p, double t);

/// log h_n(t, 0) for kernels whose whole ladder is closed (constant,
/// white-noise, Riesz); usable far beyond double overflow.
double log_h_closed(const CorrelationKernel& kernel, const HeatParams& p, int n,
                    double t);

/// log H(t, 0; gamma) by log-sum-exp over the closed ladder.
double log_h_series_closed(const CorrelationKernel& kernel, const HeatParams& p,
                           double gamma, double t);

/// Base two-point kernel L_0(t,x,x') = G(t,x) G(t,x').
double l0(const HeatParams& p, double t, const std::vector<double>& x,
          const std::vector<double>& xp);

/// Spatial convolution (f * G_tau) evaluated at displacement m: closed for
/// gaussian-decay / white-noise / constant kernels, radial quadrature at
/// m = 0, direct quadrature in d = 1 otherwise.
double f_heat_inner(const CorrelationKernel& kernel, const HeatParams& p,
                    double tau, const std::vector<double>& m);

/// First iterate of the two-point recursion via its separable reduction:
///   L_1(t,x,x';y) = G(t,x) G(t,x')
///       int_0^t ds (f * G_{2s(t-s)/t})(y - (s/t)(x - x')).
double l1_exact(const CorrelationKernel& kernel, const HeatParams& p, double t,
                const std::vector<double>& x, const std::vector<double>& xp,
                const std::vector<double>& y);

/// Series upper envelope L_0(t,x,x') H(t, 0; 2 lam^2) for the two-point
/// kernel sum.
double k_upper(const CorrelationKernel& kernel, const HeatParams& p, double lam,
               double t, const std::vector<double>& x,
               const std::vector<double>& xp);

/// Series lower envelope
/// L_0(t,x,x') T_nu(t,x-x') H(t/2, y; (2 sqrt 3)^{-d} lam^2).
double k_lower(const CorrelationKernel& kernel, const HeatParams& p, double lam,
               double t, const std::vector<double>& x,
               const std::vector<double>& xp, const std::vector<double>& y);

enum class BoundMode { ExactLinear, Envelope };

/// Two-point second-moment envelope for measure initial data.
struct MomentBound {
    double lower = 0.0;
    double upper = 0.0;
    double t = 0.0;
    std::vector<double> x, xp;
    double lam_lower = 0.0; // linear-growth floor of the noise coefficient
    double lam_upper = 0.0; // linear-growth cap
    BoundMode mode = BoundMode::Envelope;
};

/// Envelope for E[u(t,x) u(t,x')] when lip |u| <= |rho(u)| <= Lip |u|:
/// upper integrates the factorized series bound through J_0, lower integrates
/// the offset-dependent bound against mu x mu (exact sums for atoms, tensor
/// quadrature in d = 1 otherwise). lip = Lip = 0 returns the noiseless
/// product J_0(t,x) J_0(t,x') on both sides.
MomentBound two_point_bounds(const InitialMeasure& mu,
                             const CorrelationKernel& kernel,
                             const HeatParams& p, double lip, double Lip,
                             double t, const std::vector<double>& x,
                             const std::vector<double>& xp);

/// CSV export with header n,t,value; one row per ladder entry.
void write_h_family_csv(std::ostream& os, const HFamily& fam);

/// Rebuilds a family from write_h_family_csv output; kernel, p and y are
/// supplied by the caller, the grid is recovered from the t column.
HFamily read_h_family_csv(std::istream& is, const CorrelationKernel& kernel,
                          const HeatParams& p, double y);

} // namespace she
