#pragma once

#include "she/kernels.hpp"
#include "she/quadrature.hpp"

#include <functional>
#include <vector>

namespace she {

/// Uniform sampling lattice for two-point fields in d = 1: time nodes of
/// tgrid, n_x spatial nodes on [-x_half, x_half] for each of x and x', and
/// n_y offset nodes on [-y_half, y_half].
struct FieldAxes {
    TimeGrid tgrid;
    double x_half;
    int n_x;
    double y_half;
    int n_y;

    FieldAxes(TimeGrid tg, double xh, int nx, double yh, int ny);

    double dx() const { return 2.0 * x_half / (n_x - 1); }
    double x_node(int i) const { return -x_half + dx() * i; }
    double dy() const { return 2.0 * y_half / (n_y - 1); }
    double y_node(int l) const { return -y_half + dy() * l; }

    bool operator==(const FieldAxes& o) const;
};

/// Sample of a two-point field V(t, x, x'; y) on FieldAxes, stored in gauged
/// form V / (G(t,x) G(t,x')). The gauge removes the short-time concentration
/// of the two-point kernels, so multilinear interpolation of the stored
/// values stays accurate; the exact Gaussian factors are restored on read.
class GridField {
public:
    GridField(FieldAxes axes, HeatParams p);

    /// Fills the lattice from a gauged integrand fn(t, x, x', y).
    static GridField sample(const std::function<double(double, double, double, double)>& gauged_fn,
                            const FieldAxes& axes, const HeatParams& p);

    const FieldAxes& axes() const { return axes_; }
    const HeatParams& heat() const { return p_; }

    double& at(int jt, int ix, int ixp, int ly);
    double at(int jt, int ix, int ixp, int ly) const;

    /// Multilinear interpolation of the gauged values; 0 outside the box.
    /// Sets outside when any coordinate left the sampled region.
    double gauged_probe(double t, double x, double xp, double y,
                        bool& outside) const;
    double gauged_value(double t, double x, double xp, double y) const;

    /// Field value with the Gaussian gauge restored; 0 at t <= 0.
    double value(double t, double x, double xp, double y) const;

private:
    FieldAxes axes_;
    HeatParams p_;
    std::vector<double> v_;
};

/// Gauged integrand for the callable form of the convolution: (t, x, x', y)
/// mapsto w(t,x,x';y) / (G(t,x) G(t,x')).
using GaugedFn = std::function<double(double, double, double, double)>;

/// One point of the two-point convolution
///   (h |> w)(t,x,x';y) = int_0^t ds iint dz dz'
///       h(t-s, x-z, x'-z'; y-(z-z')) w(s, z, z'; y) f(y-(z-z'))
/// by midpoint rule in s and Gauss-Hermite quadrature in (z, z') against the
/// exact Gaussian-product measure. Returns the ungauged value. Throws
/// TruncationWarning when more than 1e-6 of the quadrature mass falls
/// outside a stored field's box.
double rhd_at(const GridField& h, const GridField& w,
              const CorrelationKernel& kernel, double t, double x, double xp,
              double y);

/// Same with an analytic gauged right factor (no storage, no truncation).
double rhd_at(const GridField& h, const GaugedFn& w_gauged,
              const CorrelationKernel& kernel, double t, double x, double xp,
              double y);

/// Full-field convolution sampled on out_axes; d = 1 only. Both inputs must
/// share identical axes (GridMismatch otherwise).
GridField discrete_rhd(const GridField& h, const GridField& w,
                       const CorrelationKernel& kernel,
                       const FieldAxes& out_axes);

/// Base field G(t,x) G(t,x'): identically 1 after the gauge.
GridField make_l0_field(const FieldAxes& axes, const HeatParams& p);

/// First iterate of the two-point recursion in gauged form, built from its
/// separable reduction (one adaptive time integral per (t, x-x', y) value).
GridField make_l1_field(const CorrelationKernel& kernel, const FieldAxes& axes,
                        const HeatParams& p);

} // namespace she
