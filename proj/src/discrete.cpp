#include "she/discrete.hpp"

#include "she/errors.hpp"
#include "she/moments.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace she {

namespace {

constexpr int kGaussHermiteOrder = 9;
constexpr double kBoundaryMassTol = 1e-6;

struct HermiteRule {
    std::vector<double> nodes;   // abscissae of the e^{-u^2} rule
    std::vector<double> weights; // probability weights, sum 1
};

// Golub-Welsch nodes/weights for the Hermite weight, normalized so that
// E[g(N(m, s^2))] = sum_i weights[i] g(m + sqrt(2) s nodes[i]).
const HermiteRule& hermite_rule() {
    static const HermiteRule rule = [] {
        const int n = kGaussHermiteOrder;
        Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
        for (int k = 0; k + 1 < n; ++k) {
            const double b = std::sqrt(0.5 * (k + 1));
            jac(k, k + 1) = b;
            jac(k + 1, k) = b;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
        HermiteRule r;
        r.nodes.resize(static_cast<std::size_t>(n));
        r.weights.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            r.nodes[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
            const double v0 = es.eigenvectors()(0, i);
            r.weights[static_cast<std::size_t>(i)] = v0 * v0;
        }
        return r;
    }();
    return rule;
}

void check_d1(const HeatParams& p, const char* what) {
    if (p.dim != 1)
        throw ConfigError(std::string(what) + ": discrete fields support d = 1 only");
}

// quadrature mass weighted by the kernel factor, so that truncation behind
// the kernel's own decay is not counted against the box
struct RhdStats {
    double total_mass = 0.0;
    double outside_mass = 0.0;

    double ratio() const {
        return total_mass > 0.0 ? outside_mass / total_mass : 0.0;
    }
};

// gauged value of (h |> w) at one point; either w field or w callable
template <class WProbe>
double rhd_core(const GridField& h, const WProbe& w_probe,
                const CorrelationKernel& kernel, double t, double x, double xp,
                double y, RhdStats* stats) {
    if (!(t > 0.0)) return 0.0;
    const double nu = h.heat().nu;
    const HermiteRule& gh = hermite_rule();
    const int n_s = std::clamp(
        static_cast<int>(std::ceil(t / h.axes().tgrid.dt())), 8, 256);
    const double ds = t / n_s;
    double acc = 0.0;
    for (int m = 0; m < n_s; ++m) {
        const double s = (m + 0.5) * ds;
        const double tau_h = t - s;
        const double sigma = std::sqrt(nu * s * tau_h / t);
        const double mz = (s / t) * x;
        const double mzp = (s / t) * xp;
        double slice = 0.0;
        for (int q = 0; q < kGaussHermiteOrder; ++q) {
            const auto qu = static_cast<std::size_t>(q);
            const double z = mz + std::sqrt(2.0) * sigma * gh.nodes[qu];
            for (int r = 0; r < kGaussHermiteOrder; ++r) {
                const auto ru = static_cast<std::size_t>(r);
                const double zp = mzp + std::sqrt(2.0) * sigma * gh.nodes[ru];
                const double off = y - (z - zp);
                const double fv = eval_f_radial(kernel, std::abs(off));
                bool out_h = false, out_w = false;
                const double hv =
                    h.gauged_probe(tau_h, x - z, xp - zp, off, out_h);
                const double wv = w_probe(s, z, zp, y, out_w);
                const double pw = gh.weights[qu] * gh.weights[ru];
                slice += pw * hv * wv * fv;
                if (stats) {
                    stats->total_mass += pw * fv;
                    if (out_h || out_w) stats->outside_mass += pw * fv;
                }
            }
        }
        acc += slice;
    }
    return acc * ds;
}

void check_boundary(double ratio) {
    if (ratio > kBoundaryMassTol)
        throw TruncationWarning(
            "rhd: quadrature mass escaped the sampled box; enlarge x_half/y_half",
            ratio);
}

} // namespace

FieldAxes::FieldAxes(TimeGrid tg, double xh, int nx, double yh, int ny)
    : tgrid(tg), x_half(xh), n_x(nx), y_half(yh), n_y(ny) {
    if (!(xh > 0.0) || !(yh > 0.0) || nx < 2 || ny < 2)
        throw ConfigError("FieldAxes: needs positive half-widths and >= 2 nodes per axis");
}

bool FieldAxes::operator==(const FieldAxes& o) const {
    return tgrid.t_max == o.tgrid.t_max && tgrid.n_steps == o.tgrid.n_steps &&
           x_half == o.x_half && n_x == o.n_x && y_half == o.y_half &&
           n_y == o.n_y;
}

GridField::GridField(FieldAxes axes, HeatParams p)
    : axes_(axes), p_(p),
      v_(static_cast<std::size_t>(axes.tgrid.size()) * axes.n_x * axes.n_x *
             axes.n_y,
         0.0) {
    check_d1(p, "GridField");
}

double& GridField::at(int jt, int ix, int ixp, int ly) {
    const std::size_t idx =
        ((static_cast<std::size_t>(jt) * axes_.n_x + ix) * axes_.n_x + ixp) *
            axes_.n_y +
        ly;
    return v_[idx];
}

double GridField::at(int jt, int ix, int ixp, int ly) const {
    return const_cast<GridField*>(this)->at(jt, ix, ixp, ly);
}

GridField GridField::sample(
    const std::function<double(double, double, double, double)>& gauged_fn,
    const FieldAxes& axes, const HeatParams& p) {
    GridField out(axes, p);
    for (int jt = 0; jt < axes.tgrid.size(); ++jt) {
        const double t = axes.tgrid.node(jt);
        for (int ix = 0; ix < axes.n_x; ++ix)
            for (int ixp = 0; ixp < axes.n_x; ++ixp)
                for (int ly = 0; ly < axes.n_y; ++ly) {
                    const double v = gauged_fn(t, axes.x_node(ix),
                                               axes.x_node(ixp), axes.y_node(ly));
                    if (!std::isfinite(v))
                        throw NaNDetected("GridField::sample: non-finite value");
                    out.at(jt, ix, ixp, ly) = v;
                }
    }
    return out;
}

double GridField::gauged_probe(double t, double x, double xp, double y,
                               bool& outside) const {
    const double eps = 1e-12;
    if (t < -eps || t > axes_.tgrid.t_max * (1.0 + eps) ||
        std::abs(x) > axes_.x_half + eps || std::abs(xp) > axes_.x_half + eps ||
        std::abs(y) > axes_.y_half + eps) {
        outside = true;
        return 0.0;
    }
    auto split = [](double pos, int n_cells, int& i, double& frac) {
        pos = std::clamp(pos, 0.0, static_cast<double>(n_cells));
        i = std::min(static_cast<int>(pos), n_cells - 1);
        frac = pos - i;
    };
    int jt, ix, ixp, ly;
    double ft, fx, fxp, fy;
    split(t / axes_.tgrid.dt(), axes_.tgrid.n_steps, jt, ft);
    split((x + axes_.x_half) / axes_.dx(), axes_.n_x - 1, ix, fx);
    split((xp + axes_.x_half) / axes_.dx(), axes_.n_x - 1, ixp, fxp);
    split((y + axes_.y_half) / axes_.dy(), axes_.n_y - 1, ly, fy);
    double acc = 0.0;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c)
                for (int d = 0; d < 2; ++d) {
                    const double w = (a ? ft : 1.0 - ft) * (b ? fx : 1.0 - fx) *
                                     (c ? fxp : 1.0 - fxp) * (d ? fy : 1.0 - fy);
                    if (w != 0.0)
                        acc += w * at(jt + a, ix + b, ixp + c, ly + d);
                }
    return acc;
}

double GridField::gauged_value(double t, double x, double xp, double y) const {
    bool outside = false;
    return gauged_probe(t, x, xp, y, outside);
}

double GridField::value(double t, double x, double xp, double y) const {
    if (!(t > 0.0)) return 0.0;
    return gauged_value(t, x, xp, y) * heat_kernel_r(p_.nu, 1, t, std::abs(x)) *
           heat_kernel_r(p_.nu, 1, t, std::abs(xp));
}

double rhd_at(const GridField& h, const GridField& w,
              const CorrelationKernel& kernel, double t, double x, double xp,
              double y) {
    if (h.heat().nu != w.heat().nu)
        throw GridMismatch("rhd_at: input fields disagree on the diffusivity");
    RhdStats stats;
    auto probe = [&w](double s, double z, double zp, double yy, bool& out) {
        return w.gauged_probe(s, z, zp, yy, out);
    };
    const double gauged = rhd_core(h, probe, kernel, t, x, xp, y, &stats);
    check_boundary(stats.ratio());
    if (!(t > 0.0)) return 0.0;
    return gauged * heat_kernel_r(h.heat().nu, 1, t, std::abs(x)) *
           heat_kernel_r(h.heat().nu, 1, t, std::abs(xp));
}

double rhd_at(const GridField& h, const GaugedFn& w_gauged,
              const CorrelationKernel& kernel, double t, double x, double xp,
              double y) {
    RhdStats stats;
    auto probe = [&w_gauged](double s, double z, double zp, double yy,
                             bool& out) {
        (void)out;
        return w_gauged(s, z, zp, yy);
    };
    const double gauged = rhd_core(h, probe, kernel, t, x, xp, y, &stats);
    check_boundary(stats.ratio()); // only the h side contributes here
    if (!(t > 0.0)) return 0.0;
    return gauged * heat_kernel_r(h.heat().nu, 1, t, std::abs(x)) *
           heat_kernel_r(h.heat().nu, 1, t, std::abs(xp));
}

GridField discrete_rhd(const GridField& h, const GridField& w,
                       const CorrelationKernel& kernel,
                       const FieldAxes& out_axes) {
    if (!(h.axes() == w.axes()) || h.heat().nu != w.heat().nu)
        throw GridMismatch("discrete_rhd: input fields live on different grids");
    if (kernel.dim != 1)
        throw ConfigError("discrete_rhd: kernel must be one-dimensional");
    GridField out(out_axes, h.heat());
    auto probe = [&w](double s, double z, double zp, double yy, bool& o) {
        return w.gauged_probe(s, z, zp, yy, o);
    };
    // truncation is judged globally, weighting each output node's lost mass
    // by the node's Gaussian gauge so that far-tail nodes cannot dominate
    double leak_num = 0.0, leak_den = 0.0;
    for (int jt = 0; jt < out_axes.tgrid.size(); ++jt) {
        const double t = out_axes.tgrid.node(jt);
        for (int ix = 0; ix < out_axes.n_x; ++ix)
            for (int ixp = 0; ixp < out_axes.n_x; ++ixp)
                for (int ly = 0; ly < out_axes.n_y; ++ly) {
                    RhdStats stats;
                    const double xo = out_axes.x_node(ix);
                    const double xpo = out_axes.x_node(ixp);
                    const double v =
                        rhd_core(h, probe, kernel, t, xo, xpo,
                                 out_axes.y_node(ly), &stats);
                    if (!std::isfinite(v))
                        throw NaNDetected("discrete_rhd: non-finite value");
                    out.at(jt, ix, ixp, ly) = v;
                    if (t > 0.0) {
                        const double w_rel = std::exp(
                            -(xo * xo + xpo * xpo) / (2.0 * h.heat().nu * t));
                        leak_num += stats.outside_mass * w_rel;
                        leak_den += stats.total_mass * w_rel;
                    }
                }
    }
    if (leak_den > 0.0) check_boundary(leak_num / leak_den);
    return out;
}

GridField make_l0_field(const FieldAxes& axes, const HeatParams& p) {
    GridField out(axes, p);
    for (int jt = 0; jt < axes.tgrid.size(); ++jt)
        for (int ix = 0; ix < axes.n_x; ++ix)
            for (int ixp = 0; ixp < axes.n_x; ++ixp)
                for (int ly = 0; ly < axes.n_y; ++ly)
                    out.at(jt, ix, ixp, ly) = 1.0;
    return out;
}

GridField make_l1_field(const CorrelationKernel& kernel, const FieldAxes& axes,
                        const HeatParams& p) {
    check_d1(p, "make_l1_field");
    if (kernel.dim != 1)
        throw ConfigError("make_l1_field: kernel must be one-dimensional");
    GridField out(axes, p);
    // gauged L_1 depends only on (t, x - x', y): one table entry per triple
    const int n_d = 2 * axes.n_x - 1;
    std::vector<double> q_tab(static_cast<std::size_t>(axes.tgrid.size()) *
                                  n_d * axes.n_y,
                              0.0);
    auto q_at = [&](int jt, int di, int ly) -> double& {
        return q_tab[(static_cast<std::size_t>(jt) * n_d + di) * axes.n_y + ly];
    };
    for (int jt = 1; jt < axes.tgrid.size(); ++jt) {
        const double t = axes.tgrid.node(jt);
        for (int di = 0; di < n_d; ++di) {
            const double delta = (di - (axes.n_x - 1)) * axes.dx();
            for (int ly = 0; ly < axes.n_y; ++ly) {
                const double y = axes.y_node(ly);
                auto inner = [&](double s) {
                    const double tau = 2.0 * s * (t - s) / t;
                    if (!(tau > 0.0)) return 0.0;
                    const std::vector<double> m{y - (s / t) * delta};
                    return f_heat_inner(kernel, p, tau, m);
                };
                q_at(jt, di, ly) = integrate(inner, 0.0, 0.5 * t) +
                                   integrate(inner, 0.5 * t, t);
            }
        }
    }
    for (int jt = 0; jt < axes.tgrid.size(); ++jt)
        for (int ix = 0; ix < axes.n_x; ++ix)
            for (int ixp = 0; ixp < axes.n_x; ++ixp)
                for (int ly = 0; ly < axes.n_y; ++ly)
                    out.at(jt, ix, ixp, ly) =
                        q_at(jt, ix - ixp + axes.n_x - 1, ly);
    return out;
}

} // namespace she
