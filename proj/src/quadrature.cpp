#include "she/quadrature.hpp"

#include "she/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace she {

TimeGrid::TimeGrid(double t_max_, int n_steps_) : t_max(t_max_), n_steps(n_steps_) {
    if (!(t_max > 0.0)) throw ConfigError("TimeGrid: t_max must be positive");
    if (n_steps < 1) throw ConfigError("TimeGrid: n_steps must be >= 1");
}

TimeGrid TimeGrid::standard(double t_max) {
    int n = static_cast<int>(std::ceil(512.0 * t_max));
    n = std::clamp(n, 64, 1 << 20);
    if (n % 2 == 1) ++n;
    return TimeGrid(t_max, n);
}

SingularWeight::SingularWeight(double e) : exponent(e) {
    if (!(e > -1.0) || e > 0.0)
        throw ConfigError("SingularWeight: exponent must lie in (-1, 0]");
}

namespace {

// 15-point Gauss-Kronrod rule on [-1, 1] with the embedded 7-point Gauss rule.
constexpr double kGK15Nodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.000000000000000};
constexpr double kGK15Weights[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
constexpr double kG7Weights[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

struct GKResult {
    double value;
    double error;
};

GKResult gk15(const Integrand& g, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fv[15];
    for (int i = 0; i < 7; ++i) {
        fv[i] = g(c - h * kGK15Nodes[i]);
        fv[14 - i] = g(c + h * kGK15Nodes[i]);
    }
    fv[7] = g(c);
    double kronrod = 0.0;
    for (int i = 0; i < 7; ++i) kronrod += kGK15Weights[i] * (fv[i] + fv[14 - i]);
    kronrod += kGK15Weights[7] * fv[7];
    double gauss = kG7Weights[3] * fv[7];
    for (int i = 0; i < 3; ++i) gauss += kG7Weights[i] * (fv[2 * i + 1] + fv[13 - 2 * i]);
    return {kronrod * h, std::abs((kronrod - gauss) * h)};
}

double adaptive(const Integrand& g, double a, double b, double abs_tol, double rel_tol) {
    struct Seg {
        double a, b, value, error;
    };
    GKResult first = gk15(g, a, b);
    std::vector<Seg> segs{{a, b, first.value, first.error}};
    double total = first.value;
    double total_err = first.error;
    const int max_segs = 2000;
    while (true) {
        const double tol = std::max(abs_tol, rel_tol * std::abs(total));
        if (total_err <= tol) return total;
        if (static_cast<int>(segs.size()) >= max_segs)
            throw ToleranceNotMet("adaptive quadrature: subdivision limit reached", total,
                                  total_err);
        auto worst =
            std::max_element(segs.begin(), segs.end(),
                             [](const Seg& u, const Seg& v) { return u.error < v.error; });
        const Seg s = *worst;
        segs.erase(worst);
        const double m = 0.5 * (s.a + s.b);
        if (!(m > s.a && m < s.b))
            throw ToleranceNotMet("adaptive quadrature: interval underflow", total, total_err);
        GKResult l = gk15(g, s.a, m);
        GKResult r = gk15(g, m, s.b);
        total += l.value + r.value - s.value;
        total_err += l.error + r.error - s.error;
        segs.push_back({s.a, m, l.value, l.error});
        segs.push_back({m, s.b, r.value, r.error});
    }
}

} // namespace

double integrate(const Integrand& g, double a, double b) {
    if (a == b) return 0.0;
    return adaptive(g, a, b, 1e-10, 1e-8);
}

double integrate_singular(const Integrand& g, double a, double b, SingularWeight w) {
    if (!(b > a)) throw ConfigError("integrate_singular: requires b > a");
    const double p = w.exponent;
    if (p == 0.0) return integrate(g, a, b);
    // substitute s - a = u^q with q = 1/(1+p): the weighted integrand becomes
    // q * u^{q(1+p)-1} g(a + u^q) = q * g(a + u^q), analytic in u at 0.
    const double q = 1.0 / (1.0 + p);
    const double u_max = std::pow(b - a, 1.0 / q);
    auto h = [&](double u) {
        if (u <= 0.0) return 0.0;
        return q * g(a + std::pow(u, q));
    };
    return adaptive(h, 0.0, u_max, 1e-10, 1e-8);
}

double integrate_to_inf(const Integrand& g, double a) {
    double left = a;
    double width = std::max(1.0, std::abs(a));
    double acc = 0.0;
    int flat = 0;
    for (int seg = 0; seg < 80; ++seg) {
        const double part = integrate(g, left, left + width);
        acc += part;
        if (std::abs(part) <= std::max(1e-14, 1e-12 * std::abs(acc))) {
            if (++flat >= 2) return acc;
        } else {
            flat = 0;
        }
        if (seg > 6 && std::abs(acc) > 1e300)
            throw DivergentIntegral("integrate_to_inf: partial sums exceed range");
        left += width;
        width *= 2.0;
    }
    throw DivergentIntegral("integrate_to_inf: tail failed to stabilize");
}

double sphere_surface(int d) {
    if (d < 1) throw ConfigError("sphere_surface: d must be >= 1");
    return d * std::pow(M_PI, 0.5 * d) / std::tgamma(1.0 + 0.5 * d);
}

double radial_integral(const Integrand& f_radial, const Integrand& weight, int d,
                       double r_scale, double origin_exponent) {
    if (d < 1 || d > 6)
        throw ConfigError("radial_integral: dimension must be in 1..6");
    if (!(r_scale > 0.0)) throw ConfigError("radial_integral: r_scale must be positive");
    const double surf = sphere_surface(d);
    // normalize the weight to O(1) so the absolute tolerance of the adaptive
    // rule stays meaningful when the weight carries a tiny prefactor
    const double w0 = std::abs(weight(0.25 * r_scale)) + std::abs(weight(r_scale));
    if (!(w0 > 0.0)) throw QuadratureFailure("radial_integral: weight vanishes at r_scale");
    auto integrand = [&](double r) {
        return f_radial(r) * (weight(r) / w0) * std::pow(r, d - 1);
    };
    double r_cut = r_scale;
    for (int i = 0; i < 60 && std::abs(weight(r_cut)) > 1e-18 * w0; ++i) r_cut *= 1.5;

    const double p = origin_exponent + d - 1;
    if (!(p > -1.0)) throw DivergentIntegral("radial_integral: non-integrable origin");
    auto eval_to = [&](double rmax) {
        const double r0 = std::min(rmax, r_scale);
        double head;
        if (origin_exponent != 0.0 && p <= 0.0) {
            // pull out the full power of r; the remaining factor is bounded
            auto reg = [&](double r) {
                return f_radial(r) * std::pow(r, -origin_exponent) * (weight(r) / w0);
            };
            head = integrate_singular(reg, 0.0, r0, SingularWeight(p));
        } else {
            head = integrate(integrand, 0.0, r0);
        }
        // octave segments keep the adaptive rule from stepping over the
        // decaying bulk on a long truncation interval
        double acc = head;
        double left = r0;
        double width = r0;
        while (left < rmax) {
            const double right_end = std::min(left + width, rmax);
            acc += integrate(integrand, left, right_end);
            left = right_end;
            width *= 2.0;
        }
        return acc;
    };

    double value = eval_to(r_cut);
    for (int i = 0; i < 8; ++i) {
        const double wider = eval_to(2.0 * r_cut);
        if (std::abs(wider - value) <= std::max(1e-14, 1e-9 * std::abs(wider)))
            return surf * w0 * wider;
        value = wider;
        r_cut *= 2.0;
        if (std::abs(value) > 1e300)
            throw DivergentIntegral("radial_integral: tail truncation fails to stabilize");
    }
    throw DivergentIntegral("radial_integral: tail truncation fails to stabilize");
}

std::vector<std::array<double, 3>> singular_cell_moments(const TimeGrid& grid, double p) {
    // 16-point Gauss-Legendre nodes/weights on [0, 1] for the regular cells
    static constexpr double kGLx[16] = {
        0.005299532504175031, 0.027712488463383712, 0.06718439880608412,
        0.12229779582249845,  0.19106187779867811,  0.27099161117138625,
        0.35919822461037054,  0.45249374508118123,  0.5475062549188188,
        0.6408017753896295,   0.7290083888286138,   0.8089381222013219,
        0.8777022041775016,   0.9328156011939159,   0.9722875115366163,
        0.9947004674958249};
    static constexpr double kGLw[16] = {
        0.013576229705877047, 0.03112676196932395, 0.04757925584124639,
        0.06231448562776694,  0.07479799440828837, 0.08457825969750127,
        0.09130170752246179,  0.0947253052275342,  0.0947253052275342,
        0.09130170752246179,  0.08457825969750127, 0.07479799440828837,
        0.06231448562776694,  0.04757925584124639, 0.03112676196932395,
        0.013576229705877047};

    const int n = grid.n_steps;
    const double dt = grid.dt();
    const double scale = std::pow(dt, p + 1.0);
    std::vector<std::array<double, 3>> mom(static_cast<size_t>(n));
    // first cell: int_0^dt tau^p u^q dtau = dt^{p+1}/(p+q+1)
    mom[0] = {scale / (p + 1.0), scale / (p + 2.0), scale / (p + 3.0)};
    for (int m = 1; m < n; ++m) {
        std::array<double, 3> acc{0.0, 0.0, 0.0};
        for (int i = 0; i < 16; ++i) {
            const double u = kGLx[i];
            const double base = kGLw[i] * std::pow(m + u, p);
            acc[0] += base;
            acc[1] += base * u;
            acc[2] += base * u * u;
        }
        mom[static_cast<size_t>(m)] = {scale * acc[0], scale * acc[1], scale * acc[2]};
    }
    return mom;
}

std::vector<double> convolve_on_grid(const TimeGrid& grid, std::span<const double> left_reg,
                                     SingularWeight w, std::span<const double> right) {
    const int n = grid.n_steps;
    if (static_cast<int>(left_reg.size()) != n + 1 || static_cast<int>(right.size()) != n + 1)
        throw GridMismatch("convolve_on_grid: inputs must have n_steps+1 node values");
    const auto mom = singular_cell_moments(grid, w.exponent);
    std::vector<double> out(static_cast<size_t>(n) + 1, 0.0);
    for (int j = 1; j <= n; ++j) {
        double acc = 0.0;
        for (int m = 0; m < j; ++m) {
            // cell [t_m, t_{m+1}] in tau; R is evaluated at t_j - tau, which
            // runs from node j-m (at tau = t_m) down to node j-m-1.
            const double l0 = left_reg[static_cast<size_t>(m)];
            const double l1 = left_reg[static_cast<size_t>(m) + 1];
            const double r0 = right[static_cast<size_t>(j - m)];
            const double r1 = right[static_cast<size_t>(j - m - 1)];
            const double dl = l1 - l0;
            const double dr = r1 - r0;
            const auto& mm = mom[static_cast<size_t>(m)];
            acc += l0 * r0 * mm[0] + (l0 * dr + r0 * dl) * mm[1] + dl * dr * mm[2];
        }
        out[static_cast<size_t>(j)] = acc;
    }
    return out;
}

} // namespace she
