#include <doctest.h>

#include "expected_values.hpp"
#include "she/discrete.hpp"
#include "she/errors.hpp"
#include "she/moments.hpp"

#include <cmath>

using namespace she;

namespace {

double rel(double got, double want) {
    return std::abs(got - want) / std::abs(want);
}

const HeatParams p1(1.0, 1);
const CorrelationKernel kGauss = CorrelationKernel::ornstein_uhlenbeck(2.0, 1.0, 1);

// constant-in-space fields are stored exactly on two nodes per axis, so the
// box can be made wide enough that quadrature probes never leave it
FieldAxes wide_flat_axes(double t_max, int n_t) {
    return FieldAxes(TimeGrid(t_max, n_t), 4.5, 2, 6.0, 2);
}

FieldAxes l1_axes() {
    return FieldAxes(TimeGrid(0.5, 24), 3.0, 31, 1.2, 11);
}

} // namespace

TEST_CASE("field storage and gauge") {
    GridField l0f = make_l0_field(wide_flat_axes(0.5, 24), p1);
    for (double t : {0.1, 0.3, 0.5})
        for (double x : {-0.4, 0.0, 0.7}) {
            const double want = l0(p1, t, {x}, {-0.2});
            CHECK(rel(l0f.value(t, x, -0.2, 0.3), want) < 1e-12);
        }
    CHECK(l0f.value(0.0, 0.1, 0.1, 0.0) == 0.0);
    CHECK(l0f.value(0.2, 5.0, 0.0, 0.0) == 0.0); // outside the box
    GridField l1f = make_l1_field(kGauss, l1_axes(), p1);
    for (double t : {0.25, 0.5})
        for (double y : {-0.6, 0.0, 0.8}) {
            const double want = l1_exact(kGauss, p1, t, {0.3}, {-0.2}, {y});
            CHECK(rel(l1f.value(t, 0.3, -0.2, y), want) < 2e-2);
        }
}

TEST_CASE("one convolution step reproduces the first iterate") {
    GridField l0f = make_l0_field(wide_flat_axes(0.5, 24), p1);
    const struct { double t, x, xp, y; } pts[] = {
        {0.5, 0.3, -0.2, 0.4}, {0.25, 0.0, 0.0, 0.0}, {0.4, -0.5, 0.1, -0.3},
        {0.5, 0.0, 0.4, 0.8},  {0.3, 0.2, 0.2, -1.0},
    };
    for (const auto& q : pts) {
        const double want = l1_exact(kGauss, p1, q.t, {q.x}, {q.xp}, {q.y});
        const double got = rhd_at(l0f, l0f, kGauss, q.t, q.x, q.xp, q.y);
        CHECK(rel(got, want) < 1e-2);
    }
}

TEST_CASE("second iterate sits inside the ladder sandwich") {
    GridField l0f = make_l0_field(wide_flat_axes(0.5, 24), p1);
    GridField l1f = make_l1_field(kGauss, l1_axes(), p1);
    HFamily fam = compute_h_family(kGauss, p1, 0.4, TimeGrid::standard(0.5), 2);
    HFamily fam0 = compute_h_family(kGauss, p1, 0.0, TimeGrid::standard(0.5), 2);
    const double t = 0.5, x = 0.3, xp = -0.2, y = 0.4;
    const double l2 = rhd_at(l0f, l1f, kGauss, t, x, xp, y);
    const double up = 4.0 * l0(p1, t, {x}, {xp}) * fam0.h(2, t);
    const double low = std::pow(2.0 * std::sqrt(3.0), -2) * l0(p1, t, {x}, {xp}) *
                       gauss_factor(p1, t, {x - xp}) * fam.h(2, 0.5 * t);
    CHECK(l2 <= up * 1.02);
    CHECK(l2 >= low * 0.98);
    // the first iterate obeys its own sandwich on the same geometry
    const double l1v = rhd_at(l0f, l0f, kGauss, t, x, xp, y);
    CHECK(l1v <= 2.0 * l0(p1, t, {x}, {xp}) * fam0.h(1, t) * 1.02);
    CHECK(l1v >= std::pow(2.0 * std::sqrt(3.0), -1) * l0(p1, t, {x}, {xp}) *
                     gauss_factor(p1, t, {x - xp}) * fam.h(1, 0.5 * t) * 0.98);
}

TEST_CASE("convolution is associative") {
    GridField l0f = make_l0_field(wide_flat_axes(0.25, 10), p1);
    FieldAxes mid_axes(TimeGrid(0.25, 10), 1.8, 17, 3.6, 25);
    GridField mid = discrete_rhd(l0f, l0f, kGauss, mid_axes);
    const struct { double t, x, xp, y; } pts[] = {
        {0.25, 0.3, -0.2, 0.4}, {0.2, 0.0, 0.0, 0.0}, {0.25, -0.4, 0.1, -0.6},
    };
    for (const auto& q : pts) {
        const double left = rhd_at(mid, l0f, kGauss, q.t, q.x, q.xp, q.y);
        const double right = rhd_at(l0f, mid, kGauss, q.t, q.x, q.xp, q.y);
        CHECK(rel(left, right) < 3e-2);
    }
}

TEST_CASE("degenerate and mismatched inputs") {
    FieldAxes ax(TimeGrid(0.5, 12), 2.6, 15, 4.0, 5);
    GridField l0f = make_l0_field(ax, p1);
    SUBCASE("zero right factor gives zero") {
        GridField zero(ax, p1);
        CHECK(rhd_at(l0f, zero, kGauss, 0.4, 0.1, -0.1, 0.2) == 0.0);
        GridField out = discrete_rhd(l0f, zero, kGauss,
                                     FieldAxes(TimeGrid(0.5, 4), 1.0, 3, 1.0, 3));
        CHECK(out.value(0.5, 0.0, 0.0, 0.0) == 0.0);
    }
    SUBCASE("mismatched inputs are rejected") {
        GridField other_nu(ax, HeatParams(0.5, 1));
        CHECK_THROWS_AS((void)rhd_at(l0f, other_nu, kGauss, 0.4, 0.0, 0.0, 0.0),
                        GridMismatch);
        FieldAxes other(TimeGrid(0.5, 12), 2.6, 17, 4.0, 5);
        GridField w(other, p1);
        CHECK_THROWS_AS((void)discrete_rhd(l0f, w, kGauss, ax), GridMismatch);
    }
    SUBCASE("undersized boxes are reported") {
        FieldAxes tiny(TimeGrid(0.5, 8), 0.8, 9, 1.5, 5);
        GridField small = make_l0_field(tiny, p1);
        CHECK_THROWS_AS((void)rhd_at(small, small, kGauss, 0.5, 0.0, 0.0, 0.0),
                        TruncationWarning);
        CHECK_THROWS_AS((void)discrete_rhd(small, small, kGauss, tiny),
                        TruncationWarning);
    }
    SUBCASE("white noise has no pointwise kernel values") {
        auto wn = CorrelationKernel::white_noise_1d();
        CHECK_THROWS_AS((void)rhd_at(l0f, l0f, wn, 0.4, 0.0, 0.0, 0.0),
                        NotPointwise);
    }
}

TEST_CASE("measure-integrated and convolution forms of the first-order term agree") {
    // sum_{a,a'} w_a w_{a'} L_1(t, x-a, x'-a'; a'-a) equals (L_0 |> J_1) at
    // offset 0 when J_1(s,z,z') = J_0(s,z) J_0(s,z') for the atom measure.
    const std::vector<std::pair<double, double>> atoms{{-0.15, 0.6}, {0.1, 1.0}};
    const double t = 0.5, x = 0.3, xp = -0.1;
    double lhs = 0.0;
    for (const auto& [a, wa] : atoms)
        for (const auto& [ap, wap] : atoms)
            lhs += wa * wap *
                   l1_exact(kGauss, p1, t, {x - a}, {xp - ap}, {ap - a});
    GridField l0f = make_l0_field(wide_flat_axes(0.5, 16), p1);
    auto j1_gauged = [&](double s, double z, double zp, double) {
        double fz = 0.0, fzp = 0.0;
        for (const auto& [a, wa] : atoms) {
            fz += wa * std::exp((2.0 * a * z - a * a) / (2.0 * s));
            fzp += wa * std::exp((2.0 * a * zp - a * a) / (2.0 * s));
        }
        return fz * fzp;
    };
    const double rhs = rhd_at(l0f, GaugedFn(j1_gauged), kGauss, t, x, xp, 0.0);
    CHECK(rel(lhs, rhs) < 2e-2);
}
