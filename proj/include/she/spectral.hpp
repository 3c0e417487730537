#pragma once

#include "she/kernels.hpp"

#include <utility>
#include <vector>

namespace she {

/// Result of a limit computation that may diverge.
struct LimitValue {
    bool divergent = true;
    double value = 0.0;

    static LimitValue finite(double v) { return {false, v}; }
    static LimitValue diverged() { return {true, 0.0}; }
};

/// Everything the phase-transition equivalence needs in one record.
struct SpectralReport {
    std::vector<std::pair<double, double>> upsilon_at; // (beta, upsilon(beta))
    LimitValue upsilon_zero;
    LimitValue iff2_value;
    LimitValue h1_limit;
    bool dalang_ok = false;
};

/// Spectral integral Upsilon(beta) = (2 pi)^{-d} int fhat(dxi) / (beta + |xi|^2).
/// Closed form where available; otherwise evaluated through the Laplace
/// identity Upsilon(b) = (1/2) int_0^inf exp(-b t / 2) k(t) dt at nu = 1
/// (Upsilon does not depend on nu). Throws DivergentIntegral on failure.
double upsilon(const CorrelationKernel& kernel, double beta);

/// Laplace transform int_0^inf exp(-beta t) k_nu(t) dt by quadrature with
/// singular-head handling; equals (2/nu) Upsilon(2 beta / nu).
double laplace_of_k(const CorrelationKernel& kernel, const HeatParams& p,
                    double beta);

/// Monotone limit Upsilon(0+) along beta = 2^{-k}.
LimitValue upsilon_zero(const CorrelationKernel& kernel);

/// The integral int f(z) |z|^{2-d} dz; DIVERGENT for d <= 2 without
/// computing. Non-radial kernels use the identity
/// int f(z)|z|^{2-d} dz = 2 pi^{d/2} / Gamma(d/2 - 1) * int_0^inf k_1(s) ds.
LimitValue iff2_integral(const CorrelationKernel& kernel);

/// lim_t h_1(t) computed by direct integration of k with horizon doubling
/// and cross-checked against (2/nu) Upsilon(0+).
/// Throws InconsistentLimits when the two routes disagree.
LimitValue h1_limit(const CorrelationKernel& kernel, const HeatParams& p);

/// Assembles the full report and verifies that the three equivalent
/// conditions give the same finite/divergent verdict.
/// Throws EquivalenceViolation otherwise.
SpectralReport equivalence_report(const CorrelationKernel& kernel,
                                  const HeatParams& p);

} // namespace she
