#pragma once

#include "she/kernels.hpp"
#include "she/moments.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

namespace she {

/// Noise coefficient rho(u) together with its linear-growth constants
/// lip |u| <= |rho(u)| <= Lip |u|. The exactly-linear case rho(u) = lam u
/// keeps lam so moment oracles can use the scalar closed forms.
struct NoiseCoefficient {
    double lam = 0.0;                 // linear slope when fn is empty
    std::function<double(double)> fn; // general Lipschitz map, rho(0) = 0
    double lip = 0.0;                 // linear-growth floor
    double Lip = 0.0;                 // linear-growth cap

    static NoiseCoefficient linear(double lam);
    static NoiseCoefficient lipschitz(std::function<double(double)> fn,
                                      double lip, double Lip);

    double operator()(double u) const { return fn ? fn(u) : lam * u; }
    bool linear_exact() const { return !fn; }
};

/// Monte Carlo run description for the d = 1 mild equation on [-L, L] with
/// reflecting (Neumann) boundaries, explicit Euler stepping and spatially
/// correlated Gaussian noise increments.
struct SimConfig {
    CorrelationKernel kernel = CorrelationKernel::constant(1.0, 1);
    HeatParams p{1.0, 1};
    NoiseCoefficient rho = NoiseCoefficient::linear(1.0);
    InitialMeasure mu = InitialMeasure::lebesgue(1.0);
    double half_width = 8.0; // L: spatial domain is [-L, L]
    int n_x = 257;           // nodes; dx = 2 L / (n_x - 1)
    double t_max = 1.0;
    int n_t = 1024;          // steps; dt = t_max / n_t
    long n_paths = 1000;
    std::uint64_t seed = 1;
    bool antithetic = false;
    int n_batches = 40; // independent batches for standard errors
    int threads = 1;    // batches are the unit of parallel work
    // Second-moment read-out points (t, x, x'), snapped to grid nodes.
    std::vector<std::array<double, 3>> targets;

    double dx() const { return 2.0 * half_width / (n_x - 1); }
    double dt() const { return t_max / n_t; }
};

/// Validates every SimConfig invariant: d = 1, grid sizes, the explicit
/// stability bound dt <= dx^2 / nu (StabilityViolated), batch layout, and
/// for compactly supported initial data the requirement that the heat mass
/// escaping [-L, L] by t_max stays below 1e-8 of the total (ConfigError).
void validate_config(const SimConfig& cfg);

/// Deterministic-by-seed sampler of one spatial noise increment vector with
/// covariance f(x_i - x_j) dt on the node grid (white noise: iid dt/dx).
/// Smooth kernels factor through circulant embedding on the doubled domain
/// [-2L, 2L]; when the embedding needs more than a 1e-6 trace fraction of
/// eigenvalue clamping, a dense symmetric eigenfactorization takes over for
/// n_x <= 1024, else IndefiniteCovariance. Riesz diagonals are replaced by
/// the cell average of f (lattice regularization of the singularity).
class NoiseSampler {
public:
    NoiseSampler(const CorrelationKernel& kernel, int n_x, double dx,
                 double dt, std::uint64_t seed);
    ~NoiseSampler();
    NoiseSampler(NoiseSampler&&) noexcept;
    NoiseSampler& operator=(NoiseSampler&&) noexcept;

    /// Fills out with the increment for (path, step): a pure function of
    /// (seed, path, step), so call order and threading are irrelevant.
    /// Thread safety: concurrent calls need one workspace per thread.
    void sample(std::uint64_t path, std::uint32_t step,
                std::vector<double>& out) const;

    /// Per-thread scratch buffers for the transform or factor product.
    class Workspace {
    public:
        Workspace();
        ~Workspace();
        Workspace(Workspace&&) noexcept;
        Workspace& operator=(Workspace&&) noexcept;

    private:
        friend class NoiseSampler;
        struct Data;
        std::unique_ptr<Data> data_;
    };
    Workspace make_workspace() const;
    /// Same increments through an explicit per-thread workspace.
    void sample(std::uint64_t path, std::uint32_t step, Workspace& ws,
                std::vector<double>& out) const;

    int size() const;
    /// Fraction of covariance trace removed by the eigenvalue floor.
    double clamped_fraction() const;
    /// True when the dense fallback replaced the circulant embedding.
    bool dense_factorization() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// One estimated second moment E[u(t,x) u(t,x')] at snapped coordinates.
struct SimTarget {
    double t = 0.0, x = 0.0, xp = 0.0;
    double estimate = 0.0;
    double se = 0.0; // standard error across path batches
};

/// Monte Carlo output: first-moment field at t_max, second moments at the
/// requested targets, and scheme diagnostics.
struct SimResult {
    std::vector<double> x;        // spatial nodes
    double dx = 0.0, dt = 0.0;
    std::vector<double> mean_field;    // E[u(t_max, x_i)]
    std::vector<double> mean_field_se; // batch standard error per node
    std::vector<SimTarget> second_moments;
    long n_paths = 0;
    int n_batches = 0;
    std::uint64_t seed = 0;
    double min_value = 0.0;   // most negative field value encountered
    long negative_flags = 0;  // node-steps below the scheme-error allowance
    double clamped_fraction = 0.0;
    bool dense_factorization = false;
};

/// Runs the explicit Euler scheme over all paths. Batches are the unit of
/// scheduling, each path draws its noise from a (seed, path, step) keyed
/// substream, and batch sums accumulate in path order, so the result is
/// identical for any thread count. Throws NaNDetected naming the first bad
/// path and step; paths are never dropped.
SimResult simulate(const SimConfig& cfg);

/// One row of the Monte-Carlo-versus-analytic comparison.
struct ValidationRow {
    double t = 0.0, x = 0.0, xp = 0.0;
    double estimate = 0.0;
    double se = 0.0;
    double lower = 0.0, upper = 0.0; // second-moment envelope
    double bias = 0.0; // discretization allowance from grid halving
    bool pass = false; // interval overlap after the allowance
};

struct ValidationReport {
    std::vector<ValidationRow> rows;
    SimResult fine;   // full-resolution run
    bool all_pass = false;
};

/// Compares simulated second moments against the analytic envelope at each
/// target: the run repeats on a halved grid (dx doubled, dt scaled by 4)
/// and the difference between the two resolutions is the discretization
/// allowance added to the 3-standard-error band before the overlap test.
ValidationReport validate_moments(const SimConfig& cfg,
                                  const std::vector<std::array<double, 3>>& targets);

/// CSV export, one row per target:
/// t,x,xp,estimate,stderr,bound_lower,bound_upper,pass.
void write_validation_csv(std::ostream& os, const ValidationReport& rep);

} // namespace she
