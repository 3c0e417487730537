#include "she/simulate.hpp"

#include "she/errors.hpp"
#include "she/philox.hpp"

#include <Eigen/Dense>
#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <ostream>
#include <thread>

namespace she {

namespace {

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

// Pairwise (tree) summation over a contiguous range: bounded rounding drift
// independent of the accumulation schedule.
double pairwise_sum(const double* v, std::size_t n) {
    if (n <= 4) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

double tail_mass_outside(double z, double half_width, double sigma) {
    const double a = (half_width - z) / sigma;
    const double b = (half_width + z) / sigma;
    return 0.5 * (std::erfc(a / std::sqrt(2.0)) + std::erfc(b / std::sqrt(2.0)));
}

} // namespace

NoiseCoefficient NoiseCoefficient::linear(double lam) {
    NoiseCoefficient rho;
    rho.lam = lam;
    rho.lip = rho.Lip = std::abs(lam);
    return rho;
}

NoiseCoefficient NoiseCoefficient::lipschitz(std::function<double(double)> fn,
                                             double lip, double Lip) {
    if (!fn) throw ConfigError("NoiseCoefficient: empty function");
    if (!(lip >= 0.0) || !(Lip >= lip))
        throw ConfigError("NoiseCoefficient: requires 0 <= lip <= Lip");
    if (std::abs(fn(0.0)) > 0.0)
        throw ConfigError("NoiseCoefficient: rho(0) must vanish");
    NoiseCoefficient rho;
    rho.fn = std::move(fn);
    rho.lip = lip;
    rho.Lip = Lip;
    rho.lam = 0.5 * (lip + Lip);
    return rho;
}

void validate_config(const SimConfig& cfg) {
    if (cfg.p.dim != 1)
        throw ConfigError("simulate: only d = 1 is supported");
    if (cfg.kernel.dim != 1)
        throw ConfigError("simulate: kernel dimension must be 1");
    if (cfg.n_x < 8) throw ConfigError("simulate: n_x must be at least 8");
    if (cfg.n_t < 1) throw ConfigError("simulate: n_t must be at least 1");
    if (!(cfg.t_max > 0.0)) throw ConfigError("simulate: t_max must be positive");
    if (!(cfg.half_width > 0.0))
        throw ConfigError("simulate: half_width must be positive");
    const double dx = cfg.dx(), dt = cfg.dt();
    if (dt > dx * dx / cfg.p.nu * (1.0 + 1e-12))
        throw StabilityViolated(
            "simulate: explicit scheme needs dt <= dx^2 / nu, got dt = " +
            fmt_g(dt) + " > " + fmt_g(dx * dx / cfg.p.nu));
    if (cfg.n_batches < 30)
        throw ConfigError("simulate: standard errors need at least 30 batches");
    if (cfg.n_paths < 2L * cfg.n_batches)
        throw ConfigError("simulate: need at least two paths per batch");
    if (cfg.antithetic && cfg.n_paths % 2 != 0)
        throw ConfigError("simulate: antithetic pairing needs an even path count");
    if (cfg.threads < 1) throw ConfigError("simulate: threads must be >= 1");
    if (!(cfg.rho.lip >= 0.0) || !(cfg.rho.Lip >= cfg.rho.lip))
        throw ConfigError("simulate: rho constants must satisfy 0 <= lip <= Lip");

    // compactly supported initial mass must not reach the boundary by t_max
    std::vector<double> support;
    switch (cfg.mu.kind) {
    case InitialMeasure::Kind::DiracAt:
        support.push_back(cfg.mu.point.at(0));
        break;
    case InitialMeasure::Kind::Atoms:
        for (const auto& [z, w] : cfg.mu.atom_list) {
            (void)w;
            support.push_back(z.at(0));
        }
        break;
    case InitialMeasure::Kind::Density:
        support.push_back(-cfg.mu.density_half_width);
        support.push_back(cfg.mu.density_half_width);
        break;
    case InitialMeasure::Kind::LebesgueScaled:
        break; // flat data is preserved exactly by the reflecting boundary
    }
    const double sigma = std::sqrt(cfg.p.nu * cfg.t_max);
    for (double z : support) {
        if (std::abs(z) > cfg.half_width)
            throw ConfigError("simulate: initial mass outside the domain");
        const double leak = tail_mass_outside(z, cfg.half_width, sigma);
        if (leak > 1e-8)
            throw ConfigError(
                "simulate: heat mass escaping the domain by t_max is " +
                fmt_g(leak) + " (> 1e-8); enlarge half_width");
    }

    for (const auto& tgt : cfg.targets) {
        if (!(tgt[0] > 0.0) || tgt[0] > cfg.t_max * (1.0 + 1e-12))
            throw ConfigError("simulate: target time outside (0, t_max]");
        if (std::abs(tgt[1]) > cfg.half_width ||
            std::abs(tgt[2]) > cfg.half_width)
            throw ConfigError("simulate: target point outside the domain");
    }
}

// ---------------------------------------------------------------------------
// NoiseSampler

struct NoiseSampler::Workspace::Data {
    fftw_complex* freq = nullptr;
    double* field = nullptr;
    std::vector<double> xi;

    ~Data() {
        if (freq) fftw_free(freq);
        if (field) fftw_free(field);
    }
};

NoiseSampler::Workspace::Workspace() : data_(new Data) {}
NoiseSampler::Workspace::~Workspace() = default;
NoiseSampler::Workspace::Workspace(Workspace&&) noexcept = default;
NoiseSampler::Workspace& NoiseSampler::Workspace::operator=(
    Workspace&&) noexcept = default;

struct NoiseSampler::Impl {
    enum class Mode { White, Circulant, Dense };

    Mode mode = Mode::White;
    int n = 0;
    int m = 0; // circulant period 2 (n - 1): wrap on the doubled domain
    std::uint64_t seed = 0;
    double white_scale = 0.0;
    std::vector<double> amp; // k = 0..m/2: spectral amplitudes
    fftw_plan plan = nullptr;
    Eigen::MatrixXd factor; // dense B with B B^T = C
    double clamped = 0.0;
    bool dense = false;

    ~Impl() {
        if (plan) fftw_destroy_plan(plan);
    }
};

namespace {

// Stationary covariance row c_j = f(j dx) dt; the Riesz diagonal is the
// cell average of the singular profile (lattice regularization).
std::vector<double> covariance_row(const CorrelationKernel& kernel, int n,
                                   double dx, double dt) {
    std::vector<double> c(n);
    if (kernel.variant == KernelVariant::Riesz) {
        const double a = kernel.alpha;
        c[0] = std::pow(0.5 * dx, -a) / (1.0 - a) * dt;
    } else {
        c[0] = eval_f_radial(kernel, 0.0) * dt;
    }
    for (int j = 1; j < n; ++j) c[j] = eval_f_radial(kernel, j * dx) * dt;
    return c;
}

} // namespace

NoiseSampler::NoiseSampler(const CorrelationKernel& kernel, int n_x, double dx,
                           double dt, std::uint64_t seed)
    : impl_(new Impl) {
    if (n_x < 2) throw ConfigError("NoiseSampler: n_x must be at least 2");
    if (!(dx > 0.0) || !(dt > 0.0))
        throw ConfigError("NoiseSampler: dx and dt must be positive");
    impl_->n = n_x;
    impl_->seed = seed;

    if (kernel.variant == KernelVariant::WhiteNoise1D) {
        impl_->mode = Impl::Mode::White;
        impl_->white_scale = std::sqrt(dt / dx);
        return;
    }

    const std::vector<double> c = covariance_row(kernel, n_x, dx, dt);
    const int m = 2 * (n_x - 1);
    std::vector<double> wrap(m);
    for (int j = 0; j < m; ++j) wrap[j] = c[std::min(j, m - j)];

    // spectrum of the circulant embedding
    std::vector<double> lambda(m / 2 + 1);
    {
        double* in = fftw_alloc_real(m);
        fftw_complex* out = fftw_alloc_complex(m / 2 + 1);
        fftw_plan fwd = fftw_plan_dft_r2c_1d(m, in, out, FFTW_ESTIMATE);
        std::copy(wrap.begin(), wrap.end(), in);
        fftw_execute(fwd);
        for (int k = 0; k <= m / 2; ++k) lambda[k] = out[k][0];
        fftw_destroy_plan(fwd);
        fftw_free(in);
        fftw_free(out);
    }
    const double trace = m * wrap[0];
    double clamped_mass = 0.0;
    for (int k = 0; k <= m / 2; ++k) {
        const double mult = (k == 0 || k == m / 2) ? 1.0 : 2.0;
        if (lambda[k] < 0.0) clamped_mass += mult * -lambda[k];
    }
    const double frac = clamped_mass / trace;

    if (frac <= 1e-6) {
        impl_->mode = Impl::Mode::Circulant;
        impl_->m = m;
        impl_->clamped = frac;
        impl_->amp.resize(m / 2 + 1);
        for (int k = 0; k <= m / 2; ++k) {
            const double lam = std::max(lambda[k], 0.0);
            const double norm = (k == 0 || k == m / 2) ? 1.0 : 2.0;
            impl_->amp[k] = std::sqrt(lam / (norm * m));
        }
        fftw_complex* freq = fftw_alloc_complex(m / 2 + 1);
        double* field = fftw_alloc_real(m);
        impl_->plan = fftw_plan_dft_c2r_1d(m, freq, field,
                                           FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(freq);
        fftw_free(field);
        return;
    }

    if (n_x > 1024)
        throw IndefiniteCovariance(
            "NoiseSampler: circulant embedding clamps " + fmt_g(frac) +
            " of the trace and n_x is too large for the dense fallback");

    // dense fallback on the original domain
    Eigen::MatrixXd C(n_x, n_x);
    for (int i = 0; i < n_x; ++i)
        for (int j = 0; j < n_x; ++j) C(i, j) = c[std::abs(i - j)];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
    const Eigen::VectorXd ev = es.eigenvalues();
    double neg = 0.0;
    for (int i = 0; i < n_x; ++i)
        if (ev[i] < 0.0) neg -= ev[i];
    const double dense_frac = neg / (n_x * c[0]);
    if (dense_frac > 1e-6)
        throw IndefiniteCovariance(
            "NoiseSampler: covariance is indefinite; clamped trace fraction " +
            fmt_g(dense_frac) + " (circulant: " + fmt_g(frac) + ")");
    impl_->mode = Impl::Mode::Dense;
    impl_->dense = true;
    impl_->clamped = dense_frac;
    impl_->factor =
        es.eigenvectors() * ev.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

NoiseSampler::~NoiseSampler() = default;
NoiseSampler::NoiseSampler(NoiseSampler&&) noexcept = default;
NoiseSampler& NoiseSampler::operator=(NoiseSampler&&) noexcept = default;

int NoiseSampler::size() const { return impl_->n; }
double NoiseSampler::clamped_fraction() const { return impl_->clamped; }
bool NoiseSampler::dense_factorization() const { return impl_->dense; }

NoiseSampler::Workspace NoiseSampler::make_workspace() const {
    Workspace ws;
    if (impl_->mode == Impl::Mode::Circulant) {
        ws.data_->freq = fftw_alloc_complex(impl_->m / 2 + 1);
        ws.data_->field = fftw_alloc_real(impl_->m);
    } else if (impl_->mode == Impl::Mode::Dense) {
        ws.data_->xi.resize(impl_->n);
    }
    return ws;
}

void NoiseSampler::sample(std::uint64_t path, std::uint32_t step,
                          Workspace& ws, std::vector<double>& out) const {
    const int n = impl_->n;
    out.resize(static_cast<std::size_t>(n));
    Philox gen(impl_->seed, path, step);
    Workspace::Data& wd = *ws.data_;
    switch (impl_->mode) {
    case Impl::Mode::White: {
        for (int i = 0; i < n; ++i)
            out[static_cast<std::size_t>(i)] = impl_->white_scale * gen.normal();
        return;
    }
    case Impl::Mode::Circulant: {
        const int m = impl_->m;
        // fixed draw order: mode 0, conjugate pairs, Nyquist mode
        wd.freq[0][0] = impl_->amp[0] * gen.normal();
        wd.freq[0][1] = 0.0;
        for (int k = 1; k < m / 2; ++k) {
            wd.freq[k][0] = impl_->amp[static_cast<std::size_t>(k)] * gen.normal();
            wd.freq[k][1] = impl_->amp[static_cast<std::size_t>(k)] * gen.normal();
        }
        wd.freq[m / 2][0] = impl_->amp[static_cast<std::size_t>(m / 2)] * gen.normal();
        wd.freq[m / 2][1] = 0.0;
        fftw_execute_dft_c2r(impl_->plan, wd.freq, wd.field);
        std::copy(wd.field, wd.field + n, out.begin());
        return;
    }
    case Impl::Mode::Dense: {
        for (int i = 0; i < n; ++i)
            wd.xi[static_cast<std::size_t>(i)] = gen.normal();
        Eigen::Map<Eigen::VectorXd> xi(wd.xi.data(), n);
        Eigen::Map<Eigen::VectorXd> res(out.data(), n);
        res.noalias() = impl_->factor * xi;
        return;
    }
    }
}

void NoiseSampler::sample(std::uint64_t path, std::uint32_t step,
                          std::vector<double>& out) const {
    Workspace ws = make_workspace();
    sample(path, step, ws, out);
}

// ---------------------------------------------------------------------------
// simulate

namespace {

std::vector<double> project_initial(const SimConfig& cfg,
                                    const std::vector<double>& xs) {
    const int n = cfg.n_x;
    const double dx = cfg.dx(), L = cfg.half_width;
    std::vector<double> u(n, 0.0);
    auto node_of = [&](double z) {
        const int i = static_cast<int>(std::lround((z + L) / dx));
        return std::clamp(i, 0, n - 1);
    };
    switch (cfg.mu.kind) {
    case InitialMeasure::Kind::DiracAt:
        u[node_of(cfg.mu.point.at(0))] = 1.0 / dx;
        break;
    case InitialMeasure::Kind::Atoms:
        for (const auto& [z, w] : cfg.mu.atom_list) u[node_of(z.at(0))] += w / dx;
        break;
    case InitialMeasure::Kind::Density:
        for (int i = 0; i < n; ++i)
            if (std::abs(xs[i]) <= cfg.mu.density_half_width)
                u[i] = cfg.mu.density_fn(xs[i]);
        break;
    case InitialMeasure::Kind::LebesgueScaled:
        std::fill(u.begin(), u.end(), cfg.mu.scale);
        break;
    }
    return u;
}

struct SnappedTarget {
    int step = 0, ix = 0, ixp = 0;
    double t = 0.0, x = 0.0, xp = 0.0;
};

struct BatchAccum {
    std::vector<double> field;  // sum of final fields
    std::vector<double> second; // sum of target products
    long count = 0;
    double min_value = std::numeric_limits<double>::infinity();
    long negative_flags = 0;
};

} // namespace

SimResult simulate(const SimConfig& cfg) {
    validate_config(cfg);
    const int n = cfg.n_x, n_t = cfg.n_t, B = cfg.n_batches;
    const long P = cfg.n_paths;
    const double dx = cfg.dx(), dt = cfg.dt(), L = cfg.half_width;
    const double diff = 0.5 * cfg.p.nu * dt / (dx * dx);

    NoiseSampler sampler(cfg.kernel, n, dx, dt, cfg.seed);

    std::vector<double> xs(n);
    for (int i = 0; i < n; ++i) xs[i] = -L + i * dx;
    const std::vector<double> u0 = project_initial(cfg, xs);

    std::vector<SnappedTarget> tg;
    std::vector<std::vector<int>> targets_at_step(n_t + 1);
    for (const auto& raw : cfg.targets) {
        SnappedTarget s;
        s.step = std::clamp(static_cast<int>(std::lround(raw[0] / dt)), 1, n_t);
        s.ix = std::clamp(static_cast<int>(std::lround((raw[1] + L) / dx)), 0,
                          n - 1);
        s.ixp = std::clamp(static_cast<int>(std::lround((raw[2] + L) / dx)), 0,
                           n - 1);
        s.t = s.step * dt;
        s.x = xs[s.ix];
        s.xp = xs[s.ixp];
        targets_at_step[s.step].push_back(static_cast<int>(tg.size()));
        tg.push_back(s);
    }

    // contiguous path ranges per batch; antithetic pairs are never split
    const long units = cfg.antithetic ? P / 2 : P;
    const long per_path = cfg.antithetic ? 2 : 1;
    std::vector<std::pair<long, long>> range(B);
    for (int b = 0; b < B; ++b)
        range[b] = {per_path * (b * units / B), per_path * ((b + 1) * units / B)};

    std::vector<BatchAccum> acc(B);
    for (auto& a : acc) {
        a.field.assign(n, 0.0);
        a.second.assign(tg.size(), 0.0);
    }

    const int workers = std::min(cfg.threads, B);
    std::vector<std::exception_ptr> worker_error(workers);

    auto run_batch = [&](int b, NoiseSampler::Workspace& ws,
                         std::vector<double>& u, std::vector<double>& dw) {
        BatchAccum& a = acc[b];
        for (long j = range[b].first; j < range[b].second; ++j) {
            const std::uint64_t stream = cfg.antithetic ? j / 2 : j;
            const double sign = (cfg.antithetic && (j & 1L)) ? -1.0 : 1.0;
            u = u0;
            double run_max = 0.0;
            for (double v : u0) {
                run_max = std::max(run_max, std::abs(v));
                a.min_value = std::min(a.min_value, v);
            }
            for (int s = 0; s < n_t; ++s) {
                sampler.sample(stream, static_cast<std::uint32_t>(s), ws, dw);
                double left = u[1]; // mirror ghost at the lower boundary
                double sum = 0.0, step_max = 0.0;
                double step_min = std::numeric_limits<double>::infinity();
                for (int i = 0; i < n; ++i) {
                    // the right mirror ghost needs u[n-2] from before this
                    // sweep, which "left" still holds at the last node
                    const double right = (i + 1 < n) ? u[i + 1] : left;
                    const double lap = left - 2.0 * u[i] + right;
                    left = u[i];
                    u[i] += diff * lap + cfg.rho(u[i]) * (sign * dw[i]);
                    sum += u[i];
                    step_min = std::min(step_min, u[i]);
                    step_max = std::max(step_max, std::abs(u[i]));
                }
                if (!std::isfinite(sum)) {
                    for (int i = 0; i < n; ++i)
                        if (!std::isfinite(u[i]))
                            throw NaNDetected(
                                "simulate: non-finite value at path " +
                                std::to_string(j) + ", step " +
                                std::to_string(s + 1) + ", node " +
                                std::to_string(i));
                }
                run_max = std::max(run_max, step_max);
                const double tol = 10.0 *
                                   std::numeric_limits<double>::epsilon() *
                                   (s + 1) * run_max;
                if (step_min < -tol) {
                    for (int i = 0; i < n; ++i)
                        if (u[i] < -tol) ++a.negative_flags;
                }
                a.min_value = std::min(a.min_value, step_min);
                for (int idx : targets_at_step[s + 1])
                    a.second[static_cast<std::size_t>(idx)] +=
                        u[tg[static_cast<std::size_t>(idx)].ix] *
                        u[tg[static_cast<std::size_t>(idx)].ixp];
            }
            for (int i = 0; i < n; ++i) a.field[i] += u[i];
            ++a.count;
        }
    };

    auto worker = [&](int w) {
        try {
            NoiseSampler::Workspace ws = sampler.make_workspace();
            std::vector<double> u(static_cast<std::size_t>(n)),
                dw(static_cast<std::size_t>(n));
            for (int b = w; b < B; b += workers) run_batch(b, ws, u, dw);
        } catch (...) {
            worker_error[static_cast<std::size_t>(w)] = std::current_exception();
        }
    };

    if (workers == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker, w);
        for (auto& th : pool) th.join();
    }
    for (auto& err : worker_error)
        if (err) std::rethrow_exception(err);

    // batch means, then equal-weight pairwise reduction across batches
    SimResult res;
    res.x = xs;
    res.dx = dx;
    res.dt = dt;
    res.n_paths = P;
    res.n_batches = B;
    res.seed = cfg.seed;
    res.clamped_fraction = sampler.clamped_fraction();
    res.dense_factorization = sampler.dense_factorization();
    res.min_value = std::numeric_limits<double>::infinity();
    for (const auto& a : acc) {
        res.min_value = std::min(res.min_value, a.min_value);
        res.negative_flags += a.negative_flags;
    }

    std::vector<double> bm(static_cast<std::size_t>(B));
    auto reduce = [&](auto&& value_of, double& mean, double& se) {
        for (int b = 0; b < B; ++b)
            bm[static_cast<std::size_t>(b)] = value_of(acc[b]) / acc[b].count;
        mean = pairwise_sum(bm.data(), bm.size()) / B;
        double var = 0.0;
        for (double v : bm) var += (v - mean) * (v - mean);
        se = std::sqrt(var / (static_cast<double>(B) * (B - 1)));
    };

    res.mean_field.resize(n);
    res.mean_field_se.resize(n);
    for (int i = 0; i < n; ++i)
        reduce([i](const BatchAccum& a) { return a.field[i]; },
               res.mean_field[i], res.mean_field_se[i]);
    res.second_moments.resize(tg.size());
    for (std::size_t k = 0; k < tg.size(); ++k) {
        SimTarget& out = res.second_moments[k];
        out.t = tg[k].t;
        out.x = tg[k].x;
        out.xp = tg[k].xp;
        reduce([k](const BatchAccum& a) { return a.second[k]; }, out.estimate,
               out.se);
    }
    return res;
}

// ---------------------------------------------------------------------------
// validation against the analytic envelope

ValidationReport validate_moments(
    const SimConfig& cfg, const std::vector<std::array<double, 3>>& targets) {
    if (cfg.n_x < 15)
        throw ConfigError(
            "validate: n_x must be at least 15 so the halved grid keeps 8 nodes");
    SimConfig fine = cfg;
    fine.targets = targets;
    SimConfig coarse = fine;
    coarse.n_x = cfg.n_x / 2 + 1;
    coarse.n_t = std::max(1, cfg.n_t / 4);

    ValidationReport rep;
    rep.fine = simulate(fine);
    const SimResult crs = simulate(coarse);

    rep.all_pass = true;
    for (std::size_t k = 0; k < rep.fine.second_moments.size(); ++k) {
        const SimTarget& f = rep.fine.second_moments[k];
        const SimTarget& c = crs.second_moments[k];
        ValidationRow row;
        row.t = f.t;
        row.x = f.x;
        row.xp = f.xp;
        row.estimate = f.estimate;
        row.se = f.se;
        row.bias = std::abs(f.estimate - c.estimate);
        const MomentBound bound =
            two_point_bounds(cfg.mu, cfg.kernel, cfg.p, cfg.rho.lip,
                             cfg.rho.Lip, f.t, {f.x}, {f.xp});
        row.lower = bound.lower;
        row.upper = bound.upper;
        const double pad = 3.0 * row.se + row.bias;
        row.pass = row.estimate + pad >= row.lower * (1.0 - 1e-12) &&
                   row.estimate - pad <= row.upper * (1.0 + 1e-12);
        rep.all_pass = rep.all_pass && row.pass;
        rep.rows.push_back(row);
    }
    return rep;
}

void write_validation_csv(std::ostream& os, const ValidationReport& rep) {
    os << "t [time],x [length],xp [length],estimate [moment],"
          "stderr [moment],bound_lower [moment],bound_upper [moment],"
          "pass [bool]\n";
    for (const auto& r : rep.rows)
        os << fmt_g(r.t) << ',' << fmt_g(r.x) << ',' << fmt_g(r.xp) << ','
           << fmt_g(r.estimate) << ',' << fmt_g(r.se) << ',' << fmt_g(r.lower)
           << ',' << fmt_g(r.upper) << ',' << (r.pass ? 1 : 0) << '\n';
}

} // namespace she
