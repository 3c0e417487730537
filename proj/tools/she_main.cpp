#include <CLI11.hpp>

#include "she/asymptotics.hpp"
#include "she/config.hpp"
#include "she/errors.hpp"
#include "she/kernels.hpp"
#include "she/moments.hpp"
#include "she/report.hpp"
#include "she/simulate.hpp"
#include "she/spectral.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace she;

struct CliOptions {
    std::string config_path;
    std::string out_dir = ".";
    std::string format = "csv";
    std::optional<long long> seed;
    std::optional<int> threads;
};

std::ofstream open_out(const CliOptions& opt, const std::string& base,
                       const std::string& ext) {
    const auto path = std::filesystem::path(opt.out_dir) / (base + "." + ext);
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw ConfigError("cli: cannot write '" + path.string() + "'");
    return os;
}

void emit_table(const CliOptions& opt, const std::string& base,
                const Table& t) {
    std::ofstream os = open_out(opt, base, opt.format);
    if (opt.format == "csv")
        write_csv(os, t);
    else
        write_json(os, t);
}

void emit_kv(const CliOptions& opt, const std::string& base,
             const KvRows& kv) {
    std::ofstream os = open_out(opt, base, opt.format);
    if (opt.format == "csv")
        write_kv_csv(os, kv);
    else
        write_kv_json(os, kv);
}

void emit_svg(const CliOptions& opt, const std::string& base,
              const ChartSpec& spec, const std::vector<Series>& series) {
    std::ofstream os = open_out(opt, base, "svg");
    write_svg_chart(os, spec, series);
}

std::vector<double> time_grid(const RunConfig& run) {
    std::vector<double> ts(static_cast<std::size_t>(run.n_points));
    const int n = run.n_points;
    if (run.log_spacing) {
        const double a = std::log(run.t_min), b = std::log(run.t_max);
        for (int i = 0; i < n; ++i)
            ts[static_cast<std::size_t>(i)] =
                std::exp(a + (b - a) * i / (n - 1));
    } else {
        for (int i = 0; i < n; ++i)
            ts[static_cast<std::size_t>(i)] =
                run.t_min + (run.t_max - run.t_min) * i / (n - 1);
    }
    ts.front() = run.t_min;
    ts.back() = run.t_max;
    return ts;
}

std::string join_coords(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out += (i ? " " : "") + fmt_num(v[i]);
    return out;
}

int cmd_kernel(const RunConfig& run, const CliOptions& opt) {
    Table table;
    table.columns = {{"t", "time"}, {"k", "value"}, {"h1", "value"}};
    Series k_series{"k(t)", {}, {}}, h1_series{"h1(t)", {}, {}};
    bool positive = true;
    for (double t : time_grid(run)) {
        const double kv = k_of_t(run.kernel, run.p, t);
        const double hv = h1(run.kernel, run.p, t, 0.0);
        table.num_row({t, kv, hv});
        k_series.x.push_back(t);
        k_series.y.push_back(kv);
        h1_series.x.push_back(t);
        h1_series.y.push_back(hv);
        positive = positive && kv > 0.0 && hv > 0.0;
    }
    emit_table(opt, "kernel_table", table);
    ChartSpec spec;
    spec.title = "heat-smoothed kernel k and first iterate h1";
    spec.x_label = "t";
    spec.y_label = "value";
    spec.log_x = run.log_spacing;
    spec.log_y = run.log_spacing && positive;
    emit_svg(opt, "kernel_plot", spec, {k_series, h1_series});
    return 0;
}

std::string limit_str(const LimitValue& v) {
    return v.divergent ? "DIVERGENT" : fmt_num(v.value);
}

int cmd_upsilon(const RunConfig& run, const CliOptions& opt) {
    const SpectralReport rep = equivalence_report(run.kernel, run.p);
    Table table;
    table.columns = {{"beta", "rate"}, {"upsilon", "value"}};
    if (run.upsilon_betas.empty()) {
        for (const auto& [b, v] : rep.upsilon_at) table.num_row({b, v});
    } else {
        for (double b : run.upsilon_betas)
            table.num_row({b, upsilon(run.kernel, b)});
    }
    emit_table(opt, "upsilon_table", table);
    KvRows kv = {
        {"upsilon_zero", limit_str(rep.upsilon_zero)},
        {"iff2_integral", limit_str(rep.iff2_value)},
        {"h1_limit", limit_str(rep.h1_limit)},
        {"dalang_condition", rep.dalang_ok ? "FINITE" : "DIVERGENT"},
    };
    emit_kv(opt, "upsilon_report", kv);
    return 0;
}

int cmd_phase(const RunConfig& run, const CliOptions& opt) {
    const PhaseReport rep =
        phase_classify(run.kernel, run.p, run.lip, run.Lip);
    emit_kv(opt, "phase_report", to_kv(rep));
    return 0;
}

int cmd_fronts(const RunConfig& run, const CliOptions& opt) {
    const FrontReport rep = growth_indices(run.kernel, run.p, run.lip,
                                           run.Lip, run.beta,
                                           run.all_exp_moments);
    emit_kv(opt, "front_report", to_kv(rep));
    return 0;
}

int cmd_moments(const RunConfig& run, const CliOptions& opt) {
    if (run.moment_targets.empty())
        throw ConfigError(
            "config: [moments] targets is required for the moments command");
    Table table;
    table.columns = {{"t", "time"},      {"x", "length"},
                     {"xp", "length"},   {"lower", "moment"},
                     {"upper", "moment"}, {"mode", "enum"}};
    for (const MomentTarget& tg : run.moment_targets) {
        const MomentBound b =
            two_point_bounds(run.mu, run.kernel, run.p, run.lip, run.Lip,
                             tg.t, tg.x, tg.xp);
        table.row({fmt_num(tg.t), join_coords(tg.x), join_coords(tg.xp),
                   fmt_num(b.lower), fmt_num(b.upper),
                   b.mode == BoundMode::ExactLinear ? "exact" : "envelope"});
    }
    emit_table(opt, "moment_bounds", table);
    return 0;
}

KvRows sim_summary(const SimResult& res) {
    return {
        {"n_paths", std::to_string(res.n_paths)},
        {"n_batches", std::to_string(res.n_batches)},
        {"seed", std::to_string(res.seed)},
        {"dx", fmt_num(res.dx)},
        {"dt", fmt_num(res.dt)},
        {"min_value", fmt_num(res.min_value)},
        {"negative_flags", std::to_string(res.negative_flags)},
        {"clamped_fraction", fmt_num(res.clamped_fraction)},
        {"dense_factorization", res.dense_factorization ? "true" : "false"},
    };
}

int cmd_simulate(const RunConfig& run, const CliOptions& opt) {
    const SimResult res = simulate(run.sim);
    Table field;
    field.columns = {{"x", "length"}, {"mean", "value"}, {"stderr", "value"}};
    Series mean_series{"mean field", {}, {}};
    for (std::size_t i = 0; i < res.x.size(); ++i) {
        field.num_row({res.x[i], res.mean_field[i], res.mean_field_se[i]});
        mean_series.x.push_back(res.x[i]);
        mean_series.y.push_back(res.mean_field[i]);
    }
    emit_table(opt, "sim_field", field);
    if (!res.second_moments.empty()) {
        Table tg;
        tg.columns = {{"t", "time"},
                      {"x", "length"},
                      {"xp", "length"},
                      {"second_moment", "moment"},
                      {"stderr", "moment"}};
        for (const SimTarget& s : res.second_moments)
            tg.num_row({s.t, s.x, s.xp, s.estimate, s.se});
        emit_table(opt, "sim_targets", tg);
    }
    emit_kv(opt, "sim_summary", sim_summary(res));
    ChartSpec spec;
    spec.title = "mean field at final time";
    spec.x_label = "x";
    spec.y_label = "mean";
    emit_svg(opt, "sim_field", spec, {mean_series});
    return 0;
}

int cmd_validate(const RunConfig& run, const CliOptions& opt) {
    if (run.sim.targets.empty())
        throw ConfigError("config: [simulate] targets is required for the "
                          "validate command");
    const ValidationReport rep = validate_moments(run.sim, run.sim.targets);
    if (opt.format == "csv") {
        std::ofstream os = open_out(opt, "validation", "csv");
        write_validation_csv(os, rep);
    } else {
        Table table;
        table.columns = {{"t", "time"},           {"x", "length"},
                         {"xp", "length"},        {"estimate", "moment"},
                         {"stderr", "moment"},    {"bound_lower", "moment"},
                         {"bound_upper", "moment"}, {"pass", "bool"}};
        for (const ValidationRow& r : rep.rows)
            table.row({fmt_num(r.t), fmt_num(r.x), fmt_num(r.xp),
                       fmt_num(r.estimate), fmt_num(r.se), fmt_num(r.lower),
                       fmt_num(r.upper), r.pass ? "1" : "0"});
        std::ofstream os = open_out(opt, "validation", "json");
        write_json(os, table);
    }
    emit_kv(opt, "validation_summary",
            {{"all_pass", rep.all_pass ? "1" : "0"}});
    return rep.all_pass ? 0 : 4;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic heat equation toolkit: kernels, spectral "
                 "integrals, moment bounds, phase reports and Monte Carlo"};
    app.require_subcommand(1);
    CliOptions opt;
    std::string command;
    const std::pair<const char*, const char*> cmds[] = {
        {"kernel", "emit k(t) and h1(t) tables and an SVG plot"},
        {"upsilon", "spectral integral table and finiteness report"},
        {"phase", "phase-transition classification report"},
        {"fronts", "growth-index interval report"},
        {"moments", "two-point second-moment envelope table"},
        {"simulate", "Monte Carlo run of the discretized field"},
        {"validate", "Monte Carlo estimates against analytic envelopes"},
    };
    for (const auto& [name, desc] : cmds) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", opt.config_path, "configuration file")
            ->required();
        sub->add_option("--out", opt.out_dir, "output directory");
        sub->add_option("--seed", opt.seed, "seed override");
        sub->add_option("--threads", opt.threads, "worker thread cap");
        sub->add_option("--format", opt.format, "output format: csv or json");
        sub->callback([&command, n = std::string(name)] { command = n; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2; // bad flags are configuration errors
    }

    try {
        if (opt.format != "csv" && opt.format != "json")
            throw ConfigError("cli: --format must be csv or json");
        RunConfig run = load_run_config(opt.config_path);
        if (opt.seed) {
            if (*opt.seed < 0)
                throw ConfigError("cli: --seed must be nonnegative");
            run.seed = static_cast<std::uint64_t>(*opt.seed);
            run.sim.seed = run.seed;
        }
        if (opt.threads) {
            if (*opt.threads < 1)
                throw ConfigError("cli: --threads must be positive");
            run.sim.threads = *opt.threads;
        }
        std::error_code ec;
        std::filesystem::create_directories(opt.out_dir, ec);
        if (ec)
            throw ConfigError("cli: cannot create output directory '" +
                              opt.out_dir + "': " + ec.message());

        if (command == "kernel") return cmd_kernel(run, opt);
        if (command == "upsilon") return cmd_upsilon(run, opt);
        if (command == "phase") return cmd_phase(run, opt);
        if (command == "fronts") return cmd_fronts(run, opt);
        if (command == "moments") return cmd_moments(run, opt);
        if (command == "simulate") return cmd_simulate(run, opt);
        if (command == "validate") return cmd_validate(run, opt);
        throw ConfigError("cli: unknown command");
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
