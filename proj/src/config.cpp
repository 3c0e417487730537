#include "she/config.hpp"

#include "she/errors.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace she {

namespace {

std::string trim(const std::string& s) {
    const char* ws = " \t\r\n";
    const auto a = s.find_first_not_of(ws);
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(ws);
    return s.substr(a, b - a + 1);
}

double to_double(const std::string& where, const std::string& s) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE)
        throw ConfigError("config: " + where + ": not a number: '" + s + "'");
    return v;
}

long long to_int(const std::string& where, const std::string& s) {
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE)
        throw ConfigError("config: " + where + ": not an integer: '" + s +
                          "'");
    return v;
}

bool to_bool(const std::string& where, const std::string& s) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ConfigError("config: " + where + ": expected true/false: '" + s +
                      "'");
}

std::vector<double> to_num_list(const std::string& where,
                                const std::string& s) {
    std::istringstream in(s);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) out.push_back(to_double(where, tok));
    return out;
}

std::vector<std::string> split_entries(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, ';')) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

/// Tracks which keys of one section were consumed; leftovers are rejected.
class SectionReader {
public:
    SectionReader(const ParsedConfig& ini, std::string name)
        : name_(std::move(name)) {
        const auto it = ini.sections.find(name_);
        if (it != ini.sections.end()) kv_ = &it->second;
    }

    bool has(const std::string& key) const {
        return kv_ && kv_->count(key) > 0;
    }

    std::string str(const std::string& key) {
        seen_.insert(key);
        const auto it = kv_->find(key);
        if (it == kv_->end())
            throw ConfigError("config: [" + name_ + "] missing key '" + key +
                              "'");
        return it->second;
    }

    std::string str_or(const std::string& key, const std::string& fallback) {
        return has(key) ? str(key) : fallback;
    }

    double num(const std::string& key) {
        return to_double(where(key), str(key));
    }
    double num_or(const std::string& key, double fallback) {
        return has(key) ? num(key) : fallback;
    }

    long long integer(const std::string& key) {
        return to_int(where(key), str(key));
    }
    long long integer_or(const std::string& key, long long fallback) {
        return has(key) ? integer(key) : fallback;
    }

    bool flag_or(const std::string& key, bool fallback) {
        return has(key) ? to_bool(where(key), str(key)) : fallback;
    }

    std::vector<double> num_list(const std::string& key) {
        return to_num_list(where(key), str(key));
    }

    /// Rejects every key that was present but never requested.
    void done() const {
        if (!kv_) return;
        for (const auto& [key, value] : *kv_)
            if (seen_.count(key) == 0)
                throw ConfigError("config: [" + name_ + "] unexpected key '" +
                                  key + "'");
    }

    std::string where(const std::string& key) const {
        return "[" + name_ + "] " + key;
    }

private:
    std::string name_;
    const std::map<std::string, std::string>* kv_ = nullptr;
    std::set<std::string> seen_;
};

int read_dim(SectionReader& sec) {
    const long long d = sec.integer("dim");
    if (d < 1 || d > 16)
        throw ConfigError("config: [kernel] dim must be in [1, 16]");
    return static_cast<int>(d);
}

CorrelationKernel read_kernel(const ParsedConfig& ini) {
    SectionReader sec(ini, "kernel");
    const std::string variant = sec.str("variant");
    CorrelationKernel k;
    if (variant == "riesz") {
        k = CorrelationKernel::riesz(sec.num("alpha"), read_dim(sec));
    } else if (variant == "ornstein_uhlenbeck" || variant == "ou") {
        k = CorrelationKernel::ornstein_uhlenbeck(
            sec.num("alpha"), sec.num_or("c", 1.0), read_dim(sec));
    } else if (variant == "poisson") {
        k = CorrelationKernel::poisson(read_dim(sec));
    } else if (variant == "cauchy") {
        k = CorrelationKernel::cauchy(read_dim(sec));
    } else if (variant == "constant") {
        k = CorrelationKernel::constant(sec.num_or("level", 1.0),
                                        read_dim(sec));
    } else if (variant == "white_noise") {
        if (sec.has("dim") && sec.integer("dim") != 1)
            throw ConfigError(
                "config: [kernel] white_noise requires dim = 1");
        k = CorrelationKernel::white_noise_1d();
    } else if (variant == "box") {
        k = CorrelationKernel::box_indicator(sec.num("half_width"),
                                             read_dim(sec));
    } else if (variant == "tabulated") {
        k = load_tabulated_radial(sec.str("table_path"), read_dim(sec));
    } else {
        throw ConfigError("config: [kernel] unknown variant '" + variant +
                          "'");
    }
    sec.done();
    return k;
}

InitialMeasure read_measure(const ParsedConfig& ini, int dim) {
    SectionReader sec(ini, "measure");
    const std::string kind = sec.str_or("kind", "lebesgue");
    InitialMeasure mu = InitialMeasure::lebesgue(1.0);
    if (kind == "dirac") {
        std::vector<double> point(static_cast<std::size_t>(dim), 0.0);
        if (sec.has("point")) {
            point = sec.num_list("point");
            if (static_cast<int>(point.size()) != dim)
                throw ConfigError(
                    "config: [measure] point needs one value per dimension");
        }
        mu = InitialMeasure::dirac_at(std::move(point));
    } else if (kind == "atoms") {
        std::vector<std::pair<std::vector<double>, double>> atoms;
        for (const std::string& entry : split_entries(sec.str("atoms"))) {
            std::vector<double> nums =
                to_num_list(sec.where("atoms"), entry);
            if (static_cast<int>(nums.size()) != dim + 1)
                throw ConfigError("config: [measure] each atom needs " +
                                  std::to_string(dim) +
                                  " coordinates and a weight");
            const double w = nums.back();
            nums.pop_back();
            atoms.emplace_back(std::move(nums), w);
        }
        if (atoms.empty())
            throw ConfigError("config: [measure] atoms list is empty");
        mu = InitialMeasure::atoms(std::move(atoms));
    } else if (kind == "lebesgue") {
        mu = InitialMeasure::lebesgue(sec.num_or("scale", 1.0));
    } else {
        throw ConfigError("config: [measure] unknown kind '" + kind + "'");
    }
    const bool have_beta = sec.has("exp_moment_beta");
    const bool have_value = sec.has("exp_moment_value");
    if (have_beta != have_value)
        throw ConfigError("config: [measure] exp_moment_beta and "
                          "exp_moment_value must come together");
    if (have_beta)
        mu.with_exp_moment(sec.num("exp_moment_beta"),
                           sec.num("exp_moment_value"));
    sec.done();
    return mu;
}

} // namespace

bool ParsedConfig::has(const std::string& section) const {
    return sections.count(section) > 0;
}

bool ParsedConfig::has(const std::string& section,
                       const std::string& key) const {
    const auto it = sections.find(section);
    return it != sections.end() && it->second.count(key) > 0;
}

const std::string& ParsedConfig::at(const std::string& section,
                                    const std::string& key) const {
    const auto it = sections.find(section);
    if (it == sections.end())
        throw ConfigError("config: missing section [" + section + "]");
    const auto kt = it->second.find(key);
    if (kt == it->second.end())
        throw ConfigError("config: [" + section + "] missing key '" + key +
                          "'");
    return kt->second;
}

ParsedConfig parse_ini(std::istream& is) {
    ParsedConfig out;
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string s = trim(line);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        if (s.front() == '[') {
            if (s.back() != ']' || s.size() < 3)
                throw ConfigError("config: malformed section header at line " +
                                  std::to_string(lineno));
            section = trim(s.substr(1, s.size() - 2));
            if (section.empty())
                throw ConfigError("config: empty section name at line " +
                                  std::to_string(lineno));
            out.sections[section];
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: expected 'key = value' at line " +
                              std::to_string(lineno));
        if (section.empty())
            throw ConfigError("config: key before any section at line " +
                              std::to_string(lineno));
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config: empty key at line " +
                              std::to_string(lineno));
        if (!out.sections[section].emplace(key, value).second)
            throw ConfigError("config: duplicate key '" + key + "' in [" +
                              section + "]");
    }
    return out;
}

ParsedConfig parse_ini_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("config: cannot read file '" + path + "'");
    return parse_ini(in);
}

RunConfig build_run_config(const ParsedConfig& ini) {
    static const std::set<std::string> known = {
        "kernel", "heat",    "measure", "grid",
        "noise",  "fronts",  "upsilon", "moments",
        "simulate"};
    for (const auto& [name, keys] : ini.sections)
        if (known.count(name) == 0)
            throw ConfigError("config: unknown section [" + name + "]");
    if (!ini.has("kernel"))
        throw ConfigError("config: missing required section [kernel]");

    RunConfig run;
    run.kernel = read_kernel(ini);

    {
        SectionReader sec(ini, "heat");
        const double nu = sec.num_or("nu", 1.0);
        if (!(nu > 0.0))
            throw ConfigError("config: [heat] nu must be positive");
        run.p = HeatParams(nu, run.kernel.dim);
        sec.done();
    }

    run.mu = read_measure(ini, run.kernel.dim);

    {
        SectionReader sec(ini, "grid");
        run.t_min = sec.num_or("t_min", run.t_min);
        run.t_max = sec.num_or("t_max", run.t_max);
        run.n_points = static_cast<int>(
            sec.integer_or("n_points", run.n_points));
        run.log_spacing = sec.flag_or("log_spacing", run.log_spacing);
        if (!(run.t_min > 0.0) || !(run.t_max > run.t_min))
            throw ConfigError(
                "config: [grid] requires 0 < t_min < t_max");
        if (run.n_points < 2)
            throw ConfigError("config: [grid] n_points must be at least 2");
        sec.done();
    }

    {
        SectionReader sec(ini, "noise");
        run.lip = sec.num_or("lip", run.lip);
        run.Lip = sec.num_or("Lip", run.Lip);
        if (!(run.lip >= 0.0) || !(run.Lip >= run.lip))
            throw ConfigError(
                "config: [noise] requires 0 <= lip <= Lip");
        sec.done();
    }

    {
        SectionReader sec(ini, "fronts");
        run.beta = sec.num_or("beta", run.beta);
        run.all_exp_moments =
            sec.flag_or("all_exp_moments", run.all_exp_moments);
        if (!(run.beta > 0.0))
            throw ConfigError("config: [fronts] beta must be positive");
        sec.done();
    }

    {
        SectionReader sec(ini, "upsilon");
        if (sec.has("betas")) {
            run.upsilon_betas = sec.num_list("betas");
            for (double b : run.upsilon_betas)
                if (!(b > 0.0))
                    throw ConfigError(
                        "config: [upsilon] betas must be positive");
        }
        sec.done();
    }

    {
        SectionReader sec(ini, "moments");
        if (sec.has("targets")) {
            const int d = run.kernel.dim;
            for (const std::string& entry :
                 split_entries(sec.str("targets"))) {
                const std::vector<double> nums =
                    to_num_list(sec.where("targets"), entry);
                if (static_cast<int>(nums.size()) != 1 + 2 * d)
                    throw ConfigError(
                        "config: [moments] each target needs t followed by "
                        "the coordinates of x and x' (" +
                        std::to_string(1 + 2 * d) + " numbers)");
                MomentTarget tg;
                tg.t = nums[0];
                tg.x.assign(nums.begin() + 1, nums.begin() + 1 + d);
                tg.xp.assign(nums.begin() + 1 + d, nums.end());
                if (!(tg.t > 0.0))
                    throw ConfigError(
                        "config: [moments] target times must be positive");
                run.moment_targets.push_back(std::move(tg));
            }
        }
        sec.done();
    }

    {
        SectionReader sec(ini, "simulate");
        run.sim_lam = sec.num_or("lam", run.sim_lam);
        if (!(run.sim_lam >= 0.0))
            throw ConfigError(
                "config: [simulate] lam must be nonnegative");
        SimConfig& sim = run.sim;
        sim.half_width = sec.num_or("half_width", sim.half_width);
        sim.n_x = static_cast<int>(sec.integer_or("n_x", sim.n_x));
        sim.t_max = sec.num_or("t_max", sim.t_max);
        sim.n_t = static_cast<int>(sec.integer_or("n_t", sim.n_t));
        sim.n_paths = sec.integer_or("n_paths", sim.n_paths);
        sim.antithetic = sec.flag_or("antithetic", sim.antithetic);
        sim.n_batches =
            static_cast<int>(sec.integer_or("n_batches", sim.n_batches));
        run.seed = static_cast<std::uint64_t>(
            sec.integer_or("seed", static_cast<long long>(run.seed)));
        if (sec.has("targets")) {
            for (const std::string& entry :
                 split_entries(sec.str("targets"))) {
                const std::vector<double> nums =
                    to_num_list(sec.where("targets"), entry);
                if (nums.size() != 3)
                    throw ConfigError(
                        "config: [simulate] each target is 't x xp'");
                sim.targets.push_back({nums[0], nums[1], nums[2]});
            }
        }
        sim.kernel = run.kernel;
        sim.p = run.p;
        sim.mu = run.mu;
        sim.rho = NoiseCoefficient::linear(run.sim_lam);
        sim.seed = run.seed;
        sec.done();
    }

    return run;
}

RunConfig load_run_config(const std::string& path) {
    return build_run_config(parse_ini_file(path));
}

} // namespace she
