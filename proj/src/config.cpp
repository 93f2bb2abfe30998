#include "sfalpha/config.hpp"

#include "sfalpha/stable_noise.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace sfalpha {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos)
        return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        parts.push_back(trim(item));
    return parts;
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size())
            throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ConfigError(key + ": not a number: '" + value + "'");
    }
}

} // namespace

ConfigMap ConfigMap::from_string(const std::string& text) {
    ConfigMap map;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError("config line " + std::to_string(lineno) + ": empty section name");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        map.entries_[section.empty() ? key : section + "." + key] = value;
    }
    return map;
}

ConfigMap ConfigMap::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return from_string(buf.str());
}

void ConfigMap::set(const std::string& dotted_key, const std::string& value) {
    if (dotted_key.empty())
        throw ConfigError("override: empty key");
    entries_[dotted_key] = value;
}

bool ConfigMap::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string ConfigMap::get_string(const std::string& key, const std::string& fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : parse_double(key, it->second);
}

int ConfigMap::get_int(const std::string& key, int fallback) const {
    const double v = get_double(key, fallback);
    if (v != std::floor(v))
        throw ConfigError(key + ": expected an integer");
    return static_cast<int>(v);
}

std::uint64_t ConfigMap::get_u64(const std::string& key, std::uint64_t fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end())
        return fallback;
    std::uint64_t v = 0;
    const auto* begin = it->second.data();
    const auto* end = begin + it->second.size();
    auto [p, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || p != end)
        throw ConfigError(key + ": expected an unsigned integer");
    return v;
}

std::vector<double> ConfigMap::get_double_list(const std::string& key,
                                               const std::vector<double>& fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end())
        return fallback;
    std::vector<double> out;
    for (const auto& part : split(it->second, ','))
        if (!part.empty())
            out.push_back(parse_double(key, part));
    return out;
}

std::vector<int> ConfigMap::get_int_list(const std::string& key,
                                         const std::vector<int>& fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end())
        return fallback;
    std::vector<int> out;
    for (const auto& part : split(it->second, ','))
        if (!part.empty()) {
            const double v = parse_double(key, part);
            if (v != std::floor(v))
                throw ConfigError(key + ": expected integers");
            out.push_back(static_cast<int>(v));
        }
    return out;
}

ExperimentConfig build_experiment_config(const ConfigMap& map) {
    static const std::set<std::string> known = {
        "problem.m", "problem.coefficients", "problem.a", "problem.b", "problem.b0", "problem.b1",
        "problem.nemytskii_b", "problem.nemytskii_f",
        "noise.alpha", "noise.beta_scale", "noise.beta_decay", "noise.gamma_scale",
        "noise.gamma_decay",
        "initial.x_profile", "initial.x_scale", "initial.y_profile", "initial.y_scale",
        "experiment.epsilons", "experiment.samples", "experiment.p", "experiment.T",
        "experiment.h", "experiment.phi", "experiment.m_ladder", "experiment.galerkin_epsilon",
        "experiment.blocks", "experiment.coupled",
        "experiment.ergodicity_t_max", "experiment.ergodicity_t_step",
        "experiment.ergodicity_samples", "experiment.y_amplitude",
        "averaging.bbar", "averaging.burn_in", "averaging.window", "averaging.h_f",
        "averaging.ensemble", "averaging.blocks",
        "run.seed", "run.threads",
    };
    for (const auto& [key, value] : map.entries())
        if (!known.count(key))
            throw ConfigError(key + ": unknown configuration key");

    ExperimentConfig c;
    c.m = map.get_int("problem.m", c.m);
    c.coefficients = map.get_string("problem.coefficients", c.coefficients);
    c.a = map.get_double("problem.a", c.a);
    c.b = map.get_double("problem.b", c.b);
    c.b0 = map.get_double("problem.b0", c.b0);
    c.b1 = map.get_double("problem.b1", c.b1);
    c.nemytskii_b = map.get_string("problem.nemytskii_b", c.nemytskii_b);
    c.nemytskii_f = map.get_string("problem.nemytskii_f", c.nemytskii_f);
    c.alpha = map.get_double("noise.alpha", c.alpha);
    c.beta_scale = map.get_double("noise.beta_scale", c.beta_scale);
    c.beta_decay = map.get_double("noise.beta_decay", c.beta_decay);
    c.gamma_scale = map.get_double("noise.gamma_scale", c.gamma_scale);
    c.gamma_decay = map.get_double("noise.gamma_decay", c.gamma_decay);
    c.x_profile = map.get_string("initial.x_profile", c.x_profile);
    c.x_scale = map.get_double("initial.x_scale", c.x_scale);
    c.y_profile = map.get_string("initial.y_profile", c.y_profile);
    c.y_scale = map.get_double("initial.y_scale", c.y_scale);
    c.epsilon_ladder = map.get_double_list("experiment.epsilons", c.epsilon_ladder);
    c.samples = map.get_int("experiment.samples", c.samples);
    c.p = map.get_double("experiment.p", c.p);
    c.T = map.get_double("experiment.T", c.T);
    c.h = map.get_double("experiment.h", c.h);
    c.phi = map.get_string("experiment.phi", c.phi);
    c.m_ladder = map.get_int_list("experiment.m_ladder", c.m_ladder);
    c.galerkin_epsilon = map.get_double("experiment.galerkin_epsilon", c.galerkin_epsilon);
    c.blocks = map.get_int("experiment.blocks", c.blocks);
    {
        const std::string v = map.get_string("experiment.coupled", c.coupled ? "true" : "false");
        if (v == "true" || v == "1")
            c.coupled = true;
        else if (v == "false" || v == "0")
            c.coupled = false;
        else
            throw ConfigError("experiment.coupled: expected true or false");
    }
    c.ergodicity_t_max = map.get_double("experiment.ergodicity_t_max", c.ergodicity_t_max);
    c.ergodicity_t_step = map.get_double("experiment.ergodicity_t_step", c.ergodicity_t_step);
    c.ergodicity_samples = map.get_int("experiment.ergodicity_samples", c.ergodicity_samples);
    c.y_amplitude = map.get_double("experiment.y_amplitude", c.y_amplitude);
    c.bbar = map.get_string("averaging.bbar", c.bbar);
    c.bbar_params.burn_in = map.get_double("averaging.burn_in", c.bbar_params.burn_in);
    c.bbar_params.window = map.get_double("averaging.window", c.bbar_params.window);
    c.bbar_params.h_f = map.get_double("averaging.h_f", c.bbar_params.h_f);
    c.bbar_params.ensemble = map.get_int("averaging.ensemble", c.bbar_params.ensemble);
    c.bbar_params.blocks = map.get_int("averaging.blocks", c.bbar_params.blocks);
    c.master_seed = map.get_u64("run.seed", c.master_seed);
    c.threads = map.get_int("run.threads", c.threads);
    return c;
}

std::map<std::string, std::string> materialize(const ExperimentConfig& c) {
    std::map<std::string, std::string> out;
    auto put = [&](const std::string& k, auto v) {
        std::ostringstream os;
        os.precision(17);
        os << v;
        out[k] = os.str();
    };
    put("problem.m", c.m);
    out["problem.coefficients"] = c.coefficients;
    put("problem.a", c.a);
    put("problem.b", c.b);
    put("problem.b0", c.b0);
    put("problem.b1", c.b1);
    out["problem.nemytskii_b"] = c.nemytskii_b;
    out["problem.nemytskii_f"] = c.nemytskii_f;
    put("noise.alpha", c.alpha);
    put("noise.beta_scale", c.beta_scale);
    put("noise.beta_decay", c.beta_decay);
    put("noise.gamma_scale", c.gamma_scale);
    put("noise.gamma_decay", c.gamma_decay);
    out["initial.x_profile"] = c.x_profile;
    put("initial.x_scale", c.x_scale);
    out["initial.y_profile"] = c.y_profile;
    put("initial.y_scale", c.y_scale);
    {
        std::ostringstream os;
        os.precision(17);
        for (size_t i = 0; i < c.epsilon_ladder.size(); ++i)
            os << (i ? "," : "") << c.epsilon_ladder[i];
        out["experiment.epsilons"] = os.str();
    }
    put("experiment.samples", c.samples);
    put("experiment.p", c.p);
    put("experiment.T", c.T);
    put("experiment.h", c.h);
    out["experiment.phi"] = c.phi;
    {
        std::ostringstream os;
        for (size_t i = 0; i < c.m_ladder.size(); ++i)
            os << (i ? "," : "") << c.m_ladder[i];
        out["experiment.m_ladder"] = os.str();
    }
    put("experiment.galerkin_epsilon", c.galerkin_epsilon);
    put("experiment.blocks", c.blocks);
    out["experiment.coupled"] = c.coupled ? "true" : "false";
    put("experiment.ergodicity_t_max", c.ergodicity_t_max);
    put("experiment.ergodicity_t_step", c.ergodicity_t_step);
    put("experiment.ergodicity_samples", c.ergodicity_samples);
    put("experiment.y_amplitude", c.y_amplitude);
    out["averaging.bbar"] = c.bbar;
    put("averaging.burn_in", c.bbar_params.burn_in);
    put("averaging.window", c.bbar_params.window);
    put("averaging.h_f", c.bbar_params.h_f);
    put("averaging.ensemble", c.bbar_params.ensemble);
    put("averaging.blocks", c.bbar_params.blocks);
    put("run.seed", c.master_seed);
    put("run.threads", c.threads);
    return out;
}

ValidationReport validate_config(const ExperimentConfig& c) {
    ValidationReport rep;
    auto probe = [&](const std::string& field, auto&& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            rep.issues.push_back({field, e.what()});
        }
    };

    probe("(all)", [&] { c.validate(); });
    probe("problem", [&] { (void)make_problem(c, 1.0, c.m); });

    try {
        const auto spectrum = SpectrumSpec::dirichlet_laplacian_1d(c.m);
        const auto noise = StableNoiseSpec::power_law(c.alpha, c.m, c.beta_scale, c.beta_decay,
                                                      c.gamma_scale, c.gamma_decay);
        const auto a2 = check_assumption_a2(noise, spectrum->eigenvalues,
                                            {true, c.beta_decay, c.gamma_decay});
        rep.notes.push_back(a2.summary());
        if (a2.determined && !a2.beta_series_converges)
            rep.issues.push_back({"noise.beta_decay", "slow-weight series diverges: " +
                                                          a2.summary()});
        if (a2.determined && !a2.gamma_series_converges)
            rep.issues.push_back({"noise.gamma_decay", "fast-weight series diverges: " +
                                                           a2.summary()});
        const auto problem = make_problem(c, 1.0, c.m);
        std::ostringstream os;
        os << "dissipativity gap lambda_1 - L_F = " << problem.gap();
        rep.notes.push_back(os.str());
    } catch (const std::exception&) {
        // already reported above
    }
    return rep;
}

std::string ValidationReport::text() const {
    std::ostringstream os;
    for (const auto& issue : issues)
        os << "ERROR [" << issue.field << "] " << issue.message << "\n";
    for (const auto& note : notes)
        os << "note: " << note << "\n";
    os << (ok() ? "validation: all checks passed\n" : "validation: FAILED\n");
    return os.str();
}

} // namespace sfalpha
