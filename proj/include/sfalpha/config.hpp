#pragma once

#include "sfalpha/harness.hpp"

#include <map>
#include <string>
#include <vector>

namespace sfalpha {

/// Flat key-value configuration with sections: lines of `key = value` under
/// `[section]` headers, `#` comments. Keys are addressed as "section.key".
class ConfigMap {
public:
    static ConfigMap from_file(const std::string& path);
    static ConfigMap from_string(const std::string& text);

    /// `--set section.key=value` style override; wins over file values.
    void set(const std::string& dotted_key, const std::string& value);
    bool has(const std::string& dotted_key) const;
    const std::map<std::string, std::string>& entries() const { return entries_; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    std::vector<double> get_double_list(const std::string& key,
                                        const std::vector<double>& fallback) const;
    std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const;

private:
    std::map<std::string, std::string> entries_;
};

/// Materialize an ExperimentConfig from a parsed map; unknown keys are
/// rejected, defaults fill the gaps. Throws ConfigError naming the field.
ExperimentConfig build_experiment_config(const ConfigMap& map);

/// All resolved values of a config, for the manifest ("defaults materialized
/// so runs are self-describing").
std::map<std::string, std::string> materialize(const ExperimentConfig& config);

/// Static validation report: runs all invariant checks without simulating.
struct ValidationIssue {
    std::string field;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    std::vector<std::string> notes; // informational lines (A2 margins etc.)
    bool ok() const { return issues.empty(); }
    std::string text() const;
};

ValidationReport validate_config(const ExperimentConfig& config);

} // namespace sfalpha
