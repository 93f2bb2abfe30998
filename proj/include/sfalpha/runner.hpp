#pragma once

#include "sfalpha/config.hpp"
#include "sfalpha/harness.hpp"

#include <string>
#include <vector>

namespace sfalpha {

inline constexpr const char* kToolVersion = "0.1.0";

inline constexpr const char* kRateCsvHeader = "epsilon,error,stderr,n_effective,aborted";

struct RunOptions {
    bool assert_mode = false;   // fail the run when the experiment-level check fails
    bool deterministic = false; // suppress timestamps in emitted files
};

struct RunOutcome {
    bool assertion_failed = false;
    std::vector<std::string> messages; // human-readable result lines
};

/// Known subcommands: strong-rate, weak-rate, galerkin, ergodicity,
/// noise-check, bbar-check, phi-check. Writes manifest.txt, one CSV per
/// table and one SVG per fitted rate into out_dir.
RunOutcome run_experiment(const std::string& subcommand, const ExperimentConfig& config,
                          const std::string& out_dir, const RunOptions& options);

bool is_known_subcommand(const std::string& subcommand);

} // namespace sfalpha
