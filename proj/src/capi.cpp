#include "sfalpha/sfalpha.h"

#include "sfalpha/config.hpp"
#include "sfalpha/runner.hpp"

#include <cstring>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace sfalpha;

struct sf_session {
    ConfigMap map;
    std::optional<std::uint64_t> seed_override;
    std::optional<int> threads_override;
    RunOptions options;
    std::string last_error;
    std::string last_results;
};

namespace {

sf_status fail(sf_session* s, sf_status code, const std::string& msg) {
    if (s)
        s->last_error = msg;
    return code;
}

ExperimentConfig build(const sf_session* s) {
    ExperimentConfig config = build_experiment_config(s->map);
    if (s->seed_override)
        config.master_seed = *s->seed_override;
    if (s->threads_override)
        config.threads = *s->threads_override;
    config.validate();
    return config;
}

} // namespace

extern "C" {

const char* sf_version(void) {
    return kToolVersion;
}

sf_session* sf_session_new(void) {
    return new (std::nothrow) sf_session();
}

void sf_session_free(sf_session* session) {
    delete session;
}

const char* sf_last_error(const sf_session* session) {
    return session ? session->last_error.c_str() : "null session";
}

const char* sf_last_results(const sf_session* session) {
    return session ? session->last_results.c_str() : "";
}

sf_status sf_load_config(sf_session* session, const char* path) {
    if (!session || !path)
        return fail(session, SF_ERR_ARG, "null argument");
    try {
        ConfigMap loaded = ConfigMap::from_file(path);
        // keep any overrides applied before the load
        for (const auto& [k, v] : session->map.entries())
            loaded.set(k, v);
        session->map = std::move(loaded);
        return SF_OK;
    } catch (const std::exception& e) {
        return fail(session, SF_ERR_CONFIG, e.what());
    }
}

sf_status sf_set_option(sf_session* session, const char* dotted_key, const char* value) {
    if (!session || !dotted_key || !value)
        return fail(session, SF_ERR_ARG, "null argument");
    try {
        session->map.set(dotted_key, value);
        return SF_OK;
    } catch (const std::exception& e) {
        return fail(session, SF_ERR_CONFIG, e.what());
    }
}

sf_status sf_set_seed(sf_session* session, uint64_t seed) {
    if (!session)
        return SF_ERR_ARG;
    session->seed_override = seed;
    return SF_OK;
}

sf_status sf_set_threads(sf_session* session, int threads) {
    if (!session)
        return SF_ERR_ARG;
    if (threads < 0)
        return fail(session, SF_ERR_ARG, "threads must be >= 0");
    session->threads_override = threads;
    return SF_OK;
}

sf_status sf_set_flag(sf_session* session, const char* name, int value) {
    if (!session || !name)
        return fail(session, SF_ERR_ARG, "null argument");
    if (std::strcmp(name, "assert") == 0)
        session->options.assert_mode = value != 0;
    else if (std::strcmp(name, "deterministic") == 0)
        session->options.deterministic = value != 0;
    else
        return fail(session, SF_ERR_ARG, std::string("unknown flag: ") + name);
    return SF_OK;
}

sf_status sf_validate(sf_session* session, char* report, size_t capacity) {
    if (!session)
        return SF_ERR_ARG;
    std::string text;
    sf_status rc = SF_OK;
    try {
        ExperimentConfig config = build_experiment_config(session->map);
        if (session->seed_override)
            config.master_seed = *session->seed_override;
        if (session->threads_override)
            config.threads = *session->threads_override;
        ValidationReport vr = validate_config(config);
        text = vr.text();
        if (!vr.ok())
            rc = SF_ERR_CONFIG;
    } catch (const ConfigError& e) {
        text = std::string("error: ") + e.what() + "\n";
        rc = SF_ERR_CONFIG;
    } catch (const std::exception& e) {
        text = std::string("error: ") + e.what() + "\n";
        rc = SF_ERR_RUNTIME;
    }
    if (rc != SF_OK)
        session->last_error = text;
    if (report && capacity > 0) {
        const size_t n = std::min(capacity - 1, text.size());
        std::memcpy(report, text.data(), n);
        report[n] = '\0';
    }
    return rc;
}

sf_status sf_run(sf_session* session, const char* subcommand, const char* out_dir) {
    if (!session || !subcommand || !out_dir)
        return fail(session, SF_ERR_ARG, "null argument");
    if (!is_known_subcommand(subcommand))
        return fail(session, SF_ERR_CONFIG, std::string("unknown subcommand: ") + subcommand);
    try {
        ExperimentConfig config = build(session);
        RunOutcome outcome = run_experiment(subcommand, config, out_dir, session->options);
        std::ostringstream os;
        for (const auto& line : outcome.messages)
            os << line << "\n";
        session->last_results = os.str();
        if (outcome.assertion_failed && session->options.assert_mode)
            return fail(session, SF_ERR_ASSERT, "assertion failed:\n" + session->last_results);
        return SF_OK;
    } catch (const ConfigError& e) {
        return fail(session, SF_ERR_CONFIG, e.what());
    } catch (const ExperimentError& e) {
        return fail(session, SF_ERR_ASSERT, e.what());
    } catch (const std::exception& e) {
        return fail(session, SF_ERR_RUNTIME, e.what());
    }
}

} // extern "C"
