// Command-line front end. Links only against the C API so it doubles as a
// smoke test for the shared library surface.
#include "sfalpha/sfalpha.h"

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

namespace {

constexpr const char* kSubcommands[] = {"strong-rate", "weak-rate",  "galerkin",  "ergodicity",
                                        "noise-check", "bbar-check", "phi-check", "validate"};

int exit_code(sf_status rc) {
    switch (rc) {
    case SF_OK:
        return 0;
    case SF_ERR_ASSERT:
        return 2;
    default:
        return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"slow-fast alpha-stable averaging experiments"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    std::uint64_t seed = 0;
    bool have_seed = false;
    int threads = -1;
    bool assert_mode = false, deterministic = false;
    std::vector<std::string> overrides;

    for (const char* name : kSubcommands) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "config file (key = value under [section])");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "master seed")->each([&](const std::string&) {
            have_seed = true;
        });
        sub->add_option("--threads", threads, "worker threads (0 = auto)");
        sub->add_flag("--assert", assert_mode, "exit nonzero when the experiment check fails");
        sub->add_flag("--deterministic", deterministic, "byte-stable outputs (no timestamps)");
        sub->add_option("--set", overrides, "override section.key=value (repeatable)");
    }

    CLI11_PARSE(app, argc, argv);
    const std::string subcommand = app.get_subcommands().front()->get_name();

    std::unique_ptr<sf_session, void (*)(sf_session*)> session(sf_session_new(), sf_session_free);
    if (!session) {
        std::fprintf(stderr, "error: out of memory\n");
        return 1;
    }
    sf_session* s = session.get();

    auto check = [&](sf_status rc) {
        if (rc != SF_OK) {
            std::fprintf(stderr, "error: %s\n", sf_last_error(s));
            std::exit(exit_code(rc));
        }
    };

    if (!config_path.empty())
        check(sf_load_config(s, config_path.c_str()));
    for (const std::string& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "error: --set expects section.key=value, got '%s'\n", kv.c_str());
            return 1;
        }
        check(sf_set_option(s, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()));
    }
    if (have_seed)
        check(sf_set_seed(s, seed));
    if (threads >= 0)
        check(sf_set_threads(s, threads));
    check(sf_set_flag(s, "assert", assert_mode ? 1 : 0));
    check(sf_set_flag(s, "deterministic", deterministic ? 1 : 0));

    if (subcommand == "validate") {
        std::vector<char> buf(1 << 16);
        sf_status rc = sf_validate(s, buf.data(), buf.size());
        std::fputs(buf.data(), stdout);
        return exit_code(rc);
    }

    sf_status rc = sf_run(s, subcommand.c_str(), out_dir.c_str());
    if (rc != SF_OK) {
        std::fprintf(stderr, "error: %s\n", sf_last_error(s));
        return exit_code(rc);
    }
    std::fputs(sf_last_results(s), stdout);
    return 0;
}
