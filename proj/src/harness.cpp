#include "sfalpha/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <sstream>
#include <thread>

namespace sfalpha {

namespace {

int resolve_threads(int threads) {
    if (threads > 0)
        return threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Run fn(task) for task in [0, n_tasks) on up to `threads` workers. Tasks
/// own disjoint state, so results do not depend on scheduling.
template <typename Fn>
void parallel_tasks(int n_tasks, int threads, Fn&& fn) {
    threads = std::min(resolve_threads(threads), n_tasks);
    if (threads <= 1) {
        for (int t = 0; t < n_tasks; ++t)
            fn(t);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mutex;
    pool.reserve(threads);
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const int t = next.fetch_add(1);
                if (t >= n_tasks)
                    return;
                try {
                    fn(t);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error)
                        error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool)
        th.join();
    if (error)
        std::rethrow_exception(error);
}

NemytskiiCoefficients::PointMap named_point_map(const std::string& name) {
    if (name == "tanh_sum")
        return [](double u, double v) { return std::tanh(u + v); };
    if (name == "sin_mix")
        return [](double u, double v) { return std::sin(u) + 0.5 * std::sin(v); };
    if (name == "sin_u_times_v") // odd in (x,y); bounded via tanh clamp on v
        return [](double u, double v) { return std::sin(u) * std::tanh(v); };
    throw ConfigError("unknown pointwise coefficient map: " + name);
}

// Lipschitz bound in the first argument (used for B) or the second (for F).
double named_point_map_lip(const std::string& name, bool in_y) {
    if (name == "tanh_sum")
        return 1.0;
    if (name == "sin_mix")
        return in_y ? 0.5 : 1.0;
    if (name == "sin_u_times_v")
        return 1.0;
    throw ConfigError("unknown pointwise coefficient map: " + name);
}

// median-of-means from precomputed block means
std::pair<double, double> mom_from_block_means(std::span<const double> means) {
    const double est = median(std::vector<double>(means.begin(), means.end()));
    const double se = mean_stderr(means).second;
    return {est, std::sqrt(std::numbers::pi / 2.0) * se};
}

using PhiFn = std::function<double(std::span<const double>)>;

PhiFn named_phi(const std::string& name) {
    if (name == "cos_e1")
        return [](std::span<const double> x) { return std::cos(x[0]); };
    if (name == "gauss")
        return [](std::span<const double> x) {
            double n2 = 0.0;
            for (double c : x)
                n2 += c * c;
            return std::exp(-0.5 * n2);
        };
    if (name == "constant")
        return [](std::span<const double>) { return 1.0; };
    throw ConfigError("experiment.phi: unknown test function " + name);
}

struct PairAccumulator {
    // block-major per-time sums; deterministic because each block's samples
    // are processed in index order by a single task
    std::vector<double> sums; // [block * n_t + t]
    std::vector<int> counts;  // samples contributing, per block
    std::vector<int> aborted; // per block
};

/// Run coupled (multiscale, averaged) pairs for one epsilon, reducing
/// per-time sample statistics into per-block accumulators.
/// `per_time(sample_x, averaged_x)` maps the two states at one grid time to
/// the scalar being averaged.
template <typename PerTime>
PairAccumulator run_coupled_ladder_point(const ExperimentConfig& config, const Problem& problem,
                                         const BbarOracle& bbar, PerTime&& per_time) {
    const int m = problem.m();
    const int n_t = static_cast<int>(std::llround(config.T / config.h)) + 1;
    const int N = config.samples;
    const int blocks = config.blocks;
    const auto x0 = make_initial(config.x_profile, config.x_scale, m);
    const auto y0 = make_initial(config.y_profile, config.y_scale, m);

    PairAccumulator acc;
    acc.sums.assign(static_cast<size_t>(blocks) * n_t, 0.0);
    acc.counts.assign(blocks, 0);
    acc.aborted.assign(blocks, 0);

    SimOptions averaged_options;
    averaged_options.slow_role =
        config.coupled ? StreamRole::SlowNoise : StreamRole::SlowNoiseUncoupled;
    const DriftFn drift = bbar.drift();

    parallel_tasks(blocks, config.threads, [&](int b) {
        const int lo = static_cast<int>(static_cast<std::int64_t>(b) * N / blocks);
        const int hi = static_cast<int>(static_cast<std::int64_t>(b + 1) * N / blocks);
        std::vector<double> xs_grid(static_cast<size_t>(n_t) * m);
        std::vector<double> vals(n_t);
        SeededStream root(config.master_seed);
        for (int i = lo; i < hi; ++i) {
            auto sample_stream = root.child(static_cast<std::uint64_t>(i));
            try {
                simulate_multiscale(problem, x0, y0, config.T, config.h, sample_stream,
                                    [&](int step, double, std::span<const double> x,
                                        std::span<const double>) {
                                        std::copy(x.begin(), x.end(),
                                                  xs_grid.begin() + static_cast<size_t>(step) * m);
                                    });
                simulate_averaged(problem, drift, x0, config.T, config.h, sample_stream,
                                  [&](int step, double, std::span<const double> x,
                                      std::span<const double>) {
                                      vals[step] = per_time(
                                          std::span<const double>(
                                              xs_grid.data() + static_cast<size_t>(step) * m, m),
                                          x);
                                  },
                                  averaged_options);
            } catch (const TrajectoryAbort&) {
                acc.aborted[b] += 1;
                continue;
            }
            for (int t = 0; t < n_t; ++t)
                acc.sums[static_cast<size_t>(b) * n_t + t] += vals[t];
            acc.counts[b] += 1;
        }
    });
    return acc;
}

void check_abort_fraction(const ExperimentConfig& config, double epsilon, int aborted) {
    if (aborted > 0.05 * config.samples) {
        std::ostringstream os;
        os << "experiment failed: " << aborted << "/" << config.samples
           << " samples aborted (non-finite trajectories) at epsilon=" << epsilon;
        throw ExperimentError(os.str());
    }
}

BbarOracle make_bbar_oracle(const ExperimentConfig& config, const Problem& problem) {
    if (config.bbar == "analytic") {
        if (!problem.coeffs->has_analytic_bbar())
            throw ConfigError("averaging.bbar: analytic oracle requested but the configured "
                              "coefficients provide none");
        return BbarOracle::analytic(problem);
    }
    if (config.bbar == "ergodic")
        return BbarOracle::ergodic(problem, config.bbar_params,
                                   SeededStream(config.master_seed).child(0xBBA7u));
    throw ConfigError("averaging.bbar: must be 'analytic' or 'ergodic'");
}

} // namespace

void ExperimentConfig::validate() const {
    if (m < 1)
        throw ConfigError("problem.m: must be a positive integer");
    if (coefficients != "linear" && coefficients != "nemytskii")
        throw ConfigError("problem.coefficients: must be 'linear' or 'nemytskii'");
    if (!(alpha > 1.0 && alpha < 2.0))
        throw ConfigError("noise.alpha: must lie strictly in (1,2)");
    if (!(p >= 1.0))
        throw ConfigError("experiment.p: must satisfy p >= 1");
    if (!(p < alpha))
        throw ConfigError("experiment.p: the moment order must satisfy p < alpha "
                          "(finite p-th moments require 1 <= p < alpha)");
    if (epsilon_ladder.empty())
        throw ConfigError("experiment.epsilons: must be nonempty");
    for (double e : epsilon_ladder)
        if (!(e > 0.0 && e <= 1.0))
            throw ConfigError("experiment.epsilons: values must lie in (0, 1]");
    auto sorted = epsilon_ladder;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw ConfigError("experiment.epsilons: values must be distinct");
    if (!(T > 0.0))
        throw ConfigError("experiment.T: must be positive");
    if (!(h > 0.0 && h <= T))
        throw ConfigError("experiment.h: must satisfy 0 < h <= T");
    if (samples < 1)
        throw ConfigError("experiment.samples: must be positive");
    if (blocks < 8)
        throw ConfigError("experiment.blocks: need at least 8 blocks");
    if (samples < 4 * blocks)
        throw ConfigError("experiment.samples: need at least 4 samples per block");
    if (m_ladder.size() >= 2)
        for (size_t i = 1; i < m_ladder.size(); ++i)
            if (m_ladder[i] <= m_ladder[i - 1])
                throw ConfigError("experiment.m_ladder: must be strictly increasing");
    if (coefficients == "linear") {
        const double lambda1 =
            SpectrumSpec::dirichlet_laplacian_1d(1)->eigenvalues.front();
        if (!(b < lambda1))
            throw ConfigError("problem.b: dissipativity requires L_F = b < lambda_1 (~9.87)");
    }
    named_phi(phi);
    // A2 decay exponents
    const double beta_margin = alpha * beta_decay - 2.0 * (alpha - 1.0) - 1.0;
    if (!(beta_margin > 0.0))
        throw ConfigError("noise.beta_decay: assumption-A2 beta series diverges "
                          "(alpha*decay - 2(alpha-1) must exceed 1)");
    if (!(alpha * gamma_decay > 1.0))
        throw ConfigError("noise.gamma_decay: assumption-A2 gamma series diverges "
                          "(alpha*decay must exceed 1)");
}

std::vector<double> make_initial(const std::string& profile, double scale, int m) {
    std::vector<double> v(m, 0.0);
    if (profile == "zero")
        return v;
    if (profile == "e1") {
        v[0] = scale;
        return v;
    }
    if (profile == "decay2") {
        for (int k = 1; k <= m; ++k)
            v[k - 1] = scale / (static_cast<double>(k) * k);
        return v;
    }
    throw ConfigError("initial profile: unknown value " + profile);
}

Problem make_problem(const ExperimentConfig& config, double epsilon, int m) {
    auto spectrum = SpectrumSpec::dirichlet_laplacian_1d(m);
    auto noise = StableNoiseSpec::power_law(config.alpha, m, config.beta_scale, config.beta_decay,
                                            config.gamma_scale, config.gamma_decay);
    std::shared_ptr<const Coefficients> coeffs;
    if (config.coefficients == "linear") {
        coeffs = std::make_shared<LinearBenchmark>(config.a, config.b, config.b0, config.b1,
                                                   spectrum);
    } else {
        coeffs = std::make_shared<NemytskiiCoefficients>(
            named_point_map(config.nemytskii_b), named_point_map(config.nemytskii_f),
            named_point_map_lip(config.nemytskii_b, false),
            named_point_map_lip(config.nemytskii_f, true), spectrum, /*b_is_bounded=*/true);
    }
    return Problem(std::move(spectrum), std::move(coeffs), std::move(noise), epsilon);
}

RateFit fit_loglog(const RateTable& table) {
    RateFit fit;
    std::vector<double> lx, ly;
    for (size_t i = 0; i < table.rows.size(); ++i) {
        const auto& r = table.rows[i];
        if (!(r.error > 0.0) || r.error < 3.0 * r.stderr_) {
            fit.excluded_points.push_back(static_cast<int>(i));
            continue;
        }
        fit.used_points.push_back(static_cast<int>(i));
        lx.push_back(std::log(r.epsilon));
        ly.push_back(std::log(r.error));
    }
    if (lx.size() < 3)
        throw ExperimentError("fit_loglog: need >= 3 usable points above the noise floor");
    const auto f = ols(lx, ly); // throws on degenerate spacing
    fit.slope = f.slope;
    fit.intercept = f.intercept;
    fit.slope_stderr = f.slope_stderr;
    fit.r_squared = f.r_squared;
    return fit;
}

RateResult strong_rate_experiment(const ExperimentConfig& config) {
    config.validate();
    RateResult result;
    result.reference_slope = 1.0 - 1.0 / config.alpha;
    const double p = config.p;

    for (double eps : config.epsilon_ladder) {
        const Problem problem = make_problem(config, eps, config.m);
        const BbarOracle bbar = make_bbar_oracle(config, problem);
        auto acc = run_coupled_ladder_point(
            config, problem, bbar,
            [p](std::span<const double> xm, std::span<const double> xa) {
                double n2 = 0.0;
                for (size_t k = 0; k < xm.size(); ++k)
                    n2 += (xm[k] - xa[k]) * (xm[k] - xa[k]);
                return std::pow(std::sqrt(n2), p);
            });

        const int n_t = static_cast<int>(std::llround(config.T / config.h)) + 1;
        const int blocks = config.blocks;
        int aborted = 0;
        for (int b = 0; b < blocks; ++b)
            aborted += acc.aborted[b];
        check_abort_fraction(config, eps, aborted);

        // per-time median-of-means over blocks, then max over the grid
        double best = -1.0, best_se = 0.0;
        std::vector<double> means(blocks);
        for (int t = 1; t < n_t; ++t) { // t = 0: both runs start at x0, error 0
            for (int b = 0; b < blocks; ++b)
                means[b] = acc.sums[static_cast<size_t>(b) * n_t + t] / acc.counts[b];
            auto [est, se] = mom_from_block_means(means);
            if (est > best) {
                best = est;
                best_se = se;
            }
        }
        RateRow row;
        row.epsilon = eps;
        // report on the |.| scale: error^{1/p} with a delta-method stderr
        row.error = std::pow(best, 1.0 / p);
        row.stderr_ = best > 0.0 ? best_se / p * std::pow(best, 1.0 / p - 1.0) : best_se;
        row.n_effective = config.samples - aborted;
        row.aborted = aborted;
        result.table.rows.push_back(row);
    }
    try {
        result.fit = fit_loglog(result.table);
    } catch (const ExperimentError& e) {
        result.fit_ok = false;
        result.fit_message = e.what();
    }
    return result;
}

RateResult weak_rate_experiment(const ExperimentConfig& config) {
    config.validate();
    RateResult result;
    result.reference_slope = 1.0; // order 1 - r for arbitrarily small r
    const PhiFn phi = named_phi(config.phi);

    for (double eps : config.epsilon_ladder) {
        const Problem problem = make_problem(config, eps, config.m);
        const BbarOracle bbar = make_bbar_oracle(config, problem);
        auto acc = run_coupled_ladder_point(
            config, problem, bbar,
            [&phi](std::span<const double> xm, std::span<const double> xa) {
                return phi(xm) - phi(xa);
            });

        const int n_t = static_cast<int>(std::llround(config.T / config.h)) + 1;
        const int blocks = config.blocks;
        int aborted = 0;
        for (int b = 0; b < blocks; ++b)
            aborted += acc.aborted[b];
        check_abort_fraction(config, eps, aborted);

        // phi is bounded: plain means per time, |mean| maximized over the grid
        double best = -1.0, best_se = 0.0;
        std::vector<double> means(blocks);
        for (int t = 1; t < n_t; ++t) {
            for (int b = 0; b < blocks; ++b)
                means[b] = acc.sums[static_cast<size_t>(b) * n_t + t] / acc.counts[b];
            auto [est, se] = mean_stderr(means);
            if (std::abs(est) > best) {
                best = std::abs(est);
                best_se = se;
            }
        }
        RateRow row;
        row.epsilon = eps;
        row.error = best;
        row.stderr_ = best_se;
        row.n_effective = config.samples - aborted;
        row.aborted = aborted;
        result.table.rows.push_back(row);
    }
    try {
        result.fit = fit_loglog(result.table);
    } catch (const ExperimentError& e) {
        result.fit_ok = false;
        result.fit_message = e.what();
    }
    return result;
}

GalerkinResult galerkin_convergence_experiment(const ExperimentConfig& config) {
    config.validate();
    if (config.m_ladder.size() < 2)
        throw ConfigError("experiment.m_ladder: need at least two resolutions");
    GalerkinResult result;
    result.m_star = config.m_ladder.back();
    const int m_star = result.m_star;
    const int n_m = static_cast<int>(config.m_ladder.size()) - 1;
    const int N = config.samples;
    const int blocks = config.blocks;
    const double eps = config.galerkin_epsilon;

    const Problem ref_problem = make_problem(config, eps, m_star);
    std::vector<Problem> problems;
    problems.reserve(n_m);
    for (int j = 0; j < n_m; ++j)
        problems.push_back(make_problem(config, eps, config.m_ladder[j]));

    // per-sample errors, resolution-major
    std::vector<double> errors(static_cast<size_t>(n_m) * N, 0.0);
    std::vector<int> aborted(blocks, 0);
    std::vector<std::uint8_t> ok(N, 0);

    parallel_tasks(blocks, config.threads, [&](int b) {
        const int lo = static_cast<int>(static_cast<std::int64_t>(b) * N / blocks);
        const int hi = static_cast<int>(static_cast<std::int64_t>(b + 1) * N / blocks);
        SeededStream root(config.master_seed);
        std::vector<double> x_ref(m_star), x_coarse;
        for (int i = lo; i < hi; ++i) {
            auto sample_stream = root.child(static_cast<std::uint64_t>(i));
            const auto x0_ref = make_initial(config.x_profile, config.x_scale, m_star);
            const auto y0_ref = make_initial(config.y_profile, config.y_scale, m_star);
            try {
                simulate_multiscale(ref_problem, x0_ref, y0_ref, config.T, config.h, sample_stream,
                                    [&](int, double, std::span<const double> x,
                                        std::span<const double>) {
                                        std::copy(x.begin(), x.end(), x_ref.begin());
                                    });
                for (int j = 0; j < n_m; ++j) {
                    const int mj = config.m_ladder[j];
                    const auto x0 = make_initial(config.x_profile, config.x_scale, mj);
                    const auto y0 = make_initial(config.y_profile, config.y_scale, mj);
                    x_coarse.assign(mj, 0.0);
                    simulate_multiscale(problems[j], x0, y0, config.T, config.h, sample_stream,
                                        [&](int, double, std::span<const double> x,
                                            std::span<const double>) {
                                            std::copy(x.begin(), x.end(), x_coarse.begin());
                                        });
                    double n2 = 0.0;
                    for (int k = 0; k < m_star; ++k) {
                        const double c = k < mj ? x_coarse[k] : 0.0;
                        n2 += (c - x_ref[k]) * (c - x_ref[k]);
                    }
                    errors[static_cast<size_t>(j) * N + i] = std::sqrt(n2);
                }
                ok[i] = 1;
            } catch (const TrajectoryAbort&) {
                aborted[b] += 1;
            }
        }
    });

    int total_aborted = 0;
    for (int b = 0; b < blocks; ++b)
        total_aborted += aborted[b];
    check_abort_fraction(config, eps, total_aborted);

    for (int j = 0; j < n_m; ++j) {
        std::vector<double> col;
        col.reserve(N);
        for (int i = 0; i < N; ++i)
            if (ok[i])
                col.push_back(errors[static_cast<size_t>(j) * N + i]);
        auto [est, se] = static_cast<int>(col.size()) >= 4 * blocks ? robust_mean(col, blocks)
                                                                    : mean_stderr(col);
        result.rows.push_back({config.m_ladder[j], est, se, j == 0 ? total_aborted : 0});
    }
    for (size_t j = 1; j < result.rows.size(); ++j) {
        const auto& prev = result.rows[j - 1];
        const auto& cur = result.rows[j];
        const double joint = std::sqrt(prev.stderr_ * prev.stderr_ + cur.stderr_ * cur.stderr_);
        if (!(prev.error - cur.error > joint))
            result.monotone = false;
    }
    return result;
}

} // namespace sfalpha
