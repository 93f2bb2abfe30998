#include "sfalpha/averaging.hpp"
#include "sfalpha/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sfalpha {

namespace {

double resolve_burn_in(const BbarParams& p, double gap) {
    return p.burn_in > 0.0 ? p.burn_in : 8.0 / gap;
}

double resolve_window(const BbarParams& p, double gap) {
    return p.window > 0.0 ? p.window : 100.0 / gap;
}

std::pair<double, double> combine_blocks(std::span<const double> block_means, bool bounded) {
    if (bounded)
        return mean_stderr(block_means);
    const auto est = median(std::vector<double>(block_means.begin(), block_means.end()));
    const auto se = mean_stderr(block_means).second;
    return {est, std::sqrt(std::numbers::pi / 2.0) * se};
}

} // namespace

BbarEstimate estimate_bbar(std::span<const double> x, const Problem& problem,
                           const BbarParams& params, SeededStream stream) {
    const int m = problem.m();
    if (static_cast<int>(x.size()) != m)
        throw std::invalid_argument("estimate_bbar: x dimension mismatch");
    const double gap = problem.gap();
    const double h_f = params.h_f;
    const auto n_burn = static_cast<std::uint64_t>(std::llround(resolve_burn_in(params, gap) / h_f));
    const auto n_avg = static_cast<std::uint64_t>(std::llround(resolve_window(params, gap) / h_f));
    if (n_avg < static_cast<std::uint64_t>(4 * params.blocks))
        throw std::invalid_argument("estimate_bbar: averaging window too short for block count");
    const double T = (n_burn + n_avg) * h_f;

    const int n_blocks_total = params.ensemble * params.blocks;
    // block sums per mode, mode-major
    std::vector<double> block_sums(static_cast<size_t>(m) * n_blocks_total, 0.0);
    std::vector<std::uint64_t> block_counts(n_blocks_total, 0);
    std::vector<double> b_val(m);
    const std::vector<double> y0(m, 0.0);

    for (int e = 0; e < params.ensemble; ++e) {
        auto traj_stream = stream.child(static_cast<std::uint64_t>(e));
        simulate_frozen(problem, x, y0, T, h_f, traj_stream,
                        [&](int step, double, std::span<const double> xs,
                            std::span<const double> ys) {
                            if (static_cast<std::uint64_t>(step) <= n_burn)
                                return;
                            const std::uint64_t i = static_cast<std::uint64_t>(step) - n_burn - 1;
                            const int b = e * params.blocks +
                                          static_cast<int>(i * params.blocks / n_avg);
                            problem.coeffs->apply_b(xs, ys, b_val);
                            for (int k = 0; k < m; ++k)
                                block_sums[static_cast<size_t>(k) * n_blocks_total + b] += b_val[k];
                            if (i < n_avg) // counts shared across modes
                                block_counts[b] += 1;
                        });
    }

    BbarEstimate out;
    out.value.resize(m);
    out.stderr_.resize(m);
    const bool bounded = problem.coeffs->b_bounded();
    std::vector<double> means(n_blocks_total);
    for (int k = 0; k < m; ++k) {
        for (int b = 0; b < n_blocks_total; ++b)
            means[b] = block_sums[static_cast<size_t>(k) * n_blocks_total + b] / block_counts[b];
        auto [est, se] = combine_blocks(means, bounded);
        out.value[k] = est;
        out.stderr_[k] = se;
        // non-convergence: the two half-sample estimates disagree beyond 5 se
        const int half = n_blocks_total / 2;
        auto [e1, s1] = combine_blocks(std::span(means).first(half), bounded);
        auto [e2, s2] = combine_blocks(std::span(means).subspan(half), bounded);
        if (std::abs(e1 - e2) > 5.0 * std::sqrt(s1 * s1 + s2 * s2))
            out.converged = false;
    }
    return out;
}

BbarOracle::BbarOracle(const Problem& problem, Kind kind, BbarParams params, SeededStream stream)
    : problem_(&problem), kind_(kind), params_(params), stream_(stream) {}

BbarOracle BbarOracle::analytic(const Problem& problem) {
    if (!problem.coeffs->has_analytic_bbar())
        throw std::invalid_argument("BbarOracle::analytic: coefficients have no analytic Bbar");
    return BbarOracle(problem, Kind::Analytic, {}, SeededStream(0));
}

BbarOracle BbarOracle::ergodic(const Problem& problem, BbarParams params, SeededStream stream) {
    return BbarOracle(problem, Kind::Ergodic, params, stream);
}

void BbarOracle::evaluate(std::span<const double> x, std::span<double> out) const {
    if (kind_ == Kind::Analytic) {
        problem_->coeffs->analytic_bbar(x, out);
        return;
    }
    std::vector<std::int64_t> key(x.size());
    for (size_t i = 0; i < x.size(); ++i)
        key[i] = static_cast<std::int64_t>(std::llround(x[i] * 1e6));
    {
        std::lock_guard lock(mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end()) {
            std::copy(it->second.begin(), it->second.end(), out.begin());
            return;
        }
    }
    // stream derived from the quantized key, so the estimate does not depend
    // on which worker computes the entry
    std::uint64_t salt = 0x8C67'11EB'9F1A'33D5ULL;
    for (std::int64_t q : key)
        salt = salt * 0x100000001B3ULL ^ static_cast<std::uint64_t>(q);
    std::vector<double> xq(x.size());
    for (size_t i = 0; i < x.size(); ++i)
        xq[i] = key[i] * 1e-6;
    auto est = estimate_bbar(xq, *problem_, params_, stream_.child(salt));
    {
        std::lock_guard lock(mutex_);
        auto [it, inserted] = cache_.emplace(std::move(key), std::move(est.value));
        if (inserted)
            ++cache_misses_;
        std::copy(it->second.begin(), it->second.end(), out.begin());
    }
}

DriftFn BbarOracle::drift() const {
    return [this](std::span<const double> x, std::span<double> out) { evaluate(x, out); };
}

std::size_t BbarOracle::cache_size() const {
    std::lock_guard lock(mutex_);
    return cache_.size();
}

PhiEstimate estimate_phi(std::span<const double> x, std::span<const double> y,
                         const Problem& problem, std::span<const double> bbar, double T_max,
                         int N, double h_f, SeededStream stream, double truncation_c) {
    const int m = problem.m();
    if (static_cast<int>(x.size()) != m || static_cast<int>(y.size()) != m ||
        static_cast<int>(bbar.size()) != m)
        throw std::invalid_argument("estimate_phi: dimension mismatch");
    if (N < 1)
        throw std::invalid_argument("estimate_phi: need N >= 1");
    const auto n_steps = static_cast<std::uint64_t>(std::llround(T_max / h_f));

    // per-sample trapezoidal integrals, sample-major
    std::vector<double> integrals(static_cast<size_t>(N) * m, 0.0);
    std::vector<double> b_val(m);
    for (int i = 0; i < N; ++i) {
        auto traj = stream.child(static_cast<std::uint64_t>(i));
        double* acc = &integrals[static_cast<size_t>(i) * m];
        simulate_frozen(problem, x, y, n_steps * h_f, h_f, traj,
                        [&](int step, double, std::span<const double> xs,
                            std::span<const double> ys) {
                            problem.coeffs->apply_b(xs, ys, b_val);
                            const bool end = step == 0 ||
                                             static_cast<std::uint64_t>(step) == n_steps;
                            const double w = (end ? 0.5 : 1.0) * h_f;
                            for (int k = 0; k < m; ++k)
                                acc[k] += w * (b_val[k] - bbar[k]);
                        });
    }

    PhiEstimate out;
    out.value.resize(m);
    out.stderr_.resize(m);
    const bool bounded = problem.coeffs->b_bounded();
    std::vector<double> col(N);
    for (int k = 0; k < m; ++k) {
        for (int i = 0; i < N; ++i)
            col[i] = integrals[static_cast<size_t>(i) * m + k];
        auto [est, se] = (!bounded && N >= 64) ? robust_mean(col, 16) : mean_stderr(col);
        out.value[k] = est;
        out.stderr_[k] = se;
    }
    const double gap2 = problem.gap() / 2.0;
    const double size_xy = hs_norm(x, problem.spectrum->eigenvalues, 0.0) +
                           hs_norm(y, problem.spectrum->eigenvalues, 0.0);
    out.truncation_bound = truncation_c * std::exp(-gap2 * T_max) * (1.0 + size_xy) / gap2;
    const double vnorm = hs_norm(out.value, problem.spectrum->eigenvalues, 0.0);
    const double senorm = hs_norm(out.stderr_, problem.spectrum->eigenvalues, 0.0);
    out.underpowered = senorm > vnorm;
    return out;
}

ErgodicityReport measure_ergodic_decay(const LipschitzFunctional& G, std::span<const double> x,
                                       std::span<const double> y, std::span<const double> time_grid,
                                       int N, const Problem& problem, double h_f,
                                       SeededStream stream) {
    if (time_grid.empty() || N < 2)
        throw std::invalid_argument("measure_ergodic_decay: need a time grid and N >= 2");
    const int m = problem.m();
    const double gap = problem.gap();

    // mu^x(G) from independent long runs, combined by median-of-means to tame
    // the heavy tails
    double mu_hat = 0.0;
    {
        const auto n_burn = static_cast<std::uint64_t>(std::llround(8.0 / gap / h_f));
        const auto n_avg = static_cast<std::uint64_t>(std::llround(200.0 / gap / h_f));
        const std::vector<double> y0(m, 0.0);
        auto mu_stream = stream.child(0xE7u);
        std::vector<double> run_means(16);
        for (int r = 0; r < 16; ++r) {
            double acc = 0.0;
            std::uint64_t count = 0;
            simulate_frozen(problem, x, y0, (n_burn + n_avg) * h_f, h_f,
                            mu_stream.child(static_cast<std::uint64_t>(r)),
                            [&](int step, double, std::span<const double>,
                                std::span<const double> ys) {
                                if (static_cast<std::uint64_t>(step) > n_burn) {
                                    acc += G.fn(ys);
                                    ++count;
                                }
                            });
            run_means[r] = acc / static_cast<double>(count);
        }
        mu_hat = median(std::move(run_means));
    }

    const size_t n_times = time_grid.size();
    std::vector<std::uint64_t> grid_steps(n_times);
    std::uint64_t last = 0;
    for (size_t i = 0; i < n_times; ++i) {
        grid_steps[i] = static_cast<std::uint64_t>(std::llround(time_grid[i] / h_f));
        last = std::max(last, grid_steps[i]);
    }

    // sample-major G values at grid times
    std::vector<double> g_vals(static_cast<size_t>(N) * n_times, 0.0);
    for (int i = 0; i < N; ++i) {
        auto traj = stream.child(static_cast<std::uint64_t>(i));
        simulate_frozen(problem, x, y, last * h_f, h_f, traj,
                        [&](int step, double, std::span<const double>,
                            std::span<const double> ys) {
                            for (size_t j = 0; j < n_times; ++j)
                                if (grid_steps[j] == static_cast<std::uint64_t>(step))
                                    g_vals[static_cast<size_t>(i) * n_times + j] = G.fn(ys);
                        });
    }

    ErgodicityReport rep;
    rep.times.assign(time_grid.begin(), time_grid.end());
    rep.bound_rate = gap / 2.0;
    rep.gaps.resize(n_times);
    rep.stderrs.resize(n_times);
    std::vector<double> col(N);
    for (size_t j = 0; j < n_times; ++j) {
        for (int i = 0; i < N; ++i)
            col[i] = g_vals[static_cast<size_t>(i) * n_times + j];
        auto [est, se] = N >= 64 ? robust_mean(col, 16) : mean_stderr(col);
        rep.gaps[j] = std::abs(est - mu_hat);
        rep.stderrs[j] = se;
    }

    // fit only gaps above the noise floor
    std::vector<double> ts, lg;
    for (size_t j = 0; j < n_times; ++j) {
        if (rep.gaps[j] > 3.0 * rep.stderrs[j] && rep.gaps[j] > 0.0) {
            ts.push_back(rep.times[j]);
            lg.push_back(std::log(rep.gaps[j]));
        }
    }
    rep.points_used = static_cast<int>(ts.size());
    if (ts.size() < 3) {
        rep.unresolvable = true;
        return rep;
    }
    const auto fit = ols(ts, lg);
    rep.fitted_rate = -fit.slope;
    rep.fitted_rate_stderr = fit.slope_stderr;
    rep.r_squared = fit.r_squared;
    return rep;
}

} // namespace sfalpha
