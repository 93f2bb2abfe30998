#include "sfalpha/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sfalpha {

namespace {

void check_dim(std::span<const double> v, int m, const char* what) {
    if (static_cast<int>(v.size()) != m)
        throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

void check_finite(std::span<const double> v, const char* what) {
    for (double c : v)
        if (!std::isfinite(c))
            throw TrajectoryAbort(std::string("non-finite value in ") + what);
}

/// Per-mode constants for one exponential-Euler update with effective step
/// h_eff (macro step, or delta/epsilon for the fast equation).
struct ModeCoeffs {
    std::vector<double> decay;       // e^{-lambda h_eff}
    std::vector<double> drift;       // (1 - e^{-lambda h_eff}) / lambda
    std::vector<double> noise_scale; // w_k ((1-e^{-alpha lambda h_eff})/(alpha lambda))^{1/alpha}
};

ModeCoeffs make_mode_coeffs(const SpectrumPtr& spectrum, std::span<const double> weights,
                            double h_eff, double alpha) {
    const int m = spectrum->m;
    ModeCoeffs c;
    c.decay.resize(m);
    c.drift.resize(m);
    c.noise_scale.resize(m);
    for (int k = 0; k < m; ++k) {
        const double lam = spectrum->eigenvalues[k];
        c.decay[k] = std::exp(-lam * h_eff);
        c.drift[k] = -std::expm1(-lam * h_eff) / lam;
        c.noise_scale[k] = convolution_increment_scale(lam, h_eff, weights[k], alpha);
    }
    return c;
}

/// Slow-noise generator: increments are drawn on a grid of h/n_agg and
/// aggregated exactly through the semigroup, so runs with different macro
/// steps but the same noise grid share the identical path.
struct SlowNoise {
    int n_agg;
    double alpha;
    std::vector<double> base_scale; // scale of one base increment per mode
    std::vector<double> agg;        // e^{-lambda (h - (j+1) h_b)}, mode-major [k*n_agg + j]
    std::vector<SeededStream> mode_streams;

    SlowNoise(const Problem& problem, double h, const SeededStream& sample_stream,
              const SimOptions& options) {
        n_agg = options.noise_substeps;
        if (n_agg < 1)
            throw std::invalid_argument("SimOptions: noise_substeps must be positive");
        alpha = problem.noise.alpha;
        const int m = problem.m();
        const double hb = h / n_agg;
        base_scale.resize(m);
        agg.resize(static_cast<size_t>(m) * n_agg);
        auto role_stream =
            sample_stream.child(static_cast<std::uint64_t>(options.slow_role));
        mode_streams.reserve(m);
        for (int k = 0; k < m; ++k) {
            const double lam = problem.spectrum->eigenvalues[k];
            base_scale[k] = convolution_increment_scale(lam, hb, problem.noise.slow_weights[k],
                                                        alpha);
            for (int j = 0; j < n_agg; ++j)
                agg[static_cast<size_t>(k) * n_agg + j] = std::exp(-lam * (h - (j + 1) * hb));
            mode_streams.push_back(role_stream.child(static_cast<std::uint64_t>(k)));
        }
    }

    double increment(int k, std::uint64_t step_index) {
        if (base_scale[k] == 0.0)
            return 0.0;
        double acc = 0.0;
        for (int j = 0; j < n_agg; ++j) {
            auto draw_stream = mode_streams[k].child(step_index * n_agg + j);
            acc += agg[static_cast<size_t>(k) * n_agg + j] *
                   sample_standard_stable(alpha, draw_stream);
        }
        return base_scale[k] * acc;
    }
};

std::vector<SeededStream> fast_mode_streams(const Problem& problem,
                                            const SeededStream& sample_stream) {
    auto role_stream = sample_stream.child(static_cast<std::uint64_t>(StreamRole::FastNoise));
    std::vector<SeededStream> s;
    s.reserve(problem.m());
    for (int k = 0; k < problem.m(); ++k)
        s.push_back(role_stream.child(static_cast<std::uint64_t>(k)));
    return s;
}

int fast_substep_count(const Problem& problem, double h) {
    const int n =
        static_cast<int>(std::ceil(h * problem.gap() / (problem.c_sub * problem.epsilon)));
    return n < 1 ? 1 : n;
}

std::uint64_t step_count(double T, double h) {
    const double n_real = T / h;
    const auto n = static_cast<std::uint64_t>(std::llround(n_real));
    if (T < 0.0 || !(h > 0.0))
        throw std::invalid_argument("simulate: need T >= 0 and h > 0");
    if (std::abs(n_real - static_cast<double>(n)) > 1e-9 * (n_real + 1.0))
        throw std::invalid_argument("simulate: h must divide T within rounding");
    return n;
}

} // namespace

Problem::Problem(SpectrumPtr spectrum_, std::shared_ptr<const Coefficients> coeffs_,
                 StableNoiseSpec noise_, double epsilon_)
    : spectrum(std::move(spectrum_)), coeffs(std::move(coeffs_)), noise(std::move(noise_)),
      epsilon(epsilon_) {
    if (!spectrum || !coeffs)
        throw std::invalid_argument("Problem: null spectrum or coefficients");
    if (!(epsilon > 0.0))
        throw std::invalid_argument("Problem: epsilon must be positive");
    if (static_cast<int>(noise.slow_weights.size()) != spectrum->m)
        throw std::invalid_argument("Problem: noise weights do not match spectrum");
    if (!(spectrum->eigenvalues.front() - coeffs->lip_f_y() > 0.0))
        throw std::invalid_argument("Problem: dissipativity lambda_1 - L_F > 0 violated");
}

LinearBenchmark::LinearBenchmark(double a, double b, double b0, double b1, SpectrumPtr spectrum)
    : Coefficients(std::max(std::abs(b0), std::abs(b1)), b), a_(a), b_(b), b0_(b0), b1_(b1),
      spectrum_(std::move(spectrum)) {
    if (b < 0.0)
        throw std::invalid_argument("LinearBenchmark: b must be nonnegative");
    if (!(b < spectrum_->eigenvalues.front()))
        throw std::invalid_argument("LinearBenchmark: need b < lambda_1");
}

void LinearBenchmark::apply_b(std::span<const double> x, std::span<const double> y,
                              std::span<double> out) const {
    for (size_t k = 0; k < out.size(); ++k)
        out[k] = b0_ * x[k] + b1_ * y[k];
}

void LinearBenchmark::apply_f(std::span<const double> x, std::span<const double> y,
                              std::span<double> out) const {
    for (size_t k = 0; k < out.size(); ++k)
        out[k] = a_ * x[k] - b_ * y[k];
}

void LinearBenchmark::frozen_mean(std::span<const double> x, std::span<double> out) const {
    for (size_t k = 0; k < out.size(); ++k)
        out[k] = a_ * x[k] / (spectrum_->eigenvalues[k] + b_);
}

void LinearBenchmark::analytic_bbar(std::span<const double> x, std::span<double> out) const {
    for (size_t k = 0; k < out.size(); ++k)
        out[k] = b0_ * x[k] + b1_ * a_ * x[k] / (spectrum_->eigenvalues[k] + b_);
}

NemytskiiCoefficients::NemytskiiCoefficients(PointMap b_point, PointMap f_point, double lip_b,
                                             double lip_f_y, SpectrumPtr spectrum,
                                             bool b_is_bounded, int n_points)
    : Coefficients(lip_b, lip_f_y), b_point_(std::move(b_point)), f_point_(std::move(f_point)),
      spectrum_(std::move(spectrum)),
      grid_(n_points > 0 ? n_points : 2 * spectrum_->m + 1), // 2m+1 suppresses product aliasing
      b_bounded_(b_is_bounded) {
    if (grid_.n_points() < spectrum_->m)
        throw std::invalid_argument("NemytskiiCoefficients: grid narrower than mode count");
}

void NemytskiiCoefficients::apply_pointwise(const PointMap& f, std::span<const double> x,
                                            std::span<const double> y,
                                            std::span<double> out) const {
    const int n = grid_.n_points();
    std::vector<double> xg(n), yg(n);
    grid_.to_grid(x, xg);
    grid_.to_grid(y, yg);
    for (int j = 0; j < n; ++j)
        xg[j] = f(xg[j], yg[j]);
    grid_.from_grid(xg, out);
}

void NemytskiiCoefficients::apply_b(std::span<const double> x, std::span<const double> y,
                                    std::span<double> out) const {
    apply_pointwise(b_point_, x, y, out);
}

void NemytskiiCoefficients::apply_f(std::span<const double> x, std::span<const double> y,
                                    std::span<double> out) const {
    apply_pointwise(f_point_, x, y, out);
}

SlowFastState step_multiscale(const Problem& problem, const SlowFastState& state, double h,
                              SeededStream& sample_stream, std::uint64_t step_index,
                              const SimOptions& options) {
    if (!(h > 0.0))
        throw std::invalid_argument("step_multiscale: h must be positive");
    const int m = problem.m();
    std::vector<double> x(state.x.coeffs()), y(state.y.coeffs());
    check_dim(x, m, "step_multiscale x");
    check_dim(y, m, "step_multiscale y");

    const auto slow = make_mode_coeffs(problem.spectrum, problem.noise.slow_weights, h,
                                       problem.noise.alpha);
    const int n_sub = fast_substep_count(problem, h);
    const double delta_eff = h / n_sub / problem.epsilon;
    const auto fast = make_mode_coeffs(problem.spectrum, problem.noise.fast_weights, delta_eff,
                                       problem.noise.alpha);
    SlowNoise slow_noise(problem, h, sample_stream, options);
    auto fast_streams = fast_mode_streams(problem, sample_stream);

    // slow drift: B averaged over the fast substep states (collapses to the
    // step-start evaluation when n_sub = 1)
    std::vector<double> bx(m), fy(m), b_acc(m, 0.0);
    const std::vector<double> x_start = x;
    for (int sub = 0; sub < n_sub; ++sub) {
        problem.coeffs->apply_b(x_start, y, bx);
        check_finite(bx, "B drift");
        for (int k = 0; k < m; ++k)
            b_acc[k] += bx[k];
        problem.coeffs->apply_f(x_start, y, fy);
        check_finite(fy, "F drift");
        const std::uint64_t draw = step_index * static_cast<std::uint64_t>(n_sub) + sub;
        for (int k = 0; k < m; ++k) {
            double inc = 0.0;
            if (fast.noise_scale[k] != 0.0) {
                auto s = fast_streams[k].child(draw);
                inc = fast.noise_scale[k] * sample_standard_stable(problem.noise.alpha, s);
            }
            y[k] = fast.decay[k] * y[k] + fast.drift[k] * fy[k] + inc;
        }
    }
    for (int k = 0; k < m; ++k)
        x[k] = slow.decay[k] * x[k] + slow.drift[k] * (b_acc[k] / n_sub) +
               slow_noise.increment(k, step_index);
    check_finite(x, "slow state");
    check_finite(y, "fast state");
    return {SpectralField(std::move(x), problem.spectrum),
            SpectralField(std::move(y), problem.spectrum), state.t + h};
}

void simulate_multiscale(const Problem& problem, std::span<const double> x0,
                         std::span<const double> y0, double T, double h,
                         SeededStream sample_stream, const StepCallback& on_step,
                         const SimOptions& options) {
    const int m = problem.m();
    check_dim(x0, m, "simulate_multiscale x0");
    check_dim(y0, m, "simulate_multiscale y0");
    const std::uint64_t n_steps = step_count(T, h);
    std::vector<double> x(x0.begin(), x0.end()), y(y0.begin(), y0.end());
    if (on_step)
        on_step(0, 0.0, x, y);
    if (n_steps == 0)
        return;

    const auto slow = make_mode_coeffs(problem.spectrum, problem.noise.slow_weights, h,
                                       problem.noise.alpha);
    const int n_sub = fast_substep_count(problem, h);
    const double delta_eff = h / n_sub / problem.epsilon;
    const auto fast = make_mode_coeffs(problem.spectrum, problem.noise.fast_weights, delta_eff,
                                       problem.noise.alpha);
    SlowNoise slow_noise(problem, h, sample_stream, options);
    auto fast_streams = fast_mode_streams(problem, sample_stream);

    std::vector<double> bx(m), fy(m), b_acc(m), x_start(m);
    for (std::uint64_t i = 0; i < n_steps; ++i) {
        x_start = x;
        std::fill(b_acc.begin(), b_acc.end(), 0.0);
        for (int sub = 0; sub < n_sub; ++sub) {
            problem.coeffs->apply_b(x_start, y, bx);
            check_finite(bx, "B drift");
            for (int k = 0; k < m; ++k)
                b_acc[k] += bx[k];
            problem.coeffs->apply_f(x_start, y, fy);
            check_finite(fy, "F drift");
            const std::uint64_t draw = i * static_cast<std::uint64_t>(n_sub) + sub;
            for (int k = 0; k < m; ++k) {
                double inc = 0.0;
                if (fast.noise_scale[k] != 0.0) {
                    auto s = fast_streams[k].child(draw);
                    inc = fast.noise_scale[k] * sample_standard_stable(problem.noise.alpha, s);
                }
                y[k] = fast.decay[k] * y[k] + fast.drift[k] * fy[k] + inc;
            }
        }
        for (int k = 0; k < m; ++k)
            x[k] = slow.decay[k] * x[k] + slow.drift[k] * (b_acc[k] / n_sub) +
                   slow_noise.increment(k, i);
        check_finite(x, "slow state");
        check_finite(y, "fast state");
        if (on_step)
            on_step(static_cast<int>(i + 1), (i + 1) * h, x, y);
    }
}

void simulate_frozen(const Problem& problem, std::span<const double> x_frozen,
                     std::span<const double> y0, double T, double h, SeededStream sample_stream,
                     const StepCallback& on_step) {
    const int m = problem.m();
    check_dim(x_frozen, m, "simulate_frozen x");
    check_dim(y0, m, "simulate_frozen y0");
    const std::uint64_t n_steps = step_count(T, h);
    std::vector<double> y(y0.begin(), y0.end());
    if (on_step)
        on_step(0, 0.0, x_frozen, y);

    const auto fast = make_mode_coeffs(problem.spectrum, problem.noise.fast_weights, h,
                                       problem.noise.alpha);
    auto fast_streams = fast_mode_streams(problem, sample_stream);
    std::vector<double> fy(m);
    for (std::uint64_t i = 0; i < n_steps; ++i) {
        problem.coeffs->apply_f(x_frozen, y, fy);
        check_finite(fy, "F drift");
        for (int k = 0; k < m; ++k) {
            double inc = 0.0;
            if (fast.noise_scale[k] != 0.0) {
                auto s = fast_streams[k].child(i);
                inc = fast.noise_scale[k] * sample_standard_stable(problem.noise.alpha, s);
            }
            y[k] = fast.decay[k] * y[k] + fast.drift[k] * fy[k] + inc;
        }
        check_finite(y, "frozen state");
        if (on_step)
            on_step(static_cast<int>(i + 1), (i + 1) * h, x_frozen, y);
    }
}

void simulate_averaged(const Problem& problem, const DriftFn& bbar, std::span<const double> x0,
                       double T, double h, SeededStream sample_stream, const StepCallback& on_step,
                       const SimOptions& options) {
    const int m = problem.m();
    check_dim(x0, m, "simulate_averaged x0");
    const std::uint64_t n_steps = step_count(T, h);
    std::vector<double> x(x0.begin(), x0.end());
    const std::vector<double> no_y(m, 0.0);
    if (on_step)
        on_step(0, 0.0, x, no_y);

    const auto slow = make_mode_coeffs(problem.spectrum, problem.noise.slow_weights, h,
                                       problem.noise.alpha);
    SlowNoise slow_noise(problem, h, sample_stream, options);
    std::vector<double> bx(m);
    for (std::uint64_t i = 0; i < n_steps; ++i) {
        bbar(x, bx);
        check_finite(bx, "averaged drift");
        for (int k = 0; k < m; ++k)
            x[k] = slow.decay[k] * x[k] + slow.drift[k] * bx[k] + slow_noise.increment(k, i);
        check_finite(x, "averaged state");
        if (on_step)
            on_step(static_cast<int>(i + 1), (i + 1) * h, x, no_y);
    }
}

} // namespace sfalpha
