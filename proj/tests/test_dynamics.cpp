#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sfalpha/dynamics.hpp"
#include "sfalpha/stats.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

using namespace sfalpha;

namespace {

constexpr double kPi = std::numbers::pi;

StableNoiseSpec zero_noise(double alpha, int m) {
    return StableNoiseSpec(alpha, std::vector<double>(m, 0.0), std::vector<double>(m, 0.0));
}

Problem linear_problem(int m, double epsilon, double a = 1.0, double b = 1.0, double b0 = 0.5,
                       double b1 = 1.0, bool noise_on = true) {
    auto spectrum = SpectrumSpec::dirichlet_laplacian_1d(m);
    auto coeffs = std::make_shared<LinearBenchmark>(a, b, b0, b1, spectrum);
    auto noise = noise_on ? StableNoiseSpec::power_law(1.75, m, 1.0, 2.0, 1.0, 1.0)
                          : zero_noise(1.75, m);
    return Problem(spectrum, coeffs, noise, epsilon);
}

/// exp(M t) for the per-mode 2x2 system d/dt (x, y) = M (x, y), by squaring
/// a high-order Taylor expansion at t / 2^s.
std::array<double, 4> expm2(std::array<double, 4> M, double t) {
    int s = 0;
    double norm = std::max(std::abs(M[0]) + std::abs(M[1]), std::abs(M[2]) + std::abs(M[3])) * t;
    while (norm > 0.5) {
        norm /= 2.0;
        ++s;
    }
    const double dt = t / std::pow(2.0, s);
    std::array<double, 4> A = {M[0] * dt, M[1] * dt, M[2] * dt, M[3] * dt};
    std::array<double, 4> R = {1.0, 0.0, 0.0, 1.0}, P = {1.0, 0.0, 0.0, 1.0};
    for (int k = 1; k <= 16; ++k) {
        std::array<double, 4> Q = {(P[0] * A[0] + P[1] * A[2]) / k, (P[0] * A[1] + P[1] * A[3]) / k,
                                   (P[2] * A[0] + P[3] * A[2]) / k, (P[2] * A[1] + P[3] * A[3]) / k};
        P = Q;
        for (int i = 0; i < 4; ++i)
            R[i] += P[i];
    }
    for (int i = 0; i < s; ++i)
        R = {R[0] * R[0] + R[1] * R[2], R[0] * R[1] + R[1] * R[3],
             R[2] * R[0] + R[3] * R[2], R[2] * R[1] + R[3] * R[3]};
    return R;
}

struct NanCoefficients final : Coefficients {
    NanCoefficients() : Coefficients(1.0, 0.5) {}
    void apply_b(std::span<const double>, std::span<const double>,
                 std::span<double> out) const override {
        out[0] = std::nan("");
    }
    void apply_f(std::span<const double>, std::span<const double>,
                 std::span<double> out) const override {
        for (auto& v : out)
            v = 0.0;
    }
};

} // namespace

TEST_CASE("problem validation") {
    auto spectrum = SpectrumSpec::dirichlet_laplacian_1d(2);
    auto coeffs = std::make_shared<LinearBenchmark>(1.0, 1.0, 0.5, 1.0, spectrum);
    auto noise = StableNoiseSpec::power_law(1.5, 2, 1, 2, 1, 1);
    CHECK_THROWS(Problem(spectrum, coeffs, noise, 0.0));
    CHECK_THROWS(Problem(spectrum, coeffs, noise, -1.0));
    CHECK_THROWS(Problem(spectrum, nullptr, noise, 1.0));
    // L_F = b >= lambda_1 rejected already at coefficient construction
    CHECK_THROWS(LinearBenchmark(1.0, 12.0, 0.5, 1.0, spectrum));
    const Problem p(spectrum, coeffs, noise, 1.0);
    CHECK(p.gap() == doctest::Approx(kPi * kPi - 1.0));
}

TEST_CASE("declared Lipschitz constants hold on sampled difference quotients") {
    const int m = 6;
    auto spectrum = SpectrumSpec::dirichlet_laplacian_1d(m);
    auto linear = std::make_shared<LinearBenchmark>(1.0, 1.0, 0.5, 1.0, spectrum);
    auto nemytskii = std::make_shared<NemytskiiCoefficients>(
        [](double u, double v) { return std::tanh(u + v); },
        [](double u, double v) { return std::sin(u) + 0.5 * std::sin(v); }, 1.0, 0.5, spectrum);

    SeededStream stream(31);
    std::vector<double> x1(m), y1(m), x2(m), y2(m), o1(m), o2(m);
    for (int rep = 0; rep < 200; ++rep) {
        for (int k = 0; k < m; ++k) {
            x1[k] = 4.0 * stream.next_uniform() - 2.0;
            y1[k] = 4.0 * stream.next_uniform() - 2.0;
            x2[k] = 4.0 * stream.next_uniform() - 2.0;
            y2[k] = 4.0 * stream.next_uniform() - 2.0;
        }
        // declared constants are per argument, so the joint quotient carries
        // an extra sqrt(2): |dB| <= L (|dx| + |dy|) <= L sqrt(2) |(dx,dy)|
        auto quotient = [&](const Coefficients& c, bool use_b, double lip) {
            (use_b ? c.apply_b(x1, y1, o1) : c.apply_f(x1, y1, o1));
            (use_b ? c.apply_b(x2, y2, o2) : c.apply_f(x2, y2, o2));
            double num = 0.0, den = 0.0;
            for (int k = 0; k < m; ++k) {
                num += (o1[k] - o2[k]) * (o1[k] - o2[k]);
                den += (x1[k] - x2[k]) * (x1[k] - x2[k]) + (y1[k] - y2[k]) * (y1[k] - y2[k]);
            }
            CHECK(std::sqrt(num) <= 1.01 * lip * std::sqrt(2.0 * den));
        };
        quotient(*linear, true, linear->lip_b());
        quotient(*nemytskii, true, nemytskii->lip_b());
        // F quotient against its y-Lipschitz bound with equal x
        x2 = x1;
        quotient(*linear, false, 1.0);
        quotient(*nemytskii, false, 0.5);
    }
}

TEST_CASE("nemytskii boundedness") {
    const int m = 6;
    auto spectrum = SpectrumSpec::dirichlet_laplacian_1d(m);
    NemytskiiCoefficients c([](double u, double v) { return std::tanh(u + v); },
                            [](double, double v) { return 0.5 * std::sin(v); }, 1.0, 0.5,
                            spectrum);
    SeededStream stream(17);
    std::vector<double> x(m), y(m), out(m);
    for (int rep = 0; rep < 100; ++rep) {
        for (int k = 0; k < m; ++k) {
            x[k] = 100.0 * (stream.next_uniform() - 0.5);
            y[k] = 100.0 * (stream.next_uniform() - 0.5);
        }
        c.apply_b(x, y, out);
        CHECK(hs_norm(out, spectrum->eigenvalues, 0.0) <=
              std::numbers::sqrt2 * 1.0 * std::sqrt(static_cast<double>(m)) + 1e-12);
    }
}

TEST_CASE("pure semigroup decay with zero drift and zero noise") {
    const int m = 3;
    auto spectrum = SpectrumSpec::dirichlet_laplacian_1d(m);
    auto coeffs = std::make_shared<LinearBenchmark>(0.0, 0.0, 0.0, 0.0, spectrum);
    Problem problem(spectrum, coeffs, zero_noise(1.5, m), 0.5);

    const double h = 0.01;
    std::vector<double> x0 = {1.0, -2.0, 0.5}, y0 = {0.3, 0.1, -0.7};
    SlowFastState state{SpectralField(x0, spectrum), SpectralField(y0, spectrum), 0.0};
    SeededStream stream(1);
    auto next = step_multiscale(problem, state, h, stream, 0);
    for (int k = 0; k < m; ++k) {
        const double lam = spectrum->eigenvalues[k];
        CHECK(next.x[k] == doctest::Approx(x0[k] * std::exp(-lam * h)).epsilon(1e-12));
        CHECK(next.y[k] ==
              doctest::Approx(y0[k] * std::exp(-lam * h / problem.epsilon)).epsilon(1e-12));
        CHECK(std::abs(next.x[k]) <= std::abs(x0[k])); // monotone damping
        CHECK(std::abs(next.y[k]) <= std::abs(y0[k]));
    }
    CHECK_THROWS(step_multiscale(problem, state, -0.1, stream, 0));
    CHECK_THROWS(step_multiscale(problem, state, 0.0, stream, 0));
}

TEST_CASE("one-step Richardson check against the exact linear flow") {
    // noise off, epsilon = 1: defect against expm halves twice as h halves twice
    const int m = 3;
    Problem problem = linear_problem(m, 1.0, 1.0, 1.0, 0.5, 1.0, /*noise_on=*/false);
    std::vector<double> x0 = {1.0, 0.5, -0.25}, y0 = {-0.5, 1.0, 0.75};

    auto defect = [&](double h) {
        SlowFastState state{SpectralField(x0, problem.spectrum), SpectralField(y0, problem.spectrum),
                            0.0};
        SeededStream stream(2);
        auto next = step_multiscale(problem, state, h, stream, 0);
        double err = 0.0;
        for (int k = 0; k < m; ++k) {
            const double lam = problem.spectrum->eigenvalues[k];
            auto E = expm2({-lam + 0.5, 1.0, 1.0, -lam - 1.0}, h);
            const double ex = E[0] * x0[k] + E[1] * y0[k];
            const double ey = E[2] * x0[k] + E[3] * y0[k];
            err += (next.x[k] - ex) * (next.x[k] - ex) + (next.y[k] - ey) * (next.y[k] - ey);
        }
        return std::sqrt(err);
    };

    const double d1 = defect(0.01), d2 = defect(0.005), d4 = defect(0.0025);
    CHECK(d1 / d2 == doctest::Approx(4.0).epsilon(0.25));
    CHECK(d2 / d4 == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("averaged integrator: pure decay, exact linear flow, determinism") {
    const int m = 3;
    Problem problem = linear_problem(m, 1.0, 1.0, 1.0, 0.5, 1.0, /*noise_on=*/false);
    std::vector<double> x0 = {1.0, -0.5, 0.25};

    DriftFn zero_drift = [](std::span<const double>, std::span<double> out) {
        for (auto& v : out)
            v = 0.0;
    };
    std::vector<double> xT;
    simulate_averaged(problem, zero_drift, x0, 0.5, 0.01, SeededStream(3),
                      [&](int, double, std::span<const double> x, std::span<const double>) {
                          xT.assign(x.begin(), x.end());
                      });
    for (int k = 0; k < m; ++k)
        CHECK(xT[k] ==
              doctest::Approx(x0[k] * std::exp(-problem.spectrum->eigenvalues[k] * 0.5))
                  .epsilon(1e-10));

    // analytic Bbar, Richardson defect against the scalar exact flow
    DriftFn bbar = [&](std::span<const double> x, std::span<double> out) {
        problem.coeffs->analytic_bbar(x, out);
    };
    auto defect = [&](double h) {
        std::vector<double> xh;
        simulate_averaged(problem, bbar, x0, h, h, SeededStream(3),
                          [&](int, double, std::span<const double> x, std::span<const double>) {
                              xh.assign(x.begin(), x.end());
                          });
        double err = 0.0;
        for (int k = 0; k < m; ++k) {
            const double lam = problem.spectrum->eigenvalues[k];
            const double rate = -lam + 0.5 + 1.0 / (lam + 1.0);
            err += std::abs(xh[k] - x0[k] * std::exp(rate * h));
        }
        return err;
    };
    CHECK(defect(0.02) / defect(0.01) == doctest::Approx(4.0).epsilon(0.25));

    // two identical noisy runs are bitwise identical
    Problem noisy = linear_problem(m, 1.0);
    std::vector<double> r1, r2;
    for (auto* out : {&r1, &r2})
        simulate_averaged(noisy, bbar, x0, 0.25, 0.015625, SeededStream(44),
                          [&](int, double, std::span<const double> x, std::span<const double>) {
                              out->assign(x.begin(), x.end());
                          });
    CHECK(r1 == r2);
}

TEST_CASE("coupling: multiscale and averaged share slow increments exactly") {
    // with B = 0 (and so Bbar = 0) the slow paths must coincide bitwise
    const int m = 4;
    Problem problem = linear_problem(m, 0.125, 1.0, 1.0, 0.0, 0.0);
    std::vector<double> x0(m, 0.5), y0(m, -0.25);
    DriftFn zero_drift = [](std::span<const double>, std::span<double> out) {
        for (auto& v : out)
            v = 0.0;
    };
    std::vector<std::vector<double>> ms, av;
    simulate_multiscale(problem, x0, y0, 0.25, 0.015625, SeededStream(9),
                        [&](int, double, std::span<const double> x, std::span<const double>) {
                            ms.emplace_back(x.begin(), x.end());
                        });
    simulate_averaged(problem, zero_drift, x0, 0.25, 0.015625, SeededStream(9),
                      [&](int, double, std::span<const double> x, std::span<const double>) {
                          av.emplace_back(x.begin(), x.end());
                      });
    REQUIRE(ms.size() == av.size());
    CHECK(ms == av);

    // uncoupled role consumes different draws
    std::vector<std::vector<double>> un;
    simulate_averaged(problem, zero_drift, x0, 0.25, 0.015625, SeededStream(9),
                      [&](int, double, std::span<const double> x, std::span<const double>) {
                          un.emplace_back(x.begin(), x.end());
                      },
                      SimOptions{1, StreamRole::SlowNoiseUncoupled});
    CHECK(un != ms);
}

TEST_CASE("noise-substep aggregation preserves the path across macro steps") {
    // h and h/2 with a common base noise grid produce identical paths when
    // the drift is zero (the aggregation is exact through the semigroup)
    const int m = 3;
    Problem problem = linear_problem(m, 1.0, 0.0, 0.0, 0.0, 0.0);
    std::vector<double> x0(m, 1.0);
    DriftFn zero_drift = [](std::span<const double>, std::span<double> out) {
        for (auto& v : out)
            v = 0.0;
    };
    std::vector<double> coarse, fine;
    simulate_averaged(problem, zero_drift, x0, 0.25, 0.0625, SeededStream(5),
                      [&](int, double, std::span<const double> x, std::span<const double>) {
                          coarse.assign(x.begin(), x.end());
                      },
                      SimOptions{4, StreamRole::SlowNoise});
    simulate_averaged(problem, zero_drift, x0, 0.25, 0.03125, SeededStream(5),
                      [&](int, double, std::span<const double> x, std::span<const double>) {
                          fine.assign(x.begin(), x.end());
                      },
                      SimOptions{2, StreamRole::SlowNoise});
    for (int k = 0; k < m; ++k)
        CHECK(coarse[k] == doctest::Approx(fine[k]).epsilon(1e-12));
}

TEST_CASE("self-convergence of the full scheme on a fixed noise path") {
    // h vs h/2 vs h/4: n_sub and the slow noise grid align so both noises are
    // shared; differences contract at first order in h
    const int m = 4;
    Problem problem = linear_problem(m, 1.0);
    problem.c_sub = 0.5;
    const double T = 1.0, h = 0.2;
    // n_sub at h: ceil(0.2 * 8.87 / 0.5) = 4, halving with h down to 1
    std::vector<double> x0 = {1.0, 0.5, -0.5, 0.25}, y0 = {0.5, -0.5, 0.25, 0.1};

    auto run = [&](double step, int n_agg, std::uint64_t seed) {
        std::vector<double> xT;
        simulate_multiscale(problem, x0, y0, T, step, SeededStream(seed),
                            [&](int, double, std::span<const double> x, std::span<const double>) {
                                xT.assign(x.begin(), x.end());
                            },
                            SimOptions{n_agg, StreamRole::SlowNoise});
        return xT;
    };

    double num = 0.0, den = 0.0;
    const int n_samples = 40;
    for (int i = 0; i < n_samples; ++i) {
        auto a = run(h, 4, 100 + i);
        auto b = run(h / 2, 2, 100 + i);
        auto c = run(h / 4, 1, 100 + i);
        for (int k = 0; k < m; ++k) {
            num += std::abs(a[k] - b[k]);
            den += std::abs(b[k] - c[k]);
        }
    }
    CHECK(num / den >= 1.3);
    CHECK(num / den <= 3.5);
}

TEST_CASE("simulate_multiscale basics") {
    const int m = 3;
    Problem problem = linear_problem(m, 0.25);
    std::vector<double> x0 = {1.0, 0.0, 0.0}, y0 = {0.0, 0.0, 0.0};

    int calls = 0;
    simulate_multiscale(problem, x0, y0, 0.0, 0.01, SeededStream(1),
                        [&](int step, double t, std::span<const double> x,
                            std::span<const double>) {
                            ++calls;
                            CHECK(step == 0);
                            CHECK(t == 0.0);
                            CHECK(x[0] == 1.0);
                        });
    CHECK(calls == 1);

    CHECK_THROWS(simulate_multiscale(problem, x0, y0, 1.0, 0.3, SeededStream(1), nullptr));

    auto bad = std::make_shared<NanCoefficients>();
    Problem nan_problem(problem.spectrum, bad, problem.noise, 0.25);
    CHECK_THROWS_AS(simulate_multiscale(nan_problem, x0, y0, 0.1, 0.05, SeededStream(1), nullptr),
                    TrajectoryAbort);
}

TEST_CASE("a-priori bound: sup_t E|X| stable across epsilon") {
    const int m = 4;
    const double h = 0.015625, T = 0.5;
    const int N = 500;
    std::vector<double> x0 = {1.0, 0.25, 0.111, 0.0625}, y0(m, 0.0);
    std::vector<double> sups;
    for (double eps : {1.0, 0.1, 0.01}) {
        Problem problem = linear_problem(m, eps);
        std::vector<double> per_sample(N);
        for (int i = 0; i < N; ++i) {
            double sup = 0.0;
            simulate_multiscale(problem, x0, y0, T, h, SeededStream(500 + i),
                                [&](int, double, std::span<const double> x,
                                    std::span<const double>) {
                                    sup = std::max(sup,
                                                   hs_norm(x, problem.spectrum->eigenvalues, 0.0));
                                });
            per_sample[i] = sup;
        }
        sups.push_back(robust_mean(per_sample, 16).first);
    }
    for (double s : sups) {
        CHECK(std::isfinite(s));
        CHECK(s < 10.0);
    }
    const double lo = *std::min_element(sups.begin(), sups.end());
    const double hi = *std::max_element(sups.begin(), sups.end());
    CHECK(hi / lo < 2.0);
}

TEST_CASE("galerkin consistency: nested resolutions share low-mode noise") {
    const double eps = 0.25, h = 0.03125, T = 0.5;
    const int N = 200;
    std::vector<double> diffs;
    for (int m : {4, 8, 16}) {
        Problem pm = linear_problem(m, eps);
        Problem p2m = linear_problem(2 * m, eps);
        std::vector<double> x0m(m), x02m(2 * m, 0.0), y0m(m, 0.0), y02m(2 * m, 0.0);
        for (int k = 0; k < m; ++k)
            x0m[k] = x02m[k] = 1.0 / ((k + 1.0) * (k + 1.0)); // H^1 initial data
        std::vector<double> per_sample(N);
        for (int i = 0; i < N; ++i) {
            std::vector<double> xa, xb;
            simulate_multiscale(pm, x0m, y0m, T, h, SeededStream(900 + i),
                                [&](int, double, std::span<const double> x,
                                    std::span<const double>) { xa.assign(x.begin(), x.end()); });
            simulate_multiscale(p2m, x02m, y02m, T, h, SeededStream(900 + i),
                                [&](int, double, std::span<const double> x,
                                    std::span<const double>) { xb.assign(x.begin(), x.end()); });
            double d2 = 0.0;
            for (int k = 0; k < 2 * m; ++k) {
                const double ak = k < m ? xa[k] : 0.0;
                d2 += (ak - xb[k]) * (ak - xb[k]);
            }
            per_sample[i] = std::sqrt(d2);
        }
        diffs.push_back(robust_mean(per_sample, 16).first);
    }
    CHECK(diffs[1] < diffs[0]);
    CHECK(diffs[2] < diffs[1]);
}

TEST_CASE("frozen equation: stationary mean and pathwise contraction") {
    const int m = 3;
    Problem problem = linear_problem(m, 1.0);
    std::vector<double> x(m, 1.0), y0(m, 0.0);

    // long-run time average of mode k approaches a x_k / (lambda_k + b)
    const double h_f = 1e-3, T = 40.0;
    std::vector<double> acc(m, 0.0);
    std::uint64_t count = 0;
    simulate_frozen(problem, x, y0, T, h_f, SeededStream(61),
                    [&](int step, double, std::span<const double>, std::span<const double> yv) {
                        if (step * h_f > 2.0) {
                            for (int k = 0; k < m; ++k)
                                acc[k] += yv[k];
                            ++count;
                        }
                    });
    for (int k = 0; k < m; ++k) {
        const double target = 1.0 / (problem.spectrum->eigenvalues[k] + 1.0);
        CHECK(std::abs(acc[k] / count - target) < 0.05);
    }

    // contraction with shared noise: |Y1 - Y2| <= e^{-gap t / 2} |y1 - y2|
    SeededStream shared(62);
    std::vector<double> y1 = {2.0, -1.0, 0.5}, y2 = {-1.0, 0.5, 0.25};
    std::vector<std::vector<double>> p1, p2;
    simulate_frozen(problem, x, y1, 1.0, 0.01, shared,
                    [&](int, double, std::span<const double>, std::span<const double> yv) {
                        p1.emplace_back(yv.begin(), yv.end());
                    });
    simulate_frozen(problem, x, y2, 1.0, 0.01, shared,
                    [&](int, double, std::span<const double>, std::span<const double> yv) {
                        p2.emplace_back(yv.begin(), yv.end());
                    });
    const double gap = problem.gap();
    double d0 = 0.0;
    for (int k = 0; k < m; ++k)
        d0 += (y1[k] - y2[k]) * (y1[k] - y2[k]);
    d0 = std::sqrt(d0);
    for (size_t i = 0; i < p1.size(); ++i) {
        double d = 0.0;
        for (int k = 0; k < m; ++k)
            d += (p1[i][k] - p2[i][k]) * (p1[i][k] - p2[i][k]);
        CHECK(std::sqrt(d) <= std::exp(-gap * (i * 0.01) / 2.0) * d0 + 1e-9);
    }
}
