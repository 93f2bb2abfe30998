#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sfalpha/averaging.hpp"
#include "sfalpha/stats.hpp"

#include <cmath>
#include <numbers>
#include <vector>

using namespace sfalpha;

namespace {

constexpr double kPi = std::numbers::pi;

Problem linear_problem(int m, double a = 1.0, double b = 1.0, double b0 = 0.5, double b1 = 1.0) {
    auto spectrum = SpectrumSpec::dirichlet_laplacian_1d(m);
    auto coeffs = std::make_shared<LinearBenchmark>(a, b, b0, b1, spectrum);
    auto noise = StableNoiseSpec::power_law(1.75, m, 1.0, 2.0, 1.0, 1.0);
    return Problem(spectrum, coeffs, noise, 0.01);
}

Problem nemytskii_problem(int m) {
    auto spectrum = SpectrumSpec::dirichlet_laplacian_1d(m);
    auto coeffs = std::make_shared<NemytskiiCoefficients>(
        [](double u, double v) { return std::tanh(u + v); },
        [](double u, double v) { return std::sin(u) - 0.5 * std::tanh(v); }, 1.0, 0.5, spectrum);
    auto noise = StableNoiseSpec::power_law(1.75, m, 1.0, 2.0, 1.0, 1.0);
    return Problem(spectrum, coeffs, noise, 0.01);
}

} // namespace

TEST_CASE("estimate_bbar on the linear benchmark matches the closed form") {
    const int m = 8;
    Problem problem = linear_problem(m);
    std::vector<double> x(m, 0.0);
    x[0] = 1.0;

    BbarParams params; // default windows, ensemble 32
    auto est = estimate_bbar(x, problem, params, SeededStream(7));
    REQUIRE(static_cast<int>(est.value.size()) == m);
    CHECK(est.converged);

    // mode 1: b0 + b1 a / (lambda_1 + b); other modes vanish at x = e_1
    const double target = 0.5 + 1.0 / (kPi * kPi + 1.0);
    CHECK(std::abs(est.value[0] - target) <= 3.0 * est.stderr_[0]);
    CHECK(est.stderr_[0] <= 1e-2);
    for (int k = 1; k < m; ++k)
        CHECK(std::abs(est.value[k]) <= 4.0 * est.stderr_[k]);

    CHECK_THROWS(estimate_bbar(std::vector<double>(m + 1, 0.0), problem, params, SeededStream(7)));
    BbarParams tiny;
    tiny.window = 0.01; // too few steps for the block count
    CHECK_THROWS(estimate_bbar(x, problem, tiny, SeededStream(7)));
}

TEST_CASE("estimate_bbar respects odd symmetry and is seed-stable") {
    const int m = 4;
    Problem problem = nemytskii_problem(m);
    const std::vector<double> zero(m, 0.0);

    BbarParams params;
    params.ensemble = 8; // symmetry test needs less precision
    // at x = 0 the frozen dynamics is odd-symmetric and tanh is odd, so
    // Bbar(0) = 0 mode by mode
    auto at_zero = estimate_bbar(zero, problem, params, SeededStream(11));
    for (int k = 0; k < m; ++k)
        CHECK(std::abs(at_zero.value[k]) <= 4.0 * at_zero.stderr_[k]);

    // two independent estimates at a generic x agree within joint error bars
    std::vector<double> x = {0.7, -0.3, 0.2, 0.1};
    auto e1 = estimate_bbar(x, problem, params, SeededStream(21));
    auto e2 = estimate_bbar(x, problem, params, SeededStream(22));
    for (int k = 0; k < m; ++k) {
        const double joint = std::sqrt(e1.stderr_[k] * e1.stderr_[k] +
                                       e2.stderr_[k] * e2.stderr_[k]);
        CHECK(std::abs(e1.value[k] - e2.value[k]) <= 4.0 * joint);
    }
}

TEST_CASE("BbarOracle: analytic passthrough, ergodic caching, determinism") {
    const int m = 4;
    Problem linear = linear_problem(m);
    Problem nemytskii = nemytskii_problem(m);

    CHECK_THROWS(BbarOracle::analytic(nemytskii));

    auto analytic = BbarOracle::analytic(linear);
    CHECK(analytic.kind() == BbarOracle::Kind::Analytic);
    std::vector<double> x = {1.0, 0.5, -0.25, 0.0}, got(m), want(m);
    analytic.evaluate(x, got);
    linear.coeffs->analytic_bbar(x, want);
    CHECK(got == want);

    BbarParams params;
    params.ensemble = 4;
    params.window = 2.0;
    auto ergodic = BbarOracle::ergodic(linear, params, SeededStream(31));
    CHECK(ergodic.cache_size() == 0);
    std::vector<double> r1(m), r2(m), r3(m);
    ergodic.evaluate(x, r1);
    CHECK(ergodic.cache_size() == 1);
    ergodic.evaluate(x, r2);
    CHECK(ergodic.cache_size() == 1); // exact repeat hits the cache
    CHECK(r1 == r2);

    // a perturbation below the 1e-6 quantum reuses the entry
    std::vector<double> x_near = x;
    x_near[0] += 2e-8;
    ergodic.evaluate(x_near, r3);
    CHECK(ergodic.cache_size() == 1);
    CHECK(r1 == r3);

    // a distinct state gets its own entry, and the estimate is reasonable
    std::vector<double> x2 = {2.0, 0.0, 0.0, 0.0}, r4(m), want2(m);
    ergodic.drift()(x2, r4);
    CHECK(ergodic.cache_size() == 2);
    linear.coeffs->analytic_bbar(x2, want2);
    CHECK(std::abs(r4[0] - want2[0]) < 0.2);

    // same seed, fresh oracle: identical cache fills
    auto ergodic_b = BbarOracle::ergodic(linear, params, SeededStream(31));
    std::vector<double> r5(m);
    ergodic_b.evaluate(x, r5);
    CHECK(r5 == r1);
}

TEST_CASE("estimate_phi reproduces the linear fluctuation integral") {
    const int m = 8;
    Problem problem = linear_problem(m);
    std::vector<double> x(m, 0.0), y(m, 0.0), bbar(m);
    y[0] = 1.0;
    problem.coeffs->analytic_bbar(x, bbar);

    // integrand: E B(x, Y_t)_1 - Bbar(x)_1 = b1 e^{-(lambda_1+b)t} y_1, so the
    // integral is b1 y_1 / (lambda_1 + b)
    const double T_max = 2.0, h_f = 1e-3;
    const int N = 4000;
    auto phi = estimate_phi(x, y, problem, bbar, T_max, N, h_f, SeededStream(41));
    const double target = 1.0 / (kPi * kPi + 1.0);
    CHECK(std::abs(phi.value[0] - target) <= 3.0 * phi.stderr_[0]);
    CHECK_FALSE(phi.underpowered);

    // truncation bound formula, pinned directly
    const double gap2 = problem.gap() / 2.0;
    CHECK(phi.truncation_bound ==
          doctest::Approx(std::exp(-gap2 * T_max) * (1.0 + 1.0) / gap2).epsilon(1e-12));

    CHECK_THROWS(estimate_phi(x, y, problem, std::vector<double>(m + 1, 0.0), T_max, N, h_f,
                              SeededStream(41)));
    CHECK_THROWS(estimate_phi(x, y, problem, bbar, T_max, 0, h_f, SeededStream(41)));
}

TEST_CASE("estimate_phi centering: zero initial displacement gives zero") {
    const int m = 4;
    Problem problem = linear_problem(m);
    std::vector<double> x(m, 0.0), bbar(m, 0.0);
    // y0 = 0 is the stationary mean at x = 0, so the integrand is centered for
    // all t and Phi(0,0) = 0
    auto phi = estimate_phi(x, x, problem, bbar, 1.0, 2000, 1e-3, SeededStream(51));
    for (int k = 0; k < m; ++k)
        CHECK(std::abs(phi.value[k]) <= 4.0 * phi.stderr_[k]);
}

TEST_CASE("measure_ergodic_decay recovers the linear relaxation rate") {
    const int m = 8;
    Problem problem = linear_problem(m);
    std::vector<double> x(m, 0.0), y(m, 0.0);
    y[0] = 5.0;
    std::vector<double> grid;
    for (double t = 0.0; t <= 0.6 + 1e-12; t += 0.05)
        grid.push_back(t);

    LipschitzFunctional G{[](std::span<const double> v) { return v[0]; }, 1.0};
    auto rep = measure_ergodic_decay(G, x, y, grid, 4000, problem, 1e-3, SeededStream(61));

    // E Y_t = e^{-(lambda_1+b)t} y_1 and mu(G) = 0: gap at t = 0 is |y_1|
    CHECK(rep.gaps[0] == doctest::Approx(5.0).epsilon(0.02));
    CHECK_FALSE(rep.unresolvable);
    CHECK(rep.points_used >= 4);
    const double true_rate = kPi * kPi + 1.0;
    CHECK(rep.bound_rate == doctest::Approx(problem.gap() / 2.0));
    CHECK(rep.fitted_rate > rep.bound_rate);
    CHECK(std::abs(rep.fitted_rate - true_rate) < 1.5);
    CHECK(rep.r_squared >= 0.95);

    CHECK_THROWS(measure_ergodic_decay(G, x, y, std::vector<double>{}, 100, problem, 1e-3,
                                       SeededStream(61)));
    CHECK_THROWS(measure_ergodic_decay(G, x, y, grid, 1, problem, 1e-3, SeededStream(61)));
}

TEST_CASE("analytic averaged drift is Lipschitz with the expected constant") {
    const int m = 6;
    Problem problem = linear_problem(m);
    // |Bbar(x1) - Bbar(x2)| <= (b0 + b1 a / (lambda_1 + b)) |x1 - x2|
    const double lip = 0.5 + 1.0 / (kPi * kPi + 1.0);
    SeededStream stream(71);
    std::vector<double> x1(m), x2(m), o1(m), o2(m);
    for (int rep = 0; rep < 100; ++rep) {
        for (int k = 0; k < m; ++k) {
            x1[k] = 4.0 * stream.next_uniform() - 2.0;
            x2[k] = 4.0 * stream.next_uniform() - 2.0;
        }
        problem.coeffs->analytic_bbar(x1, o1);
        problem.coeffs->analytic_bbar(x2, o2);
        double num = 0.0, den = 0.0;
        for (int k = 0; k < m; ++k) {
            num += (o1[k] - o2[k]) * (o1[k] - o2[k]);
            den += (x1[k] - x2[k]) * (x1[k] - x2[k]);
        }
        CHECK(std::sqrt(num) <= 1.0000001 * lip * std::sqrt(den));
    }
}
