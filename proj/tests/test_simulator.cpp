#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qrefine/simulator.hpp"

#include "helpers.hpp"

#include <cmath>

using namespace qrefine;

namespace {

SimParams calibrated() {
    SimParams params;
    params.n_questions = 10'000;
    params.n_iterations = 7;
    params.p0 = {1, 1, 1, 1};
    params.recall = {1, 1, 1, 1};
    params.fix = {0.5, 0.5, 0.5, 0.5};
    params.regression = {0, 0, 0, 0};
    params.seed = 20250808;
    return params;
}

} // namespace

TEST_CASE("perfect detection and fixes clear everything after one iteration") {
    SimParams params = calibrated();
    params.n_questions = 2000;
    params.fix = {1, 1, 1, 1};
    SimCurve curve = run_convergence(params);
    CHECK(curve.mean_score[0] == 1.0); // p0 = 1 everywhere
    for (int t = 1; t <= params.n_iterations; ++t) CHECK(curve.mean_score[t] == 0.0);
    CHECK(curve.pct_reduction[1] == 1.0);
}

TEST_CASE("zero iterations produce a curve of length one") {
    SimParams params = calibrated();
    params.n_iterations = 0;
    params.n_questions = 500;
    SimCurve curve = run_convergence(params);
    CHECK(curve.mean_score.size() == 1);
    CHECK(curve.pct_reduction == std::vector<double>{0.0});
}

TEST_CASE("same seed gives byte-identical curves, different seeds differ") {
    SimParams params = calibrated();
    params.n_questions = 3000;
    std::string csv1 = run_convergence(params).to_csv();
    std::string csv2 = run_convergence(params).to_csv();
    CHECK(csv1 == csv2);
    params.seed += 1;
    CHECK(run_convergence(params).to_csv() != csv1);
}

TEST_CASE("invalid params are rejected") {
    SimParams params = calibrated();
    params.p0[2] = 1.5;
    CHECK_FALSE(params.validate().empty());
    CHECK_THROWS_AS(run_convergence(params), std::invalid_argument);
    params = calibrated();
    params.n_questions = 0;
    CHECK_THROWS_AS(run_convergence(params), std::invalid_argument);
    params = calibrated();
    params.weights = Weights{0.9, 0.9, 0.1, 0.1};
    CHECK_THROWS_AS(analytic_expectation(params), std::invalid_argument);
}

TEST_CASE("analytic expectation: geometric decay when g = 0") {
    // e_t = p0 (1 - r f)^t
    CHECK(analytic_type_rate(1.0, 1.0, 0.5, 0.0, 0) == 1.0);
    CHECK(analytic_type_rate(1.0, 1.0, 0.5, 0.0, 1) == 0.5);
    CHECK(analytic_type_rate(1.0, 1.0, 0.5, 0.0, 7) == 0.0078125); // exact in binary
    CHECK(analytic_type_rate(0.8, 0.5, 0.5, 0.0, 2) ==
          doctest::Approx(0.8 * 0.75 * 0.75).epsilon(1e-12));
}

TEST_CASE("analytic expectation: fixed point with regression") {
    // e* = g / (r f + g); iterating the recurrence lands there
    double rf = 0.6 * 0.7;
    double g = 0.05;
    double fixed_point = g / (rf + g);
    CHECK(analytic_type_rate(0.3, 0.6, 0.7, g, 500) == doctest::Approx(fixed_point).epsilon(1e-9));
    // closed form equals the recurrence step by step
    double e = 0.3;
    for (int t = 0; t <= 10; ++t) {
        CHECK(analytic_type_rate(0.3, 0.6, 0.7, g, t) == doctest::Approx(e).epsilon(1e-12));
        e = e * (1 - rf) + (1 - e) * g;
    }
}

TEST_CASE("Monte Carlo stays within 4 standard errors of the analytic curve") {
    for (std::uint64_t seed : {11ULL, 22ULL}) {
        SimParams params = calibrated();
        params.seed = seed;
        params.p0 = {0.9, 1.0, 0.7, 0.8};
        params.recall = {0.9, 1.0, 0.8, 0.6};
        params.fix = {0.5, 0.4, 0.9, 0.7};
        params.regression = {0.0, 0.05, 0.02, 0.0};
        SimCurve mc = run_convergence(params);
        AnalyticCurve expected = analytic_expectation(params);
        double n = params.n_questions;
        for (int t = 0; t <= params.n_iterations; ++t) {
            for (int i = 0; i < 4; ++i) {
                double e = expected.type_rate[i][t];
                double se = std::sqrt(e * (1 - e) / n);
                CAPTURE(seed);
                CAPTURE(t);
                CAPTURE(i);
                CHECK(std::abs(mc.type_rate[i][t] - e) <= 4 * se + 1e-15);
            }
            double var = 0;
            for (int i = 0; i < 4; ++i) {
                double e = expected.type_rate[i][t];
                double w = params.weights.at(i);
                var += w * w * e * (1 - e) / n;
            }
            CHECK(std::abs(mc.mean_score[t] - expected.mean_score[t]) <=
                  4 * std::sqrt(var) + 1e-15);
        }
    }
}

TEST_CASE("g = 0 makes the empirical curve nonincreasing and the analytic one strictly so") {
    SimParams params = calibrated();
    params.n_questions = 5000;
    params.recall = {0.9, 0.8, 0.7, 0.95};
    params.fix = {0.6, 0.5, 0.9, 0.4};
    SimCurve curve = run_convergence(params);
    for (std::size_t t = 1; t < curve.mean_score.size(); ++t)
        CHECK(curve.mean_score[t] <= curve.mean_score[t - 1]); // defects only vanish
    AnalyticCurve expected = analytic_expectation(params);
    for (std::size_t t = 1; t < expected.mean_score.size(); ++t)
        CHECK(expected.mean_score[t] < expected.mean_score[t - 1]);
}

TEST_CASE("calibrated half-decay scenario matches the headline reductions") {
    SimCurve curve = run_convergence(calibrated());
    CHECK(curve.pct_reduction[1] == doctest::Approx(0.5).epsilon(0.04));
    CHECK(curve.pct_reduction[7] >= 0.99);
}

TEST_CASE("CSV carries the documented columns") {
    SimParams params = calibrated();
    params.n_questions = 100;
    params.n_iterations = 1;
    std::string csv = run_convergence(params).to_csv();
    CHECK(csv.rfind("iteration,mean_score,rate_h1,rate_h2,rate_h3,rate_h4,pct_reduction\n", 0) ==
          0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3); // header + 2 rows
}

TEST_CASE("params round-trip through JSON") {
    SimParams params = calibrated();
    params.regression = {0.1, 0, 0.2, 0};
    SimParams back = sim_params_from_json(sim_params_to_json(params));
    CHECK(back.n_questions == params.n_questions);
    CHECK(back.p0 == params.p0);
    CHECK(back.regression == params.regression);
    CHECK(back.seed == params.seed);
    CHECK(run_convergence(back).to_csv() == run_convergence(params).to_csv());
}
