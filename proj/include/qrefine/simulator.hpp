#pragma once

#include "qrefine/mcq.hpp"
#include "qrefine/rng.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace qrefine {

/**
 * Stochastic model of the refinement loop. Each question starts with
 * per-type defects sampled from p0. Per iteration and per type, a present
 * defect is detected with probability recall[i] and, if detected, removed
 * with probability fix[i]; an absent defect reappears with probability
 * regression[i]. One SplitMix64 substream per question (see rng.hpp)
 * makes runs reproducible and scheduling-independent.
 */
struct SimParams {
    int n_questions = 1000;
    int n_iterations = 7;
    std::array<double, 4> p0{1, 1, 1, 1};
    std::array<double, 4> recall{1, 1, 1, 1};
    std::array<double, 4> fix{0.5, 0.5, 0.5, 0.5};
    std::array<double, 4> regression{0, 0, 0, 0};
    Weights weights{};
    std::uint64_t seed = 42;

    std::vector<std::string> validate() const; // empty when usable
};

SimParams sim_params_from_json(const nlohmann::json& j);
nlohmann::json sim_params_to_json(const SimParams& params);
SimParams load_sim_params(const std::string& path);

struct SimCurve {
    std::vector<double> mean_score;                // index = iteration, length n_iterations + 1
    std::array<std::vector<double>, 4> type_rate;  // per-type defect rates
    std::vector<double> pct_reduction;             // 1 - mean_t / mean_0; 0 when mean_0 == 0

    // CSV: iteration,mean_score,rate_h1,rate_h2,rate_h3,rate_h4,pct_reduction
    std::string to_csv() const;
};

SimCurve run_convergence(const SimParams& params);

// Closed-form expectation of the same process. Per type the defect rate
// follows e_{t+1} = e_t (1 - r f) + (1 - e_t) g, i.e.
// e_t = e* + (p0 - e*) (1 - r f - g)^t with fixed point e* = g / (r f + g).
struct AnalyticCurve {
    std::vector<double> mean_score;
    std::array<std::vector<double>, 4> type_rate;
};

double analytic_type_rate(double p0, double recall, double fix, double regression, int t);
AnalyticCurve analytic_expectation(const SimParams& params);

} // namespace qrefine
