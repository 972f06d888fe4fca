#include "qrefine/simulator.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace qrefine {

std::vector<std::string> SimParams::validate() const {
    std::vector<std::string> problems;
    if (n_questions <= 0) problems.push_back("n_questions must be positive");
    if (n_iterations < 0) problems.push_back("n_iterations must be nonnegative");
    auto check_probability = [&problems](const char* name, const std::array<double, 4>& a) {
        for (double v : a)
            if (!(v >= 0.0 && v <= 1.0)) {
                problems.push_back(std::string(name) + " entries must lie in [0,1]");
                return;
            }
    };
    check_probability("p0", p0);
    check_probability("recall", recall);
    check_probability("fix", fix);
    check_probability("regression", regression);
    if (!weights_valid(weights)) problems.push_back("weights violate the simplex invariant");
    return problems;
}

namespace {

std::array<double, 4> array_from_json(const nlohmann::json& j, const char* key,
                                      std::array<double, 4> fallback) {
    if (!j.contains(key)) return fallback;
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != 4)
        throw std::runtime_error(std::string("sim params: '") + key +
                                 "' must be an array of 4 numbers");
    std::array<double, 4> out{};
    for (int i = 0; i < 4; ++i) out[i] = a[i].get<double>();
    return out;
}

} // namespace

SimParams sim_params_from_json(const nlohmann::json& j) {
    SimParams params;
    params.n_questions = j.value("n_questions", params.n_questions);
    params.n_iterations = j.value("n_iterations", params.n_iterations);
    params.p0 = array_from_json(j, "p0", params.p0);
    params.recall = array_from_json(j, "recall", params.recall);
    params.fix = array_from_json(j, "fix", params.fix);
    params.regression = array_from_json(j, "regression", params.regression);
    if (j.contains("weights")) params.weights = weights_from_json(j.at("weights"));
    params.seed = j.value("seed", params.seed);
    return params;
}

nlohmann::json sim_params_to_json(const SimParams& params) {
    return nlohmann::json{
        {"n_questions", params.n_questions},
        {"n_iterations", params.n_iterations},
        {"p0", params.p0},
        {"recall", params.recall},
        {"fix", params.fix},
        {"regression", params.regression},
        {"weights", weights_to_json(params.weights)},
        {"seed", params.seed},
    };
}

SimParams load_sim_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open sim params file: " + path);
    return sim_params_from_json(nlohmann::json::parse(in));
}

SimCurve run_convergence(const SimParams& params) {
    auto problems = params.validate();
    if (!problems.empty())
        throw std::invalid_argument("invalid sim params: " + problems.front());

    int steps = params.n_iterations + 1;
    std::vector<double> score_sum(steps, 0.0);
    std::array<std::vector<double>, 4> rate_sum;
    for (auto& r : rate_sum) r.assign(steps, 0.0);

    // substream seeds come from a master stream, one per question
    SplitMix64 master(params.seed);
    std::vector<std::uint64_t> stream_seeds(params.n_questions);
    for (auto& s : stream_seeds) s = master.next();

    for (int q = 0; q < params.n_questions; ++q) {
        SplitMix64 rng(stream_seeds[q]);
        std::array<bool, 4> present{};
        for (int i = 0; i < 4; ++i) present[i] = rng.bernoulli(params.p0[i]);

        auto accumulate = [&](int t) {
            double score = 0.0;
            for (int i = 0; i < 4; ++i) {
                if (present[i]) {
                    rate_sum[i][t] += 1.0;
                    score += params.weights.at(i);
                }
            }
            score_sum[t] += score;
        };
        accumulate(0);

        for (int t = 1; t < steps; ++t) {
            for (int i = 0; i < 4; ++i) {
                if (present[i]) {
                    if (rng.bernoulli(params.recall[i]) && rng.bernoulli(params.fix[i]))
                        present[i] = false;
                } else {
                    present[i] = rng.bernoulli(params.regression[i]);
                }
            }
            accumulate(t);
        }
    }

    SimCurve curve;
    double n = static_cast<double>(params.n_questions);
    curve.mean_score.resize(steps);
    curve.pct_reduction.resize(steps);
    for (int i = 0; i < 4; ++i) curve.type_rate[i].resize(steps);
    for (int t = 0; t < steps; ++t) {
        curve.mean_score[t] = score_sum[t] / n;
        for (int i = 0; i < 4; ++i) curve.type_rate[i][t] = rate_sum[i][t] / n;
        curve.pct_reduction[t] =
            curve.mean_score[0] > 0 ? 1.0 - curve.mean_score[t] / curve.mean_score[0] : 0.0;
    }
    return curve;
}

std::string SimCurve::to_csv() const {
    std::string out = "iteration,mean_score,rate_h1,rate_h2,rate_h3,rate_h4,pct_reduction\n";
    char line[256];
    for (std::size_t t = 0; t < mean_score.size(); ++t) {
        std::snprintf(line, sizeof(line), "%zu,%.9f,%.9f,%.9f,%.9f,%.9f,%.9f\n", t, mean_score[t],
                      type_rate[0][t], type_rate[1][t], type_rate[2][t], type_rate[3][t],
                      pct_reduction[t]);
        out += line;
    }
    return out;
}

double analytic_type_rate(double p0, double recall, double fix, double regression, int t) {
    double rf = recall * fix;
    if (rf + regression <= 0.0) return p0; // nothing ever changes
    double fixed_point = regression / (rf + regression);
    return fixed_point + (p0 - fixed_point) * std::pow(1.0 - rf - regression, t);
}

AnalyticCurve analytic_expectation(const SimParams& params) {
    auto problems = params.validate();
    if (!problems.empty())
        throw std::invalid_argument("invalid sim params: " + problems.front());
    int steps = params.n_iterations + 1;
    AnalyticCurve curve;
    curve.mean_score.assign(steps, 0.0);
    for (int i = 0; i < 4; ++i) {
        curve.type_rate[i].resize(steps);
        for (int t = 0; t < steps; ++t) {
            double rate = analytic_type_rate(params.p0[i], params.recall[i], params.fix[i],
                                             params.regression[i], t);
            curve.type_rate[i][t] = rate;
            curve.mean_score[t] += params.weights.at(i) * rate;
        }
    }
    return curve;
}

} // namespace qrefine
