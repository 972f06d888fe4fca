#include "qrefine/scoring.hpp"

#include <cmath>

namespace qrefine {

Score composite_score(const HallucinationVector& vector, const Weights& weights) {
    if (!weights_valid(weights))
        throw InvalidWeights("composite_score: weights must be nonnegative and sum to 1");
    Score score;
    for (int i = 0; i < HallucinationVector::kComponents; ++i) {
        auto c = vector.get(i);
        if (c)
            score.value += weights.at(i) * static_cast<double>(*c);
        else
            score.partial = true;
    }
    return score;
}

std::string to_string(TerminationKind kind) {
    switch (kind) {
    case TerminationKind::Converged: return "Converged";
    case TerminationKind::Stalled: return "Stalled";
    case TerminationKind::Budget: return "Budget";
    case TerminationKind::Continue: return "Continue";
    }
    return "Unknown";
}

TerminationDecision should_terminate(std::span<const double> score_history,
                                     const TerminationConfig& config) {
    if (score_history.empty())
        throw EmptyHistory("should_terminate: score history must be nonempty");
    double last = score_history.back();
    if (last < config.epsilon1)
        return {TerminationKind::Converged, "score_below_epsilon1"};
    if (score_history.size() >= 2) {
        double prev = score_history[score_history.size() - 2];
        if (std::abs(last - prev) < config.epsilon2)
            return {TerminationKind::Stalled, "delta_below_epsilon2"};
    }
    if (score_history.size() >= static_cast<std::size_t>(config.t_max) + 1)
        return {TerminationKind::Budget, "iteration_budget_exhausted"};
    return {TerminationKind::Continue, "none"};
}

} // namespace qrefine
