#pragma once

#include "qrefine/mcq.hpp"

#include <span>
#include <stdexcept>
#include <string>

namespace qrefine {

struct InvalidWeights : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct EmptyHistory : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Weighted composite of the four indicators. Unchecked components
// contribute 0 and make the score partial.
struct Score {
    double value = 0.0;
    bool partial = false;
};

Score composite_score(const HallucinationVector& vector, const Weights& weights);

/**
 * When to stop the refinement loop. Absolute threshold epsilon1, per-step
 * improvement threshold epsilon2, and a hard iteration budget t_max.
 */
struct TerminationConfig {
    double epsilon1 = 0.05;
    double epsilon2 = 0.01;
    int t_max = 7;

    bool valid() const {
        return epsilon1 > 0 && epsilon1 < 1 && epsilon2 > 0 && epsilon2 < 1 && t_max >= 1;
    }
};

enum class TerminationKind { Converged, Stalled, Budget, Continue };

std::string to_string(TerminationKind kind);

struct TerminationDecision {
    TerminationKind kind = TerminationKind::Continue;
    std::string rule; // identifier of the rule that fired
};

/**
 * Decides termination from the score history, checked in priority order:
 * Converged (last score < epsilon1), then Stalled (two or more scores and
 * |last - previous| < epsilon2), then Budget (history holds t_max + 1
 * scores), else Continue. A history satisfying both the convergence and
 * stall rules is always reported Converged.
 */
TerminationDecision should_terminate(std::span<const double> score_history,
                                     const TerminationConfig& config);

} // namespace qrefine
