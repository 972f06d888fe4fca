#pragma once

#include "qrefine/agents.hpp"
#include "qrefine/mcq.hpp"

#include <optional>
#include <string>
#include <vector>

namespace qrefine {

/**
 * Declarative offline stand-in for the generator: the whole refinement
 * loop can be exercised without a model. A scenario names the initial MCQ
 * and, for "sequence" mode, the exact revision the generator returns on
 * each call. Modes:
 *   sequence  - k-th revise() call returns revisions[k-1]; past the end
 *               the MCQ is returned unchanged
 *   no_change - revise() always returns the prior MCQ untouched
 *   fail      - calls from fail_at_call (0-based, counting generate() as
 *               call 0) throw GenerationFailed
 */
struct ScriptedScenario {
    std::string name;
    Mcq initial;
    std::vector<Mcq> revisions;
    std::string mode = "sequence"; // sequence | no_change | fail
    int fail_at_call = 0;
    std::int64_t tokens_in_per_call = 0;  // synthetic usage attached to each call
    std::int64_t tokens_out_per_call = 0;
    std::optional<bool> full_pass; // overrides the orchestrator flag when set
};

ScriptedScenario load_scenario(const std::string& path);
ScriptedScenario scenario_from_json(const nlohmann::json& j);

class ScriptedGenerator : public GeneratorAgent {
public:
    explicit ScriptedGenerator(ScriptedScenario scenario) : scenario_(std::move(scenario)) {}

    GenerationResult generate(const GenerationSpec& spec) override;
    GenerationResult revise(const Mcq& prior, const std::string& feedback) override;

    const ScriptedScenario& scenario() const { return scenario_; }

private:
    GenerationResult make_result(Mcq mcq);

    ScriptedScenario scenario_;
    int calls_ = 0;
    std::size_t next_revision_ = 0;
};

} // namespace qrefine
