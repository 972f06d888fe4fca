#pragma once

#include "qrefine/detectors.hpp"
#include "qrefine/llm.hpp"
#include "qrefine/mcq.hpp"
#include "qrefine/prompts.hpp"
#include "qrefine/usage.hpp"

#include <optional>
#include <string>
#include <vector>

namespace qrefine {

// What to generate. prior + feedback are set on revision turns.
struct GenerationSpec {
    std::string subject;
    std::string topic;
    std::string difficulty = "medium";
    std::string style;
    std::optional<Mcq> prior;
    std::string feedback;
};

class GenerationFailed : public std::runtime_error {
public:
    GenerationFailed(const std::string& what, std::string raw_text, int repair_rounds)
        : std::runtime_error(what), raw_text(std::move(raw_text)), repair_rounds(repair_rounds) {}

    std::string raw_text; // the model's last reply, kept for the trace
    int repair_rounds;
};

struct GenerationResult {
    Mcq mcq;
    std::vector<TokenUsage> usage;
    int repair_rounds = 0;
};

// The orchestrator's view of a generator: produce an initial MCQ from a
// spec, or revise a prior MCQ given detector feedback.
class GeneratorAgent {
public:
    virtual ~GeneratorAgent() = default;
    virtual GenerationResult generate(const GenerationSpec& spec) = 0;
    virtual GenerationResult revise(const Mcq& prior, const std::string& feedback) = 0;
};

// Last balanced {...} block in a reply that parses as JSON; chain-of-
// thought preamble before it is ignored.
std::optional<nlohmann::json> extract_last_json_object(const std::string& text);

/**
 * Chat-model generator. Prompts demand step-by-step reasoning followed by
 * a JSON object; malformed replies get one repair round (re-prompt with
 * the validation errors) before GenerationFailed.
 */
class LlmGenerator : public GeneratorAgent {
public:
    LlmGenerator(Gateway& gateway, PromptLibrary prompts, std::string model,
                 double temperature = 0.8, int max_output_tokens = 2048);

    GenerationResult generate(const GenerationSpec& spec) override;
    GenerationResult revise(const Mcq& prior, const std::string& feedback) override;

    // The exact request a spec produces; exposed so fixtures can be built.
    ChatRequest build_request(const GenerationSpec& spec) const;

private:
    GenerationResult run(const GenerationSpec& spec);

    Gateway& gateway_;
    PromptLibrary prompts_;
    std::string model_;
    double temperature_;
    int max_output_tokens_;
};

/**
 * Chat-model detector for one hallucination kind; used to escalate
 * rule-based Indeterminate verdicts. Malformed verdicts get one repair
 * round, then degrade to Indeterminate with confidence 0.
 */
class LlmDetector : public DetectorEscalator {
public:
    LlmDetector(Gateway& gateway, PromptLibrary prompts, std::string model,
                double temperature = 0.0, int max_output_tokens = 1024);

    DetectorReport detect(DetectorKind kind, const Mcq& mcq) override;

    ChatRequest build_request(DetectorKind kind, const Mcq& mcq) const;

private:
    Gateway& gateway_;
    PromptLibrary prompts_;
    std::string model_;
    double temperature_;
    int max_output_tokens_;
};

// One-shot form of the detector call.
DetectorReport llm_detect(DetectorKind kind, const Mcq& mcq, Gateway& gateway,
                          const PromptLibrary& prompts, const std::string& model,
                          double temperature = 0.0);

} // namespace qrefine
