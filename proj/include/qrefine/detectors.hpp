#pragma once

#include "qrefine/detector_kind.hpp"
#include "qrefine/kb.hpp"
#include "qrefine/mcq.hpp"
#include "qrefine/rational.hpp"
#include "qrefine/usage.hpp"

#include <optional>
#include <string>
#include <vector>

namespace qrefine {

// Three-valued verdict. Indeterminate means the rule-based check could
// not decide; it never contributes to the composite score and is the
// trigger for escalating to an LLM detector of the same kind.
enum class Indicator { Clear, Defect, Indeterminate };

std::string to_string(Indicator indicator);

struct Finding {
    std::string kind;   // e.g. "failed_step", "unsupported_claim"
    std::string detail;
};

// Which choices are consistent with the solved value, and how that was
// established.
struct SolvabilityReport {
    std::vector<std::string> a_valid; // subset of {A,B,C,D}
    enum class Method { ChoiceEvaluation, Delegated } method = Method::ChoiceEvaluation;
};

struct MathStep {
    std::string expression;
    Rational stated;
    std::optional<Rational> computed; // empty when evaluation itself failed
    bool ok = false;                  // computed present and exactly equal to stated
};

struct MathCheckReport {
    std::vector<MathStep> steps;
    bool final_ok = true;                 // last stated value matches the answer choice
    std::vector<std::string> unverified;  // '=' candidates that did not parse
};

struct FactualReport {
    std::vector<std::string> claims;  // extracted claim list, normalized
    std::vector<std::string> missing; // subset with no KB support
};

/**
 * One detector's verdict. Evidence is nonempty and feedback holds a
 * concrete revision instruction whenever indicator is Defect. Confidence
 * is 1 for decisive rule-based verdicts, 0 for Indeterminate.
 */
struct DetectorReport {
    DetectorKind kind = DetectorKind::Consistency;
    Indicator indicator = Indicator::Indeterminate;
    std::vector<Finding> evidence;
    std::string feedback;
    std::optional<DetectorKind> suggested_next;
    double confidence = 0.0;
    std::vector<TokenUsage> usage; // empty for rule-based checks

    std::optional<SolvabilityReport> solvability;
    std::optional<MathCheckReport> math;
    std::optional<FactualReport> factual;
};

nlohmann::json report_to_json(const DetectorReport& report);
DetectorReport report_from_json(const nlohmann::json& j);

struct DetectorConfig {
    double jaccard_threshold = 0.8;
    int max_exponent = 64;
};

// --- text analysis helpers (deterministic, shared by the checks) ---

// Evaluates a choice text as an exact arithmetic expression ("42",
// "1/2", "3 x 10^2"); nullopt when it does not parse.
std::optional<Rational> choice_value(const std::string& text, int max_exponent = 64);

// Last answer-label declaration in the text ("the answer is B",
// "Answer: C", "therefore D").
std::optional<std::string> extract_declared_label(const std::string& text);

// Scans for `<expression> = <value>` steps. Value sides must be bare
// rational literals; expression sides are recovered from the characters
// to the left of '='. Unparseable candidates land in `unverified`.
std::vector<MathStep> scan_math_steps(const std::string& text, int max_exponent,
                                      std::vector<std::string>* unverified = nullptr);

// The explanation's final value: the computed value of the last parseable
// arithmetic step, else the last token that reads as a rational literal.
std::optional<Rational> solved_value(const std::string& explanation, int max_exponent = 64);

// Sentence-level claim extraction for the factual check: declarative
// sentences asserting world facts (copula or number-with-unit pattern),
// excluding imperative leads, arithmetic steps, and answer declarations.
// Results are normalized and deduplicated in order of appearance.
std::vector<std::string> extract_claims(const std::string& explanation);

// --- the four checks (H1..H4) ---

DetectorReport check_consistency(const Mcq& mcq, const DetectorConfig& config = {});
DetectorReport check_solvability(const Mcq& mcq, const DetectorConfig& config = {});
DetectorReport check_facts(const Mcq& mcq, const KnowledgeBase& kb,
                           const DetectorConfig& config = {});
DetectorReport check_math(const Mcq& mcq, const DetectorConfig& config = {});

// Escalation hook: an LLM-backed detector fills rule-based gaps.
class DetectorEscalator {
public:
    virtual ~DetectorEscalator() = default;
    virtual DetectorReport detect(DetectorKind kind, const Mcq& mcq) = 0;
};

/**
 * Runs the rule-based check for a kind, escalating Indeterminate verdicts
 * to the escalator when one is attached. Stateless per call; safe to use
 * concurrently on distinct MCQs.
 */
class DetectorSuite {
public:
    DetectorSuite() = default;
    DetectorSuite(const KnowledgeBase* kb, DetectorConfig config,
                  DetectorEscalator* escalator = nullptr)
        : kb_(kb), config_(config), escalator_(escalator) {}

    DetectorReport run(DetectorKind kind, const Mcq& mcq) const;
    const DetectorConfig& config() const { return config_; }
    const KnowledgeBase* kb() const { return kb_; }

private:
    const KnowledgeBase* kb_ = nullptr;
    DetectorConfig config_;
    DetectorEscalator* escalator_ = nullptr;
};

} // namespace qrefine
