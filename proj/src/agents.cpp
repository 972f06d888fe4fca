#include "qrefine/agents.hpp"

namespace qrefine {

std::optional<nlohmann::json> extract_last_json_object(const std::string& text) {
    // walk backwards over candidate closing braces, trying the balanced
    // block that ends there; the last parseable object wins
    for (std::size_t end = text.size(); end > 0; --end) {
        if (text[end - 1] != '}') continue;
        int depth = 0;
        bool in_string = false;
        for (std::size_t begin = end; begin > 0; --begin) {
            char c = text[begin - 1];
            if (in_string) {
                // leaving a string going backwards: a quote not escaped
                if (c == '"' && (begin < 2 || text[begin - 2] != '\\')) in_string = false;
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '}') {
                ++depth;
            } else if (c == '{') {
                --depth;
                if (depth == 0) {
                    auto parsed = nlohmann::json::parse(text.substr(begin - 1, end - begin + 1),
                                                        nullptr, false);
                    if (!parsed.is_discarded() && parsed.is_object()) return parsed;
                    break;
                }
            }
        }
    }
    return std::nullopt;
}

namespace {

std::string issues_to_text(const std::vector<ValidationIssue>& issues) {
    std::string out;
    for (const ValidationIssue& issue : issues) {
        if (!out.empty()) out += "; ";
        out += to_string(issue.code) + " (" + issue.field + "): " + issue.message;
    }
    return out;
}

const char* detector_template_name(DetectorKind kind) {
    switch (kind) {
    case DetectorKind::Consistency: return "detector_consistency";
    case DetectorKind::Solvability: return "detector_solvability";
    case DetectorKind::Factual: return "detector_factual";
    case DetectorKind::Math: return "detector_math";
    }
    return "detector_consistency";
}

} // namespace

LlmGenerator::LlmGenerator(Gateway& gateway, PromptLibrary prompts, std::string model,
                           double temperature, int max_output_tokens)
    : gateway_(gateway), prompts_(std::move(prompts)), model_(std::move(model)),
      temperature_(temperature), max_output_tokens_(max_output_tokens) {}

ChatRequest LlmGenerator::build_request(const GenerationSpec& spec) const {
    ChatRequest request;
    request.model = model_;
    request.temperature = temperature_;
    request.max_output_tokens = max_output_tokens_;
    request.messages.push_back({"system", prompts_.get("generator_system")});
    if (spec.prior) {
        request.messages.push_back(
            {"user", PromptLibrary::render(prompts_.get("reviser_user"),
                                           {{"prior_mcq", serialize_mcq(*spec.prior)},
                                            {"feedback", spec.feedback}})});
    } else {
        request.messages.push_back(
            {"user", PromptLibrary::render(prompts_.get("generator_user"),
                                           {{"subject", spec.subject},
                                            {"topic", spec.topic},
                                            {"difficulty", spec.difficulty},
                                            {"style", spec.style}})});
    }
    return request;
}

GenerationResult LlmGenerator::generate(const GenerationSpec& spec) {
    if (!spec.prior && (spec.subject.empty() || spec.topic.empty()))
        throw GenerationFailed("generation spec needs a nonempty subject and topic", "", 0);
    return run(spec);
}

GenerationResult LlmGenerator::revise(const Mcq& prior, const std::string& feedback) {
    GenerationSpec spec;
    spec.subject = prior.subject;
    spec.prior = prior;
    spec.feedback = feedback;
    return run(spec);
}

GenerationResult LlmGenerator::run(const GenerationSpec& spec) {
    ChatRequest request = build_request(spec);
    GenerationResult result;
    std::string raw;
    for (int round = 0; round <= 1; ++round) {
        ChatResponse response = gateway_.complete(request);
        result.usage.push_back({"generator", response.input_tokens, response.output_tokens});
        raw = response.content;
        std::string errors;
        if (auto parsed = extract_last_json_object(response.content)) {
            McqValidation validation = validate_mcq(*parsed);
            if (validation.ok()) {
                result.mcq = *validation.mcq;
                result.repair_rounds = round;
                return result;
            }
            errors = issues_to_text(validation.issues);
        } else {
            errors = "the reply contained no JSON object";
        }
        if (round == 1) throw GenerationFailed("generator output unusable: " + errors, raw, 1);
        // one repair round: show the model its reply and the errors
        request.messages.push_back({"assistant", response.content});
        request.messages.push_back(
            {"user", PromptLibrary::render(prompts_.get("repair_user"), {{"errors", errors}})});
    }
    throw GenerationFailed("generator output unusable", raw, 1); // unreachable
}

LlmDetector::LlmDetector(Gateway& gateway, PromptLibrary prompts, std::string model,
                         double temperature, int max_output_tokens)
    : gateway_(gateway), prompts_(std::move(prompts)), model_(std::move(model)),
      temperature_(temperature), max_output_tokens_(max_output_tokens) {}

ChatRequest LlmDetector::build_request(DetectorKind kind, const Mcq& mcq) const {
    ChatRequest request;
    request.model = model_;
    request.temperature = temperature_;
    request.max_output_tokens = max_output_tokens_;
    request.messages.push_back({"system", prompts_.get("detector_system")});
    request.messages.push_back(
        {"user", PromptLibrary::render(prompts_.get(detector_template_name(kind)),
                                       {{"mcq_json", serialize_mcq(mcq)}})});
    return request;
}

DetectorReport LlmDetector::detect(DetectorKind kind, const Mcq& mcq) {
    ChatRequest request = build_request(kind, mcq);
    DetectorReport report;
    report.kind = kind;
    for (int round = 0; round <= 1; ++round) {
        ChatResponse response = gateway_.complete(request);
        report.usage.push_back({"detector:" + to_string(kind), response.input_tokens,
                                response.output_tokens});
        if (auto parsed = extract_last_json_object(response.content)) {
            const auto& j = *parsed;
            if (j.contains("indicator") && (j["indicator"].is_number_integer() ||
                                            j["indicator"].is_boolean() || j["indicator"].is_null())) {
                if (j["indicator"].is_null()) {
                    report.indicator = Indicator::Indeterminate;
                } else {
                    int value = j["indicator"].is_boolean() ? (j["indicator"].get<bool>() ? 1 : 0)
                                                            : j["indicator"].get<int>();
                    report.indicator = value == 1 ? Indicator::Defect
                                     : value == 0 ? Indicator::Clear
                                                  : Indicator::Indeterminate;
                }
                if (j.contains("evidence") && j["evidence"].is_array())
                    for (const auto& e : j["evidence"])
                        if (e.is_string()) report.evidence.push_back({"llm", e.get<std::string>()});
                if (j.contains("feedback") && j["feedback"].is_string())
                    report.feedback = j["feedback"].get<std::string>();
                if (j.contains("suggested_next") && j["suggested_next"].is_string())
                    report.suggested_next =
                        detector_kind_from_string(j["suggested_next"].get<std::string>());
                report.confidence = j.contains("confidence") && j["confidence"].is_number()
                                        ? j["confidence"].get<double>()
                                        : 0.5;
                if (report.indicator == Indicator::Indeterminate) report.confidence = 0.0;
                // a defect verdict must carry evidence and feedback to be usable
                if (report.indicator != Indicator::Defect ||
                    (!report.evidence.empty() && !report.feedback.empty()))
                    return report;
            }
        }
        if (round == 0) {
            request.messages.push_back({"assistant", response.content});
            request.messages.push_back(
                {"user", PromptLibrary::render(
                             prompts_.get("repair_user"),
                             {{"errors", "the reply did not contain the required JSON verdict "
                                         "object with indicator, evidence, feedback"}})});
        }
    }
    // degraded verdict: could not get a usable reply in two rounds
    report.indicator = Indicator::Indeterminate;
    report.confidence = 0.0;
    report.evidence.push_back({"degraded", "detector reply unusable after one repair round"});
    report.feedback.clear();
    return report;
}

DetectorReport llm_detect(DetectorKind kind, const Mcq& mcq, Gateway& gateway,
                          const PromptLibrary& prompts, const std::string& model,
                          double temperature) {
    LlmDetector detector(gateway, prompts, model, temperature);
    return detector.detect(kind, mcq);
}

} // namespace qrefine
