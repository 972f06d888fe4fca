#include "qrefine/prompts.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qrefine {

namespace {

const char* kGeneratorSystem =
    R"(You are an expert author of multiple-choice questions for students.
Reason step by step first, then emit the final JSON object on its own line.
The JSON object must have exactly these fields:
"id" (short string), "question", "choices" (array of exactly 4 objects with "label" one of A,B,C,D in order and "text"), "answer" (the label of the single correct choice), "explanation" (a worked justification that ends by naming the answer label), "subject".
)";

const char* kGeneratorUser =
    R"(Write one multiple-choice question.
Subject: {{subject}}
Topic: {{topic}}
Difficulty: {{difficulty}}
Style notes: {{style}}
Requirements: exactly 4 answer choices labeled A, B, C, D; exactly one choice is correct; every numeric claim in the explanation must be arithmetically exact; the explanation must end by naming the answer label.
Reason step by step, then emit the final JSON object.
)";

const char* kReviserUser =
    R"(Revise the multiple-choice question below. Change only what the feedback targets and keep every other field intact.
Current question JSON:
{{prior_mcq}}
Feedback:
{{feedback}}
Reason step by step, then emit the final JSON object with the same fields.
)";

const char* kRepairUser =
    R"(Your previous reply could not be used: {{errors}}
Reply again with only the corrected JSON object and nothing after it.
)";

const char* kDetectorSystem =
    R"(You review multiple-choice questions for one specific defect class.
Reason step by step, then emit a final JSON object on its own line with exactly these fields:
"indicator" (1 if the defect is present, 0 if it is absent, null if you cannot decide), "evidence" (array of short strings naming each offending part), "feedback" (one concrete revision instruction, empty when indicator is 0), "suggested_next" (one of "Consistency", "Solvability", "Factual", "Math", or null), "confidence" (number between 0 and 1).
)";

const char* kDetectorConsistency =
    R"(Defect class: the explanation's conclusion does not identify the marked answer choice. Decide whether the explanation, read on its own, concludes with the same choice the question marks as the answer.
Question JSON:
{{mcq_json}}
Reason step by step, then emit the final JSON verdict object.
)";

const char* kDetectorSolvability =
    R"(Defect class: the question is unsolvable or does not have exactly one defensible answer among its choices. Decide whether exactly one choice is consistent with actually solving the question (no valid choice, or two or more valid choices, are both defects).
Question JSON:
{{mcq_json}}
Reason step by step, then emit the final JSON verdict object.
)";

const char* kDetectorFactual =
    R"(Defect class: the explanation asserts a false or unsupported factual claim about the world. Check every factual claim in the explanation; flag the ones that are wrong or unverifiable.
Question JSON:
{{mcq_json}}
Reason step by step, then emit the final JSON verdict object.
)";

const char* kDetectorMath =
    R"(Defect class: a computational or logical step in the explanation is wrong. Re-derive every arithmetic step; flag any step whose stated result differs from the correct result, and check that the final result matches the marked answer choice.
Question JSON:
{{mcq_json}}
Reason step by step, then emit the final JSON verdict object.
)";

} // namespace

const std::map<std::string, std::string>& PromptLibrary::defaults() {
    static const std::map<std::string, std::string> kDefaults = {
        {"generator_system", kGeneratorSystem},
        {"generator_user", kGeneratorUser},
        {"reviser_user", kReviserUser},
        {"repair_user", kRepairUser},
        {"detector_system", kDetectorSystem},
        {"detector_consistency", kDetectorConsistency},
        {"detector_solvability", kDetectorSolvability},
        {"detector_factual", kDetectorFactual},
        {"detector_math", kDetectorMath},
    };
    return kDefaults;
}

PromptLibrary::PromptLibrary() : templates_(defaults()) {}

PromptLibrary PromptLibrary::with_overrides(const std::string& dir) {
    PromptLibrary library;
    for (auto& [name, text] : library.templates_) {
        std::filesystem::path file = std::filesystem::path(dir) / (name + ".txt");
        std::ifstream in(file);
        if (!in) continue;
        std::ostringstream buffer;
        buffer << in.rdbuf();
        text = buffer.str();
    }
    return library;
}

const std::string& PromptLibrary::get(const std::string& name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) throw std::out_of_range("unknown prompt template: " + name);
    return it->second;
}

std::string PromptLibrary::render(const std::string& tmpl,
                                  const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        std::size_t open = tmpl.find("{{", i);
        if (open == std::string::npos) {
            out.append(tmpl, i, std::string::npos);
            break;
        }
        std::size_t close = tmpl.find("}}", open + 2);
        if (close == std::string::npos) {
            out.append(tmpl, i, std::string::npos);
            break;
        }
        out.append(tmpl, i, open - i);
        std::string key = tmpl.substr(open + 2, close - open - 2);
        auto it = values.find(key);
        if (it == values.end())
            throw std::invalid_argument("prompt template placeholder has no value: " + key);
        out += it->second;
        i = close + 2;
    }
    return out;
}

} // namespace qrefine
