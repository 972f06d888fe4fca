#include "qrefine/mcq.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace qrefine {

namespace {

const std::array<std::string, 4> kLabels{"A", "B", "C", "D"};

bool blank(const std::string& s) {
    for (char c : s)
        if (c != ' ' && c != '\t' && c != '\n' && c != '\r') return false;
    return true;
}

std::optional<std::string> get_string(const nlohmann::json& raw, const char* key) {
    auto it = raw.find(key);
    if (it == raw.end() || !it->is_string()) return std::nullopt;
    return it->get<std::string>();
}

} // namespace

const Choice& Mcq::choice(const std::string& label) const {
    for (const Choice& c : choices)
        if (c.label == label) return c;
    throw std::out_of_range("Mcq::choice: no such label: " + label);
}

std::string to_string(ValidationCode code) {
    switch (code) {
    case ValidationCode::MissingField: return "MissingField";
    case ValidationCode::WrongChoiceCount: return "WrongChoiceCount";
    case ValidationCode::DuplicateLabel: return "DuplicateLabel";
    case ValidationCode::BadLabel: return "BadLabel";
    case ValidationCode::AnswerNotInChoices: return "AnswerNotInChoices";
    case ValidationCode::EmptyText: return "EmptyText";
    }
    return "Unknown";
}

McqValidation validate_mcq(const nlohmann::json& raw) {
    McqValidation result;
    auto fail = [&result](ValidationCode code, const std::string& field, const std::string& msg) {
        result.issues.push_back({code, field, msg});
    };

    if (!raw.is_object()) {
        fail(ValidationCode::MissingField, "", "record is not a JSON object");
        return result;
    }

    Mcq mcq;
    if (auto v = get_string(raw, "id"); v)
        mcq.id = *v;
    else
        fail(ValidationCode::MissingField, "id", "missing or non-string field 'id'");

    if (auto v = get_string(raw, "question"); v) {
        mcq.question = *v;
        if (blank(mcq.question))
            fail(ValidationCode::EmptyText, "question", "question text is empty");
    } else {
        fail(ValidationCode::MissingField, "question", "missing or non-string field 'question'");
    }

    if (auto v = get_string(raw, "explanation"); v) {
        mcq.explanation = *v;
        if (blank(mcq.explanation))
            fail(ValidationCode::EmptyText, "explanation", "explanation text is empty");
    } else {
        fail(ValidationCode::MissingField, "explanation",
             "missing or non-string field 'explanation'");
    }

    // subject is a free tag and may be empty, but must be a string if present
    if (auto v = get_string(raw, "subject"); v) mcq.subject = *v;

    auto choices_it = raw.find("choices");
    if (choices_it == raw.end() || !choices_it->is_array()) {
        fail(ValidationCode::MissingField, "choices", "missing or non-array field 'choices'");
    } else {
        const auto& arr = *choices_it;
        if (arr.size() != 4)
            fail(ValidationCode::WrongChoiceCount, "choices",
                 "expected exactly 4 choices, got " + std::to_string(arr.size()));
        std::set<std::string> seen;
        for (std::size_t i = 0; i < arr.size(); ++i) {
            std::string field = "choices[" + std::to_string(i) + "]";
            if (!arr[i].is_object()) {
                fail(ValidationCode::MissingField, field, "choice is not an object");
                continue;
            }
            Choice c;
            if (auto v = get_string(arr[i], "label"); v)
                c.label = *v;
            else
                fail(ValidationCode::MissingField, field + ".label", "missing choice label");
            if (auto v = get_string(arr[i], "text"); v) {
                c.text = *v;
                if (blank(c.text))
                    fail(ValidationCode::EmptyText, field + ".text", "choice text is empty");
            } else {
                fail(ValidationCode::MissingField, field + ".text", "missing choice text");
            }
            if (!c.label.empty()) {
                if (!seen.insert(c.label).second)
                    fail(ValidationCode::DuplicateLabel, field + ".label",
                         "duplicate choice label '" + c.label + "'");
                else if (i < kLabels.size() && c.label != kLabels[i])
                    fail(ValidationCode::BadLabel, field + ".label",
                         "expected label '" + kLabels[i] + "' at position " + std::to_string(i) +
                             ", got '" + c.label + "'");
            }
            mcq.choices.push_back(std::move(c));
        }
    }

    if (auto v = get_string(raw, "answer"); v) {
        mcq.answer = *v;
        bool found = false;
        for (const Choice& c : mcq.choices)
            if (c.label == mcq.answer) found = true;
        if (!found)
            fail(ValidationCode::AnswerNotInChoices, "answer",
                 "answer '" + mcq.answer + "' does not name any choice label");
    } else {
        fail(ValidationCode::MissingField, "answer", "missing or non-string field 'answer'");
    }

    if (result.issues.empty()) result.mcq = std::move(mcq);
    return result;
}

nlohmann::json mcq_to_json(const Mcq& mcq) {
    nlohmann::json choices = nlohmann::json::array();
    for (const Choice& c : mcq.choices)
        choices.push_back({{"label", c.label}, {"text", c.text}});
    return nlohmann::json{
        {"id", mcq.id},
        {"question", mcq.question},
        {"choices", std::move(choices)},
        {"answer", mcq.answer},
        {"explanation", mcq.explanation},
        {"subject", mcq.subject},
    };
}

std::string serialize_mcq(const Mcq& mcq) {
    return mcq_to_json(mcq).dump();
}

void HallucinationVector::set(int index, int value) {
    if (value != 0 && value != 1)
        throw std::invalid_argument("HallucinationVector::set: indicator must be 0 or 1");
    comp_.at(static_cast<std::size_t>(index)) = value;
}

void HallucinationVector::clear(int index) {
    comp_.at(static_cast<std::size_t>(index)).reset();
}

std::optional<int> HallucinationVector::get(int index) const {
    return component(index);
}

bool HallucinationVector::fully_checked() const {
    for (const auto& c : comp_)
        if (!c.has_value()) return false;
    return true;
}

const std::optional<int>& HallucinationVector::component(int index) const {
    return comp_.at(static_cast<std::size_t>(index));
}

double Weights::at(int index) const {
    switch (index) {
    case 0: return w1;
    case 1: return w2;
    case 2: return w3;
    case 3: return w4;
    }
    throw std::out_of_range("Weights::at: index out of range");
}

bool weights_valid(const Weights& w) {
    if (w.w1 < 0 || w.w2 < 0 || w.w3 < 0 || w.w4 < 0) return false;
    return std::abs(w.w1 + w.w2 + w.w3 + w.w4 - 1.0) <= 1e-9;
}

nlohmann::json weights_to_json(const Weights& w) {
    return {{"w1", w.w1}, {"w2", w.w2}, {"w3", w.w3}, {"w4", w.w4}};
}

Weights weights_from_json(const nlohmann::json& j) {
    Weights w;
    w.w1 = j.at("w1").get<double>();
    w.w2 = j.at("w2").get<double>();
    w.w3 = j.at("w3").get<double>();
    w.w4 = j.at("w4").get<double>();
    return w;
}

nlohmann::json vector_to_json(const HallucinationVector& v) {
    nlohmann::json j;
    const char* keys[] = {"h1", "h2", "h3", "h4"};
    for (int i = 0; i < HallucinationVector::kComponents; ++i) {
        auto c = v.get(i);
        j[keys[i]] = c ? nlohmann::json(*c) : nlohmann::json(nullptr);
    }
    return j;
}

HallucinationVector vector_from_json(const nlohmann::json& j) {
    HallucinationVector v;
    const char* keys[] = {"h1", "h2", "h3", "h4"};
    for (int i = 0; i < HallucinationVector::kComponents; ++i) {
        const auto& c = j.at(keys[i]);
        if (!c.is_null()) v.set(i, c.get<int>());
    }
    return v;
}

} // namespace qrefine
