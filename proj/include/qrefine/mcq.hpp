#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace qrefine {

// One labeled answer choice. Labels are always A, B, C, D in order.
struct Choice {
    std::string label;
    std::string text;

    bool operator==(const Choice&) const = default;
};

/**
 * A multiple-choice question: stem, exactly four labeled choices, the
 * answer label, and an explanation. Instances produced by validate_mcq
 * satisfy every invariant; treat them as immutable values after that.
 */
struct Mcq {
    std::string id;
    std::string question;
    std::vector<Choice> choices; // exactly 4, labels A..D in order
    std::string answer;          // one of the choice labels
    std::string explanation;
    std::string subject;

    bool operator==(const Mcq&) const = default;

    const Choice& choice(const std::string& label) const;
};

// Everything validate_mcq can object to. BadLabel covers labels outside
// {A,B,C,D} or out of order; DuplicateLabel covers repeats.
enum class ValidationCode {
    MissingField,
    WrongChoiceCount,
    DuplicateLabel,
    BadLabel,
    AnswerNotInChoices,
    EmptyText,
};

std::string to_string(ValidationCode code);

struct ValidationIssue {
    ValidationCode code;
    std::string field;   // the offending field, e.g. "choices[2].text"
    std::string message;
};

// Result of validate_mcq: either an accepted Mcq or the full list of
// violated invariants (never both).
struct McqValidation {
    std::optional<Mcq> mcq;
    std::vector<ValidationIssue> issues;

    bool ok() const { return mcq.has_value(); }
};

// Structural validation of a parsed record against all Mcq invariants.
// Collects every violation instead of stopping at the first.
McqValidation validate_mcq(const nlohmann::json& raw);

// Canonical JSON form (object with sorted keys). serialize/parse round-trip
// byte-identically for any accepted Mcq.
nlohmann::json mcq_to_json(const Mcq& mcq);
std::string serialize_mcq(const Mcq& mcq);

/**
 * The four binary hallucination indicators. A component is either checked
 * (holding 0 or 1) or unchecked; unchecked components contribute 0 to the
 * composite score and composites over them are flagged partial. Component
 * indices follow the detector taxonomy: 0 consistency, 1 solvability,
 * 2 factual, 3 math.
 */
class HallucinationVector {
public:
    static constexpr int kComponents = 4;

    void set(int index, int value);     // value must be 0 or 1
    void clear(int index);              // mark unchecked
    std::optional<int> get(int index) const;
    bool checked(int index) const { return component(index).has_value(); }
    bool fully_checked() const;
    bool any_unchecked() const { return !fully_checked(); }

    bool operator==(const HallucinationVector&) const = default;

private:
    const std::optional<int>& component(int index) const;
    std::array<std::optional<int>, kComponents> comp_{};
};

// Simplex weights over the four components.
struct Weights {
    double w1 = 0.25;
    double w2 = 0.25;
    double w3 = 0.25;
    double w4 = 0.25;

    double at(int index) const;
    bool operator==(const Weights&) const = default;
};

// Sum to 1 within 1e-9 and each weight nonnegative.
bool weights_valid(const Weights& w);

nlohmann::json weights_to_json(const Weights& w);
Weights weights_from_json(const nlohmann::json& j);

nlohmann::json vector_to_json(const HallucinationVector& v);
HallucinationVector vector_from_json(const nlohmann::json& j);

} // namespace qrefine
