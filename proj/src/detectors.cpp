#include "qrefine/detectors.hpp"

#include "qrefine/expr.hpp"
#include "qrefine/textutil.hpp"

#include <algorithm>
#include <set>

namespace qrefine {

namespace {

const std::set<std::string> kTriggerWords = {
    "answer", "is", "therefore", "thus", "hence", "so",
    "option", "choice",    "choose", "select", "pick",
};

const std::set<std::string> kImperativeLeads = {
    "add",     "subtract", "multiply", "divide",   "compute",  "calculate", "find",
    "solve",   "note",     "recall",   "consider", "let",      "take",      "use",
    "apply",   "substitute", "simplify", "combine", "plug",    "observe",   "assume",
    "suppose", "check",    "start",    "begin",    "first",    "next",      "then",
    "now",     "step",     "rewrite",  "evaluate", "expand",   "factor",
};

const std::set<std::string> kUnitWords = {
    "°c", "°f", "°", "k",  "kg",  "g",   "mg",  "m",   "cm",   "mm",   "km",  "m/s",
    "m/s^2", "m/s²", "s", "ms",  "min", "h",   "hz",  "khz",  "mhz",  "n",   "j",
    "kj", "w",  "kw", "pa", "kpa", "atm", "mol", "v",   "mv",   "a",    "ma",  "ω",
    "ohm", "ohms", "%", "ev", "kev", "mev", "l", "ml",  "meters", "seconds", "kilograms",
    "grams", "joules", "newtons", "volts", "amperes", "kelvin", "celsius", "fahrenheit",
    "degrees", "percent",
};

std::string strip_wrapping(std::string_view token) {
    while (!token.empty() && (token.front() == '(' || token.front() == '[' ||
                              token.front() == '"' || token.front() == '\''))
        token.remove_prefix(1);
    while (!token.empty()) {
        char c = token.back();
        if (c == ')' || c == ']' || c == '.' || c == ',' || c == ':' || c == ';' || c == '!' ||
            c == '?' || c == '"' || c == '\'')
            token.remove_suffix(1);
        else
            break;
    }
    return std::string(token);
}

std::string ascii_lower(std::string s) {
    for (char& c : s)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return s;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Numeric in the loose sense used by the unit heuristic: a bare rational
// literal or a short arithmetic expression like "3x10^8".
bool looks_numeric(const std::string& token) {
    if (token.empty() || !std::any_of(token.begin(), token.end(), is_digit)) return false;
    if (try_parse_rational_literal(token)) return true;
    try {
        parse_expression(token);
        return true;
    } catch (const ExprError&) {
        return false;
    }
}

// Splits "100°C"/"45km" into number and attached unit suffix.
bool has_attached_unit(const std::string& token) {
    std::size_t i = 0;
    while (i < token.size() && (is_digit(token[i]) || token[i] == '.')) ++i;
    if (i == 0 || i == token.size()) return false;
    return kUnitWords.count(ascii_lower(token.substr(i))) > 0;
}

Finding escalation_finding(const std::string& why) {
    return {"escalation", why + "; escalate to an LLM detector of the same kind"};
}

DetectorReport indeterminate_report(DetectorKind kind, const std::string& why) {
    DetectorReport report;
    report.kind = kind;
    report.indicator = Indicator::Indeterminate;
    report.confidence = 0.0;
    report.evidence.push_back(escalation_finding(why));
    return report;
}

// --- math step scanning -------------------------------------------------

bool left_char_allowed(std::string_view text, std::size_t& pos, std::size_t& width) {
    char c = text[pos];
    if (is_digit(c) || c == ' ' || c == '\t' || c == '.' || c == '/' || c == '^' || c == '+' ||
        c == '-' || c == '*' || c == '(' || c == ')') {
        width = 1;
        return true;
    }
    // multibyte: x (C3 97) and Unicode minus (E2 88 92), checked last byte first
    if (static_cast<unsigned char>(c) == 0x97 && pos >= 1 &&
        static_cast<unsigned char>(text[pos - 1]) == 0xC3) {
        width = 2;
        pos -= 1;
        return true;
    }
    if (static_cast<unsigned char>(c) == 0x92 && pos >= 2 &&
        static_cast<unsigned char>(text[pos - 1]) == 0x88 &&
        static_cast<unsigned char>(text[pos - 2]) == 0xE2) {
        width = 3;
        pos -= 2;
        return true;
    }
    return false;
}

// Longest suffix of `candidate` that parses as an expression.
std::optional<std::pair<std::string, ExprPtr>> longest_parseable_suffix(std::string_view candidate) {
    for (std::size_t offset = 0; offset < candidate.size(); ++offset) {
        std::string_view suffix = candidate.substr(offset);
        if (suffix.front() == ' ' || suffix.front() == '\t') continue;
        try {
            ExprPtr tree = parse_expression(suffix);
            std::string_view trimmed = suffix;
            while (!trimmed.empty() && (trimmed.back() == ' ' || trimmed.back() == '\t'))
                trimmed.remove_suffix(1);
            return std::make_pair(std::string(trimmed), std::move(tree));
        } catch (const ExprError&) {
            continue;
        }
    }
    return std::nullopt;
}

struct LiteralScan {
    Rational value;
    std::size_t end; // first byte past the literal
};

std::optional<LiteralScan> scan_literal(std::string_view text, std::size_t pos) {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
    std::size_t begin = pos;
    if (pos < text.size() && (text[pos] == '-' || text[pos] == '+')) ++pos;
    std::size_t digits = pos;
    while (pos < text.size() && is_digit(text[pos])) ++pos;
    if (pos == digits) return std::nullopt;
    if (pos < text.size() && (text[pos] == '.' || text[pos] == '/') && pos + 1 < text.size() &&
        is_digit(text[pos + 1])) {
        ++pos;
        while (pos < text.size() && is_digit(text[pos])) ++pos;
    }
    auto value = try_parse_rational_literal(text.substr(begin, pos - begin));
    if (!value) return std::nullopt;
    return LiteralScan{*value, pos};
}

// The literal must not be followed by more arithmetic, otherwise the '='
// is part of a chain we cannot attribute ("x = 3 + 4").
bool ambiguous_tail(std::string_view text, std::size_t pos) {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
    if (pos >= text.size()) return false;
    char c = text[pos];
    if (c == '+' || c == '*' || c == '^' || c == '-' || c == '/' || is_digit(c)) return true;
    if (static_cast<unsigned char>(c) == 0xC3 && pos + 1 < text.size() &&
        static_cast<unsigned char>(text[pos + 1]) == 0x97)
        return true; // x
    if (static_cast<unsigned char>(c) == 0xE2 && pos + 2 < text.size() &&
        static_cast<unsigned char>(text[pos + 1]) == 0x88 &&
        static_cast<unsigned char>(text[pos + 2]) == 0x92)
        return true; // Unicode minus
    return false;
}

constexpr std::size_t kMaxLeftWalk = 160;

} // namespace

std::string to_string(Indicator indicator) {
    switch (indicator) {
    case Indicator::Clear: return "0";
    case Indicator::Defect: return "1";
    case Indicator::Indeterminate: return "indeterminate";
    }
    return "?";
}

std::optional<Rational> choice_value(const std::string& text, int max_exponent) {
    if (auto literal = try_parse_rational_literal(text)) return literal;
    try {
        return eval_expression(text, max_exponent);
    } catch (const ExprError&) {
        return std::nullopt;
    }
}

std::optional<std::string> extract_declared_label(const std::string& text) {
    auto tokens = tokenize(text);
    std::optional<std::string> declared;
    for (std::size_t i = 1; i < tokens.size(); ++i) {
        std::string candidate = strip_wrapping(tokens[i]);
        if (candidate.size() != 1 || candidate[0] < 'A' || candidate[0] > 'D') continue;
        std::string prev = ascii_lower(strip_wrapping(tokens[i - 1]));
        if (kTriggerWords.count(prev)) declared = candidate;
    }
    return declared;
}

std::vector<MathStep> scan_math_steps(const std::string& text, int max_exponent,
                                      std::vector<std::string>* unverified) {
    std::vector<MathStep> steps;
    for (std::size_t eq = 0; eq < text.size(); ++eq) {
        if (text[eq] != '=') continue;
        auto literal = scan_literal(text, eq + 1);
        if (!literal || ambiguous_tail(text, literal->end)) continue;

        // walk left over expression characters
        std::size_t lo = eq;
        while (lo > 0 && eq - lo < kMaxLeftWalk) {
            std::size_t pos = lo - 1;
            std::size_t width = 0;
            if (!left_char_allowed(text, pos, width)) break;
            lo = pos;
        }
        std::string_view collected(text.data() + lo, eq - lo);
        auto parsed = longest_parseable_suffix(collected);
        if (!parsed) {
            if (unverified) {
                std::string snippet(collected.substr(collected.size() > 40 ? collected.size() - 40
                                                                           : 0));
                unverified->push_back(normalize_fact(snippet) + " = " +
                                      rational_to_string(literal->value));
            }
            continue;
        }
        MathStep step;
        step.expression = parsed->first;
        step.stated = literal->value;
        try {
            step.computed = eval_expression(*parsed->second, max_exponent);
            step.ok = *step.computed == step.stated;
        } catch (const ExprError& e) {
            if (e.kind() == ExprErrorKind::DivisionByZero) {
                step.computed = std::nullopt;
                step.ok = false; // the asserted expression is undefined
            } else {
                if (unverified)
                    unverified->push_back(step.expression + " = " +
                                          rational_to_string(step.stated) + " (" + e.what() + ")");
                continue;
            }
        }
        steps.push_back(std::move(step));
    }
    return steps;
}

std::optional<Rational> solved_value(const std::string& explanation, int max_exponent) {
    auto steps = scan_math_steps(explanation, max_exponent);
    for (auto it = steps.rbegin(); it != steps.rend(); ++it)
        if (it->computed) return it->computed;
    auto tokens = tokenize(explanation);
    for (auto it = tokens.rbegin(); it != tokens.rend(); ++it) {
        if (auto literal = try_parse_rational_literal(strip_wrapping(*it))) return literal;
    }
    return std::nullopt;
}

std::vector<std::string> extract_claims(const std::string& explanation) {
    std::vector<std::string> claims;
    for (const std::string& sentence : split_sentences(explanation)) {
        if (sentence.find('=') != std::string::npos) continue; // arithmetic step
        auto tokens = tokenize(sentence);
        if (tokens.empty()) continue;
        if (kImperativeLeads.count(ascii_lower(strip_wrapping(tokens[0])))) continue;
        if (extract_declared_label(sentence)) continue; // answer declaration
        bool copula = false;
        bool unit = false;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            std::string word = ascii_lower(strip_wrapping(tokens[i]));
            if (word == "is" || word == "are" || word == "was" || word == "were" ||
                word == "equals" || word == "equal")
                copula = true;
            if (has_attached_unit(word)) unit = true;
            if (i + 1 < tokens.size() && looks_numeric(strip_wrapping(tokens[i])) &&
                kUnitWords.count(ascii_lower(strip_wrapping(tokens[i + 1]))))
                unit = true;
        }
        if (!copula && !unit) continue;
        std::string claim = normalize_fact(sentence);
        if (!claim.empty() && std::find(claims.begin(), claims.end(), claim) == claims.end())
            claims.push_back(std::move(claim));
    }
    return claims;
}

DetectorReport check_consistency(const Mcq& mcq, const DetectorConfig& config) {
    DetectorReport report;
    report.kind = DetectorKind::Consistency;
    report.confidence = 1.0;

    if (auto declared = extract_declared_label(mcq.explanation)) {
        if (*declared == mcq.answer) {
            report.indicator = Indicator::Clear;
            report.evidence.push_back(
                {"conclusion", "explanation concludes '" + *declared + "', matching the answer"});
        } else {
            report.indicator = Indicator::Defect;
            report.evidence.push_back(
                {"mismatched_label", "explanation concludes '" + *declared +
                                         "' but the marked answer is '" + mcq.answer + "'"});
            report.feedback = "The explanation concludes " + *declared +
                              " while the marked answer is " + mcq.answer +
                              "; make the explanation and the answer agree.";
        }
        return report;
    }

    if (auto value = solved_value(mcq.explanation, config.max_exponent)) {
        std::vector<std::string> matches;
        for (const Choice& c : mcq.choices)
            if (auto cv = choice_value(c.text, config.max_exponent); cv && *cv == *value)
                matches.push_back(c.label);
        if (matches.size() == 1) {
            if (matches.front() == mcq.answer) {
                report.indicator = Indicator::Clear;
                report.evidence.push_back(
                    {"conclusion", "final value " + rational_to_string(*value) +
                                       " identifies choice '" + matches.front() + "'"});
            } else {
                report.indicator = Indicator::Defect;
                report.evidence.push_back(
                    {"mismatched_label", "final value " + rational_to_string(*value) +
                                             " identifies choice '" + matches.front() +
                                             "' but the marked answer is '" + mcq.answer + "'"});
                report.feedback = "The explanation's final value " + rational_to_string(*value) +
                                  " points at choice " + matches.front() +
                                  ", not the marked answer " + mcq.answer +
                                  "; make them consistent.";
            }
            return report;
        }
    }

    return indeterminate_report(DetectorKind::Consistency, "no conclusion could be extracted");
}

DetectorReport check_solvability(const Mcq& mcq, const DetectorConfig& config) {
    auto value = solved_value(mcq.explanation, config.max_exponent);
    if (!value)
        return indeterminate_report(DetectorKind::Solvability,
                                    "no solved value could be parsed from the explanation");

    std::vector<std::pair<std::string, Rational>> parseable;
    for (const Choice& c : mcq.choices)
        if (auto cv = choice_value(c.text, config.max_exponent)) parseable.emplace_back(c.label, *cv);
    if (parseable.empty())
        return indeterminate_report(DetectorKind::Solvability,
                                    "no choice text parses as a value to compare against");

    DetectorReport report;
    report.kind = DetectorKind::Solvability;
    report.confidence = 1.0;
    SolvabilityReport solvability;
    for (const auto& [label, cv] : parseable)
        if (cv == *value) solvability.a_valid.push_back(label);

    std::string valid_set = "{";
    for (std::size_t i = 0; i < solvability.a_valid.size(); ++i)
        valid_set += (i ? "," : "") + solvability.a_valid[i];
    valid_set += "}";

    if (solvability.a_valid.size() == 1) {
        report.indicator = Indicator::Clear;
        report.evidence.push_back({"valid_answer_set", "exactly one choice matches the solved value " +
                                                           rational_to_string(*value) + ": " +
                                                           valid_set});
    } else {
        report.indicator = Indicator::Defect;
        report.evidence.push_back(
            {"valid_answer_set", std::to_string(solvability.a_valid.size()) +
                                     " choices match the solved value " +
                                     rational_to_string(*value) + ": " + valid_set});
        report.feedback = "Exactly one choice must equal the solved value " +
                          rational_to_string(*value) + "; currently " +
                          std::to_string(solvability.a_valid.size()) +
                          " do. Adjust the distractors or the question.";
    }
    report.solvability = std::move(solvability);
    return report;
}

DetectorReport check_facts(const Mcq& mcq, const KnowledgeBase& kb, const DetectorConfig& config) {
    DetectorReport report;
    report.kind = DetectorKind::Factual;
    report.confidence = 1.0;
    FactualReport factual;
    factual.claims = extract_claims(mcq.explanation);
    for (const std::string& claim : factual.claims)
        if (!kb.supports(claim, config.jaccard_threshold)) factual.missing.push_back(claim);

    if (factual.missing.empty()) {
        report.indicator = Indicator::Clear;
    } else {
        report.indicator = Indicator::Defect;
        std::string listed;
        for (const std::string& claim : factual.missing) {
            report.evidence.push_back({"unsupported_claim", claim});
            listed += (listed.empty() ? "" : "; ") + ("'" + claim + "'");
        }
        report.feedback =
            "Remove or correct claims with no support in the reference knowledge base: " + listed +
            ".";
    }
    report.factual = std::move(factual);
    return report;
}

DetectorReport check_math(const Mcq& mcq, const DetectorConfig& config) {
    DetectorReport report;
    report.kind = DetectorKind::Math;
    report.confidence = 1.0;
    MathCheckReport math;
    math.steps = scan_math_steps(mcq.explanation, config.max_exponent, &math.unverified);

    if (math.steps.empty()) {
        auto out = indeterminate_report(DetectorKind::Math,
                                        "no arithmetic steps could be parsed from the explanation");
        for (const std::string& u : math.unverified)
            out.evidence.push_back({"unverified_step", u});
        out.math = std::move(math);
        return out;
    }

    bool any_failed = false;
    std::string first_failure;
    for (const MathStep& step : math.steps) {
        if (step.ok) continue;
        any_failed = true;
        std::string detail =
            step.computed
                ? "'" + step.expression + "' states " + rational_to_string(step.stated) +
                      " but computes to " + rational_to_string(*step.computed)
                : "'" + step.expression + " = " + rational_to_string(step.stated) +
                      "' asserts an undefined expression";
        if (first_failure.empty()) first_failure = detail;
        report.evidence.push_back({"failed_step", detail});
    }
    for (const std::string& u : math.unverified)
        report.evidence.push_back({"unverified_step", u});

    const MathStep& last = math.steps.back();
    if (auto answer_value = choice_value(mcq.choice(mcq.answer).text, config.max_exponent)) {
        math.final_ok = last.stated == *answer_value;
        if (!math.final_ok)
            report.evidence.push_back(
                {"final_mismatch", "final stated value " + rational_to_string(last.stated) +
                                       " does not equal answer choice " + mcq.answer + " (" +
                                       rational_to_string(*answer_value) + ")"});
    } else {
        math.final_ok = true; // answer choice is not numeric; nothing to compare
    }

    if (any_failed || !math.final_ok) {
        report.indicator = Indicator::Defect;
        report.feedback = "Fix the arithmetic: " +
                          (first_failure.empty()
                               ? "the final stated value does not match the answer choice."
                               : first_failure + ".");
    } else {
        report.indicator = Indicator::Clear;
    }
    report.math = std::move(math);
    return report;
}

DetectorReport DetectorSuite::run(DetectorKind kind, const Mcq& mcq) const {
    DetectorReport report;
    switch (kind) {
    case DetectorKind::Consistency: report = check_consistency(mcq, config_); break;
    case DetectorKind::Solvability: report = check_solvability(mcq, config_); break;
    case DetectorKind::Factual:
        if (!kb_)
            throw KbError(KbErrorKind::IoError,
                          "KbUnavailable: the factual check needs a knowledge base");
        report = check_facts(mcq, *kb_, config_);
        break;
    case DetectorKind::Math: report = check_math(mcq, config_); break;
    }
    if (report.indicator == Indicator::Indeterminate && escalator_ != nullptr) {
        DetectorReport escalated = escalator_->detect(kind, mcq);
        escalated.kind = kind;
        return escalated;
    }
    return report;
}

nlohmann::json report_to_json(const DetectorReport& report) {
    nlohmann::json evidence = nlohmann::json::array();
    for (const Finding& f : report.evidence)
        evidence.push_back({{"kind", f.kind}, {"detail", f.detail}});
    nlohmann::json usage = nlohmann::json::array();
    for (const TokenUsage& u : report.usage)
        usage.push_back({{"agent", u.agent}, {"input", u.input}, {"output", u.output}});
    nlohmann::json j{
        {"kind", to_string(report.kind)},
        {"indicator", report.indicator == Indicator::Indeterminate
                          ? nlohmann::json(nullptr)
                          : nlohmann::json(report.indicator == Indicator::Defect ? 1 : 0)},
        {"evidence", std::move(evidence)},
        {"feedback", report.feedback},
        {"suggested_next", report.suggested_next ? nlohmann::json(to_string(*report.suggested_next))
                                                 : nlohmann::json(nullptr)},
        {"confidence", report.confidence},
        {"usage", std::move(usage)},
    };
    if (report.solvability) {
        j["solvability"] = {{"a_valid", report.solvability->a_valid},
                            {"method", report.solvability->method ==
                                               SolvabilityReport::Method::ChoiceEvaluation
                                           ? "ChoiceEvaluation"
                                           : "Delegated"}};
    }
    if (report.math) {
        nlohmann::json steps = nlohmann::json::array();
        for (const MathStep& s : report.math->steps)
            steps.push_back({{"expression", s.expression},
                             {"stated", rational_to_string(s.stated)},
                             {"computed", s.computed ? nlohmann::json(rational_to_string(*s.computed))
                                                     : nlohmann::json(nullptr)},
                             {"ok", s.ok}});
        j["math"] = {{"steps", std::move(steps)},
                     {"final_ok", report.math->final_ok},
                     {"unverified", report.math->unverified}};
    }
    if (report.factual)
        j["factual"] = {{"claims", report.factual->claims}, {"missing", report.factual->missing}};
    return j;
}

DetectorReport report_from_json(const nlohmann::json& j) {
    DetectorReport report;
    auto kind = detector_kind_from_string(j.at("kind").get<std::string>());
    if (!kind) throw std::runtime_error("unknown detector kind: " + j.at("kind").dump());
    report.kind = *kind;
    const auto& indicator = j.at("indicator");
    if (indicator.is_null())
        report.indicator = Indicator::Indeterminate;
    else
        report.indicator = indicator.get<int>() == 1 ? Indicator::Defect : Indicator::Clear;
    for (const auto& f : j.at("evidence"))
        report.evidence.push_back({f.at("kind").get<std::string>(), f.at("detail").get<std::string>()});
    report.feedback = j.at("feedback").get<std::string>();
    if (!j.at("suggested_next").is_null())
        report.suggested_next = detector_kind_from_string(j.at("suggested_next").get<std::string>());
    report.confidence = j.at("confidence").get<double>();
    for (const auto& u : j.at("usage"))
        report.usage.push_back({u.at("agent").get<std::string>(), u.at("input").get<std::int64_t>(),
                                u.at("output").get<std::int64_t>()});
    if (j.contains("solvability")) {
        SolvabilityReport s;
        for (const auto& label : j["solvability"].at("a_valid"))
            s.a_valid.push_back(label.get<std::string>());
        s.method = j["solvability"].at("method").get<std::string>() == "Delegated"
                       ? SolvabilityReport::Method::Delegated
                       : SolvabilityReport::Method::ChoiceEvaluation;
        report.solvability = std::move(s);
    }
    if (j.contains("math")) {
        MathCheckReport m;
        for (const auto& sj : j["math"].at("steps")) {
            MathStep step;
            step.expression = sj.at("expression").get<std::string>();
            step.stated = *try_parse_rational_literal(sj.at("stated").get<std::string>());
            if (!sj.at("computed").is_null())
                step.computed = *try_parse_rational_literal(sj.at("computed").get<std::string>());
            step.ok = sj.at("ok").get<bool>();
            m.steps.push_back(std::move(step));
        }
        m.final_ok = j["math"].at("final_ok").get<bool>();
        for (const auto& u : j["math"].at("unverified")) m.unverified.push_back(u.get<std::string>());
        report.math = std::move(m);
    }
    if (j.contains("factual")) {
        FactualReport f;
        for (const auto& c : j["factual"].at("claims")) f.claims.push_back(c.get<std::string>());
        for (const auto& c : j["factual"].at("missing")) f.missing.push_back(c.get<std::string>());
        report.factual = std::move(f);
    }
    return report;
}

} // namespace qrefine
