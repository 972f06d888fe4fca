#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qrefine/mcq.hpp"
#include "qrefine/money.hpp"
#include "qrefine/rng.hpp"
#include "qrefine/trace.hpp"

#include "helpers.hpp"

#include <sstream>

using namespace qrefine;

namespace {

nlohmann::json well_formed_record() {
    return nlohmann::json{
        {"id", "phys-001"},
        {"question", "What is 6 x 7?"},
        {"choices",
         nlohmann::json::array({{{"label", "A"}, {"text", "40"}},
                                {{"label", "B"}, {"text", "42"}},
                                {{"label", "C"}, {"text", "44"}},
                                {{"label", "D"}, {"text", "48"}}})},
        {"answer", "B"},
        {"explanation", "6 x 7 = 42. Therefore the answer is B."},
        {"subject", "AP Math"},
    };
}

bool has_issue(const McqValidation& v, ValidationCode code) {
    for (const auto& issue : v.issues)
        if (issue.code == code) return true;
    return false;
}

} // namespace

TEST_CASE("well-formed record is accepted") {
    auto result = validate_mcq(well_formed_record());
    REQUIRE(result.ok());
    CHECK(result.mcq->answer == "B");
    CHECK(result.mcq->choices.size() == 4);
    CHECK(result.mcq->choice("C").text == "44");
}

TEST_CASE("three choices is WrongChoiceCount") {
    auto raw = well_formed_record();
    raw["choices"].erase(3);
    auto result = validate_mcq(raw);
    CHECK_FALSE(result.ok());
    CHECK(has_issue(result, ValidationCode::WrongChoiceCount));
}

TEST_CASE("answer E is AnswerNotInChoices") {
    auto raw = well_formed_record();
    raw["answer"] = "E";
    auto result = validate_mcq(raw);
    CHECK_FALSE(result.ok());
    CHECK(has_issue(result, ValidationCode::AnswerNotInChoices));
}

TEST_CASE("all violations are reported together") {
    auto raw = well_formed_record();
    raw.erase("question");
    raw["answer"] = "E";
    raw["choices"][1]["label"] = "A"; // duplicate
    raw["choices"][2]["text"] = "   ";
    auto result = validate_mcq(raw);
    CHECK_FALSE(result.ok());
    CHECK(has_issue(result, ValidationCode::MissingField));
    CHECK(has_issue(result, ValidationCode::AnswerNotInChoices));
    CHECK(has_issue(result, ValidationCode::DuplicateLabel));
    CHECK(has_issue(result, ValidationCode::EmptyText));
    // every issue names its field
    for (const auto& issue : result.issues) CHECK_FALSE(issue.field.empty());
}

TEST_CASE("out-of-order labels are BadLabel") {
    auto raw = well_formed_record();
    raw["choices"][0]["label"] = "B";
    raw["choices"][1]["label"] = "A";
    auto result = validate_mcq(raw);
    CHECK_FALSE(result.ok());
    CHECK(has_issue(result, ValidationCode::BadLabel));
}

TEST_CASE("empty explanation is EmptyText") {
    auto raw = well_formed_record();
    raw["explanation"] = " \t ";
    auto result = validate_mcq(raw);
    CHECK_FALSE(result.ok());
    CHECK(has_issue(result, ValidationCode::EmptyText));
}

TEST_CASE("validate_mcq is idempotent on accepted records") {
    auto first = validate_mcq(well_formed_record());
    REQUIRE(first.ok());
    auto second = validate_mcq(nlohmann::json::parse(serialize_mcq(*first.mcq)));
    REQUIRE(second.ok());
    CHECK(*second.mcq == *first.mcq);
}

TEST_CASE("serialization round-trip is byte-identical") {
    SplitMix64 rng(7);
    const std::vector<std::string> glyphs = {"a", "Z", "0", " ", "\xC3\x97", "\xC2\xB0",
                                             "=", "+", "/", "?", "\"", "\\"};
    for (int i = 0; i < 50; ++i) {
        auto pick_text = [&rng, &glyphs] {
            std::string out = "t";
            for (int k = 0; k < 12; ++k) out += glyphs[rng.below(glyphs.size())];
            return out;
        };
        Mcq mcq = qtest::make_mcq("id-" + std::to_string(i), pick_text(),
                                  {pick_text(), pick_text(), pick_text(), pick_text()},
                                  std::string(1, "ABCD"[rng.below(4)]), pick_text(), pick_text());
        std::string once = serialize_mcq(mcq);
        auto parsed = validate_mcq(nlohmann::json::parse(once));
        REQUIRE(parsed.ok());
        std::string twice = serialize_mcq(*parsed.mcq);
        CHECK(once == twice);
    }
}

TEST_CASE("hallucination vector components") {
    HallucinationVector v;
    CHECK_FALSE(v.fully_checked());
    v.set(0, 1);
    v.set(1, 0);
    CHECK(v.get(0) == 1);
    CHECK(v.get(1) == 0);
    CHECK_FALSE(v.get(2).has_value());
    CHECK_THROWS(v.set(2, 5)); // indicators are binary
    v.set(2, 1);
    v.set(3, 0);
    CHECK(v.fully_checked());
    v.clear(2);
    CHECK(v.any_unchecked());

    auto j = vector_to_json(v);
    CHECK(j["h3"].is_null());
    CHECK(vector_from_json(j) == v);
}

TEST_CASE("weights simplex") {
    CHECK(weights_valid(Weights{}));
    CHECK(weights_valid(Weights{0.1, 0.2, 0.3, 0.4}));
    CHECK_FALSE(weights_valid(Weights{0.5, 0.5, 0.5, -0.5}));
    CHECK_FALSE(weights_valid(Weights{0.3, 0.3, 0.3, 0.3}));
    // tolerance is 1e-9 absolute
    CHECK(weights_valid(Weights{0.25 + 4e-10, 0.25, 0.25, 0.25}));
    CHECK_FALSE(weights_valid(Weights{0.25 + 1e-8, 0.25, 0.25, 0.25}));
}

TEST_CASE("money is exact at pico granularity") {
    Money dime = Money::parse("0.10");
    CHECK(dime.pico() == 100'000'000'000LL);
    CHECK(dime.to_string(6) == "0.100000");
    CHECK(dime.to_string() == "0.100000000000");
    CHECK(Money::parse("1.10").pico() == 1'100'000'000'000LL);
    CHECK(Money::parse("0.000000100000").pico() == 100'000);
    CHECK(Money::parse(dime.to_string()) == dime);
    CHECK((dime + dime).to_string(6) == "0.200000");
    CHECK((Money::parse("-0.5")).to_string(1) == "-0.5");
    CHECK_THROWS(Money::parse("abc"));
    CHECK_THROWS(Money::parse("1.0000000000001")); // beyond pico
}

namespace {

Trace make_trace() {
    Trace trace;
    trace.mcq_id = "phys-001";
    Mcq mcq = qtest::make_mcq("phys-001", "What is 6 x 7?", {"40", "42", "44", "48"}, "B",
                              "6 x 7 = 42. Therefore the answer is B.");
    Weights w{};
    double scores[] = {0.25, 0.0};
    for (int t = 0; t < 2; ++t) {
        IterationRecord record;
        record.t = t;
        record.mcq = mcq;
        for (int i = 0; i < 4; ++i) record.vector.set(i, 0);
        if (t == 0) record.vector.set(3, 1);
        record.score = scores[t];
        record.detector_path = {DetectorKind::Solvability, DetectorKind::Math};
        record.token_usage.push_back({"generator", 100, 200});
        record.cost = Money::from_pico(30'000'000);
        record.feedback = t == 0 ? "fix the arithmetic" : "";
        trace.records.push_back(std::move(record));
    }
    trace.outcome = TerminationKind::Converged;
    trace.total_cost = Money::from_pico(60'000'000);
    return trace;
}

} // namespace

TEST_CASE("trace JSONL round-trips with derived outcome and total") {
    Trace trace = make_trace();
    CHECK(check_trace(trace).empty());

    std::string serialized = serialize_trace(trace);
    // header line first, then one record per line
    std::istringstream lines(serialized);
    std::string header_line;
    std::getline(lines, header_line);
    auto header = nlohmann::json::parse(header_line);
    CHECK(header.at("mcq_id") == "phys-001");
    CHECK(header.at("epsilon1") == 0.05);
    CHECK(header.at("t_max") == 7);
    CHECK(header.contains("weights"));

    std::istringstream in(serialized);
    Trace parsed = parse_trace(in);
    CHECK(parsed.outcome == TerminationKind::Converged);
    CHECK(parsed.total_cost == trace.total_cost);
    CHECK(parsed.records.size() == 2);
    CHECK(parsed.records[0].token_usage == trace.records[0].token_usage);
    CHECK(check_trace(parsed).empty());
    CHECK(serialize_trace(parsed) == serialized);
}

TEST_CASE("trace checker flags score tampering (fuzzed h bits)") {
    SplitMix64 rng(99);
    for (int round = 0; round < 20; ++round) {
        Trace trace = make_trace();
        // flip one random h bit in one record; stored score now disagrees
        IterationRecord& record = trace.records[rng.below(trace.records.size())];
        int component = static_cast<int>(rng.below(4));
        int flipped = record.vector.get(component).value_or(0) ^ 1;
        record.vector.set(component, flipped);
        auto problems = check_trace(trace);
        CHECK_FALSE(problems.empty());
    }
}

TEST_CASE("trace checker enforces consecutive t and cost sum") {
    Trace trace = make_trace();
    trace.records[1].t = 5;
    CHECK_FALSE(check_trace(trace).empty());

    trace = make_trace();
    trace.total_cost = Money::from_pico(1);
    CHECK_FALSE(check_trace(trace).empty());

    trace = make_trace();
    trace.outcome = TerminationKind::Stalled; // replay says Converged
    CHECK_FALSE(check_trace(trace).empty());
}

TEST_CASE("aborted trace parses to Budget outcome") {
    Trace trace = make_trace();
    trace.records.pop_back(); // history [0.25] would Continue
    trace.outcome = TerminationKind::Budget;
    trace.total_cost = trace.records[0].cost;
    std::istringstream in(serialize_trace(trace));
    Trace parsed = parse_trace(in);
    CHECK(parsed.outcome == TerminationKind::Budget);
}
