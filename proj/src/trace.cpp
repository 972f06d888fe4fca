#include "qrefine/trace.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace qrefine {

std::string to_string(DetectorKind kind) {
    switch (kind) {
    case DetectorKind::Consistency: return "Consistency";
    case DetectorKind::Solvability: return "Solvability";
    case DetectorKind::Factual: return "Factual";
    case DetectorKind::Math: return "Math";
    }
    return "Unknown";
}

std::optional<DetectorKind> detector_kind_from_string(const std::string& name) {
    for (DetectorKind kind : all_detector_kinds)
        if (to_string(kind) == name) return kind;
    return std::nullopt;
}

std::vector<double> Trace::score_history() const {
    std::vector<double> history;
    history.reserve(records.size());
    for (const IterationRecord& r : records) history.push_back(r.score);
    return history;
}

nlohmann::json record_to_json(const IterationRecord& record) {
    nlohmann::json path = nlohmann::json::array();
    for (DetectorKind kind : record.detector_path) path.push_back(to_string(kind));
    nlohmann::json reports = nlohmann::json::array();
    for (const DetectorReport& r : record.reports) reports.push_back(report_to_json(r));
    nlohmann::json usage = nlohmann::json::array();
    for (const TokenUsage& u : record.token_usage)
        usage.push_back({{"agent", u.agent}, {"input", u.input}, {"output", u.output}});
    return nlohmann::json{
        {"t", record.t},
        {"mcq", mcq_to_json(record.mcq)},
        {"vector", vector_to_json(record.vector)},
        {"score", record.score},
        {"partial", record.partial},
        {"detector_path", std::move(path)},
        {"reports", std::move(reports)},
        {"token_usage", std::move(usage)},
        {"cost", record.cost.to_string()},
        {"feedback", record.feedback},
    };
}

IterationRecord record_from_json(const nlohmann::json& j) {
    IterationRecord record;
    record.t = j.at("t").get<int>();
    auto validation = validate_mcq(j.at("mcq"));
    if (!validation.ok())
        throw std::runtime_error("trace record holds an invalid MCQ: " +
                                 validation.issues.front().message);
    record.mcq = *validation.mcq;
    record.vector = vector_from_json(j.at("vector"));
    record.score = j.at("score").get<double>();
    record.partial = j.at("partial").get<bool>();
    for (const auto& name : j.at("detector_path")) {
        auto kind = detector_kind_from_string(name.get<std::string>());
        if (!kind) throw std::runtime_error("unknown detector kind in trace: " + name.dump());
        record.detector_path.push_back(*kind);
    }
    for (const auto& rj : j.at("reports")) record.reports.push_back(report_from_json(rj));
    for (const auto& u : j.at("token_usage")) {
        TokenUsage usage;
        usage.agent = u.at("agent").get<std::string>();
        usage.input = u.at("input").get<std::int64_t>();
        usage.output = u.at("output").get<std::int64_t>();
        record.token_usage.push_back(std::move(usage));
    }
    record.cost = Money::parse(j.at("cost").get<std::string>());
    record.feedback = j.at("feedback").get<std::string>();
    return record;
}

std::string serialize_trace(const Trace& trace) {
    std::ostringstream out;
    write_trace(out, trace);
    return out.str();
}

void write_trace(std::ostream& out, const Trace& trace) {
    nlohmann::json header{
        {"mcq_id", trace.mcq_id},
        {"weights", weights_to_json(trace.weights)},
        {"epsilon1", trace.termination.epsilon1},
        {"epsilon2", trace.termination.epsilon2},
        {"t_max", trace.termination.t_max},
    };
    out << header.dump() << "\n";
    for (const IterationRecord& record : trace.records)
        out << record_to_json(record).dump() << "\n";
}

namespace {

// Outcome is derived, not stored: replay the termination rules over the
// score history. A trace that ends while the rules still say Continue was
// aborted mid-run, which counts against the budget.
TerminationKind derive_outcome(const Trace& trace) {
    if (trace.records.empty()) return TerminationKind::Budget;
    auto history = trace.score_history();
    auto decision = should_terminate(history, trace.termination);
    if (decision.kind == TerminationKind::Continue) return TerminationKind::Budget;
    return decision.kind;
}

Money sum_costs(const Trace& trace) {
    Money total;
    for (const IterationRecord& r : trace.records) total += r.cost;
    return total;
}

} // namespace

Trace parse_trace(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("trace stream is empty");
    nlohmann::json header = nlohmann::json::parse(line);
    Trace trace;
    trace.mcq_id = header.at("mcq_id").get<std::string>();
    trace.weights = weights_from_json(header.at("weights"));
    trace.termination.epsilon1 = header.at("epsilon1").get<double>();
    trace.termination.epsilon2 = header.at("epsilon2").get<double>();
    trace.termination.t_max = header.at("t_max").get<int>();
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        trace.records.push_back(record_from_json(nlohmann::json::parse(line)));
    }
    trace.outcome = derive_outcome(trace);
    trace.total_cost = sum_costs(trace);
    return trace;
}

Trace load_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trace file: " + path);
    return parse_trace(in);
}

std::vector<std::string> check_trace(const Trace& trace) {
    std::vector<std::string> problems;
    if (!weights_valid(trace.weights)) problems.push_back("weights violate the simplex invariant");
    if (trace.records.empty()) {
        problems.push_back("trace has no records");
        return problems;
    }
    for (std::size_t i = 0; i < trace.records.size(); ++i) {
        const IterationRecord& r = trace.records[i];
        if (r.t != static_cast<int>(i))
            problems.push_back("record " + std::to_string(i) + " has t=" + std::to_string(r.t) +
                               ", expected consecutive from 0");
        Score recomputed = composite_score(r.vector, trace.weights);
        if (recomputed.value != r.score)
            problems.push_back("record " + std::to_string(i) + " stored score " +
                               std::to_string(r.score) + " != recomputed " +
                               std::to_string(recomputed.value));
        if (recomputed.partial != r.partial)
            problems.push_back("record " + std::to_string(i) + " partial flag mismatch");
    }
    if (sum_costs(trace) != trace.total_cost)
        problems.push_back("total_cost does not equal the sum of record costs");
    TerminationKind derived = derive_outcome(trace);
    if (derived != trace.outcome)
        problems.push_back("outcome " + to_string(trace.outcome) +
                           " disagrees with replayed termination rules (" + to_string(derived) +
                           ")");
    auto history = trace.score_history();
    if (trace.outcome == TerminationKind::Converged &&
        !(history.back() < trace.termination.epsilon1))
        problems.push_back("Converged trace ends with score >= epsilon1");
    if (trace.outcome == TerminationKind::Stalled &&
        (history.size() < 2 || !(std::abs(history.back() - history[history.size() - 2]) <
                                 trace.termination.epsilon2)))
        problems.push_back("Stalled trace lacks a stalled final step");
    return problems;
}

} // namespace qrefine
