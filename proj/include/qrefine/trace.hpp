#pragma once

#include "qrefine/detector_kind.hpp"
#include "qrefine/detectors.hpp"
#include "qrefine/mcq.hpp"
#include "qrefine/money.hpp"
#include "qrefine/scoring.hpp"
#include "qrefine/usage.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace qrefine {

// Snapshot of one refinement iteration: the MCQ state, the indicator
// vector the detectors produced, its composite score, which detectors ran
// and in what order, token usage and cost, and the feedback handed to the
// generator for the next revision.
struct IterationRecord {
    int t = 0;
    Mcq mcq;
    HallucinationVector vector;
    double score = 0.0;
    bool partial = false;
    std::vector<DetectorKind> detector_path;
    std::vector<DetectorReport> reports; // one per detector_path entry
    std::vector<TokenUsage> token_usage;
    Money cost;
    std::string feedback;
};

struct Trace {
    std::string mcq_id;
    Weights weights;
    TerminationConfig termination;
    std::vector<IterationRecord> records;
    TerminationKind outcome = TerminationKind::Budget; // never Continue
    Money total_cost;

    std::vector<double> score_history() const;
};

nlohmann::json record_to_json(const IterationRecord& record);
IterationRecord record_from_json(const nlohmann::json& j);

/**
 * JSONL persistence: a header line {"epsilon1","epsilon2","mcq_id",
 * "t_max","weights"} followed by one IterationRecord object per line.
 * The outcome is not stored: parsing replays the termination rules over
 * the recorded scores (a trailing Continue means the run was cut short,
 * which maps to Budget), and total_cost is the sum of record costs.
 */
std::string serialize_trace(const Trace& trace);
void write_trace(std::ostream& out, const Trace& trace);
Trace parse_trace(std::istream& in);
Trace load_trace(const std::string& path);

// Recomputes every derived quantity from stored fields and returns one
// message per disagreement; empty means the trace is internally
// consistent. Used both in tests and before trusting any loaded trace.
std::vector<std::string> check_trace(const Trace& trace);

} // namespace qrefine
