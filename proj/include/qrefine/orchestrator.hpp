#pragma once

#include "qrefine/agents.hpp"
#include "qrefine/detectors.hpp"
#include "qrefine/llm.hpp"
#include "qrefine/trace.hpp"

#include <array>
#include <functional>
#include <optional>
#include <set>
#include <variant>

namespace qrefine {

/**
 * Which detector runs next within an iteration. Both policies honor an
 * unvisited suggested_next hint first. StaticOrder then takes the first
 * unvisited kind in its order; CooccurrencePriority takes the unvisited
 * kind maximizing the matrix row of the last kind (ties broken by static
 * order). With no report yet, the static order leads.
 */
struct RoutingPolicy {
    enum class Kind { StaticOrder, CooccurrencePriority };

    Kind kind = Kind::StaticOrder;
    std::array<DetectorKind, kDetectorKindCount> static_order{
        DetectorKind::Solvability, DetectorKind::Math, DetectorKind::Factual,
        DetectorKind::Consistency};
    // rows indexed by the last kind, normalized to sum 1
    std::array<std::array<double, kDetectorKindCount>, kDetectorKindCount> cooccurrence{};

    static RoutingPolicy static_default();
    // Normalizes each row; throws std::invalid_argument on negative
    // entries or all-zero rows.
    static RoutingPolicy cooccurrence_priority(
        const std::array<std::array<double, kDetectorKindCount>, kDetectorKindCount>& matrix);

    bool order_is_permutation() const;
};

std::optional<DetectorKind> route_next(const DetectorReport* last_report,
                                       const std::set<DetectorKind>& visited,
                                       const RoutingPolicy& policy);

struct RefineConfig {
    Weights weights{};
    TerminationConfig termination{};
    RoutingPolicy routing = RoutingPolicy::static_default();
    bool full_pass = false; // run all four detectors even after a defect
    CostModel costs = CostModel::defaults();
    std::string generator_model = "gpt-4.1-nano";
    std::string detector_model = "gpt-4.1-nano";
};

/**
 * The iterative generator-detector cycle. Each iteration routes detectors
 * over the current MCQ (each kind at most once, stopping at the first
 * defect unless full_pass), scores the indicator vector, consults the
 * termination rules over the score history, and otherwise asks the
 * generator to revise with the concatenated feedback (newest first).
 *
 * A generator failure aborts with the partial trace and outcome Budget; a
 * detector transport failure leaves that component unchecked for the
 * iteration.
 */
Trace refine(const Mcq& initial, const DetectorSuite& detectors, GeneratorAgent& generator,
             const RefineConfig& config);

// Same loop, but the generator produces the initial MCQ from a spec.
Trace refine(const GenerationSpec& spec, const DetectorSuite& detectors,
             GeneratorAgent& generator, const RefineConfig& config);

// One refine input: an existing MCQ or a generation spec.
using RefineItem = std::variant<Mcq, GenerationSpec>;

struct BatchOutcome {
    std::optional<Trace> trace;
    std::string error; // set when the item failed outright
};

/**
 * Runs many refinements over a worker pool. The generator factory is
 * called once per item (scripted generators are stateful); results come
 * back in input order regardless of scheduling. A failing item is
 * reported in its BatchOutcome and never takes the batch down.
 */
std::vector<BatchOutcome> run_batch(const std::vector<RefineItem>& items,
                                    const DetectorSuite& detectors,
                                    const std::function<std::unique_ptr<GeneratorAgent>(
                                        std::size_t)>& generator_factory,
                                    const RefineConfig& config, int workers);

} // namespace qrefine
