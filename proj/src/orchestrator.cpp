#include "qrefine/orchestrator.hpp"

#include <atomic>
#include <thread>

namespace qrefine {

RoutingPolicy RoutingPolicy::static_default() { return RoutingPolicy{}; }

RoutingPolicy RoutingPolicy::cooccurrence_priority(
    const std::array<std::array<double, kDetectorKindCount>, kDetectorKindCount>& matrix) {
    RoutingPolicy policy;
    policy.kind = Kind::CooccurrencePriority;
    for (int row = 0; row < kDetectorKindCount; ++row) {
        double sum = 0;
        for (double v : matrix[row]) {
            if (v < 0)
                throw std::invalid_argument("co-occurrence matrix entries must be nonnegative");
            sum += v;
        }
        if (sum <= 0)
            throw std::invalid_argument("co-occurrence matrix rows must not be all zero");
        for (int col = 0; col < kDetectorKindCount; ++col)
            policy.cooccurrence[row][col] = matrix[row][col] / sum;
    }
    return policy;
}

bool RoutingPolicy::order_is_permutation() const {
    std::set<DetectorKind> seen(static_order.begin(), static_order.end());
    return seen.size() == kDetectorKindCount;
}

std::optional<DetectorKind> route_next(const DetectorReport* last_report,
                                       const std::set<DetectorKind>& visited,
                                       const RoutingPolicy& policy) {
    if (visited.size() >= kDetectorKindCount) return std::nullopt; // EndOfPass

    if (last_report && last_report->suggested_next &&
        !visited.count(*last_report->suggested_next))
        return *last_report->suggested_next;

    if (policy.kind == RoutingPolicy::Kind::CooccurrencePriority && last_report) {
        const auto& row = policy.cooccurrence[index_of(last_report->kind)];
        std::optional<DetectorKind> best;
        double best_weight = -1.0;
        // iterate in static order so ties resolve deterministically
        for (DetectorKind kind : policy.static_order) {
            if (visited.count(kind)) continue;
            double weight = row[index_of(kind)];
            if (weight > best_weight) {
                best_weight = weight;
                best = kind;
            }
        }
        return best;
    }

    for (DetectorKind kind : policy.static_order)
        if (!visited.count(kind)) return kind;
    return std::nullopt;
}

namespace {

Money price_usage(const std::vector<TokenUsage>& usage, const RefineConfig& config) {
    Money cost;
    for (const TokenUsage& u : usage) {
        const std::string& model = u.agent.rfind("detector:", 0) == 0 ? config.detector_model
                                                                      : config.generator_model;
        if (config.costs.has(model)) cost += accrue_cost(u.input, u.output, model, config.costs);
    }
    return cost;
}

Trace refine_loop(Mcq current, std::vector<TokenUsage> pending_usage,
                  const DetectorSuite& detectors, GeneratorAgent& generator,
                  const RefineConfig& config) {
    if (!weights_valid(config.weights))
        throw InvalidWeights("refine: weights must satisfy the simplex invariant");
    if (!config.termination.valid())
        throw std::invalid_argument("refine: termination config out of range");
    if (!config.routing.order_is_permutation())
        throw std::invalid_argument("refine: static order must be a permutation of all kinds");

    Trace trace;
    trace.mcq_id = current.id;
    trace.weights = config.weights;
    trace.termination = config.termination;
    trace.outcome = TerminationKind::Budget;

    std::vector<double> history;
    for (int t = 0;; ++t) {
        IterationRecord record;
        record.t = t;
        record.mcq = current;
        record.token_usage = std::move(pending_usage);
        pending_usage.clear();

        std::set<DetectorKind> visited;
        const DetectorReport* last_report = nullptr;
        while (auto kind = route_next(last_report, visited, config.routing)) {
            DetectorReport report;
            try {
                report = detectors.run(*kind, current);
            } catch (const LlmError& e) {
                // transport failure: this component stays unchecked
                report.kind = *kind;
                report.indicator = Indicator::Indeterminate;
                report.confidence = 0.0;
                report.evidence.push_back({"transport_failure", e.what()});
            }
            visited.insert(*kind);
            record.detector_path.push_back(*kind);
            for (const TokenUsage& u : report.usage) record.token_usage.push_back(u);
            switch (report.indicator) {
            case Indicator::Clear: record.vector.set(index_of(*kind), 0); break;
            case Indicator::Defect: record.vector.set(index_of(*kind), 1); break;
            case Indicator::Indeterminate: record.vector.clear(index_of(*kind)); break;
            }
            record.reports.push_back(std::move(report));
            last_report = &record.reports.back();
            if (!config.full_pass && last_report->indicator == Indicator::Defect) break;
        }

        Score score = composite_score(record.vector, config.weights);
        record.score = score.value;
        record.partial = score.partial;

        // feedback: all positive reports' feedback, newest first
        for (auto it = record.reports.rbegin(); it != record.reports.rend(); ++it) {
            if (it->indicator != Indicator::Defect || it->feedback.empty()) continue;
            if (!record.feedback.empty()) record.feedback += "\n";
            record.feedback += it->feedback;
        }

        record.cost = price_usage(record.token_usage, config);
        trace.total_cost += record.cost;
        history.push_back(record.score);
        std::string feedback = record.feedback;
        trace.records.push_back(std::move(record));

        TerminationDecision decision = should_terminate(history, config.termination);
        if (decision.kind != TerminationKind::Continue) {
            trace.outcome = decision.kind;
            break;
        }
        try {
            GenerationResult revision = generator.revise(current, feedback);
            current = std::move(revision.mcq);
            pending_usage = std::move(revision.usage);
        } catch (const GenerationFailed&) {
            trace.outcome = TerminationKind::Budget; // aborted: partial trace
            break;
        } catch (const LlmError&) {
            trace.outcome = TerminationKind::Budget; // generator transport gave out
            break;
        }
    }
    return trace;
}

} // namespace

Trace refine(const Mcq& initial, const DetectorSuite& detectors, GeneratorAgent& generator,
             const RefineConfig& config) {
    return refine_loop(initial, {}, detectors, generator, config);
}

Trace refine(const GenerationSpec& spec, const DetectorSuite& detectors,
             GeneratorAgent& generator, const RefineConfig& config) {
    GenerationResult initial;
    try {
        initial = generator.generate(spec);
    } catch (const GenerationFailed&) {
        Trace trace;
        trace.weights = config.weights;
        trace.termination = config.termination;
        trace.outcome = TerminationKind::Budget;
        return trace; // nothing was ever produced
    }
    return refine_loop(std::move(initial.mcq), std::move(initial.usage), detectors, generator,
                       config);
}

std::vector<BatchOutcome> run_batch(const std::vector<RefineItem>& items,
                                    const DetectorSuite& detectors,
                                    const std::function<std::unique_ptr<GeneratorAgent>(
                                        std::size_t)>& generator_factory,
                                    const RefineConfig& config, int workers) {
    std::vector<BatchOutcome> outcomes(items.size());
    if (items.empty()) return outcomes;
    int pool = std::max(1, std::min<int>(workers, static_cast<int>(items.size())));
    std::atomic<std::size_t> cursor{0};
    std::vector<std::thread> threads;
    threads.reserve(pool);
    for (int w = 0; w < pool; ++w) {
        threads.emplace_back([&] {
            for (;;) {
                std::size_t index = cursor.fetch_add(1);
                if (index >= items.size()) return;
                try {
                    auto generator = generator_factory(index);
                    outcomes[index].trace = std::visit(
                        [&](const auto& initial) {
                            return refine(initial, detectors, *generator, config);
                        },
                        items[index]);
                } catch (const std::exception& e) {
                    outcomes[index].error = e.what();
                }
            }
        });
    }
    for (std::thread& t : threads) t.join();
    return outcomes;
}

} // namespace qrefine
