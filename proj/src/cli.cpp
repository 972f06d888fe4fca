#include "qrefine/cli.hpp"

#include "qrefine/agents.hpp"
#include "qrefine/config.hpp"
#include "qrefine/detectors.hpp"
#include "qrefine/orchestrator.hpp"
#include "qrefine/scripted.hpp"
#include "qrefine/simulator.hpp"
#include "qrefine/trace.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace qrefine {

namespace {

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitFindings = 1;
constexpr int kExitUsage = 2;

struct CliError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// flag-layer values; only applied when the user actually passed them
struct Overrides {
    std::optional<double> epsilon1, epsilon2;
    std::optional<int> t_max, workers;
    std::optional<std::string> weights_csv, kb, out_dir, prompts, routing;
    std::optional<std::string> model_generator, model_detector;
    bool full_pass = false;
    bool full_pass_set = false;
};

RunConfig build_config(const std::string& config_file, const Overrides& overrides) {
    RunConfig config;
    if (!config_file.empty()) apply_config_file(config, config_file);
    apply_env(config);
    if (overrides.epsilon1) config.termination.epsilon1 = *overrides.epsilon1;
    if (overrides.epsilon2) config.termination.epsilon2 = *overrides.epsilon2;
    if (overrides.t_max) config.termination.t_max = *overrides.t_max;
    if (overrides.workers) config.workers = *overrides.workers;
    if (overrides.kb) config.kb_path = *overrides.kb;
    if (overrides.out_dir) config.output_dir = *overrides.out_dir;
    if (overrides.prompts) config.prompts_dir = *overrides.prompts;
    if (overrides.routing) config.routing = *overrides.routing;
    if (overrides.model_generator) config.llm.model_generator = *overrides.model_generator;
    if (overrides.model_detector) config.llm.model_detector = *overrides.model_detector;
    if (overrides.full_pass_set) config.full_pass = overrides.full_pass;
    if (overrides.weights_csv) {
        std::array<double, 4> w{};
        std::istringstream in(*overrides.weights_csv);
        std::string part;
        int i = 0;
        while (std::getline(in, part, ',') && i < 4) w[i++] = std::stod(part);
        if (i != 4) throw CliError("--weights needs four comma-separated numbers");
        config.weights = Weights{w[0], w[1], w[2], w[3]};
    }
    auto problems = config.validate();
    if (!problems.empty()) {
        std::string all;
        for (const auto& p : problems) all += (all.empty() ? "" : "; ") + p;
        throw CliError("invalid configuration: " + all);
    }
    return config;
}

// Reads MCQ records from a .json (object or array) or .jsonl file.
// Returns raw JSON values with the source line for error messages.
std::vector<std::pair<nlohmann::json, int>> read_mcq_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CliError("cannot open input file: " + path);
    std::vector<std::pair<nlohmann::json, int>> records;
    if (fs::path(path).extension() == ".jsonl") {
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            try {
                records.emplace_back(nlohmann::json::parse(line), line_no);
            } catch (const nlohmann::json::parse_error& e) {
                throw CliError("malformed JSON on line " + std::to_string(line_no) + " of " +
                               path + ": " + e.what());
            }
        }
    } else {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            // nlohmann parse errors carry the line and column
            throw CliError("malformed JSON in " + path + ": " + e.what());
        }
        if (j.is_array()) {
            int index = 0;
            for (auto& element : j) records.emplace_back(std::move(element), ++index);
        } else {
            records.emplace_back(std::move(j), 1);
        }
    }
    if (records.empty()) throw CliError("no MCQ records found in " + path);
    return records;
}

std::string sanitize_id(const std::string& id) {
    std::string out;
    for (char c : id)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    return out.empty() ? "mcq" : out;
}

// --- validate -----------------------------------------------------------

int cmd_validate(const std::string& input, const RunConfig& config, bool json_out) {
    if (config.kb_path.empty())
        throw CliError("the validate command needs a knowledge base (--kb or config 'kb')");
    KnowledgeBase kb = load_kb(config.kb_path);
    DetectorSuite suite(&kb, config.detectors);

    auto records = read_mcq_records(input);
    bool malformed = false;
    bool findings = false;
    nlohmann::json results = nlohmann::json::array();
    std::vector<std::string> table;

    for (const auto& [raw, line_no] : records) {
        McqValidation validation = validate_mcq(raw);
        if (!validation.ok()) {
            malformed = true;
            for (const ValidationIssue& issue : validation.issues)
                std::cerr << input << " record " << line_no << ": " << to_string(issue.code)
                          << " [" << issue.field << "] " << issue.message << "\n";
            continue;
        }
        const Mcq& mcq = *validation.mcq;
        HallucinationVector vector;
        nlohmann::json reports = nlohmann::json::array();
        std::vector<DetectorReport> all;
        for (DetectorKind kind : config.static_order) {
            DetectorReport report = suite.run(kind, mcq);
            switch (report.indicator) {
            case Indicator::Clear: vector.set(index_of(kind), 0); break;
            case Indicator::Defect: vector.set(index_of(kind), 1); break;
            case Indicator::Indeterminate: vector.clear(index_of(kind)); break;
            }
            all.push_back(std::move(report));
        }
        Score score = composite_score(vector, config.weights);
        if (!(score.value < config.termination.epsilon1)) findings = true;

        if (json_out) {
            nlohmann::json entry{
                {"id", mcq.id},
                {"vector", vector_to_json(vector)},
                {"score", score.value},
                {"partial", score.partial},
            };
            for (const DetectorReport& report : all) reports.push_back(report_to_json(report));
            entry["reports"] = std::move(reports);
            results.push_back(std::move(entry));
        } else {
            auto cell = [&vector](int i) {
                auto c = vector.get(i);
                return c ? std::to_string(*c) : std::string("?");
            };
            char row[256];
            std::snprintf(row, sizeof(row), "%-24s %-3s %-3s %-3s %-3s %-8.4f %s", mcq.id.c_str(),
                          cell(0).c_str(), cell(1).c_str(), cell(2).c_str(), cell(3).c_str(),
                          score.value, score.partial ? "partial" : "");
            table.push_back(row);
            for (const DetectorReport& report : all)
                if (report.indicator == Indicator::Defect)
                    for (const Finding& f : report.evidence)
                        table.push_back("    [" + to_string(report.kind) + "] " + f.kind + ": " +
                                        f.detail);
        }
    }

    if (json_out) {
        std::cout << results.dump() << "\n";
    } else {
        std::printf("%-24s %-3s %-3s %-3s %-3s %-8s %s\n", "ID", "H1", "H2", "H3", "H4", "SCORE",
                    "");
        for (const std::string& row : table) std::cout << row << "\n";
    }
    if (malformed) return kExitUsage;
    return findings ? kExitFindings : kExitOk;
}

// --- refine ---------------------------------------------------------------

struct TransportChoice {
    std::string kind; // live | fixtures | scripted
    std::string arg;  // directory or file
};

TransportChoice parse_transport(const std::string& flag) {
    if (flag == "live") return {"live", ""};
    if (flag.rfind("fixtures:", 0) == 0) return {"fixtures", flag.substr(9)};
    if (flag.rfind("scripted:", 0) == 0) return {"scripted", flag.substr(9)};
    throw CliError("--transport must be live, fixtures:DIR, or scripted:FILE");
}

int cmd_refine(const std::string& input, const std::string& transport_flag,
               const RunConfig& config, bool json_out) {
    if (transport_flag.empty())
        throw CliError("the refine command needs --transport {live,fixtures:DIR,scripted:FILE}");
    TransportChoice transport = parse_transport(transport_flag);

    // all four detector kinds must be available, so the factual check
    // needs its reference knowledge base up front
    if (config.kb_path.empty())
        throw CliError("the refine command needs a knowledge base (--kb or config 'kb')");
    KnowledgeBase kb = load_kb(config.kb_path);
    RefineConfig refine_config = config.refine_config();

    // assemble items + agents per transport
    std::vector<RefineItem> items;
    std::function<std::unique_ptr<GeneratorAgent>(std::size_t)> factory;
    std::shared_ptr<Gateway> gateway;
    std::unique_ptr<LlmDetector> escalator;
    PromptLibrary prompts = config.prompts_dir.empty()
                                ? PromptLibrary()
                                : PromptLibrary::with_overrides(config.prompts_dir);

    if (transport.kind == "scripted") {
        ScriptedScenario scenario = load_scenario(transport.arg);
        if (scenario.full_pass) refine_config.full_pass = *scenario.full_pass;
        items.emplace_back(scenario.initial);
        factory = [scenario](std::size_t) -> std::unique_ptr<GeneratorAgent> {
            return std::make_unique<ScriptedGenerator>(scenario);
        };
    } else {
        std::shared_ptr<Transport> wire;
        if (transport.kind == "fixtures") {
            wire = std::make_shared<FixtureTransport>(
                FixtureTransport::from_directory(transport.arg));
        } else {
            wire = std::make_shared<HttpTransport>(config.llm.base_url, config.llm.api_key);
        }
        gateway = std::make_shared<Gateway>(wire, config.costs);
        if (config.llm.rate_limit_rpm > 0)
            gateway->set_rate_limit_per_minute(config.llm.rate_limit_rpm);
        escalator = std::make_unique<LlmDetector>(*gateway, prompts, config.llm.model_detector,
                                                  config.llm.temperature_detector);
        if (input.empty())
            throw CliError("refine needs an MCQ or manifest input file for this transport");
        for (const auto& [raw, line_no] : read_mcq_records(input)) {
            // a manifest object lists MCQs and generation specs side by side
            if (raw.is_object() && raw.contains("items")) {
                for (const auto& item : raw["items"]) {
                    if (item.contains("mcq")) {
                        McqValidation validation = validate_mcq(item["mcq"]);
                        if (!validation.ok())
                            throw CliError("manifest mcq item is invalid: " +
                                           validation.issues.front().message);
                        items.emplace_back(*validation.mcq);
                    } else if (item.contains("spec")) {
                        const auto& s = item["spec"];
                        GenerationSpec spec;
                        spec.subject = s.value("subject", "");
                        spec.topic = s.value("topic", "");
                        spec.difficulty = s.value("difficulty", "medium");
                        spec.style = s.value("style", "");
                        if (spec.subject.empty() || spec.topic.empty())
                            throw CliError("manifest spec items need subject and topic");
                        items.emplace_back(std::move(spec));
                    } else {
                        throw CliError("manifest items must carry 'mcq' or 'spec'");
                    }
                }
                continue;
            }
            McqValidation validation = validate_mcq(raw);
            if (!validation.ok())
                throw CliError("record " + std::to_string(line_no) + " in " + input +
                               " is not a valid MCQ: " + validation.issues.front().message);
            items.emplace_back(*validation.mcq);
        }
        if (items.empty()) throw CliError("no refine items found in " + input);
        factory = [&](std::size_t) -> std::unique_ptr<GeneratorAgent> {
            return std::make_unique<LlmGenerator>(*gateway, prompts, config.llm.model_generator,
                                                  config.llm.temperature_generator,
                                                  config.llm.max_output_tokens);
        };
    }

    DetectorSuite suite(&kb, config.detectors, escalator.get());
    auto outcomes = run_batch(items, suite, factory, refine_config, config.workers);

    fs::create_directories(config.output_dir);
    bool all_converged = true;
    nlohmann::json summaries = nlohmann::json::array();
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const BatchOutcome& outcome = outcomes[i];
        std::string id = std::visit(
            [](const auto& item) -> std::string {
                if constexpr (std::is_same_v<std::decay_t<decltype(item)>, Mcq>)
                    return item.id;
                else
                    return item.topic;
            },
            items[i]);
        if (!outcome.trace) {
            all_converged = false;
            if (json_out)
                summaries.push_back({{"id", id}, {"error", outcome.error}});
            else
                std::cout << id << ": FAILED (" << outcome.error << ")\n";
            continue;
        }
        const Trace& trace = *outcome.trace;
        std::string file =
            (fs::path(config.output_dir) / ("trace_" + sanitize_id(id) + ".jsonl")).string();
        std::ofstream out(file, std::ios::binary);
        write_trace(out, trace);
        int iterations = trace.records.empty() ? 0 : trace.records.back().t;
        double final_score = trace.records.empty() ? 1.0 : trace.records.back().score;
        if (trace.outcome != TerminationKind::Converged) all_converged = false;
        if (json_out) {
            summaries.push_back({{"id", id},
                                 {"outcome", to_string(trace.outcome)},
                                 {"iterations", iterations},
                                 {"final_score", final_score},
                                 {"total_cost", trace.total_cost.to_string()},
                                 {"trace_file", file}});
        } else {
            char line[512];
            std::snprintf(line, sizeof(line),
                          "%s: outcome=%s iterations=%d final_score=%.4f cost=$%s trace=%s",
                          id.c_str(), to_string(trace.outcome).c_str(), iterations, final_score,
                          trace.total_cost.display().c_str(), file.c_str());
            std::cout << line << "\n";
        }
    }
    if (json_out) std::cout << summaries.dump() << "\n";
    return all_converged ? kExitOk : kExitFindings;
}

// --- simulate -------------------------------------------------------------

int cmd_simulate(const std::string& params_file, std::optional<std::uint64_t> seed,
                 const std::string& out_csv, bool json_out) {
    SimParams params = load_sim_params(params_file);
    if (seed) params.seed = *seed;
    auto problems = params.validate();
    if (!problems.empty()) {
        for (const auto& p : problems) std::cerr << "invalid sim params: " << p << "\n";
        return kExitUsage;
    }
    SimCurve curve = run_convergence(params);
    std::string csv = curve.to_csv();

    auto reduction_at = [&curve](int t) -> std::optional<double> {
        if (t < 0 || t >= static_cast<int>(curve.pct_reduction.size())) return std::nullopt;
        return curve.pct_reduction[t];
    };

    if (!out_csv.empty()) {
        std::ofstream out(out_csv, std::ios::binary);
        if (!out) throw CliError("cannot write CSV to " + out_csv);
        out << csv;
    }

    if (json_out) {
        nlohmann::json summary{
            {"params", sim_params_to_json(params)},
            {"final_mean_score", curve.mean_score.back()},
            {"csv", csv},
        };
        if (auto r = reduction_at(1)) summary["reduction_t1"] = *r;
        if (auto r = reduction_at(7)) summary["reduction_t7"] = *r;
        std::cout << summary.dump() << "\n";
    } else {
        std::ostream& csv_sink = std::cout;
        if (out_csv.empty()) csv_sink << csv;
        std::ostream& info = out_csv.empty() ? std::cerr : std::cout;
        if (auto r = reduction_at(1))
            info << "reduction at t=1: " << (*r * 100.0) << "%\n";
        if (auto r = reduction_at(7))
            info << "reduction at t=7: " << (*r * 100.0) << "%\n";
        info << "final mean score: " << curve.mean_score.back() << "\n";
    }
    return kExitOk;
}

// --- report ---------------------------------------------------------------

int cmd_report(const std::vector<std::string>& paths, const RunConfig& config, bool json_out) {
    std::vector<std::string> files;
    for (const std::string& path : paths) {
        if (fs::is_directory(path)) {
            std::vector<fs::path> found;
            for (const auto& entry : fs::directory_iterator(path))
                if (entry.path().extension() == ".jsonl") found.push_back(entry.path());
            std::sort(found.begin(), found.end());
            for (const auto& f : found) files.push_back(f.string());
        } else {
            files.push_back(path);
        }
    }

    std::vector<Trace> traces;
    for (const std::string& file : files) {
        try {
            traces.push_back(load_trace(file));
        } catch (const std::exception& e) {
            std::cerr << "skipping unreadable trace " << file << ": " << e.what() << "\n";
        }
    }
    if (traces.empty()) {
        std::cerr << "no readable traces\n";
        return kExitUsage;
    }

    std::map<std::string, int> outcomes;
    Money total_cost;
    std::int64_t total_in = 0, total_out = 0;
    double iterations_sum = 0;
    int converged = 0;
    for (const Trace& trace : traces) {
        outcomes[to_string(trace.outcome)]++;
        total_cost += trace.total_cost;
        for (const IterationRecord& record : trace.records)
            for (const TokenUsage& usage : record.token_usage) {
                total_in += usage.input;
                total_out += usage.output;
            }
        if (trace.outcome == TerminationKind::Converged && !trace.records.empty()) {
            iterations_sum += trace.records.back().t;
            ++converged;
        }
    }
    std::optional<double> mean_iterations;
    if (converged > 0) mean_iterations = iterations_sum / converged;

    nlohmann::json projected = nlohmann::json::object();
    for (const std::string& model : config.costs.models())
        projected[model] = accrue_cost(total_in, total_out, model, config.costs).to_string();

    if (json_out) {
        nlohmann::json j{
            {"traces", traces.size()},
            {"outcomes", outcomes},
            {"mean_iterations_to_convergence",
             mean_iterations ? nlohmann::json(*mean_iterations) : nlohmann::json(nullptr)},
            {"total_cost", total_cost.to_string()},
            {"mean_cost", Money::from_pico(total_cost.pico() / traces.size()).to_string()},
            {"total_tokens", {{"input", total_in}, {"output", total_out}}},
            {"projected_cost", std::move(projected)},
        };
        std::cout << j.dump() << "\n";
    } else {
        std::cout << "traces: " << traces.size() << "\n";
        std::cout << "outcomes:";
        for (const auto& [name, count] : outcomes) std::cout << " " << name << "=" << count;
        std::cout << "\n";
        if (mean_iterations)
            std::cout << "mean iterations to convergence: " << *mean_iterations << "\n";
        std::cout << "total cost: $" << total_cost.display() << "\n";
        std::cout << "mean cost: $" << Money::from_pico(total_cost.pico() / traces.size()).display()
                  << "\n";
        std::cout << "total tokens: input=" << total_in << " output=" << total_out << "\n";
        std::cout << "projected cost per model (same token volume):\n";
        for (const auto& [model, cost] : projected.items())
            std::cout << "  " << model << ": $" << Money::parse(cost.get<std::string>()).display()
                      << "\n";
    }
    return kExitOk;
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Generate, score, and iteratively refine multiple-choice questions"};
    app.require_subcommand(1);

    std::string config_file;
    bool json_out = false;
    std::optional<std::uint64_t> seed;
    std::string transport;
    Overrides overrides;

    app.add_option("--config", config_file, "JSON config file")->configurable(false);
    app.add_flag("--json", json_out, "machine-readable output");
    app.add_option("--seed", seed, "seed override");
    app.add_option("--transport", transport, "live | fixtures:DIR | scripted:FILE");
    app.add_option("--epsilon1", overrides.epsilon1, "convergence threshold");
    app.add_option("--epsilon2", overrides.epsilon2, "stall threshold");
    app.add_option("--t-max", overrides.t_max, "iteration budget");
    app.add_option("--weights", overrides.weights_csv, "w1,w2,w3,w4");
    app.add_option("--kb", overrides.kb, "knowledge base file");
    app.add_option("--out", overrides.out_dir, "output directory");
    app.add_option("--prompts", overrides.prompts, "prompt template override directory");
    app.add_option("--routing", overrides.routing, "static | cooccurrence");
    app.add_option("--workers", overrides.workers, "batch worker cap");
    app.add_option("--model-generator", overrides.model_generator, "generator model name");
    app.add_option("--model-detector", overrides.model_detector, "detector model name");
    auto* full_pass_flag =
        app.add_flag("--full-pass", overrides.full_pass, "run all detectors every iteration");

    std::string validate_input;
    auto* validate_cmd =
        app.add_subcommand("validate", "score MCQs once against the four detectors");
    validate_cmd->add_option("input", validate_input, "MCQ .json or .jsonl file")->required();
    validate_cmd->fallthrough();

    std::string refine_input;
    auto* refine_cmd = app.add_subcommand("refine", "run the iterative refinement loop");
    refine_cmd->add_option("input", refine_input, "MCQ .json or .jsonl file");
    refine_cmd->fallthrough();

    std::string params_file, sim_out;
    auto* simulate_cmd = app.add_subcommand("simulate", "stochastic convergence simulation");
    simulate_cmd->add_option("--params", params_file, "SimParams JSON file")->required();
    simulate_cmd->add_option("--csv", sim_out, "write the curve CSV here");
    simulate_cmd->fallthrough();

    std::vector<std::string> report_paths;
    auto* report_cmd = app.add_subcommand("report", "aggregate statistics over trace files");
    report_cmd->add_option("traces", report_paths, "trace files or directories")->required();
    report_cmd->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }
    overrides.full_pass_set = full_pass_flag->count() > 0;

    try {
        if (simulate_cmd->parsed()) return cmd_simulate(params_file, seed, sim_out, json_out);
        RunConfig config = build_config(config_file, overrides);
        if (validate_cmd->parsed()) return cmd_validate(validate_input, config, json_out);
        if (refine_cmd->parsed()) return cmd_refine(refine_input, transport, config, json_out);
        if (report_cmd->parsed()) return cmd_report(report_paths, config, json_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}

} // namespace qrefine
