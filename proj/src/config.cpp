#include "qrefine/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

namespace qrefine {

RoutingPolicy RunConfig::routing_policy() const {
    if (routing == "cooccurrence" && cooccurrence) {
        RoutingPolicy policy = RoutingPolicy::cooccurrence_priority(*cooccurrence);
        policy.static_order = static_order;
        return policy;
    }
    RoutingPolicy policy = RoutingPolicy::static_default();
    policy.static_order = static_order;
    if (routing == "cooccurrence") {
        // no matrix given: uniform rows, equivalent to the static fallback
        std::array<std::array<double, kDetectorKindCount>, kDetectorKindCount> uniform;
        for (auto& row : uniform) row.fill(1.0);
        policy = RoutingPolicy::cooccurrence_priority(uniform);
        policy.static_order = static_order;
    }
    return policy;
}

RefineConfig RunConfig::refine_config() const {
    RefineConfig config;
    config.weights = weights;
    config.termination = termination;
    config.routing = routing_policy();
    config.full_pass = full_pass;
    config.costs = costs;
    config.generator_model = llm.model_generator;
    config.detector_model = llm.model_detector;
    return config;
}

std::vector<std::string> RunConfig::validate() const {
    std::vector<std::string> problems;
    if (!weights_valid(weights))
        problems.push_back("weights.w1..w4 must be nonnegative and sum to 1");
    if (!termination.valid())
        problems.push_back("termination thresholds must lie in (0,1) and t_max must be >= 1");
    if (detectors.jaccard_threshold < 0 || detectors.jaccard_threshold > 1)
        problems.push_back("detectors.factual.jaccard_threshold must lie in [0,1]");
    if (detectors.max_exponent < 1)
        problems.push_back("detectors.math.max_exponent must be >= 1");
    if (!kb_path.empty() && !std::filesystem::exists(kb_path))
        problems.push_back("kb path does not exist: " + kb_path);
    if (!prompts_dir.empty() && !std::filesystem::is_directory(prompts_dir))
        problems.push_back("prompts directory does not exist: " + prompts_dir);
    if (routing != "static" && routing != "cooccurrence")
        problems.push_back("orchestrator.routing must be 'static' or 'cooccurrence'");
    if (workers < 1) problems.push_back("orchestrator.workers must be >= 1");
    std::set<DetectorKind> order(static_order.begin(), static_order.end());
    if (order.size() != kDetectorKindCount)
        problems.push_back("orchestrator.static_order must be a permutation of the 4 kinds");
    return problems;
}

namespace {

Money money_from_json(const nlohmann::json& j) {
    if (j.is_string()) return Money::parse(j.get<std::string>());
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.12f", j.get<double>());
    return Money::parse(buffer);
}

} // namespace

void apply_config_json(RunConfig& config, const nlohmann::json& j) {
    if (j.contains("weights")) {
        const auto& w = j["weights"];
        config.weights.w1 = w.value("w1", config.weights.w1);
        config.weights.w2 = w.value("w2", config.weights.w2);
        config.weights.w3 = w.value("w3", config.weights.w3);
        config.weights.w4 = w.value("w4", config.weights.w4);
    }
    if (j.contains("termination")) {
        const auto& t = j["termination"];
        config.termination.epsilon1 = t.value("epsilon1", config.termination.epsilon1);
        config.termination.epsilon2 = t.value("epsilon2", config.termination.epsilon2);
        config.termination.t_max = t.value("t_max", config.termination.t_max);
    }
    if (j.contains("detectors")) {
        const auto& d = j["detectors"];
        if (d.contains("factual"))
            config.detectors.jaccard_threshold =
                d["factual"].value("jaccard_threshold", config.detectors.jaccard_threshold);
        if (d.contains("math"))
            config.detectors.max_exponent =
                d["math"].value("max_exponent", config.detectors.max_exponent);
    }
    if (j.contains("llm")) {
        const auto& l = j["llm"];
        config.llm.model_generator = l.value("model_generator", config.llm.model_generator);
        config.llm.model_detector = l.value("model_detector", config.llm.model_detector);
        config.llm.rate_limit_rpm = l.value("rate_limit_rpm", config.llm.rate_limit_rpm);
        config.llm.temperature_generator =
            l.value("temperature_generator", config.llm.temperature_generator);
        config.llm.temperature_detector =
            l.value("temperature_detector", config.llm.temperature_detector);
        config.llm.max_output_tokens = l.value("max_output_tokens", config.llm.max_output_tokens);
        config.llm.base_url = l.value("base_url", config.llm.base_url);
    }
    if (j.contains("cost_model")) {
        for (const auto& [model, price] : j["cost_model"].items()) {
            if (price.is_object())
                config.costs.set_split_price(model, money_from_json(price.at("input")),
                                             money_from_json(price.at("output")));
            else
                config.costs.set_price(model, money_from_json(price));
        }
    }
    config.kb_path = j.value("kb", config.kb_path);
    config.prompts_dir = j.value("prompts", config.prompts_dir);
    config.output_dir = j.value("output_dir", config.output_dir);
    if (j.contains("orchestrator")) {
        const auto& o = j["orchestrator"];
        config.routing = o.value("routing", config.routing);
        config.full_pass = o.value("full_pass", config.full_pass);
        config.workers = o.value("workers", config.workers);
        if (o.contains("static_order")) {
            const auto& order = o["static_order"];
            if (!order.is_array() || order.size() != kDetectorKindCount)
                throw std::runtime_error("orchestrator.static_order must list all 4 kinds");
            for (int i = 0; i < kDetectorKindCount; ++i) {
                auto kind = detector_kind_from_string(order[i].get<std::string>());
                if (!kind)
                    throw std::runtime_error("unknown detector kind in static_order: " +
                                             order[i].dump());
                config.static_order[i] = *kind;
            }
        }
        if (o.contains("cooccurrence")) {
            const auto& m = o["cooccurrence"];
            if (!m.is_array() || m.size() != kDetectorKindCount)
                throw std::runtime_error("orchestrator.cooccurrence must be a 4x4 matrix");
            std::array<std::array<double, kDetectorKindCount>, kDetectorKindCount> matrix{};
            for (int r = 0; r < kDetectorKindCount; ++r) {
                if (!m[r].is_array() || m[r].size() != kDetectorKindCount)
                    throw std::runtime_error("orchestrator.cooccurrence rows must have 4 entries");
                for (int c = 0; c < kDetectorKindCount; ++c) matrix[r][c] = m[r][c].get<double>();
            }
            config.cooccurrence = matrix;
        }
    }
}

void apply_config_file(RunConfig& config, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    apply_config_json(config, j);
}

void apply_env(RunConfig& config, const EnvGetter& getenv_fn) {
    auto get = [&getenv_fn](const char* name) -> std::optional<std::string> {
        const char* value = getenv_fn(name);
        if (value && *value) return std::string(value);
        return std::nullopt;
    };
    if (auto v = get("QREFINE_API_KEY"))
        config.llm.api_key = *v;
    else if (auto fallback = get("OPENAI_API_KEY"))
        config.llm.api_key = *fallback;
    if (auto v = get("QREFINE_BASE_URL"))
        config.llm.base_url = *v;
    else if (auto fallback = get("OPENAI_BASE_URL"))
        config.llm.base_url = *fallback;
    if (auto v = get("QREFINE_MODEL_GENERATOR")) config.llm.model_generator = *v;
    if (auto v = get("QREFINE_MODEL_DETECTOR")) config.llm.model_detector = *v;
    if (auto v = get("QREFINE_RATE_LIMIT_RPM")) config.llm.rate_limit_rpm = std::stod(*v);
    if (auto v = get("QREFINE_EPSILON1")) config.termination.epsilon1 = std::stod(*v);
    if (auto v = get("QREFINE_EPSILON2")) config.termination.epsilon2 = std::stod(*v);
    if (auto v = get("QREFINE_T_MAX")) config.termination.t_max = std::stoi(*v);
    if (auto v = get("QREFINE_KB")) config.kb_path = *v;
    if (auto v = get("QREFINE_JACCARD_THRESHOLD"))
        config.detectors.jaccard_threshold = std::stod(*v);
}

void apply_env(RunConfig& config) {
    apply_env(config, [](const char* name) { return std::getenv(name); });
}

} // namespace qrefine
