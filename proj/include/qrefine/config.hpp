#pragma once

#include "qrefine/detectors.hpp"
#include "qrefine/llm.hpp"
#include "qrefine/orchestrator.hpp"
#include "qrefine/scoring.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace qrefine {

struct LlmSettings {
    std::string model_generator = "gpt-4.1-nano";
    std::string model_detector = "gpt-4.1-nano";
    double rate_limit_rpm = 0; // 0 = unlimited
    double temperature_generator = 0.8;
    double temperature_detector = 0.0;
    int max_output_tokens = 2048;
    std::string base_url = "https://api.openai.com/v1";
    std::string api_key; // env only, never from the config file
};

/**
 * Merged run configuration. Layers apply in precedence order
 * flags > environment > config file > defaults; the CLI owns the flag
 * layer, apply_file and apply_env own the other two.
 */
struct RunConfig {
    Weights weights{};
    TerminationConfig termination{};
    DetectorConfig detectors{};
    LlmSettings llm{};
    CostModel costs = CostModel::defaults();
    std::string kb_path;
    std::string prompts_dir;
    std::string output_dir = ".";
    std::string routing = "static"; // static | cooccurrence
    std::array<DetectorKind, kDetectorKindCount> static_order{
        DetectorKind::Solvability, DetectorKind::Math, DetectorKind::Factual,
        DetectorKind::Consistency};
    std::optional<std::array<std::array<double, kDetectorKindCount>, kDetectorKindCount>>
        cooccurrence;
    bool full_pass = false;
    int workers = 4;

    RoutingPolicy routing_policy() const;
    RefineConfig refine_config() const;

    // Referenced paths must exist, the simplex must hold, thresholds must
    // be in range. Returns one message per violation.
    std::vector<std::string> validate() const;
};

// Applies the JSON config file onto a config (file layer).
void apply_config_file(RunConfig& config, const std::string& path);
void apply_config_json(RunConfig& config, const nlohmann::json& j);

// Environment layer. Getter is injectable for tests; falls back to
// OPENAI_API_KEY / OPENAI_BASE_URL for the two standard variables.
using EnvGetter = std::function<const char*(const char*)>;
void apply_env(RunConfig& config, const EnvGetter& getenv_fn);
void apply_env(RunConfig& config);

} // namespace qrefine
