#include "qrefine/scripted.hpp"

#include <fstream>

namespace qrefine {

namespace {

Mcq parse_scenario_mcq(const nlohmann::json& j, const std::string& where) {
    McqValidation validation = validate_mcq(j);
    if (!validation.ok())
        throw std::runtime_error("scenario " + where + " is not a valid MCQ: " +
                                 validation.issues.front().message);
    return *validation.mcq;
}

} // namespace

ScriptedScenario scenario_from_json(const nlohmann::json& j) {
    ScriptedScenario scenario;
    scenario.name = j.value("name", "scenario");
    scenario.initial = parse_scenario_mcq(j.at("initial_mcq"), "initial_mcq");
    if (j.contains("revisions"))
        for (std::size_t i = 0; i < j["revisions"].size(); ++i)
            scenario.revisions.push_back(
                parse_scenario_mcq(j["revisions"][i], "revisions[" + std::to_string(i) + "]"));
    scenario.mode = j.value("mode", "sequence");
    if (scenario.mode != "sequence" && scenario.mode != "no_change" && scenario.mode != "fail")
        throw std::runtime_error("scenario mode must be sequence, no_change, or fail");
    scenario.fail_at_call = j.value("fail_at_call", 0);
    if (j.contains("token_usage_per_call")) {
        scenario.tokens_in_per_call = j["token_usage_per_call"].value("input", 0);
        scenario.tokens_out_per_call = j["token_usage_per_call"].value("output", 0);
    }
    if (j.contains("full_pass")) scenario.full_pass = j["full_pass"].get<bool>();
    return scenario;
}

ScriptedScenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file: " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    return scenario_from_json(j);
}

GenerationResult ScriptedGenerator::make_result(Mcq mcq) {
    GenerationResult result;
    result.mcq = std::move(mcq);
    if (scenario_.tokens_in_per_call > 0 || scenario_.tokens_out_per_call > 0)
        result.usage.push_back(
            {"generator", scenario_.tokens_in_per_call, scenario_.tokens_out_per_call});
    return result;
}

GenerationResult ScriptedGenerator::generate(const GenerationSpec&) {
    int call = calls_++;
    if (scenario_.mode == "fail" && call >= scenario_.fail_at_call)
        throw GenerationFailed("scripted generator failure at call " + std::to_string(call), "",
                               0);
    return make_result(scenario_.initial);
}

GenerationResult ScriptedGenerator::revise(const Mcq& prior, const std::string&) {
    int call = calls_++;
    if (scenario_.mode == "fail" && call >= scenario_.fail_at_call)
        throw GenerationFailed("scripted generator failure at call " + std::to_string(call), "",
                               0);
    if (scenario_.mode == "sequence" && next_revision_ < scenario_.revisions.size())
        return make_result(scenario_.revisions[next_revision_++]);
    return make_result(prior);
}

} // namespace qrefine
