#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qrefine/agents.hpp"
#include "qrefine/detectors.hpp"
#include "qrefine/llm.hpp"
#include "qrefine/mcq.hpp"
#include "qrefine/simulator.hpp"
#include "qrefine/trace.hpp"

#include "helpers.hpp"

#include <filesystem>

using namespace qrefine;
using qtest::data_path;
using qtest::run_cli;

namespace {

std::string kb_arg() { return " --kb " + data_path("kb_basic.txt"); }

} // namespace

TEST_CASE("validate: clean MCQ scores 0 and exits 0") {
    auto result = run_cli("validate " + data_path("mcq_clean.json") + kb_arg() + " --json");
    CHECK(result.exit_code == 0);
    auto j = nlohmann::json::parse(result.output);
    REQUIRE(j.size() == 1);
    CHECK(j[0]["id"] == "clean-1");
    CHECK(j[0]["score"] == 0.0);
    CHECK_FALSE(j[0]["partial"].get<bool>());
    // machine output round-trips through the artifact's own parsers
    HallucinationVector vector = vector_from_json(j[0]["vector"]);
    CHECK(vector.fully_checked());
    for (const auto& rj : j[0]["reports"]) {
        DetectorReport report = report_from_json(rj);
        CHECK(report.indicator == Indicator::Clear);
    }
}

TEST_CASE("validate: math defect scores 0.25 and exits 1") {
    auto result = run_cli("validate " + data_path("mcq_math_defect.json") + kb_arg() + " --json");
    CHECK(result.exit_code == 1);
    auto j = nlohmann::json::parse(result.output);
    CHECK(j[0]["score"] == 0.25);
    CHECK(j[0]["vector"]["h4"] == 1);
}

TEST_CASE("validate: human table mentions the id and score") {
    auto result = run_cli("validate " + data_path("mcq_math_defect.json") + kb_arg());
    CHECK(result.exit_code == 1);
    CHECK(result.output.find("defect-h4") != std::string::npos);
    CHECK(result.output.find("0.2500") != std::string::npos);
}

TEST_CASE("validate: malformed JSON exits 2 naming the file and line") {
    auto result = run_cli("validate " + data_path("bad_json.json") + kb_arg() + " 2>&1");
    CHECK(result.exit_code == 2);
    CHECK(result.output.find("bad_json.json") != std::string::npos);
    CHECK(result.output.find("line 1") != std::string::npos);
}

TEST_CASE("validate: structurally invalid MCQ exits 2 naming the violation") {
    auto result = run_cli("validate " + data_path("mcq_malformed.json") + kb_arg() + " 2>&1");
    CHECK(result.exit_code == 2);
    CHECK(result.output.find("WrongChoiceCount") != std::string::npos);
}

TEST_CASE("validate: a batch with any defect exits 1") {
    auto result = run_cli("validate " + data_path("mcqs_batch.jsonl") + kb_arg() + " --json");
    CHECK(result.exit_code == 1);
    auto j = nlohmann::json::parse(result.output);
    CHECK(j.size() == 2);
}

TEST_CASE("validate: missing KB is a usage error") {
    auto result = run_cli("validate " + data_path("mcq_clean.json") + " 2>&1");
    CHECK(result.exit_code == 2);
}

TEST_CASE("refine: scripted four-defect scenario converges in 4 iterations") {
    std::string out = qtest::scratch_dir("cli_refine_4d");
    std::string command = "refine --transport scripted:" + data_path("scenario_four_defects.json") +
                          kb_arg() + " --out " + out + " --json";
    auto result = run_cli(command);
    CHECK(result.exit_code == 0);
    auto j = nlohmann::json::parse(result.output);
    REQUIRE(j.size() == 1);
    CHECK(j[0]["outcome"] == "Converged");
    CHECK(j[0]["iterations"] == 4);
    CHECK(j[0]["final_score"] == 0.0);

    Trace trace = load_trace(j[0]["trace_file"].get<std::string>());
    CHECK(trace.score_history() == std::vector<double>{1.0, 0.75, 0.5, 0.25, 0.0});
    CHECK(check_trace(trace).empty());

    // determinism: a second run writes byte-identical trace files
    std::string bytes = qtest::read_file(j[0]["trace_file"].get<std::string>());
    auto again = run_cli(command);
    CHECK(again.exit_code == 0);
    CHECK(qtest::read_file(j[0]["trace_file"].get<std::string>()) == bytes);
}

TEST_CASE("refine: stalled scenario exits 1") {
    std::string out = qtest::scratch_dir("cli_refine_nc");
    auto result = run_cli("refine --transport scripted:" + data_path("scenario_no_change.json") +
                          kb_arg() + " --out " + out + " --json");
    CHECK(result.exit_code == 1);
    auto j = nlohmann::json::parse(result.output);
    CHECK(j[0]["outcome"] == "Stalled");
}

TEST_CASE("refine: fixture transport replays a recorded run deterministically") {
    std::string dir = qtest::scratch_dir("cli_fixtures");
    std::string out = qtest::scratch_dir("cli_refine_fx");

    // the recorded exchange: one revision turn that fixes the math defect
    auto records = nlohmann::json::parse(qtest::read_file(data_path("mcq_math_defect.json")));
    Mcq defective = *validate_mcq(records).mcq;
    std::string feedback = check_math(defective).feedback;

    Mcq fixed = defective;
    fixed.explanation = "3 \xC3\x97 4 = 12. Therefore the answer is A.";

    FixtureTransport probe; // only used to compute the request hash
    Gateway gateway(std::make_shared<FixtureTransport>(probe), CostModel::defaults());
    LlmGenerator generator(gateway, PromptLibrary(), "gpt-4.1-nano", 0.8, 2048);
    GenerationSpec revision;
    revision.subject = defective.subject;
    revision.prior = defective;
    revision.feedback = feedback;
    write_fixture(dir, generator.build_request(revision),
                  ChatResponse{"Reasoning first.\n" + serialize_mcq(fixed), 150, 300});

    std::string command = "refine " + data_path("mcq_math_defect.json") +
                          " --transport fixtures:" + dir + kb_arg() + " --out " + out + " --json";
    auto result = run_cli(command);
    CHECK(result.exit_code == 0);
    auto j = nlohmann::json::parse(result.output);
    REQUIRE(j.size() == 1);
    CHECK(j[0]["outcome"] == "Converged");
    CHECK(j[0]["iterations"] == 1);
    // token usage priced at the nano rate: (150 + 300) x 1e5 pico
    CHECK(j[0]["total_cost"] == "0.000045000000");

    std::string bytes = qtest::read_file(j[0]["trace_file"].get<std::string>());
    auto again = run_cli(command);
    CHECK(qtest::read_file(j[0]["trace_file"].get<std::string>()) == bytes);
}

TEST_CASE("refine: manifest mixes MCQ items and generation-spec items") {
    std::string dir = qtest::scratch_dir("cli_manifest_fx");
    std::string out = qtest::scratch_dir("cli_manifest_out");

    // fixture for the spec item: the generator's first reply is already clean
    Mcq generated = qtest::make_mcq("spawned-1", "What is 6 \xC3\x97 7?",
                                    {"40", "42", "44", "48"}, "B",
                                    "6 \xC3\x97 7 = 42. Therefore the answer is B.");
    Gateway gateway(std::make_shared<FixtureTransport>(), CostModel::defaults());
    LlmGenerator generator(gateway, PromptLibrary(), "gpt-4.1-nano", 0.8, 2048);
    GenerationSpec spec;
    spec.subject = "AP Math";
    spec.topic = "multiplication";
    spec.difficulty = "easy";
    spec.style = "exam";
    write_fixture(dir, generator.build_request(spec),
                  ChatResponse{"Thinking it through.\n" + serialize_mcq(generated), 90, 210});

    nlohmann::json manifest{
        {"items",
         nlohmann::json::array(
             {{{"mcq", nlohmann::json::parse(qtest::read_file(data_path("mcq_clean.json")))}},
              {{"spec",
                {{"subject", "AP Math"}, {"topic", "multiplication"}, {"difficulty", "easy"},
                 {"style", "exam"}}}}})},
    };
    std::string manifest_path = out + "/manifest.json";
    qtest::write_file(manifest_path, manifest.dump());

    auto result = run_cli("refine " + manifest_path + " --transport fixtures:" + dir + kb_arg() +
                          " --out " + out + " --json");
    CHECK(result.exit_code == 0);
    auto j = nlohmann::json::parse(result.output);
    REQUIRE(j.size() == 2);
    CHECK(j[0]["outcome"] == "Converged");
    CHECK(j[1]["outcome"] == "Converged");
    CHECK(j[1]["id"] == "multiplication");
    Trace spawned = load_trace(j[1]["trace_file"].get<std::string>());
    CHECK(spawned.mcq_id == "spawned-1");
    CHECK(spawned.records.size() == 1);
}

TEST_CASE("refine: live transport without an API key is an auth error, exit 2") {
    std::string out = qtest::scratch_dir("cli_refine_live");
    std::string command = "env -u OPENAI_API_KEY -u QREFINE_API_KEY " QREFINE_CLI_PATH " refine " +
                          data_path("mcq_math_defect.json") + " --transport live" + kb_arg() +
                          " --out " + out + " 2>&1";
    qtest::CommandResult result;
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buffer[4096];
    std::size_t n;
    while ((n = fread(buffer, 1, sizeof(buffer), pipe)) > 0) result.output.append(buffer, n);
    int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;

    CHECK(result.exit_code == 2);
    CHECK(result.output.find("API key") != std::string::npos);
}

TEST_CASE("simulate: calibrated scenario reports the expected reductions") {
    std::string out = qtest::scratch_dir("cli_sim");
    auto result = run_cli("simulate --params " + data_path("simparams_calibrated.json") +
                          " --csv " + out + "/curve.csv --json");
    CHECK(result.exit_code == 0);
    auto j = nlohmann::json::parse(result.output);
    CHECK(j["reduction_t1"].get<double>() == doctest::Approx(0.5).epsilon(0.04));
    CHECK(j["reduction_t7"].get<double>() >= 0.99);
    std::string csv = qtest::read_file(out + "/curve.csv");
    CHECK(csv.rfind("iteration,", 0) == 0);
    CHECK(j["csv"] == csv);
    // the emitted params round-trip through the library's own reader
    SimParams params = sim_params_from_json(j["params"]);
    CHECK(run_convergence(params).to_csv() == csv);
}

TEST_CASE("simulate: perfect fixes reach 100% reduction at t=1") {
    auto result = run_cli("simulate --params " + data_path("simparams_perfect_fix.json") +
                          " --json");
    CHECK(result.exit_code == 0);
    auto j = nlohmann::json::parse(result.output);
    CHECK(j["reduction_t1"] == 1.0);
}

TEST_CASE("simulate: repeated seeds give identical CSV bytes, --seed overrides") {
    std::string out = qtest::scratch_dir("cli_sim_seed");
    std::string base = "simulate --params " + data_path("simparams_calibrated.json");
    run_cli(base + " --csv " + out + "/a.csv");
    run_cli(base + " --csv " + out + "/b.csv");
    CHECK(qtest::read_file(out + "/a.csv") == qtest::read_file(out + "/b.csv"));
    run_cli(base + " --csv " + out + "/c.csv --seed 99");
    CHECK(qtest::read_file(out + "/a.csv") != qtest::read_file(out + "/c.csv"));
}

TEST_CASE("simulate: invalid params exit 2") {
    auto result = run_cli("simulate --params " + data_path("simparams_invalid.json") + " 2>&1");
    CHECK(result.exit_code == 2);
}

TEST_CASE("report: aggregates outcomes, costs, and projections") {
    std::string out = qtest::scratch_dir("cli_report");
    run_cli("refine --transport scripted:" + data_path("scenario_four_defects.json") + kb_arg() +
            " --out " + out);
    run_cli("refine --transport scripted:" + data_path("scenario_no_change.json") + kb_arg() +
            " --out " + out);

    auto result = run_cli("report " + out + " --json");
    CHECK(result.exit_code == 0);
    auto j = nlohmann::json::parse(result.output);
    CHECK(j["traces"] == 2);
    CHECK(j["outcomes"]["Converged"] == 1);
    CHECK(j["outcomes"]["Stalled"] == 1);
    CHECK(j["mean_iterations_to_convergence"] == 4.0);
    CHECK(j["projected_cost"].contains("gpt-4.1-nano"));
    CHECK(j["projected_cost"].contains("gpt-o3-mini"));
}

TEST_CASE("report: one million tokens project to $0.10 nano vs $1.10 o3-mini") {
    std::string out = qtest::scratch_dir("cli_report_1m");
    // hand-built trace whose calls sum to exactly one million tokens
    Trace trace;
    trace.mcq_id = "million";
    IterationRecord record;
    record.t = 0;
    record.mcq = qtest::make_mcq("million", "What is 6 x 7?", {"40", "42", "44", "48"}, "B",
                                 "6 x 7 = 42. Therefore the answer is B.");
    for (int i = 0; i < 4; ++i) record.vector.set(i, 0);
    record.score = 0.0;
    record.token_usage.push_back({"generator", 600'000, 400'000});
    record.cost = Money::parse("0.10");
    trace.records.push_back(record);
    trace.outcome = TerminationKind::Converged;
    trace.total_cost = Money::parse("0.10");
    qtest::write_file(out + "/trace_million.jsonl", serialize_trace(trace));

    auto result = run_cli("report " + out + " --json");
    CHECK(result.exit_code == 0);
    auto j = nlohmann::json::parse(result.output);
    CHECK(j["total_tokens"]["input"] == 600'000);
    CHECK(j["total_tokens"]["output"] == 400'000);
    Money nano = Money::parse(j["projected_cost"]["gpt-4.1-nano"].get<std::string>());
    Money o3 = Money::parse(j["projected_cost"]["gpt-o3-mini"].get<std::string>());
    CHECK(nano == Money::parse("0.10"));
    CHECK(o3 == Money::parse("1.10"));
    CHECK(o3.pico() == 11 * nano.pico());
}

TEST_CASE("report: no readable traces exits 2") {
    std::string out = qtest::scratch_dir("cli_report_empty");
    auto result = run_cli("report " + out + " 2>&1");
    CHECK(result.exit_code == 2);
}

TEST_CASE("config precedence: flags beat env beats file") {
    std::string dir = qtest::scratch_dir("cli_config");
    // file alone: epsilon1 0.3 makes the 0.25 defect score pass
    qtest::write_file(dir + "/config.json", R"({"termination": {"epsilon1": 0.3}})");
    std::string base = "validate " + data_path("mcq_math_defect.json") + kb_arg() + " --config " +
                       dir + "/config.json";
    CHECK(run_cli(base).exit_code == 0);

    // env lowers it below the score again
    std::string with_env = "env QREFINE_EPSILON1=0.1 " QREFINE_CLI_PATH " " + base + " > /dev/null";
    CHECK(WEXITSTATUS(std::system(with_env.c_str())) == 1);

    // a flag beats the env var
    std::string with_flag = "env QREFINE_EPSILON1=0.1 " QREFINE_CLI_PATH " " + base +
                            " --epsilon1 0.4 > /dev/null";
    CHECK(WEXITSTATUS(std::system(with_flag.c_str())) == 0);
}

TEST_CASE("unknown flags and missing subcommands exit 2") {
    CHECK(run_cli("validate --definitely-not-a-flag 2>/dev/null").exit_code == 2);
    CHECK(run_cli("2>/dev/null").exit_code == 2);
    CHECK(run_cli("refine " + data_path("mcq_clean.json") + " 2>/dev/null").exit_code == 2);
}
