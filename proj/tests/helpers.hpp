#pragma once

// Shared test helpers: quick MCQ construction, test-data paths, and a
// tiny process runner for CLI end-to-end checks.

#include "qrefine/mcq.hpp"

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace qtest {

inline qrefine::Mcq make_mcq(const std::string& id, const std::string& question,
                             const std::array<std::string, 4>& choices,
                             const std::string& answer, const std::string& explanation,
                             const std::string& subject = "test") {
    qrefine::Mcq mcq;
    mcq.id = id;
    mcq.question = question;
    const char* labels[] = {"A", "B", "C", "D"};
    for (int i = 0; i < 4; ++i) mcq.choices.push_back({labels[i], choices[i]});
    mcq.answer = answer;
    mcq.explanation = explanation;
    mcq.subject = subject;
    return mcq;
}

inline std::string data_dir() { return QREFINE_TEST_DATA_DIR; }
inline std::string data_path(const std::string& name) { return data_dir() + "/" + name; }

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

struct CommandResult {
    int exit_code = -1;
    std::string output; // stdout only
};

// Runs the built CLI with the given arguments; stderr passes through.
inline CommandResult run_cli(const std::string& args) {
    std::string command = std::string(QREFINE_CLI_PATH) + " " + args;
    CommandResult result;
    FILE* pipe = popen(command.c_str(), "r");
    if (!pipe) return result;
    char buffer[4096];
    std::size_t n;
    while ((n = fread(buffer, 1, sizeof(buffer), pipe)) > 0) result.output.append(buffer, n);
    int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

// Unique scratch directory under the build tree.
inline std::string scratch_dir(const std::string& tag) {
    std::string dir = "qtest_scratch_" + tag;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace qtest
