#pragma once

#include <map>
#include <string>

namespace qrefine {

/**
 * Named prompt templates with {{placeholder}} substitution. Compiled-in
 * defaults match the text files shipped under prompts/; a config
 * directory can override any template by file name (<name>.txt).
 */
class PromptLibrary {
public:
    PromptLibrary();

    // Overrides defaults with <dir>/<name>.txt for every known name.
    static PromptLibrary with_overrides(const std::string& dir);

    const std::string& get(const std::string& name) const; // throws std::out_of_range
    bool has(const std::string& name) const { return templates_.count(name) > 0; }

    static std::string render(const std::string& tmpl,
                              const std::map<std::string, std::string>& values);

    static const std::map<std::string, std::string>& defaults();

private:
    std::map<std::string, std::string> templates_;
};

} // namespace qrefine
