#include "qrefine/kb.hpp"

#include "qrefine/textutil.hpp"

#include <fstream>
#include <sstream>

namespace qrefine {

void KnowledgeBase::add_fact(const std::string& fact) {
    std::string normalized = normalize_fact(fact);
    if (!normalized.empty()) facts_.insert(std::move(normalized));
}

bool KnowledgeBase::supports(const std::string& claim, double jaccard_threshold) const {
    std::string normalized = normalize_fact(claim);
    if (facts_.count(normalized)) return true;
    auto claim_tokens = tokenize(normalized);
    for (const std::string& fact : facts_)
        if (jaccard_similarity(claim_tokens, tokenize(fact)) >= jaccard_threshold) return true;
    return false;
}

KnowledgeBase load_kb(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw KbError(KbErrorKind::IoError, "cannot open knowledge base file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) throw KbError(KbErrorKind::IoError, "error reading knowledge base file: " + path);
    std::string content = buffer.str();
    if (!is_valid_utf8(content))
        throw KbError(KbErrorKind::EncodingError, "knowledge base file is not valid UTF-8: " + path);

    KnowledgeBase kb;
    kb.set_source_path(path);
    std::istringstream lines(content);
    std::string line;
    while (std::getline(lines, line)) {
        std::size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        if (line[first] == '#') continue;
        kb.add_fact(line);
    }
    return kb;
}

} // namespace qrefine
