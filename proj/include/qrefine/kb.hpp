#pragma once

#include <set>
#include <stdexcept>
#include <string>

namespace qrefine {

enum class KbErrorKind { IoError, EncodingError };

class KbError : public std::runtime_error {
public:
    KbError(KbErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    KbErrorKind kind() const { return kind_; }

private:
    KbErrorKind kind_;
};

/**
 * Reference knowledge base for the factual check: a set of normalized
 * fact strings. Every stored fact is a fixed point of normalize_fact.
 */
class KnowledgeBase {
public:
    KnowledgeBase() = default;

    // Normalizes and inserts; duplicates collapse.
    void add_fact(const std::string& fact);

    // Exact normalized membership first, then token-set Jaccard overlap
    // against every stored fact at the given threshold.
    bool supports(const std::string& claim, double jaccard_threshold) const;

    std::size_t size() const { return facts_.size(); }
    const std::set<std::string>& facts() const { return facts_; }
    const std::string& source_path() const { return source_path_; }
    void set_source_path(std::string path) { source_path_ = std::move(path); }

private:
    std::set<std::string> facts_;
    std::string source_path_;
};

// One fact per line; blank lines and lines whose first non-space byte is
// '#' are ignored. Throws KbError on unreadable files or invalid UTF-8.
KnowledgeBase load_kb(const std::string& path);

} // namespace qrefine
