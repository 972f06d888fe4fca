#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace qrefine {

// Canonical fact/claim form: trimmed, ASCII bytes lowercased (multibyte
// UTF-8 sequences untouched), internal whitespace collapsed to single
// spaces, terminal sentence punctuation stripped. Idempotent.
std::string normalize_fact(std::string_view text);

// Splits on '.', '!', '?' followed by whitespace or end of text. A '.'
// between two digits is part of a decimal number, not a boundary.
// Sentences keep their terminal punctuation.
std::vector<std::string> split_sentences(std::string_view text);

// Whitespace-separated tokens.
std::vector<std::string> tokenize(std::string_view text);

// Jaccard similarity of the two token sets (not multisets).
double jaccard_similarity(const std::vector<std::string>& a, const std::vector<std::string>& b);

// True when every byte sequence forms well-formed UTF-8.
bool is_valid_utf8(std::string_view text);

} // namespace qrefine
