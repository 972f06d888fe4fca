#include "qrefine/textutil.hpp"

#include <algorithm>
#include <set>

namespace qrefine {

namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

} // namespace

std::string normalize_fact(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        if (is_space(c)) {
            if (!out.empty()) pending_space = true;
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        out.push_back(c);
    }
    while (!out.empty()) {
        char last = out.back();
        if (last == '.' || last == '!' || last == '?' || last == ',' || last == ';' ||
            last == ':' || last == ' ')
            out.pop_back();
        else
            break;
    }
    return out;
}

std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> sentences;
    std::size_t begin = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        bool boundary = false;
        if (c == '!' || c == '?') {
            boundary = true;
        } else if (c == '.') {
            bool digit_before = i > 0 && is_digit(text[i - 1]);
            bool digit_after = i + 1 < text.size() && is_digit(text[i + 1]);
            boundary = !(digit_before && digit_after);
        }
        if (boundary && (i + 1 == text.size() || is_space(text[i + 1]))) {
            std::string_view s = text.substr(begin, i - begin + 1);
            while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
            if (!s.empty()) sentences.emplace_back(s);
            begin = i + 1;
        }
    }
    if (begin < text.size()) {
        std::string_view s = text.substr(begin);
        while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
        while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
        if (!s.empty()) sentences.emplace_back(s);
    }
    return sentences;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t begin = i;
        while (i < text.size() && !is_space(text[i])) ++i;
        if (i > begin) tokens.emplace_back(text.substr(begin, i - begin));
    }
    return tokens;
}

double jaccard_similarity(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::set<std::string> sa(a.begin(), a.end());
    std::set<std::string> sb(b.begin(), b.end());
    if (sa.empty() && sb.empty()) return 1.0;
    std::size_t intersection = 0;
    for (const std::string& t : sa)
        if (sb.count(t)) ++intersection;
    std::size_t unions = sa.size() + sb.size() - intersection;
    return static_cast<double>(intersection) / static_cast<double>(unions);
}

bool is_valid_utf8(std::string_view text) {
    std::size_t i = 0;
    while (i < text.size()) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        std::size_t len;
        if (c < 0x80)
            len = 1;
        else if ((c & 0xE0) == 0xC0)
            len = 2;
        else if ((c & 0xF0) == 0xE0)
            len = 3;
        else if ((c & 0xF8) == 0xF0)
            len = 4;
        else
            return false;
        if (i + len > text.size()) return false;
        for (std::size_t k = 1; k < len; ++k)
            if ((static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80) return false;
        // reject overlong encodings of the common cases
        if (len == 2 && c < 0xC2) return false;
        i += len;
    }
    return true;
}

} // namespace qrefine
