#include "qrefine/rational.hpp"

namespace qrefine {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

} // namespace

BigInt bigint_from_digits(std::string_view digits) {
    while (digits.size() > 1 && digits.front() == '0') digits.remove_prefix(1);
    if (digits.empty()) return BigInt(0);
    return BigInt(std::string(digits));
}

std::optional<Rational> try_parse_rational_literal(std::string_view text) {
    std::string_view s = trim(text);
    if (s.empty()) return std::nullopt;
    std::size_t i = 0;
    bool neg = false;
    if (s[i] == '+' || s[i] == '-') {
        neg = s[i] == '-';
        ++i;
    }
    std::size_t digits_begin = i;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
    if (i == digits_begin) return std::nullopt;
    BigInt whole = bigint_from_digits(s.substr(digits_begin, i - digits_begin));

    Rational value(whole);
    if (i < s.size() && s[i] == '.') {
        ++i;
        std::size_t frac_begin = i;
        while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
        if (i == frac_begin) return std::nullopt;
        std::string frac(s.substr(frac_begin, i - frac_begin));
        BigInt num = bigint_from_digits(frac);
        BigInt den = 1;
        for (std::size_t k = 0; k < frac.size(); ++k) den *= 10;
        value += Rational(num, den);
    } else if (i < s.size() && s[i] == '/') {
        ++i;
        std::size_t den_begin = i;
        while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
        if (i == den_begin) return std::nullopt;
        BigInt den = bigint_from_digits(s.substr(den_begin, i - den_begin));
        if (den == 0) return std::nullopt;
        value = Rational(whole, den);
    }
    if (i != s.size()) return std::nullopt;
    if (neg) value = -value;
    return value;
}

std::string rational_to_string(const Rational& r) {
    std::string num = numerator(r).str();
    if (denominator(r) == 1) return num;
    return num + "/" + denominator(r).str();
}

} // namespace qrefine
