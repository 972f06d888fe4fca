#include "qrefine/money.hpp"

#include <cstdlib>
#include <stdexcept>

namespace qrefine {

Money Money::parse(const std::string& text) {
    if (text.empty()) throw std::invalid_argument("Money::parse: empty string");
    std::size_t i = 0;
    bool neg = false;
    if (text[i] == '-' || text[i] == '+') {
        neg = text[i] == '-';
        ++i;
    }
    std::int64_t whole = 0;
    bool any_digit = false;
    while (i < text.size() && text[i] >= '0' && text[i] <= '9') {
        whole = whole * 10 + (text[i] - '0');
        any_digit = true;
        ++i;
    }
    std::int64_t frac = 0;
    int frac_digits = 0;
    if (i < text.size() && text[i] == '.') {
        ++i;
        while (i < text.size() && text[i] >= '0' && text[i] <= '9') {
            if (frac_digits >= 12) throw std::invalid_argument("Money::parse: more than 12 decimal places: " + text);
            frac = frac * 10 + (text[i] - '0');
            ++frac_digits;
            any_digit = true;
            ++i;
        }
    }
    if (!any_digit || i != text.size())
        throw std::invalid_argument("Money::parse: malformed amount: " + text);
    for (int k = frac_digits; k < 12; ++k) frac *= 10;
    std::int64_t pico = whole * 1'000'000'000'000LL + frac;
    return Money(neg ? -pico : pico);
}

std::string Money::to_string(int places) const {
    if (places < 0 || places > 12) throw std::invalid_argument("Money::to_string: places out of range");
    std::int64_t v = pico_;
    bool neg = v < 0;
    if (neg) v = -v;
    // Round half away from zero at the requested granularity.
    std::int64_t scale = 1;
    for (int k = places; k < 12; ++k) scale *= 10;
    v = (v + scale / 2) / scale;
    std::int64_t unit = 1;
    for (int k = 0; k < places; ++k) unit *= 10;
    std::string out = std::to_string(v / unit);
    if (places > 0) {
        std::string frac = std::to_string(v % unit);
        out += "." + std::string(places - frac.size(), '0') + frac;
    }
    return neg && v != 0 ? "-" + out : out;
}

} // namespace qrefine
