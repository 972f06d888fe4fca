#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <string>
#include <string_view>

namespace qrefine {

// Exact rational number. All arithmetic checking in the math detector is
// done over these; no floating point enters any equality test.
using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// Decimal digit string -> BigInt. Leading zeros are plain digits here,
// never an octal prefix.
BigInt bigint_from_digits(std::string_view digits);

// Parses a bare rational literal: optional sign, digits, then optionally
// ".digits" (decimal, converted exactly) or "/digits" (fraction with a
// positive denominator). The whole string must match after trimming
// whitespace; anything else returns nullopt.
std::optional<Rational> try_parse_rational_literal(std::string_view text);

// "p/q" for non-integers, plain "p" otherwise. Canonical lowest terms.
std::string rational_to_string(const Rational& r);

} // namespace qrefine
