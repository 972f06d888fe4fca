#pragma once

#include "qrefine/rational.hpp"

#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qrefine {

enum class ExprErrorKind {
    Syntax,           // malformed input, position points at the offender
    DivisionByZero,
    ExponentOverflow, // |exponent| > max_exponent (default 64)
};

class ExprError : public std::runtime_error {
public:
    ExprError(ExprErrorKind kind, std::size_t pos, const std::string& what)
        : std::runtime_error(what + " (at offset " + std::to_string(pos) + ")"),
          kind_(kind), pos_(pos) {}

    ExprErrorKind kind() const { return kind_; }
    std::size_t position() const { return pos_; }

private:
    ExprErrorKind kind_;
    std::size_t pos_;
};

/**
 * Arithmetic expression tree.
 *
 * Grammar: integers, decimals (exact rationals), fractions a/b, operators
 * + - * / ^ with x and the Unicode minus sign accepted as aliases, unary
 * minus, parentheses. Precedence ^ > unary - > * / > + -, left associative
 * except ^ which is right associative. Exponents must evaluate to integers
 * with magnitude <= max_exponent.
 */
struct ExprNode {
    enum class Kind { Number, Neg, Add, Sub, Mul, Div, Pow };

    Kind kind;
    std::size_t pos = 0; // byte offset into the source text
    Rational value;      // Number only
    std::unique_ptr<ExprNode> lhs;
    std::unique_ptr<ExprNode> rhs;
};

using ExprPtr = std::unique_ptr<ExprNode>;

// Parses the whole string as one expression; throws ExprError(Syntax, pos)
// on malformed input (including trailing garbage).
ExprPtr parse_expression(std::string_view text);

// Exact evaluation, no floating-point intermediates.
Rational eval_expression(const ExprNode& root, int max_exponent = 64);

// parse + eval in one step.
Rational eval_expression(std::string_view text, int max_exponent = 64);

} // namespace qrefine
