#include "qrefine/expr.hpp"

namespace qrefine {

namespace {

// Recursive-descent parser over raw bytes. The two multibyte glyphs we
// accept (U+00D7 times, U+2212 minus) are matched explicitly.
class Parser {
public:
    explicit Parser(std::string_view src) : src_(src) {}

    ExprPtr parse() {
        ExprPtr root = parse_sum();
        skip_ws();
        if (pos_ != src_.size())
            throw ExprError(ExprErrorKind::Syntax, pos_, "unexpected trailing input");
        return root;
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' ||
                                      src_[pos_] == '\n' || src_[pos_] == '\r'))
            ++pos_;
    }

    bool match_byte(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    bool match_seq(std::string_view seq) {
        skip_ws();
        if (src_.substr(pos_, seq.size()) == seq) {
            pos_ += seq.size();
            return true;
        }
        return false;
    }

    bool match_times() { return match_byte('*') || match_seq("\xC3\x97"); }   // ×
    bool match_minus() { return match_byte('-') || match_seq("\xE2\x88\x92"); } // −

    // sum := term (('+' | '-') term)*
    ExprPtr parse_sum() {
        ExprPtr lhs = parse_term();
        for (;;) {
            skip_ws();
            std::size_t at = pos_;
            if (match_byte('+')) {
                lhs = binary(ExprNode::Kind::Add, at, std::move(lhs), parse_term());
            } else if (match_minus()) {
                lhs = binary(ExprNode::Kind::Sub, at, std::move(lhs), parse_term());
            } else {
                return lhs;
            }
        }
    }

    // term := factor (('*' | '/') factor)*
    ExprPtr parse_term() {
        ExprPtr lhs = parse_factor();
        for (;;) {
            skip_ws();
            std::size_t at = pos_;
            if (match_times()) {
                lhs = binary(ExprNode::Kind::Mul, at, std::move(lhs), parse_factor());
            } else if (match_byte('/')) {
                lhs = binary(ExprNode::Kind::Div, at, std::move(lhs), parse_factor());
            } else {
                return lhs;
            }
        }
    }

    // factor := '-' factor | power   (unary minus binds looser than '^')
    ExprPtr parse_factor() {
        skip_ws();
        std::size_t at = pos_;
        if (match_minus()) {
            auto node = std::make_unique<ExprNode>();
            node->kind = ExprNode::Kind::Neg;
            node->pos = at;
            node->lhs = parse_factor();
            return node;
        }
        return parse_power();
    }

    // power := atom ('^' factor)?   (right associative)
    ExprPtr parse_power() {
        ExprPtr base = parse_atom();
        skip_ws();
        std::size_t at = pos_;
        if (match_byte('^'))
            return binary(ExprNode::Kind::Pow, at, std::move(base), parse_factor());
        return base;
    }

    ExprPtr parse_atom() {
        skip_ws();
        if (pos_ >= src_.size())
            throw ExprError(ExprErrorKind::Syntax, pos_, "unexpected end of expression");
        std::size_t at = pos_;
        if (match_byte('(')) {
            ExprPtr inner = parse_sum();
            if (!match_byte(')'))
                throw ExprError(ExprErrorKind::Syntax, pos_, "expected ')'");
            return inner;
        }
        return parse_number(at);
    }

    ExprPtr parse_number(std::size_t at) {
        std::size_t begin = pos_;
        while (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9') ++pos_;
        if (pos_ == begin)
            throw ExprError(ExprErrorKind::Syntax, at, "expected a number");
        BigInt whole = bigint_from_digits(src_.substr(begin, pos_ - begin));
        Rational value(whole);
        // Decimal part: digits are required after the point so that a
        // sentence-final '.' never gets swallowed into a number.
        if (pos_ < src_.size() && src_[pos_] == '.' && pos_ + 1 < src_.size() &&
            src_[pos_ + 1] >= '0' && src_[pos_ + 1] <= '9') {
            ++pos_;
            std::size_t frac_begin = pos_;
            while (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9') ++pos_;
            std::string frac(src_.substr(frac_begin, pos_ - frac_begin));
            BigInt num = bigint_from_digits(frac);
            BigInt den = 1;
            for (std::size_t k = 0; k < frac.size(); ++k) den *= 10;
            value += Rational(num, den);
        }
        auto node = std::make_unique<ExprNode>();
        node->kind = ExprNode::Kind::Number;
        node->pos = at;
        node->value = value;
        return node;
    }

    static ExprPtr binary(ExprNode::Kind kind, std::size_t at, ExprPtr lhs, ExprPtr rhs) {
        auto node = std::make_unique<ExprNode>();
        node->kind = kind;
        node->pos = at;
        node->lhs = std::move(lhs);
        node->rhs = std::move(rhs);
        return node;
    }
};

Rational pow_rational(const Rational& base, const Rational& exponent, std::size_t pos,
                      int max_exponent) {
    if (denominator(exponent) != 1)
        throw ExprError(ExprErrorKind::Syntax, pos, "exponent must be an integer");
    BigInt e = numerator(exponent);
    if (abs(e) > max_exponent)
        throw ExprError(ExprErrorKind::ExponentOverflow, pos,
                        "exponent magnitude exceeds " + std::to_string(max_exponent));
    bool invert = e < 0;
    unsigned n = static_cast<unsigned>(abs(e));
    if (invert && numerator(base) == 0)
        throw ExprError(ExprErrorKind::DivisionByZero, pos, "zero raised to a negative power");
    BigInt num = pow(numerator(base), n);
    BigInt den = pow(denominator(base), n);
    return invert ? Rational(den, num) : Rational(num, den);
}

} // namespace

ExprPtr parse_expression(std::string_view text) {
    return Parser(text).parse();
}

Rational eval_expression(const ExprNode& node, int max_exponent) {
    switch (node.kind) {
    case ExprNode::Kind::Number:
        return node.value;
    case ExprNode::Kind::Neg:
        return -eval_expression(*node.lhs, max_exponent);
    case ExprNode::Kind::Add:
        return eval_expression(*node.lhs, max_exponent) + eval_expression(*node.rhs, max_exponent);
    case ExprNode::Kind::Sub:
        return eval_expression(*node.lhs, max_exponent) - eval_expression(*node.rhs, max_exponent);
    case ExprNode::Kind::Mul:
        return eval_expression(*node.lhs, max_exponent) * eval_expression(*node.rhs, max_exponent);
    case ExprNode::Kind::Div: {
        Rational rhs = eval_expression(*node.rhs, max_exponent);
        if (numerator(rhs) == 0)
            throw ExprError(ExprErrorKind::DivisionByZero, node.pos, "division by zero");
        return eval_expression(*node.lhs, max_exponent) / rhs;
    }
    case ExprNode::Kind::Pow:
        return pow_rational(eval_expression(*node.lhs, max_exponent),
                            eval_expression(*node.rhs, max_exponent), node.pos, max_exponent);
    }
    throw ExprError(ExprErrorKind::Syntax, node.pos, "corrupt expression node");
}

Rational eval_expression(std::string_view text, int max_exponent) {
    return eval_expression(*parse_expression(text), max_exponent);
}

} // namespace qrefine
