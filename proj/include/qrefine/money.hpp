#pragma once

#include <cstdint>
#include <string>

namespace qrefine {

/**
 * USD amount held as an exact integer count of picodollars (1e-12 USD).
 *
 * Per-token prices land on whole picodollars (a price of P micro-USD per
 * 1M tokens is exactly P picodollars per token), so cost accrual is exact
 * integer arithmetic and linear in token count. Display granularity is
 * 6 decimal places; persistence keeps the full 12 so that sums of stored
 * values round-trip without drift.
 */
class Money {
public:
    constexpr Money() = default;
    static constexpr Money from_pico(std::int64_t pico) { return Money(pico); }
    static constexpr Money from_micro(std::int64_t micro) { return Money(micro * 1'000'000); }

    // Parses a decimal USD string ("0.10", "-1.5", "0.000000100000").
    // Digits beyond 12 decimal places are rejected.
    static Money parse(const std::string& text);

    constexpr std::int64_t pico() const { return pico_; }
    double usd() const { return static_cast<double>(pico_) / 1e12; }

    // Fixed-point decimal string, `places` in [0, 12]. Rounds half away
    // from zero at the requested granularity.
    std::string to_string(int places = 12) const;
    std::string display() const { return to_string(6); }

    constexpr Money& operator+=(Money o) { pico_ += o.pico_; return *this; }
    friend constexpr Money operator+(Money a, Money b) { return Money(a.pico_ + b.pico_); }
    friend constexpr Money operator-(Money a, Money b) { return Money(a.pico_ - b.pico_); }
    friend constexpr Money operator*(Money a, std::int64_t k) { return Money(a.pico_ * k); }
    friend constexpr Money operator*(std::int64_t k, Money a) { return Money(a.pico_ * k); }
    friend constexpr bool operator==(Money a, Money b) { return a.pico_ == b.pico_; }
    friend constexpr bool operator!=(Money a, Money b) { return a.pico_ != b.pico_; }
    friend constexpr bool operator<(Money a, Money b) { return a.pico_ < b.pico_; }
    friend constexpr bool operator<=(Money a, Money b) { return a.pico_ <= b.pico_; }

private:
    explicit constexpr Money(std::int64_t pico) : pico_(pico) {}
    std::int64_t pico_ = 0;
};

} // namespace qrefine
