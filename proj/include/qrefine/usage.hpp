#pragma once

#include <cstdint>
#include <string>

namespace qrefine {

// Token counts for one agent call; agent is "generator" or
// "detector:<Kind>".
struct TokenUsage {
    std::string agent;
    std::int64_t input = 0;
    std::int64_t output = 0;

    bool operator==(const TokenUsage&) const = default;
};

} // namespace qrefine
