#pragma once

#include <array>
#include <optional>
#include <string>

namespace qrefine {

// The four hallucination checks. Indices match the indicator components:
// 0 consistency (answer vs explanation), 1 solvability (unique valid
// answer), 2 factual (claims against the knowledge base), 3 math
// (arithmetic steps).
enum class DetectorKind { Consistency, Solvability, Factual, Math };

inline constexpr int kDetectorKindCount = 4;

inline constexpr std::array<DetectorKind, kDetectorKindCount> all_detector_kinds{
    DetectorKind::Consistency, DetectorKind::Solvability, DetectorKind::Factual,
    DetectorKind::Math};

constexpr int index_of(DetectorKind kind) { return static_cast<int>(kind); }

constexpr DetectorKind detector_kind_from_index(int index) {
    return static_cast<DetectorKind>(index);
}

std::string to_string(DetectorKind kind);
std::optional<DetectorKind> detector_kind_from_string(const std::string& name);

} // namespace qrefine
