#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace benchup {

/// Bloom-style cognitive levels, collapsed to the four groups the update
/// pipeline balances across. The ordering is total and reflects increasing
/// cognitive demand.
enum class CognitiveLevel {
    RememberUnderstand = 0,
    Apply = 1,
    Analysis = 2,
    Evaluation = 3,
};

inline constexpr std::array<CognitiveLevel, 4> kAllLevels = {
    CognitiveLevel::RememberUnderstand,
    CognitiveLevel::Apply,
    CognitiveLevel::Analysis,
    CognitiveLevel::Evaluation,
};

std::string_view to_string(CognitiveLevel level);
std::optional<CognitiveLevel> cognitive_level_from_string(std::string_view name);

}  // namespace benchup
