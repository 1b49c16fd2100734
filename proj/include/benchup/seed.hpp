#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace benchup {

enum class SeedKind { Entity, Statement, Law, AlgorithmName };

std::string_view to_string(SeedKind kind);
std::optional<SeedKind> seed_kind_from_string(std::string_view name);

/// The abstraction an extend run grows questions from: an entity name, a
/// statement, a physical law, or an algorithm name.
struct Seed {
    std::string id;
    std::string text;
    SeedKind kind = SeedKind::Entity;
    std::optional<std::uint64_t> popularity;  // annual pageviews

    bool operator==(const Seed&) const = default;
};

/// Reads a line-delimited JSON seed file: {"id", "text", "kind", "popularity"?}.
std::vector<Seed> read_seed_file(std::string_view bytes);
std::string write_seed_file(const std::vector<Seed>& seeds);

}  // namespace benchup
