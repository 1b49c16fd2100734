#include "benchup/seed.hpp"

#include <sstream>

#include <json.hpp>

#include "benchup/errors.hpp"
#include "benchup/util.hpp"

namespace benchup {

using Json = nlohmann::json;

std::string_view to_string(SeedKind kind) {
    switch (kind) {
        case SeedKind::Entity: return "entity";
        case SeedKind::Statement: return "statement";
        case SeedKind::Law: return "law";
        case SeedKind::AlgorithmName: return "algorithm_name";
    }
    return "entity";
}

std::optional<SeedKind> seed_kind_from_string(std::string_view name) {
    if (name == "entity") return SeedKind::Entity;
    if (name == "statement") return SeedKind::Statement;
    if (name == "law") return SeedKind::Law;
    if (name == "algorithm_name") return SeedKind::AlgorithmName;
    return std::nullopt;
}

std::vector<Seed> read_seed_file(std::string_view bytes) {
    std::vector<Seed> seeds;
    auto lines = split_lines(bytes);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        Json j;
        try {
            j = Json::parse(lines[i]);
        } catch (const Json::parse_error& e) {
            throw FormatError("seed line " + std::to_string(i + 1) + " is not valid JSON: " +
                              e.what());
        }
        Seed seed;
        seed.id = j.at("id").get<std::string>();
        seed.text = j.at("text").get<std::string>();
        if (trim(seed.text).empty()) {
            throw FormatError("seed " + seed.id + " has empty text");
        }
        auto kind = seed_kind_from_string(j.value("kind", "entity"));
        if (!kind) throw FormatError("seed " + seed.id + " has unknown kind");
        seed.kind = *kind;
        if (j.contains("popularity") && !j.at("popularity").is_null()) {
            seed.popularity = j.at("popularity").get<std::uint64_t>();
        }
        seeds.push_back(std::move(seed));
    }
    return seeds;
}

std::string write_seed_file(const std::vector<Seed>& seeds) {
    std::ostringstream out;
    for (const Seed& seed : seeds) {
        Json j;
        j["id"] = seed.id;
        j["text"] = seed.text;
        j["kind"] = std::string(to_string(seed.kind));
        if (seed.popularity) j["popularity"] = *seed.popularity;
        out << j.dump() << '\n';
    }
    return out.str();
}

}  // namespace benchup
