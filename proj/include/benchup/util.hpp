#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace benchup {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Collapses runs of internal whitespace to single spaces (after trimming).
std::string collapse_whitespace(std::string_view s);

/// True if `needle` occurs in `haystack` delimited by non-alphanumeric
/// characters (or string edges) on both sides. Case-sensitive.
bool contains_word(std::string_view haystack, std::string_view needle);

/// Number of token-boundary occurrences of `needle` in `haystack`.
std::size_t count_word_occurrences(std::string_view haystack, std::string_view needle);

/// Hex-encoded SHA-256 of the input bytes.
std::string sha256_hex(std::string_view data);

/// First 8 hex chars of sha256_hex; used for content-addressed ids.
std::string short_hash(std::string_view data);

/// Epoch seconds, honoring SOURCE_DATE_EPOCH for reproducible runs.
std::int64_t now_epoch_seconds();

std::string epoch_to_iso8601(std::int64_t epoch_seconds);
std::int64_t iso8601_to_epoch(const std::string& iso);

std::string read_file(const std::filesystem::path& path);
std::optional<std::string> try_read_file(const std::filesystem::path& path);

/// Writes via a temp file in the same directory followed by a rename, so
/// readers never observe partial content.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::vector<std::string> split_lines(std::string_view text);

}  // namespace benchup
