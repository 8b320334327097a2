#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cepro::text {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

// Collapses runs of whitespace to single spaces and trims the ends.
std::string collapse_ws(std::string_view s);

// Lowercase, strip punctuation, collapse whitespace. The canonical
// normalization used by fuzzy matching everywhere in the project.
std::string normalize_for_match(std::string_view s);

std::vector<std::string> split(std::string_view s, char delim);
std::vector<std::string> split_lines(std::string_view s);

// Splits "a | b | c" into trimmed fields.
std::vector<std::string> split_fields(std::string_view line);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool starts_with(std::string_view s, std::string_view prefix);
bool contains(std::string_view s, std::string_view needle);

std::size_t levenshtein(std::string_view a, std::string_view b);

std::string base64_encode(std::string_view bytes);

// Seeded FNV-1a, used by the hashing embedder.
std::uint64_t fnv1a(std::string_view s, std::uint64_t seed);

}  // namespace cepro::text
