#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace principles::text {

std::string trim(std::string_view s);

/// Collapses every run of whitespace (including newlines) to one space and trims.
std::string normalize_whitespace(std::string_view s);

std::string to_lower(std::string_view s);

/// Lowercases and folds typographic apostrophes/quotes to ASCII.
std::string fold_for_match(std::string_view s);

bool starts_with_ci(std::string_view s, std::string_view prefix);

/// Case-insensitive search; returns npos when absent.
std::size_t find_ci(std::string_view haystack, std::string_view needle, std::size_t from = 0);

std::vector<std::string> split_lines(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::uint64_t fnv1a64(std::string_view s, std::uint64_t basis = 0xcbf29ce484222325ULL);

/// SplitMix64 step; used for every seeded stream in the scripted backend.
std::uint64_t splitmix64(std::uint64_t& state);

std::size_t edit_distance(std::string_view a, std::string_view b);

}  // namespace principles::text
