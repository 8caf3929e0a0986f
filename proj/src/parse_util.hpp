#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "gradplan/errors.hpp"

namespace gradplan::detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

// Locale-independent parsing; the whole string must be consumed.
inline double parse_real(std::string_view text, const std::string& key) {
  text = trim(text);
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || text.empty() || !std::isfinite(value)) {
    throw ConfigError("malformed number '" + std::string(text) + "'", key);
  }
  return value;
}

inline std::size_t parse_count(std::string_view text, const std::string& key) {
  text = trim(text);
  std::size_t value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || text.empty()) {
    throw ConfigError("malformed count '" + std::string(text) + "'", key);
  }
  return value;
}

inline std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.push_back(trim(text.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

inline std::vector<double> parse_reals(std::string_view text,
                                       const std::string& key) {
  std::vector<double> values;
  for (auto part : split(text, ',')) values.push_back(parse_real(part, key));
  return values;
}

}  // namespace gradplan::detail
