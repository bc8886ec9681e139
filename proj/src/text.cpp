// SPDX-License-Identifier: Apache-2.0
#include "jointrl/text.hpp"

#include <algorithm>
#include <cctype>
#include <iterator>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace jointrl {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)); }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)); }

bool is_operator(char c) {
  return c == '+' || c == '-' || c == '*' || c == '/' || c == '=' || c == '?';
}

}  // namespace

std::string_view trim(std::string_view text) {
  while (!text.empty() && is_space(text.front())) text.remove_prefix(1);
  while (!text.empty() && is_space(text.back())) text.remove_suffix(1);
  return text;
}

std::string to_lower(std::string_view text) {
  std::string out(text);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> normalized_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    // keep decimal points inside numbers so "12000.0" stays one token
    if (is_alnum(c) || c == '_' ||
        (c == '.' && !current.empty() &&
         std::isdigit(static_cast<unsigned char>(current.back())))) {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  for (auto& token : tokens) {
    while (!token.empty() && token.back() == '.') token.pop_back();
  }
  return tokens;
}

std::vector<std::string> feature_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (char c : text) {
    if (is_alnum(c) || c == '_') {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else {
      flush();
      if (is_operator(c)) tokens.emplace_back(1, c);
    }
  }
  flush();
  return tokens;
}

std::vector<double> extract_numbers(std::string_view text) {
  std::vector<double> numbers;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (std::isdigit(static_cast<unsigned char>(text[pos]))) {
      std::size_t end = pos;
      while (end < text.size() &&
             (std::isdigit(static_cast<unsigned char>(text[end])) ||
              (text[end] == '.' && end + 1 < text.size() &&
               std::isdigit(static_cast<unsigned char>(text[end + 1]))))) {
        ++end;
      }
      if (auto value = parse_number(text.substr(pos, end - pos))) {
        numbers.push_back(*value);
      }
      pos = end;
    } else {
      ++pos;
    }
  }
  return numbers;
}

std::optional<double> parse_number(std::string_view text) {
  text = trim(text);
  std::string cleaned;
  for (char c : text) {
    if (c != ',') cleaned.push_back(c);
  }
  if (cleaned.empty()) return std::nullopt;
  double value = 0.0;
  const char* first = cleaned.data();
  const char* last = cleaned.data() + cleaned.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

std::string format_number(double value) {
  if (std::nearbyint(value) == value && std::fabs(value) < 1e15) {
    return std::to_string(static_cast<long long>(value));
  }
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.10g", value);
  return buffer;
}

double token_f1(std::string_view a, std::string_view b) {
  auto left = normalized_tokens(a);
  auto right = normalized_tokens(b);
  if (left.empty() && right.empty()) return 1.0;
  if (left.empty() || right.empty()) return 0.0;
  std::sort(left.begin(), left.end());
  std::sort(right.begin(), right.end());
  std::vector<std::string> common;
  std::set_intersection(left.begin(), left.end(), right.begin(), right.end(),
                        std::back_inserter(common));
  return 2.0 * static_cast<double>(common.size()) /
         static_cast<double>(left.size() + right.size());
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 finaliser over the combined words
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace jointrl
