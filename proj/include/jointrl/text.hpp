// SPDX-License-Identifier: Apache-2.0
#ifndef JOINTRL_TEXT_HPP_
#define JOINTRL_TEXT_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace jointrl {

std::string_view trim(std::string_view text);
std::string to_lower(std::string_view text);

// Lowercased, punctuation stripped, whitespace split.
std::vector<std::string> normalized_tokens(std::string_view text);

// Alphanumeric runs plus single operator characters (+ - * / = ?), lowercased.
// Used by the feature extractor, where "6000*2" must yield an operator token.
std::vector<std::string> feature_tokens(std::string_view text);

// Numbers appearing in text, in order ("6000*2" -> {6000, 2}).
std::vector<double> extract_numbers(std::string_view text);

std::optional<double> parse_number(std::string_view text);

// Canonical text for integral and short decimal values ("12000", "2.5").
std::string format_number(double value);

// Token-level F1 over normalized_tokens; 1 when both sides are empty.
double token_f1(std::string_view a, std::string_view b);

std::uint64_t fnv1a(std::string_view text);

// Counter-based seed derivation; stable across platforms.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

// Portable uniform double in [0, 1) from a 64-bit draw.
inline double unit_interval(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace jointrl

#endif  // JOINTRL_TEXT_HPP_
