#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "tuplex/corpus.hpp"

namespace tuplex {

// Repetition patterns of multi-tuple sentences:
//   A: one material, several properties
//   B: one material and property, several condition values
//   C: one property, several materials
enum class Pattern : std::uint8_t { kA = 0, kB = 1, kC = 2 };

struct SynthConfig {
  std::size_t n_sentences = 100;
  std::array<double, 4> k_distribution = {0.25, 0.25, 0.25, 0.25};  // P(k = 1..4)
  std::array<double, 3> pattern_mix = {1.0 / 3, 1.0 / 3, 1.0 / 3};  // P(A), P(B), P(C)
  double condition_omission_rate = 0.1;
  std::uint64_t vocab_seed = 7;

  void validate() const;
  nlohmann::json to_json() const;
  static SynthConfig from_json(const nlohmann::json& j);
};

struct PropertyEntry {
  std::string name;
  std::string unit;
  std::vector<std::string> numbers;
};

struct ConditionEntry {
  std::string name;
  std::string unit;
  std::vector<std::string> numbers;
};

struct Vocabulary {
  std::vector<std::string> alloys;
  std::vector<PropertyEntry> properties;
  std::vector<ConditionEntry> conditions;
};

Vocabulary vocab(std::uint64_t seed);

// "879 MPa", "14.9%", "800 °C", ...
std::string render_quantity(const std::string& number, const std::string& unit);

// Element symbols with optional numeric subscripts, e.g. "Al0.3CoCrFeNi".
bool is_alloy_formula(std::string_view name);

Dataset generate(const SynthConfig& cfg, std::uint64_t seed);

// Generates one sentence with the given tuple count and pattern; `index`
// names it and derives its random stream.
AnnotatedSentence generate_sentence(const Vocabulary& vocabulary, const SynthConfig& cfg,
                                    std::size_t k, Pattern pattern, std::uint64_t seed,
                                    std::size_t index);

}  // namespace tuplex
