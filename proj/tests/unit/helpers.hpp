#pragma once

#include <string>
#include <string_view>

#include "tuplex/corpus.hpp"

namespace tuplex::test {

// Span of the first occurrence of `needle` at or after code point `from`.
inline EntitySpan span_of(std::string_view text, std::string_view needle, EntityType type,
                          std::size_t from = 0) {
  const auto bounds = utf8::boundaries(text);
  const std::size_t byte = text.find(needle, bounds.at(from));
  if (byte == std::string_view::npos) throw std::runtime_error("needle not found: " + std::string(needle));
  const std::size_t start = utf8::length(text.substr(0, byte));
  return {type, start, start + utf8::length(needle), std::string(needle)};
}

inline AnnotatedSentence fig1b() {
  AnnotatedSentence s;
  s.id = "fig1b";
  s.text = "The yield strength of AlNbTiV is 1020 MPa at room temperature and 685 MPa at 800°C.";
  const std::string& t = s.text;
  const EntitySpan m = span_of(t, "AlNbTiV", EntityType::kMaterial);
  const EntitySpan p = span_of(t, "yield strength", EntityType::kProperty);
  const EntitySpan c = span_of(t, "temperature", EntityType::kCondition);
  s.tuples.push_back({m, p, span_of(t, "1020 MPa", EntityType::kPropertyValue), c,
                      span_of(t, "room temperature", EntityType::kConditionValue)});
  s.tuples.push_back({m, p, span_of(t, "685 MPa", EntityType::kPropertyValue), c,
                      span_of(t, "800°C", EntityType::kConditionValue)});
  return s;
}

}  // namespace tuplex::test
