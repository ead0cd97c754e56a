#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

namespace tuplex {

enum class EntityType : std::uint8_t {
  kMaterial = 0,
  kProperty = 1,
  kPropertyValue = 2,
  kCondition = 3,
  kConditionValue = 4,
};

inline constexpr std::size_t kNumEntityTypes = 5;

inline constexpr std::array<EntityType, kNumEntityTypes> kEntityTypes = {
    EntityType::kMaterial, EntityType::kProperty, EntityType::kPropertyValue,
    EntityType::kCondition, EntityType::kConditionValue};

constexpr std::size_t type_index(EntityType t) { return static_cast<std::size_t>(t); }

constexpr bool is_optional_slot(EntityType t) {
  return t == EntityType::kCondition || t == EntityType::kConditionValue;
}

// JSON slot name, also used as the type label in reports ("material", ...).
std::string_view slot_name(EntityType t);
std::optional<EntityType> entity_type_from_name(std::string_view name);

// Offsets are half-open and counted in Unicode scalar values.
struct EntitySpan {
  EntityType type = EntityType::kMaterial;
  std::size_t start = 0;
  std::size_t end = 0;
  std::string text;

  // Identity is (type, start, end); the text is implied by the sentence.
  friend bool operator==(const EntitySpan& a, const EntitySpan& b) {
    return a.type == b.type && a.start == b.start && a.end == b.end;
  }
  friend auto operator<=>(const EntitySpan& a, const EntitySpan& b) {
    return std::tie(a.type, a.start, a.end) <=> std::tie(b.type, b.start, b.end);
  }
};

struct TupleRecord {
  EntitySpan material;
  EntitySpan property;
  EntitySpan property_value;
  std::optional<EntitySpan> condition;
  std::optional<EntitySpan> condition_value;

  const EntitySpan* slot(EntityType t) const;

  friend bool operator==(const TupleRecord&, const TupleRecord&) = default;
  friend auto operator<=>(const TupleRecord&, const TupleRecord&) = default;
};

struct AnnotatedSentence {
  std::string id;
  std::string text;
  std::vector<TupleRecord> tuples;
};

struct Dataset {
  std::vector<AnnotatedSentence> sentences;
};

// Spans grouped by entity type, indexed with type_index().
using SpansByType = std::array<std::vector<EntitySpan>, kNumEntityTypes>;

// Distinct gold spans per type, in textual order.
SpansByType gold_entities(const AnnotatedSentence& sentence);

namespace utf8 {

// Byte offset of every code point boundary; size() == code point count + 1.
std::vector<std::size_t> boundaries(std::string_view text);
std::size_t length(std::string_view text);
// Substring by code point offsets [start, end). Throws on out-of-range offsets.
std::string slice(std::string_view text, std::size_t start, std::size_t end);

}  // namespace utf8

// Validates every sentence and span invariant; throws tuplex::Error.
// `bounds` is utf8::boundaries(text).
void validate_span(const EntitySpan& span, std::string_view text,
                   const std::vector<std::size_t>& bounds, const std::string& sentence_id);
void validate_sentence(const AnnotatedSentence& sentence);
void validate_dataset(const Dataset& dataset);

Dataset parse_dataset(std::string_view raw);
Dataset parse_dataset_json(const nlohmann::json& doc);
std::string serialize_dataset(const Dataset& dataset);

// {"start", "end", "text"} objects of the dataset schema. span_from_json only
// checks field types; offsets are validated against the sentence elsewhere.
nlohmann::json span_to_json(const EntitySpan& span);
nlohmann::json optional_span_to_json(const std::optional<EntitySpan>& span);
nlohmann::json tuple_to_json(const TupleRecord& tuple);
EntitySpan span_from_json(const nlohmann::json& obj, EntityType type, const std::string& sentence_id);

struct TupleCountSplit {
  std::array<Dataset, 4> by_count;  // by_count[k - 1] holds sentences with k tuples
  Dataset excluded;                 // five or more tuples

  const Dataset& bucket(std::size_t k) const { return by_count.at(k - 1); }
};

TupleCountSplit split_by_tuple_count(const Dataset& dataset);

struct DistributionRow {
  std::size_t sentences = 0;
  std::size_t tuples = 0;
  double proportion = 0.0;  // share of sentences
};

struct DistributionReport {
  std::map<std::size_t, DistributionRow> by_count;  // keyed by tuple count k
  std::size_t total_sentences = 0;
  std::size_t total_tuples = 0;
};

DistributionReport stats(const Dataset& dataset);

std::pair<Dataset, Dataset> train_val_split(const Dataset& dataset, std::uint64_t seed);

}  // namespace tuplex
