#include "tuplex/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "tuplex/error.hpp"
#include "tuplex/rng.hpp"

namespace tuplex {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, kNumEntityTypes> kSlotNames = {
    "material", "property", "property_value", "condition", "condition_value"};

}  // namespace

std::string_view slot_name(EntityType t) { return kSlotNames[type_index(t)]; }

std::optional<EntityType> entity_type_from_name(std::string_view name) {
  for (EntityType t : kEntityTypes) {
    if (slot_name(t) == name) return t;
  }
  return std::nullopt;
}

const EntitySpan* TupleRecord::slot(EntityType t) const {
  switch (t) {
    case EntityType::kMaterial: return &material;
    case EntityType::kProperty: return &property;
    case EntityType::kPropertyValue: return &property_value;
    case EntityType::kCondition: return condition ? &*condition : nullptr;
    case EntityType::kConditionValue: return condition_value ? &*condition_value : nullptr;
  }
  return nullptr;
}

SpansByType gold_entities(const AnnotatedSentence& sentence) {
  std::array<std::set<EntitySpan>, kNumEntityTypes> unique;
  for (const TupleRecord& tuple : sentence.tuples) {
    for (EntityType t : kEntityTypes) {
      if (const EntitySpan* span = tuple.slot(t)) unique[type_index(t)].insert(*span);
    }
  }
  SpansByType out;
  for (std::size_t i = 0; i < kNumEntityTypes; ++i) {
    out[i].assign(unique[i].begin(), unique[i].end());
  }
  return out;
}

namespace utf8 {

std::vector<std::size_t> boundaries(std::string_view text) {
  std::vector<std::size_t> out;
  out.reserve(text.size() + 1);
  for (std::size_t i = 0; i < text.size(); ++i) {
    if ((static_cast<unsigned char>(text[i]) & 0xC0) != 0x80) out.push_back(i);
  }
  out.push_back(text.size());
  return out;
}

std::size_t length(std::string_view text) {
  return static_cast<std::size_t>(std::count_if(text.begin(), text.end(), [](char c) {
    return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
  }));
}

std::string slice(std::string_view text, std::size_t start, std::size_t end) {
  const auto b = boundaries(text);
  if (start > end || end + 1 > b.size()) {
    throw Error(ErrorCode::kSpanOutOfBounds, "code point slice out of range");
  }
  return std::string(text.substr(b[start], b[end] - b[start]));
}

}  // namespace utf8

void validate_span(const EntitySpan& span, std::string_view text,
                   const std::vector<std::size_t>& bounds, const std::string& id) {
  const std::size_t length = bounds.size() - 1;
  if (!(span.start < span.end && span.end <= length)) {
    throw Error(ErrorCode::kSpanOutOfBounds,
                std::string(slot_name(span.type)) + " span [" + std::to_string(span.start) +
                    ", " + std::to_string(span.end) + ") outside sentence of length " +
                    std::to_string(length),
                id);
  }
  const std::string_view actual =
      text.substr(bounds[span.start], bounds[span.end] - bounds[span.start]);
  if (actual != span.text) {
    throw Error(ErrorCode::kSpanTextMismatch,
                std::string(slot_name(span.type)) + " span text \"" + span.text +
                    "\" does not match sentence slice \"" + std::string(actual) + "\"",
                id);
  }
}

void validate_sentence(const AnnotatedSentence& sentence) {
  const auto bounds = utf8::boundaries(sentence.text);
  for (const TupleRecord& tuple : sentence.tuples) {
    if (tuple.condition_value && !tuple.condition) {
      throw Error(ErrorCode::kMissingSlot, "condition_value present without condition",
                  sentence.id);
    }
    for (EntityType t : kEntityTypes) {
      const EntitySpan* span = tuple.slot(t);
      if (span == nullptr) continue;
      if (span->type != t) {
        throw Error(ErrorCode::kMissingSlot,
                    "span stored in slot " + std::string(slot_name(t)) + " has another type",
                    sentence.id);
      }
      validate_span(*span, sentence.text, bounds, sentence.id);
    }
  }
}

void validate_dataset(const Dataset& dataset) {
  std::unordered_set<std::string> ids;
  for (const AnnotatedSentence& s : dataset.sentences) {
    if (!ids.insert(s.id).second) {
      throw Error(ErrorCode::kDuplicateId, "duplicate sentence id", s.id);
    }
    validate_sentence(s);
  }
}

namespace {

[[noreturn]] void malformed(const std::string& what, const std::string& id = {}) {
  throw Error(ErrorCode::kMalformedJson, what, id);
}

std::size_t read_offset(const json& obj, const char* key, const std::string& id) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number_unsigned()) {
    malformed(std::string("span field '") + key + "' must be a non-negative integer", id);
  }
  return it->get<std::size_t>();
}

std::optional<EntitySpan> read_optional_span(const json& tuple, EntityType type,
                                             const std::string& id) {
  auto it = tuple.find(slot_name(type));
  if (it == tuple.end() || it->is_null()) return std::nullopt;
  return span_from_json(*it, type, id);
}

EntitySpan read_mandatory_span(const json& tuple, EntityType type, const std::string& id) {
  auto it = tuple.find(slot_name(type));
  if (it == tuple.end() || it->is_null()) {
    throw Error(ErrorCode::kMissingSlot,
                "mandatory slot '" + std::string(slot_name(type)) + "' missing", id);
  }
  return span_from_json(*it, type, id);
}

}  // namespace

EntitySpan span_from_json(const json& obj, EntityType type, const std::string& id) {
  if (!obj.is_object()) malformed(std::string(slot_name(type)) + " must be an object", id);
  EntitySpan span;
  span.type = type;
  span.start = read_offset(obj, "start", id);
  span.end = read_offset(obj, "end", id);
  auto text = obj.find("text");
  if (text == obj.end() || !text->is_string()) malformed("span field 'text' must be a string", id);
  span.text = text->get<std::string>();
  return span;
}

json span_to_json(const EntitySpan& span) {
  return json{{"start", span.start}, {"end", span.end}, {"text", span.text}};
}

json optional_span_to_json(const std::optional<EntitySpan>& span) {
  return span ? span_to_json(*span) : json(nullptr);
}

json tuple_to_json(const TupleRecord& t) {
  return json{{"material", span_to_json(t.material)},
              {"property", span_to_json(t.property)},
              {"property_value", span_to_json(t.property_value)},
              {"condition", optional_span_to_json(t.condition)},
              {"condition_value", optional_span_to_json(t.condition_value)}};
}

Dataset parse_dataset(std::string_view raw) {
  json doc;
  try {
    doc = json::parse(raw.begin(), raw.end());
  } catch (const json::exception& e) {
    malformed(std::string("invalid JSON: ") + e.what());
  }
  return parse_dataset_json(doc);
}

Dataset parse_dataset_json(const json& doc) {
  if (!doc.is_object()) malformed("top level must be an object");
  auto sentences = doc.find("sentences");
  if (sentences == doc.end() || !sentences->is_array()) malformed("'sentences' must be an array");

  Dataset out;
  out.sentences.reserve(sentences->size());
  for (const json& s : *sentences) {
    if (!s.is_object()) malformed("sentence entries must be objects");
    AnnotatedSentence sentence;
    auto id = s.find("id");
    if (id == s.end() || !id->is_string()) malformed("sentence 'id' must be a string");
    sentence.id = id->get<std::string>();
    auto text = s.find("text");
    if (text == s.end() || !text->is_string()) malformed("sentence 'text' must be a string", sentence.id);
    sentence.text = text->get<std::string>();
    auto tuples = s.find("tuples");
    if (tuples == s.end() || !tuples->is_array()) malformed("'tuples' must be an array", sentence.id);
    for (const json& t : *tuples) {
      if (!t.is_object()) malformed("tuple entries must be objects", sentence.id);
      TupleRecord tuple;
      tuple.material = read_mandatory_span(t, EntityType::kMaterial, sentence.id);
      tuple.property = read_mandatory_span(t, EntityType::kProperty, sentence.id);
      tuple.property_value = read_mandatory_span(t, EntityType::kPropertyValue, sentence.id);
      tuple.condition = read_optional_span(t, EntityType::kCondition, sentence.id);
      tuple.condition_value = read_optional_span(t, EntityType::kConditionValue, sentence.id);
      sentence.tuples.push_back(std::move(tuple));
    }
    out.sentences.push_back(std::move(sentence));
  }
  validate_dataset(out);
  return out;
}

std::string serialize_dataset(const Dataset& dataset) {
  json sentences = json::array();
  for (const AnnotatedSentence& s : dataset.sentences) {
    json tuples = json::array();
    for (const TupleRecord& t : s.tuples) {
      tuples.push_back(tuple_to_json(t));
    }
    sentences.push_back(json{{"id", s.id}, {"text", s.text}, {"tuples", std::move(tuples)}});
  }
  // nlohmann::json objects are std::map backed, so keys come out sorted.
  return json{{"sentences", std::move(sentences)}}.dump();
}

TupleCountSplit split_by_tuple_count(const Dataset& dataset) {
  TupleCountSplit split;
  for (const AnnotatedSentence& s : dataset.sentences) {
    const std::size_t k = s.tuples.size();
    if (k == 0) throw Error(ErrorCode::kEmptySentence, "sentence has no tuples", s.id);
    if (k <= 4) {
      split.by_count[k - 1].sentences.push_back(s);
    } else {
      split.excluded.sentences.push_back(s);
    }
  }
  return split;
}

DistributionReport stats(const Dataset& dataset) {
  DistributionReport report;
  for (const AnnotatedSentence& s : dataset.sentences) {
    DistributionRow& row = report.by_count[s.tuples.size()];
    ++row.sentences;
    row.tuples += s.tuples.size();
    ++report.total_sentences;
    report.total_tuples += s.tuples.size();
  }
  for (auto& [k, row] : report.by_count) {
    row.proportion =
        static_cast<double>(row.sentences) / static_cast<double>(report.total_sentences);
  }
  return report;
}

std::pair<Dataset, Dataset> train_val_split(const Dataset& dataset, std::uint64_t seed) {
  const std::size_t n = dataset.sentences.size();
  if (n < 10) {
    throw Error(ErrorCode::kTooFewSentences,
                "train/validation split needs at least 10 sentences, got " + std::to_string(n));
  }
  // round half up: (n + 5) / 10
  const std::size_t val_size = (n + 5) / 10;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(derive_seed(seed, 0x5911));
  rng.shuffle(order);

  Dataset train;
  Dataset val;
  std::vector<bool> in_val(n, false);
  for (std::size_t i = 0; i < val_size; ++i) in_val[order[i]] = true;
  // Both halves keep the input order.
  for (std::size_t i = 0; i < n; ++i) {
    (in_val[i] ? val : train).sentences.push_back(dataset.sentences[i]);
  }
  return {std::move(train), std::move(val)};
}

}  // namespace tuplex
