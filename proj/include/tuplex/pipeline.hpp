#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tuplex/allocator.hpp"
#include "tuplex/corpus.hpp"
#include "tuplex/embedding.hpp"
#include "tuplex/eval.hpp"
#include "tuplex/pointer_net.hpp"

namespace tuplex {

struct Pipeline {
  PointerHeadParams extractor;
  AllocatorModel allocator;
};

struct SentencePrediction {
  std::string id;
  std::string text;
  SpansByType entities;
  std::vector<ScoredTuple> tuples;
  std::vector<std::string> events;
};

// Score, threshold, decode, allocate. Uses the token offsets stored with the
// embedding, not a fresh tokenization.
SentencePrediction extract_sentence(const Pipeline& pipeline, const AnnotatedSentence& sentence,
                                    const EmbeddedSentence& embedded);

// Runs extract_sentence on up to `threads` workers; the result is ordered by
// sentence id whatever the thread count.
std::vector<SentencePrediction> extract(const Pipeline& pipeline, const Dataset& dataset,
                                        const EmbeddingStore& store, std::size_t threads = 1);

// Corpus schema plus "score" on each tuple and "entities" / "events" on each
// sentence; the optional config is echoed under "config".
std::string serialize_predictions(std::span<const SentencePrediction> predictions,
                                  const nlohmann::json& config = nlohmann::json::object());

// Accepts prediction files and plain corpus files. Missing scores default to
// 1 and missing entity lists are taken from the tuple spans.
std::vector<SentencePrediction> parse_predictions(std::string_view raw);

// Gold-entity and gold-tuple view of an annotated dataset, as predictions.
std::vector<SentencePrediction> as_predictions(const Dataset& dataset);

// Sums per-sentence counts over the gold sentences. Predictions for ids not in
// `gold` are ignored; a gold sentence without a prediction is an error.
EvalResult evaluate(const Dataset& gold, std::span<const SentencePrediction> predictions,
                    std::string dataset_name, std::string config_name);

// "1".."4" pick one tuple-count bucket, "random" a seeded 10% sample of the
// sentences with 1..4 tuples (at least one), "all" everything unchanged.
Dataset select_dataset(const Dataset& dataset, std::string_view selector, std::uint64_t seed);

}  // namespace tuplex
