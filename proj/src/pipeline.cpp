#include "tuplex/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <thread>

#include "tuplex/error.hpp"
#include "tuplex/rng.hpp"

namespace tuplex {

using nlohmann::json;

SentencePrediction extract_sentence(const Pipeline& pipeline, const AnnotatedSentence& sentence,
                                    const EmbeddedSentence& embedded) {
  const EmbeddingRecord& emb = embedded.embedding;
  if (emb.dim != pipeline.extractor.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "extractor expects dimension " + std::to_string(pipeline.extractor.dim()) +
                    ", embedding has " + std::to_string(emb.dim),
                sentence.id);
  }
  if (embedded.tokens.tokens.size() != emb.token_count()) {
    throw Error(ErrorCode::kCountMismatch, "token list and embedding differ in length", sentence.id);
  }
  SentencePrediction out;
  out.id = sentence.id;
  out.text = sentence.text;
  const PointerLabels labels =
      threshold_labels(score_pointers(pipeline.extractor, emb), pipeline.extractor);
  out.entities = decode_spans(labels, embedded.tokens, sentence.text);
  AssignResult assigned = allocate(pipeline.allocator, out.entities, embedded.tokens, emb);
  out.tuples = std::move(assigned.tuples);
  out.events = std::move(assigned.events);
  return out;
}

std::vector<SentencePrediction> extract(const Pipeline& pipeline, const Dataset& dataset,
                                        const EmbeddingStore& store, std::size_t threads) {
  const std::size_t n = dataset.sentences.size();
  std::vector<SentencePrediction> out(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        const AnnotatedSentence& s = dataset.sentences[i];
        out[i] = extract_sentence(pipeline, s, store.at(s.id));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::sort(out.begin(), out.end(),
            [](const SentencePrediction& a, const SentencePrediction& b) { return a.id < b.id; });
  return out;
}

std::string serialize_predictions(std::span<const SentencePrediction> predictions, const json& config) {
  json sentences = json::array();
  for (const SentencePrediction& p : predictions) {
    json tuples = json::array();
    for (const ScoredTuple& t : p.tuples) {
      json j = tuple_to_json(t.tuple);
      j["score"] = t.score;
      tuples.push_back(std::move(j));
    }
    json entities = json::object();
    for (EntityType type : kEntityTypes) {
      json spans = json::array();
      for (const EntitySpan& s : p.entities[type_index(type)]) spans.push_back(span_to_json(s));
      entities[std::string(slot_name(type))] = std::move(spans);
    }
    sentences.push_back(json{{"id", p.id},
                             {"text", p.text},
                             {"tuples", std::move(tuples)},
                             {"entities", std::move(entities)},
                             {"events", p.events}});
  }
  return json{{"config", config}, {"sentences", std::move(sentences)}}.dump();
}

std::vector<SentencePrediction> as_predictions(const Dataset& dataset) {
  std::vector<SentencePrediction> out;
  out.reserve(dataset.sentences.size());
  for (const AnnotatedSentence& s : dataset.sentences) {
    SentencePrediction p;
    p.id = s.id;
    p.text = s.text;
    p.entities = gold_entities(s);
    for (const TupleRecord& t : s.tuples) p.tuples.push_back({t, 1.0});
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<SentencePrediction> parse_predictions(std::string_view raw) {
  json doc;
  try {
    doc = json::parse(raw.begin(), raw.end());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedJson, std::string("invalid JSON: ") + e.what());
  }
  const Dataset dataset = parse_dataset_json(doc);
  std::vector<SentencePrediction> out = as_predictions(dataset);
  const json& sentences = doc.at("sentences");
  for (std::size_t i = 0; i < out.size(); ++i) {
    SentencePrediction& p = out[i];
    const json& s = sentences[i];
    try {
      const json& tuples = s.at("tuples");
      for (std::size_t k = 0; k < tuples.size(); ++k) {
        auto score = tuples[k].find("score");
        if (score == tuples[k].end()) continue;
        if (!score->is_number()) throw Error(ErrorCode::kMalformedJson, "tuple score must be a number", p.id);
        p.tuples[k].score = score->get<double>();
      }
      auto entities = s.find("entities");
      if (entities != s.end()) {
        if (!entities->is_object()) throw Error(ErrorCode::kMalformedJson, "'entities' must be an object", p.id);
        const auto bounds = utf8::boundaries(p.text);
        for (EntityType type : kEntityTypes) {
          auto& spans = p.entities[type_index(type)];
          spans.clear();
          auto list = entities->find(slot_name(type));
          if (list == entities->end()) continue;
          if (!list->is_array()) throw Error(ErrorCode::kMalformedJson, "entity lists must be arrays", p.id);
          for (const json& e : *list) {
            spans.push_back(span_from_json(e, type, p.id));
            validate_span(spans.back(), p.text, bounds, p.id);
          }
          std::sort(spans.begin(), spans.end());
        }
      }
      auto events = s.find("events");
      if (events != s.end() && events->is_array()) {
        for (const json& e : *events) {
          if (e.is_string()) p.events.push_back(e.get<std::string>());
        }
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kMalformedJson, e.what(), p.id);
    }
  }
  return out;
}

EvalResult evaluate(const Dataset& gold, std::span<const SentencePrediction> predictions,
                    std::string dataset_name, std::string config_name) {
  std::map<std::string, const SentencePrediction*> by_id;
  for (const SentencePrediction& p : predictions) by_id.emplace(p.id, &p);
  EvalResult total;
  total.dataset = std::move(dataset_name);
  total.config = std::move(config_name);
  for (const AnnotatedSentence& s : gold.sentences) {
    auto it = by_id.find(s.id);
    if (it == by_id.end()) throw Error(ErrorCode::kCountMismatch, "no prediction for sentence", s.id);
    const SentencePrediction& p = *it->second;
    std::vector<TupleRecord> pred;
    pred.reserve(p.tuples.size());
    for (const ScoredTuple& t : p.tuples) pred.push_back(t.tuple);
    EvalResult one;
    one.per_type = entity_counts(p.entities, gold_entities(s));
    one.tuple = tuple_counts(pred, s.tuples);
    total += one;
  }
  return total;
}

Dataset select_dataset(const Dataset& dataset, std::string_view selector, std::uint64_t seed) {
  if (selector == "all") return dataset;
  if (selector.size() == 1 && selector[0] >= '1' && selector[0] <= '4') {
    return split_by_tuple_count(dataset).bucket(static_cast<std::size_t>(selector[0] - '0'));
  }
  if (selector == "random") {
    Dataset pool;
    for (const AnnotatedSentence& s : dataset.sentences) {
      if (!s.tuples.empty() && s.tuples.size() <= 4) pool.sentences.push_back(s);
    }
    if (pool.sentences.empty()) return pool;
    const std::size_t want = std::max<std::size_t>(1, (pool.sentences.size() + 5) / 10);
    std::vector<std::size_t> order(pool.sentences.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(seed, 0x7A4D));
    rng.shuffle(order);
    order.resize(want);
    std::sort(order.begin(), order.end());
    Dataset out;
    for (std::size_t i : order) out.sentences.push_back(pool.sentences[i]);
    return out;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "dataset selector must be 1, 2, 3, 4, random or all, got '" + std::string(selector) + "'");
}

}  // namespace tuplex
