#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tuplex/corpus.hpp"

namespace tuplex {

struct MetricTriple {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Harmonic mean; 0 when precision + recall is 0.
double f1_score(double precision, double recall);

struct Counts {
  std::size_t pred = 0;
  std::size_t gold = 0;
  std::size_t correct = 0;

  Counts& operator+=(const Counts& o) {
    pred += o.pred;
    gold += o.gold;
    correct += o.correct;
    return *this;
  }
  friend bool operator==(const Counts&, const Counts&) = default;

  // Empty denominators give 0.
  MetricTriple metrics() const;
};

using TypeCounts = std::array<Counts, kNumEntityTypes>;

// Exact (type, start, end) match with one-to-one consumption of gold spans.
TypeCounts entity_counts(const SpansByType& pred, const SpansByType& gold);
std::array<MetricTriple, kNumEntityTypes> entity_prf(const SpansByType& pred, const SpansByType& gold);

// Predicted tuples are deduplicated first; a tuple is correct when all five
// slots match a not yet consumed gold tuple, absent slots included.
Counts tuple_counts(std::span<const TupleRecord> pred, std::span<const TupleRecord> gold);
MetricTriple tuple_prf(std::span<const TupleRecord> pred, std::span<const TupleRecord> gold);

// Micro-averaged counts of one (dataset, configuration) run.
struct EvalResult {
  std::string dataset;
  std::string config;
  TypeCounts per_type;
  Counts tuple;

  EvalResult& operator+=(const EvalResult& o);
};

nlohmann::json result_to_json(const EvalResult& r);
EvalResult result_from_json(const nlohmann::json& j);

// {"results": [...], "grid": ...}; the grid (tuple P/R/F1 by dataset and
// config) is only present when more than one config was evaluated.
nlohmann::json report_json(std::span<const EvalResult> results);

// Aligned plain-text rendering of the same report.
std::string report_table(std::span<const EvalResult> results);

}  // namespace tuplex
