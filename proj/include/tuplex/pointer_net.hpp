#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tuplex/corpus.hpp"
#include "tuplex/embedding.hpp"
#include "tuplex/training.hpp"

namespace tuplex {

// Learnable part of the head/tail pointer classifiers. With hidden == 0 each
// head is linear on the frozen token vector; otherwise all ten heads read a
// shared tanh layer of width `hidden`.
struct PointerWeights {
  std::size_t dim = 0;
  std::size_t hidden = 0;
  std::vector<double> hidden_weight;  // hidden x dim, row-major
  std::vector<double> hidden_bias;    // hidden
  std::array<std::vector<double>, kNumEntityTypes> start_weight;
  std::array<std::vector<double>, kNumEntityTypes> end_weight;
  std::array<double, kNumEntityTypes> start_bias{};
  std::array<double, kNumEntityTypes> end_bias{};

  std::size_t feature_dim() const { return hidden == 0 ? dim : hidden; }

  static PointerWeights zeros(std::size_t dim, std::size_t hidden = 0);

  // Visits every parameter array as (name, mutable span). Biases are visited
  // as length-one spans. Order is fixed and used by flatten() and checkpoints.
  template <class F>
  void visit(F&& f);
  template <class F>
  void visit(F&& f) const;

  std::vector<double> flatten() const;
  void unflatten(std::span<const double> flat);
  std::size_t parameter_count() const;

  // this += scale * other
  void axpy(double scale, const PointerWeights& other);
};

struct PointerHeadParams {
  PointerWeights weights;
  std::array<double, kNumEntityTypes> start_threshold;
  std::array<double, kNumEntityTypes> end_threshold;
  std::uint64_t seed = 0;

  PointerHeadParams();

  std::size_t dim() const { return weights.dim; }

  // Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], seeded.
  static PointerHeadParams initialize(std::size_t dim, std::uint64_t seed, std::size_t hidden = 0);

  void validate() const;
};

struct PointerScores {
  std::array<std::vector<double>, kNumEntityTypes> start;
  std::array<std::vector<double>, kNumEntityTypes> end;
};

struct PointerLabels {
  std::array<std::vector<std::uint8_t>, kNumEntityTypes> start;
  std::array<std::vector<std::uint8_t>, kNumEntityTypes> end;

  static PointerLabels zeros(std::size_t tokens);
  std::size_t token_count() const { return start[0].size(); }
  friend bool operator==(const PointerLabels&, const PointerLabels&) = default;
};

PointerScores score_pointers(const PointerHeadParams& params, const EmbeddingRecord& emb);

// Label is 1 iff probability >= threshold.
PointerLabels threshold_labels(const PointerScores& scores, const PointerHeadParams& params);

// Nearest-tail rule for one type: every head h pairs with the smallest tail
// index t >= h; heads without such a tail produce nothing.
std::vector<TokenRange> decode_token_ranges(std::span<const std::uint8_t> heads,
                                            std::span<const std::uint8_t> tails);

SpansByType decode_spans(const PointerLabels& labels, const TokenizedSentence& tokens,
                         std::string_view text);

// Gold pointer labels for every distinct gold span.
PointerLabels gold_labels(const AnnotatedSentence& sentence, const TokenizedSentence& tokens);

struct ExtractorExample {
  const EmbeddingRecord* embedding = nullptr;
  PointerLabels gold;
};

std::vector<ExtractorExample> make_extractor_examples(const Dataset& dataset,
                                                      const EmbeddingStore& store);

// Binary cross-entropy summed over both sides, normalized by
// (types x tokens) per sentence, averaged over the batch.
double loss_l1(const PointerHeadParams& params, std::span<const ExtractorExample> batch);
PointerWeights grad_l1(const PointerHeadParams& params, std::span<const ExtractorExample> batch);

struct ExtractorHyper {
  double learning_rate = 0.05;
  std::size_t epochs = 200;
  std::size_t batch_size = 8;
  std::size_t hidden = 0;
  std::array<double, kNumEntityTypes> start_threshold{0.5, 0.5, 0.5, 0.5, 0.5};
  std::array<double, kNumEntityTypes> end_threshold{0.5, 0.5, 0.5, 0.5, 0.5};
};

struct ExtractorTrainResult {
  PointerHeadParams params;
  TrainLog log;
};

// Mini-batch gradient descent with a seeded per-epoch shuffle. Returns the
// parameters with the lowest validation loss (training loss if val is empty).
ExtractorTrainResult train_extractor(std::uint64_t init_seed,
                                     std::span<const ExtractorExample> train,
                                     std::span<const ExtractorExample> val,
                                     const ExtractorHyper& hyper);

// --- template definitions ---

template <class F>
void PointerWeights::visit(F&& f) {
  f("hidden_weight", std::span<double>(hidden_weight));
  f("hidden_bias", std::span<double>(hidden_bias));
  for (EntityType t : kEntityTypes) {
    const std::string type(slot_name(t));
    const std::size_t i = type_index(t);
    f(type + ".start.weight", std::span<double>(start_weight[i]));
    f(type + ".start.bias", std::span<double>(&start_bias[i], 1));
    f(type + ".end.weight", std::span<double>(end_weight[i]));
    f(type + ".end.bias", std::span<double>(&end_bias[i], 1));
  }
}

template <class F>
void PointerWeights::visit(F&& f) const {
  const_cast<PointerWeights*>(this)->visit(
      [&f](const std::string& name, std::span<double> values) {
        f(name, std::span<const double>(values.data(), values.size()));
      });
}

}  // namespace tuplex
