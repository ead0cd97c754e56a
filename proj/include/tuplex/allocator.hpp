#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tuplex/corpus.hpp"
#include "tuplex/embedding.hpp"
#include "tuplex/training.hpp"

namespace tuplex {

using Vector = std::vector<double>;
using Vectors = std::vector<Vector>;

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}
  double& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

// Entity vector: sum of the vectors of the tokens the span covers.
struct EntityRep {
  EntitySpan span;
  Vector vector;
};

EntityRep entity_repr(const EntitySpan& span, const TokenizedSentence& tokens,
                      const EmbeddingRecord& emb);
Vectors entity_vectors(std::span<const EntitySpan> spans, const TokenizedSentence& tokens,
                       const EmbeddingRecord& emb);

// S(i, j) = (h_i . g_j) / sqrt(d)
Matrix correlation(const Vectors& h, const Vectors& g);

struct InterAttention {
  Vectors g2h;  // one per h: sum_j S(i, j) g_j
  Vectors h2g;  // one per g: sum_i S(i, j) h_i
};

// Unnormalized cross-type weighted sums.
InterAttention inter_attention(const Matrix& s, const Vectors& h, const Vectors& g);

// Row-softmax of the scaled self-similarities of one entity set.
Matrix intra_weights(const Vectors& h);
Vectors intra_attention(const Vectors& h);

// Matching head for one (anchor type, partner type) pair.
struct AllocParams {
  std::size_t dim = 0;
  Vector weight;  // 6 * dim, applied to [h; g; A_g2h; A_h2g; A_h2h; A_g2g]
  double bias = 0.0;
  double lambda = 1.2;
  bool enable_inter = true;
  bool enable_intra = true;
  bool enable_allocation = true;

  static AllocParams zeros(std::size_t dim);
  // Uniform in [-1/sqrt(dim), 1/sqrt(dim)], seeded.
  static AllocParams random(std::size_t dim, std::uint64_t seed);
  void validate() const;
};

struct MatchScore {
  double logit = 0.0;
  double probability = 0.5;
};

MatchScore match_score(const AllocParams& params, std::span<const double> h, std::span<const double> g,
                       std::span<const double> g2h, std::span<const double> h2g,
                       std::span<const double> h2h, std::span<const double> g2g);

// Concatenated six-vector inputs of every (i, j) pair, with disabled
// attention blocks zeroed.
struct PairFeatures {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t width = 0;  // 6 * dim
  std::vector<double> values;

  std::span<const double> pair(std::size_t i, std::size_t j) const {
    return {values.data() + (i * cols + j) * width, width};
  }
};

PairFeatures pair_features(const Vectors& h, const Vectors& g, bool enable_inter, bool enable_intra);

struct MatchMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> logits;
  std::vector<double> probabilities;
  bool boosted = false;

  double probability(std::size_t i, std::size_t j) const { return probabilities[i * cols + j]; }
};

MatchMatrix match_matrix(const AllocParams& params, const PairFeatures& features);
MatchMatrix match_matrix(const AllocParams& params, const Vectors& h, const Vectors& g);

// Square matrices get their diagonal probabilities multiplied by lambda
// (capped below 1); other shapes are returned unchanged.
MatchMatrix apply_diagonal_boost(MatchMatrix m, double lambda);

struct AllocExample {
  std::string sentence_id;
  PairFeatures features;
  std::vector<std::uint8_t> gold;  // rows * cols, 1 when the pair shares a gold tuple
};

// Binary cross-entropy per pair, normalized by rows * cols per instance and
// averaged over the batch.
double loss_l2(const AllocParams& params, std::span<const AllocExample> batch);

struct AllocGradient {
  Vector weight;
  double bias = 0.0;
};

AllocGradient grad_l2(const AllocParams& params, std::span<const AllocExample> batch);

// Entity types matched against the PROPERTY VALUE anchor, in slot order.
inline constexpr std::array<EntityType, 4> kPartnerTypes = {
    EntityType::kMaterial, EntityType::kProperty, EntityType::kCondition,
    EntityType::kConditionValue};

std::size_t partner_index(EntityType t);

struct AllocatorModel {
  std::array<AllocParams, kPartnerTypes.size()> heads;

  std::size_t dim() const { return heads[0].dim; }
  double lambda() const { return heads[0].lambda; }
  bool enable_inter() const { return heads[0].enable_inter; }
  bool enable_intra() const { return heads[0].enable_intra; }
  bool enable_allocation() const { return heads[0].enable_allocation; }

  void set_lambda(double lambda);
  void set_flags(bool inter, bool intra, bool allocation);

  static AllocatorModel zeros(std::size_t dim);
  void validate() const;
};

struct ScoredTuple {
  TupleRecord tuple;
  double score = 1.0;
};

struct AssignResult {
  std::vector<ScoredTuple> tuples;
  std::vector<std::string> events;
};

// One tuple per PROPERTY VALUE anchor; every other slot takes the row maximum
// of the anchor's (boosted) matrix, lowest index on ties. matrices[p] has one
// row per property value and one column per entity of kPartnerTypes[p].
// With enable_allocation false, emits the Cartesian product instead.
AssignResult assign(const SpansByType& entities,
                    const std::array<MatchMatrix, kPartnerTypes.size()>& matrices,
                    bool enable_allocation);

// Builds representations and matrices, applies the boost and assigns.
AssignResult allocate(const AllocatorModel& model, const SpansByType& entities,
                      const TokenizedSentence& tokens, const EmbeddingRecord& emb);

struct AllocatorHyper {
  double learning_rate = 1e-4;
  std::size_t epochs = 200;
  std::size_t batch_size = 8;
  double lambda = 1.2;
  bool enable_inter = true;
  bool enable_intra = true;
  bool enable_allocation = true;
};

using AllocExamples = std::array<std::vector<AllocExample>, kPartnerTypes.size()>;

// Gold entities of every sentence; positives are pairs that share a gold
// tuple, every other anchor/partner pair is a negative.
AllocExamples make_allocator_examples(const Dataset& dataset, const EmbeddingStore& store,
                                      bool enable_inter, bool enable_intra);

struct AllocatorTrainResult {
  AllocatorModel model;
  std::array<TrainLog, kPartnerTypes.size()> logs;
};

// Training starts from U = 0, where every row of a square matrix prefers its
// diagonal once boosted; the seed only drives the batch shuffle.
AllocatorTrainResult train_allocator(std::uint64_t seed, const AllocExamples& train,
                                     const AllocExamples& val, std::size_t dim,
                                     const AllocatorHyper& hyper);

}  // namespace tuplex
