#include "tuplex/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tuplex/error.hpp"
#include "tuplex/numeric.hpp"
#include "tuplex/rng.hpp"

namespace tuplex {

namespace {

std::size_t common_dim(const Vectors& a, const Vectors& b) {
  std::size_t d = 0;
  for (const Vectors* set : {&a, &b}) {
    for (const Vector& v : *set) {
      if (d == 0) d = v.size();
      if (v.size() != d) throw Error(ErrorCode::kDimensionMismatch, "entity vectors differ in dimension");
    }
  }
  return d;
}

double scaled_dot(const Vector& a, const Vector& b) {
  return dot(a, b) / std::sqrt(static_cast<double>(a.size()));
}

}  // namespace

EntityRep entity_repr(const EntitySpan& span, const TokenizedSentence& tokens,
                      const EmbeddingRecord& emb) {
  if (tokens.tokens.size() != emb.token_count()) {
    throw Error(ErrorCode::kCountMismatch, "token list and embedding differ in length", emb.sentence_id);
  }
  const TokenRange r = align_span(span, tokens);
  EntityRep rep{span, Vector(emb.dim, 0.0)};
  for (std::size_t t = r.first; t <= r.last; ++t) {
    const auto v = emb.vector(t);
    for (std::size_t k = 0; k < emb.dim; ++k) rep.vector[k] += v[k];
  }
  return rep;
}

Vectors entity_vectors(std::span<const EntitySpan> spans, const TokenizedSentence& tokens,
                       const EmbeddingRecord& emb) {
  Vectors out;
  out.reserve(spans.size());
  for (const EntitySpan& s : spans) out.push_back(entity_repr(s, tokens, emb).vector);
  return out;
}

Matrix correlation(const Vectors& h, const Vectors& g) {
  common_dim(h, g);
  Matrix s(h.size(), g.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    for (std::size_t j = 0; j < g.size(); ++j) s(i, j) = scaled_dot(h[i], g[j]);
  }
  return s;
}

InterAttention inter_attention(const Matrix& s, const Vectors& h, const Vectors& g) {
  if (s.rows != h.size() || s.cols != g.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "correlation matrix does not match entity counts");
  }
  const std::size_t d = common_dim(h, g);
  InterAttention out{Vectors(h.size(), Vector(d, 0.0)), Vectors(g.size(), Vector(d, 0.0))};
  for (std::size_t i = 0; i < h.size(); ++i) {
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double w = s(i, j);
      for (std::size_t k = 0; k < d; ++k) {
        out.g2h[i][k] += w * g[j][k];
        out.h2g[j][k] += w * h[i][k];
      }
    }
  }
  return out;
}

Matrix intra_weights(const Vectors& h) {
  common_dim(h, h);
  const std::size_t n = h.size();
  Matrix mu(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double max_logit = -INFINITY;
    for (std::size_t j = 0; j < n; ++j) {
      mu(i, j) = scaled_dot(h[i], h[j]);
      max_logit = std::max(max_logit, mu(i, j));
    }
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      mu(i, j) = std::exp(mu(i, j) - max_logit);
      total += mu(i, j);
    }
    for (std::size_t j = 0; j < n; ++j) mu(i, j) /= total;
  }
  return mu;
}

Vectors intra_attention(const Vectors& h) {
  const Matrix mu = intra_weights(h);
  const std::size_t d = h.empty() ? 0 : h[0].size();
  Vectors out(h.size(), Vector(d, 0.0));
  for (std::size_t i = 0; i < h.size(); ++i) {
    for (std::size_t j = 0; j < h.size(); ++j) {
      for (std::size_t k = 0; k < d; ++k) out[i][k] += mu(i, j) * h[j][k];
    }
  }
  return out;
}

AllocParams AllocParams::zeros(std::size_t dim) {
  if (dim == 0) throw Error(ErrorCode::kInvalidArgument, "allocator dimension must be positive");
  AllocParams p;
  p.dim = dim;
  p.weight.assign(6 * dim, 0.0);
  return p;
}

AllocParams AllocParams::random(std::size_t dim, std::uint64_t seed) {
  AllocParams p = zeros(dim);
  Rng rng(derive_seed(seed, 0xA11C));
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  for (double& w : p.weight) w = rng.uniform(-bound, bound);
  p.bias = rng.uniform(-bound, bound);
  return p;
}

void AllocParams::validate() const {
  if (weight.size() != 6 * dim) {
    throw Error(ErrorCode::kDimensionMismatch, "allocator weight must have 6 * dim entries");
  }
  for (double w : weight) {
    if (!std::isfinite(w)) throw Error(ErrorCode::kNonFinite, "non-finite allocator weight");
  }
  if (!std::isfinite(bias)) throw Error(ErrorCode::kNonFinite, "non-finite allocator bias");
  if (!(lambda >= 1.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::kInvalidArgument, "lambda must be a finite value >= 1");
  }
}

MatchScore match_score(const AllocParams& params, std::span<const double> h, std::span<const double> g,
                       std::span<const double> g2h, std::span<const double> h2g,
                       std::span<const double> h2h, std::span<const double> g2g) {
  const std::size_t d = params.dim;
  const std::array<std::span<const double>, 6> blocks = {h, g, g2h, h2g, h2h, g2g};
  for (const auto& b : blocks) {
    if (b.size() != d) throw Error(ErrorCode::kDimensionMismatch, "match inputs must have dimension d");
  }
  if (params.weight.size() != 6 * d) {
    throw Error(ErrorCode::kDimensionMismatch, "allocator weight must have 6 * dim entries");
  }
  double z = params.bias;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if ((b == 2 || b == 3) && !params.enable_inter) continue;
    if ((b == 4 || b == 5) && !params.enable_intra) continue;
    for (std::size_t k = 0; k < d; ++k) z += params.weight[b * d + k] * blocks[b][k];
  }
  return {z, clamped_sigmoid(z)};
}

PairFeatures pair_features(const Vectors& h, const Vectors& g, bool enable_inter, bool enable_intra) {
  const std::size_t d = common_dim(h, g);
  PairFeatures f;
  f.rows = h.size();
  f.cols = g.size();
  f.width = 6 * d;
  f.values.assign(f.rows * f.cols * f.width, 0.0);
  if (f.rows == 0 || f.cols == 0) return f;

  InterAttention inter;
  if (enable_inter) inter = inter_attention(correlation(h, g), h, g);
  Vectors h2h;
  Vectors g2g;
  if (enable_intra) {
    h2h = intra_attention(h);
    g2g = intra_attention(g);
  }
  for (std::size_t i = 0; i < f.rows; ++i) {
    for (std::size_t j = 0; j < f.cols; ++j) {
      double* out = f.values.data() + (i * f.cols + j) * f.width;
      std::copy(h[i].begin(), h[i].end(), out);
      std::copy(g[j].begin(), g[j].end(), out + d);
      if (enable_inter) {
        std::copy(inter.g2h[i].begin(), inter.g2h[i].end(), out + 2 * d);
        std::copy(inter.h2g[j].begin(), inter.h2g[j].end(), out + 3 * d);
      }
      if (enable_intra) {
        std::copy(h2h[i].begin(), h2h[i].end(), out + 4 * d);
        std::copy(g2g[j].begin(), g2g[j].end(), out + 5 * d);
      }
    }
  }
  return f;
}

MatchMatrix match_matrix(const AllocParams& params, const PairFeatures& features) {
  if (features.rows * features.cols > 0 && features.width != params.weight.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "pair features do not match allocator weights");
  }
  MatchMatrix m;
  m.rows = features.rows;
  m.cols = features.cols;
  m.logits.resize(m.rows * m.cols);
  m.probabilities.resize(m.rows * m.cols);
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) {
      const double z = params.bias + dot(params.weight, features.pair(i, j));
      m.logits[i * m.cols + j] = z;
      m.probabilities[i * m.cols + j] = clamped_sigmoid(z);
    }
  }
  return m;
}

MatchMatrix match_matrix(const AllocParams& params, const Vectors& h, const Vectors& g) {
  return match_matrix(params, pair_features(h, g, params.enable_inter, params.enable_intra));
}

MatchMatrix apply_diagonal_boost(MatchMatrix m, double lambda) {
  if (!(lambda >= 1.0)) throw Error(ErrorCode::kInvalidArgument, "lambda must be >= 1");
  if (m.rows != m.cols || lambda == 1.0) return m;
  for (std::size_t i = 0; i < m.rows; ++i) {
    double& p = m.probabilities[i * m.cols + i];
    p = std::min(1.0 - kProbEps, lambda * p);
  }
  m.boosted = true;
  return m;
}

namespace {

void check_alloc_batch(const AllocParams& params, std::span<const AllocExample> batch) {
  if (batch.empty()) throw Error(ErrorCode::kEmptyBatch, "allocator batch is empty");
  for (const AllocExample& ex : batch) {
    if (ex.features.width != params.weight.size()) {
      throw Error(ErrorCode::kDimensionMismatch, "pair features do not match allocator weights",
                  ex.sentence_id);
    }
    if (ex.gold.size() != ex.features.rows * ex.features.cols) {
      throw Error(ErrorCode::kCountMismatch, "gold matrix does not match pair count", ex.sentence_id);
    }
    for (std::uint8_t z : ex.gold) {
      if (z > 1) throw Error(ErrorCode::kInvalidArgument, "gold match labels must be 0 or 1", ex.sentence_id);
    }
  }
}

// Loss of the examples at `indices`; accumulates the gradient when asked.
double alloc_batch_loss(const AllocParams& params, std::span<const AllocExample> batch,
                        std::span<const std::size_t> indices, AllocGradient* grad) {
  const double inv_batch = 1.0 / static_cast<double>(indices.size());
  double loss = 0.0;
  for (std::size_t idx : indices) {
    const AllocExample& ex = batch[idx];
    const std::size_t pairs = ex.features.rows * ex.features.cols;
    if (pairs == 0) continue;
    const double scale = inv_batch / static_cast<double>(pairs);
    for (std::size_t i = 0; i < ex.features.rows; ++i) {
      for (std::size_t j = 0; j < ex.features.cols; ++j) {
        const auto x = ex.features.pair(i, j);
        const double z = params.bias + dot(params.weight, x);
        const double y = ex.gold[i * ex.features.cols + j];
        loss += scale * bce_with_logit(z, y);
        if (grad == nullptr) continue;
        const double gz = (sigmoid(z) - y) * scale;
        for (std::size_t k = 0; k < x.size(); ++k) grad->weight[k] += gz * x[k];
        grad->bias += gz;
      }
    }
  }
  return loss;
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

}  // namespace

double loss_l2(const AllocParams& params, std::span<const AllocExample> batch) {
  check_alloc_batch(params, batch);
  return alloc_batch_loss(params, batch, all_indices(batch.size()), nullptr);
}

AllocGradient grad_l2(const AllocParams& params, std::span<const AllocExample> batch) {
  check_alloc_batch(params, batch);
  AllocGradient g{Vector(params.weight.size(), 0.0), 0.0};
  alloc_batch_loss(params, batch, all_indices(batch.size()), &g);
  return g;
}

std::size_t partner_index(EntityType t) {
  for (std::size_t p = 0; p < kPartnerTypes.size(); ++p) {
    if (kPartnerTypes[p] == t) return p;
  }
  throw Error(ErrorCode::kInvalidArgument, "property_value is the anchor, not a partner type");
}

void AllocatorModel::set_lambda(double lambda) {
  if (!(lambda >= 1.0)) throw Error(ErrorCode::kInvalidArgument, "lambda must be >= 1");
  for (AllocParams& h : heads) h.lambda = lambda;
}

void AllocatorModel::set_flags(bool inter, bool intra, bool allocation) {
  for (AllocParams& h : heads) {
    h.enable_inter = inter;
    h.enable_intra = intra;
    h.enable_allocation = allocation;
  }
}

AllocatorModel AllocatorModel::zeros(std::size_t dim) {
  AllocatorModel m;
  for (AllocParams& h : m.heads) h = AllocParams::zeros(dim);
  return m;
}

void AllocatorModel::validate() const {
  for (const AllocParams& h : heads) {
    h.validate();
    if (h.dim != heads[0].dim || h.lambda != heads[0].lambda ||
        h.enable_inter != heads[0].enable_inter || h.enable_intra != heads[0].enable_intra ||
        h.enable_allocation != heads[0].enable_allocation) {
      throw Error(ErrorCode::kBadCheckpoint, "allocator heads disagree on dimension, lambda or flags");
    }
  }
}

AssignResult assign(const SpansByType& entities,
                    const std::array<MatchMatrix, kPartnerTypes.size()>& matrices,
                    bool enable_allocation) {
  AssignResult result;
  const auto& values = entities[type_index(EntityType::kPropertyValue)];
  if (values.empty()) {
    result.events.push_back("no property_value entities; nothing to anchor");
    return result;
  }
  for (EntityType t : {EntityType::kMaterial, EntityType::kProperty}) {
    if (entities[type_index(t)].empty()) {
      result.events.push_back("no " + std::string(slot_name(t)) + " entities; " +
                              std::to_string(values.size()) + " anchor(s) emit no tuple");
      return result;
    }
  }
  const auto& conditions = entities[type_index(EntityType::kCondition)];
  const auto& condition_values = entities[type_index(EntityType::kConditionValue)];
  if (conditions.empty() && !condition_values.empty()) {
    result.events.push_back("condition_value entities without any condition are dropped");
  }

  if (!enable_allocation) {
    const auto& materials = entities[type_index(EntityType::kMaterial)];
    const auto& properties = entities[type_index(EntityType::kProperty)];
    const std::size_t n_cond = std::max<std::size_t>(conditions.size(), 1);
    const std::size_t n_cv = conditions.empty() ? 1 : std::max<std::size_t>(condition_values.size(), 1);
    for (const EntitySpan& m : materials) {
      for (const EntitySpan& p : properties) {
        for (const EntitySpan& v : values) {
          for (std::size_t c = 0; c < n_cond; ++c) {
            for (std::size_t cv = 0; cv < n_cv; ++cv) {
              TupleRecord t{m, p, v, std::nullopt, std::nullopt};
              if (!conditions.empty()) t.condition = conditions[c];
              if (!conditions.empty() && !condition_values.empty()) t.condition_value = condition_values[cv];
              result.tuples.push_back({std::move(t), 1.0});
            }
          }
        }
      }
    }
    return result;
  }

  for (std::size_t p = 0; p < kPartnerTypes.size(); ++p) {
    const auto& partners = entities[type_index(kPartnerTypes[p])];
    if (partners.empty()) continue;
    if (matrices[p].rows != values.size() || matrices[p].cols != partners.size()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "match matrix for " + std::string(slot_name(kPartnerTypes[p])) +
                      " does not match entity counts");
    }
  }

  for (std::size_t i = 0; i < values.size(); ++i) {
    TupleRecord t;
    t.property_value = values[i];
    double score = 1.0;
    for (std::size_t p = 0; p < kPartnerTypes.size(); ++p) {
      const EntityType type = kPartnerTypes[p];
      const auto& partners = entities[type_index(type)];
      if (partners.empty()) continue;
      if (type == EntityType::kConditionValue && !t.condition) continue;
      std::size_t best = 0;
      for (std::size_t j = 1; j < partners.size(); ++j) {
        if (matrices[p].probability(i, j) > matrices[p].probability(i, best)) best = j;
      }
      score *= matrices[p].probability(i, best);
      switch (type) {
        case EntityType::kMaterial: t.material = partners[best]; break;
        case EntityType::kProperty: t.property = partners[best]; break;
        case EntityType::kCondition: t.condition = partners[best]; break;
        case EntityType::kConditionValue: t.condition_value = partners[best]; break;
        case EntityType::kPropertyValue: break;
      }
    }
    result.tuples.push_back({std::move(t), score});
  }
  return result;
}

AssignResult allocate(const AllocatorModel& model, const SpansByType& entities,
                      const TokenizedSentence& tokens, const EmbeddingRecord& emb) {
  std::array<MatchMatrix, kPartnerTypes.size()> matrices;
  if (model.enable_allocation()) {
    if (model.dim() != emb.dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "allocator expects dimension " + std::to_string(model.dim()) + ", embedding has " +
                      std::to_string(emb.dim),
                  emb.sentence_id);
    }
    const auto& values = entities[type_index(EntityType::kPropertyValue)];
    const Vectors h = entity_vectors(values, tokens, emb);
    for (std::size_t p = 0; p < kPartnerTypes.size(); ++p) {
      const auto& partners = entities[type_index(kPartnerTypes[p])];
      if (values.empty() || partners.empty()) continue;
      const Vectors g = entity_vectors(partners, tokens, emb);
      matrices[p] = apply_diagonal_boost(match_matrix(model.heads[p], h, g), model.lambda());
    }
  }
  return assign(entities, matrices, model.enable_allocation());
}

AllocExamples make_allocator_examples(const Dataset& dataset, const EmbeddingStore& store,
                                      bool enable_inter, bool enable_intra) {
  AllocExamples out;
  for (const AnnotatedSentence& s : dataset.sentences) {
    const EmbeddedSentence& rec = store.at(s.id);
    const SpansByType gold = gold_entities(s);
    const auto& values = gold[type_index(EntityType::kPropertyValue)];
    if (values.empty()) continue;
    const Vectors h = entity_vectors(values, rec.tokens, rec.embedding);
    for (std::size_t p = 0; p < kPartnerTypes.size(); ++p) {
      const EntityType type = kPartnerTypes[p];
      const auto& partners = gold[type_index(type)];
      if (partners.empty()) continue;
      AllocExample ex;
      ex.sentence_id = s.id;
      ex.features = pair_features(h, entity_vectors(partners, rec.tokens, rec.embedding),
                                  enable_inter, enable_intra);
      ex.gold.assign(values.size() * partners.size(), 0);
      for (const TupleRecord& t : s.tuples) {
        const EntitySpan* partner = t.slot(type);
        if (partner == nullptr) continue;
        const auto i = static_cast<std::size_t>(
            std::lower_bound(values.begin(), values.end(), t.property_value) - values.begin());
        const auto j = static_cast<std::size_t>(
            std::lower_bound(partners.begin(), partners.end(), *partner) - partners.begin());
        ex.gold[i * partners.size() + j] = 1;
      }
      out[p].push_back(std::move(ex));
    }
  }
  return out;
}

AllocatorTrainResult train_allocator(std::uint64_t seed, const AllocExamples& train,
                                     const AllocExamples& val, std::size_t dim,
                                     const AllocatorHyper& hyper) {
  std::size_t positives = 0;
  for (const auto& examples : train) {
    for (const AllocExample& ex : examples) {
      positives += static_cast<std::size_t>(std::count(ex.gold.begin(), ex.gold.end(), 1));
    }
  }
  if (positives == 0) throw Error(ErrorCode::kNoPositivePairs, "training data has no positive pairs");

  AllocatorTrainResult result;
  result.model = AllocatorModel::zeros(dim);
  result.model.set_lambda(hyper.lambda);
  result.model.set_flags(hyper.enable_inter, hyper.enable_intra, hyper.enable_allocation);

  for (std::size_t p = 0; p < kPartnerTypes.size(); ++p) {
    AllocParams params = result.model.heads[p];
    TrainLog& log = result.logs[p];
    const auto& tr = train[p];
    if (tr.empty()) continue;
    check_alloc_batch(params, tr);
    const auto& selection = val[p].empty() ? tr : val[p];
    check_alloc_batch(params, selection);

    auto record = [&](std::size_t epoch) {
      return EpochRecord{epoch, loss_l2(params, tr), loss_l2(params, selection)};
    };
    log.epochs.push_back(record(0));
    log.best_epoch = 0;
    log.best_val_loss = log.epochs.back().val_loss;

    const std::size_t batch_size = hyper.batch_size == 0 ? tr.size() : hyper.batch_size;
    Rng rng(derive_seed(seed, 0xB000 + p));
    std::vector<std::size_t> order = all_indices(tr.size());
    for (std::size_t epoch = 1; epoch <= hyper.epochs; ++epoch) {
      rng.shuffle(order);
      for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
        const std::size_t end = std::min(order.size(), begin + batch_size);
        AllocGradient g{Vector(params.weight.size(), 0.0), 0.0};
        alloc_batch_loss(params, tr, std::span(order).subspan(begin, end - begin), &g);
        for (std::size_t k = 0; k < g.weight.size(); ++k) params.weight[k] -= hyper.learning_rate * g.weight[k];
        params.bias -= hyper.learning_rate * g.bias;
      }
      EpochRecord rec = record(epoch);
      if (!std::isfinite(rec.train_loss)) {
        throw Error(ErrorCode::kNonFinite, "allocator training diverged at epoch " + std::to_string(epoch));
      }
      log.epochs.push_back(rec);
      if (rec.val_loss < log.best_val_loss) {
        log.best_val_loss = rec.val_loss;
        log.best_epoch = epoch;
        result.model.heads[p] = params;
      }
    }
  }
  return result;
}

}  // namespace tuplex
