#include "tuplex/pointer_net.hpp"

#include <cmath>
#include <numeric>
#include <set>

#include "tuplex/error.hpp"
#include "tuplex/numeric.hpp"
#include "tuplex/rng.hpp"

namespace tuplex {

PointerWeights PointerWeights::zeros(std::size_t dim, std::size_t hidden) {
  PointerWeights w;
  w.dim = dim;
  w.hidden = hidden;
  w.hidden_weight.assign(hidden * dim, 0.0);
  w.hidden_bias.assign(hidden, 0.0);
  for (std::size_t i = 0; i < kNumEntityTypes; ++i) {
    w.start_weight[i].assign(w.feature_dim(), 0.0);
    w.end_weight[i].assign(w.feature_dim(), 0.0);
  }
  return w;
}

std::vector<double> PointerWeights::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  visit([&](const std::string&, std::span<const double> v) { out.insert(out.end(), v.begin(), v.end()); });
  return out;
}

void PointerWeights::unflatten(std::span<const double> flat) {
  if (flat.size() != parameter_count()) {
    throw Error(ErrorCode::kDimensionMismatch, "flat parameter vector has wrong length");
  }
  std::size_t pos = 0;
  visit([&](const std::string&, std::span<double> v) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(pos),
              flat.begin() + static_cast<std::ptrdiff_t>(pos + v.size()), v.begin());
    pos += v.size();
  });
}

std::size_t PointerWeights::parameter_count() const {
  std::size_t n = 0;
  visit([&](const std::string&, std::span<const double> v) { n += v.size(); });
  return n;
}

void PointerWeights::axpy(double scale, const PointerWeights& other) {
  const std::vector<double> delta = other.flatten();
  std::size_t pos = 0;
  visit([&](const std::string&, std::span<double> v) {
    for (double& x : v) x += scale * delta[pos++];
  });
}

PointerHeadParams::PointerHeadParams() {
  start_threshold.fill(0.5);
  end_threshold.fill(0.5);
}

PointerHeadParams PointerHeadParams::initialize(std::size_t dim, std::uint64_t seed,
                                                std::size_t hidden) {
  if (dim == 0) throw Error(ErrorCode::kInvalidArgument, "pointer head dimension must be positive");
  PointerHeadParams p;
  p.seed = seed;
  p.weights = PointerWeights::zeros(dim, hidden);
  Rng rng(derive_seed(seed, 0x9017));
  const double in_bound = 1.0 / std::sqrt(static_cast<double>(dim));
  for (double& w : p.weights.hidden_weight) w = rng.uniform(-in_bound, in_bound);
  for (double& b : p.weights.hidden_bias) b = rng.uniform(-in_bound, in_bound);
  const double head_bound = 1.0 / std::sqrt(static_cast<double>(p.weights.feature_dim()));
  for (std::size_t i = 0; i < kNumEntityTypes; ++i) {
    for (double& w : p.weights.start_weight[i]) w = rng.uniform(-head_bound, head_bound);
    p.weights.start_bias[i] = rng.uniform(-head_bound, head_bound);
    for (double& w : p.weights.end_weight[i]) w = rng.uniform(-head_bound, head_bound);
    p.weights.end_bias[i] = rng.uniform(-head_bound, head_bound);
  }
  return p;
}

void PointerHeadParams::validate() const {
  const PointerWeights& w = weights;
  bool shapes = w.hidden_weight.size() == w.hidden * w.dim && w.hidden_bias.size() == w.hidden;
  for (std::size_t i = 0; i < kNumEntityTypes; ++i) {
    shapes = shapes && w.start_weight[i].size() == w.feature_dim() &&
             w.end_weight[i].size() == w.feature_dim();
  }
  if (!shapes) throw Error(ErrorCode::kDimensionMismatch, "pointer parameter shapes are inconsistent");
  for (double v : w.flatten()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFinite, "non-finite pointer parameter");
  }
  for (std::size_t i = 0; i < kNumEntityTypes; ++i) {
    for (double beta : {start_threshold[i], end_threshold[i]}) {
      if (!(beta > 0.0 && beta < 1.0)) {
        throw Error(ErrorCode::kInvalidArgument, "pointer thresholds must lie in (0, 1)");
      }
    }
  }
}

PointerLabels PointerLabels::zeros(std::size_t tokens) {
  PointerLabels l;
  for (std::size_t i = 0; i < kNumEntityTypes; ++i) {
    l.start[i].assign(tokens, 0);
    l.end[i].assign(tokens, 0);
  }
  return l;
}

namespace {

void check_dim(const PointerHeadParams& params, const EmbeddingRecord& emb) {
  if (params.dim() != emb.dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                "pointer heads expect dimension " + std::to_string(params.dim()) + ", embedding has " +
                    std::to_string(emb.dim),
                emb.sentence_id);
  }
}

// Per-token features fed to the heads: the raw vector or the tanh layer.
void token_features(const PointerWeights& w, std::span<const float> x, std::vector<double>& out) {
  out.resize(w.feature_dim());
  if (w.hidden == 0) {
    for (std::size_t k = 0; k < w.dim; ++k) out[k] = x[k];
    return;
  }
  for (std::size_t h = 0; h < w.hidden; ++h) {
    const double* row = w.hidden_weight.data() + h * w.dim;
    double a = w.hidden_bias[h];
    for (std::size_t k = 0; k < w.dim; ++k) a += row[k] * x[k];
    out[h] = std::tanh(a);
  }
}

// Adds the gradient of one sentence's loss, multiplied by `scale`, into `grad`.
// Returns the unscaled summed cross-entropy of the sentence.
double accumulate_sentence(const PointerWeights& w, const ExtractorExample& ex, double scale,
                           PointerWeights* grad) {
  const EmbeddingRecord& emb = *ex.embedding;
  const std::size_t n = emb.token_count();
  std::vector<double> feat;
  std::vector<double> dfeat(w.feature_dim());
  double total = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const auto x = emb.vector(t);
    token_features(w, x, feat);
    std::fill(dfeat.begin(), dfeat.end(), 0.0);
    for (std::size_t i = 0; i < kNumEntityTypes; ++i) {
      const double zs = dot(w.start_weight[i], feat) + w.start_bias[i];
      const double ze = dot(w.end_weight[i], feat) + w.end_bias[i];
      const double ls = ex.gold.start[i][t];
      const double le = ex.gold.end[i][t];
      total += bce_with_logit(zs, ls) + bce_with_logit(ze, le);
      if (grad == nullptr) continue;
      const double gs = (sigmoid(zs) - ls) * scale;
      const double ge = (sigmoid(ze) - le) * scale;
      for (std::size_t k = 0; k < feat.size(); ++k) {
        grad->start_weight[i][k] += gs * feat[k];
        grad->end_weight[i][k] += ge * feat[k];
        dfeat[k] += gs * w.start_weight[i][k] + ge * w.end_weight[i][k];
      }
      grad->start_bias[i] += gs;
      grad->end_bias[i] += ge;
    }
    if (grad == nullptr || w.hidden == 0) continue;
    for (std::size_t h = 0; h < w.hidden; ++h) {
      const double da = dfeat[h] * (1.0 - feat[h] * feat[h]);
      double* row = grad->hidden_weight.data() + h * w.dim;
      for (std::size_t k = 0; k < w.dim; ++k) row[k] += da * x[k];
      grad->hidden_bias[h] += da;
    }
  }
  return total;
}

void check_batch(const PointerHeadParams& params, std::span<const ExtractorExample> batch) {
  if (batch.empty()) throw Error(ErrorCode::kEmptyBatch, "extractor batch is empty");
  for (const ExtractorExample& ex : batch) {
    check_dim(params, *ex.embedding);
    if (ex.gold.token_count() != ex.embedding->token_count()) {
      throw Error(ErrorCode::kCountMismatch, "gold labels do not match token count",
                  ex.embedding->sentence_id);
    }
  }
}

double sentence_norm(const ExtractorExample& ex) {
  const std::size_t n = ex.embedding->token_count();
  return n == 0 ? 0.0 : 1.0 / (static_cast<double>(kNumEntityTypes) * static_cast<double>(n));
}

double batch_loss(const PointerWeights& w, std::span<const ExtractorExample> batch,
                  std::span<const std::size_t> indices, PointerWeights* grad) {
  const double inv_batch = 1.0 / static_cast<double>(indices.size());
  double loss = 0.0;
  for (std::size_t idx : indices) {
    const ExtractorExample& ex = batch[idx];
    const double norm = sentence_norm(ex);
    loss += norm * inv_batch * accumulate_sentence(w, ex, norm * inv_batch, grad);
  }
  return loss;
}

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

}  // namespace

PointerScores score_pointers(const PointerHeadParams& params, const EmbeddingRecord& emb) {
  check_dim(params, emb);
  const PointerWeights& w = params.weights;
  const std::size_t n = emb.token_count();
  PointerScores s;
  for (std::size_t i = 0; i < kNumEntityTypes; ++i) {
    s.start[i].resize(n);
    s.end[i].resize(n);
  }
  std::vector<double> feat;
  for (std::size_t t = 0; t < n; ++t) {
    token_features(w, emb.vector(t), feat);
    for (std::size_t i = 0; i < kNumEntityTypes; ++i) {
      s.start[i][t] = clamped_sigmoid(dot(w.start_weight[i], feat) + w.start_bias[i]);
      s.end[i][t] = clamped_sigmoid(dot(w.end_weight[i], feat) + w.end_bias[i]);
    }
  }
  return s;
}

PointerLabels threshold_labels(const PointerScores& scores, const PointerHeadParams& params) {
  PointerLabels l;
  for (std::size_t i = 0; i < kNumEntityTypes; ++i) {
    l.start[i].reserve(scores.start[i].size());
    for (double p : scores.start[i]) l.start[i].push_back(p >= params.start_threshold[i] ? 1 : 0);
    l.end[i].reserve(scores.end[i].size());
    for (double p : scores.end[i]) l.end[i].push_back(p >= params.end_threshold[i] ? 1 : 0);
  }
  return l;
}

std::vector<TokenRange> decode_token_ranges(std::span<const std::uint8_t> heads,
                                            std::span<const std::uint8_t> tails) {
  std::vector<TokenRange> out;
  const std::size_t n = std::min(heads.size(), tails.size());
  // Scan right to left, remembering the nearest tail at or after each index.
  std::vector<std::size_t> next_tail(n + 1, n);
  for (std::size_t i = n; i-- > 0;) next_tail[i] = tails[i] ? i : next_tail[i + 1];
  for (std::size_t h = 0; h < n; ++h) {
    if (heads[h] && next_tail[h] < n) out.push_back({h, next_tail[h]});
  }
  return out;
}

SpansByType decode_spans(const PointerLabels& labels, const TokenizedSentence& tokens,
                         std::string_view text) {
  const auto bounds = utf8::boundaries(text);
  SpansByType out;
  for (EntityType type : kEntityTypes) {
    const std::size_t i = type_index(type);
    if (labels.start[i].size() != tokens.tokens.size() || labels.end[i].size() != tokens.tokens.size()) {
      throw Error(ErrorCode::kCountMismatch, "pointer labels do not match token count",
                  tokens.sentence_id);
    }
    std::set<EntitySpan> unique;
    for (const TokenRange& r : decode_token_ranges(labels.start[i], labels.end[i])) {
      EntitySpan span;
      span.type = type;
      span.start = tokens.tokens[r.first].start;
      span.end = tokens.tokens[r.last].end;
      if (span.end >= bounds.size()) {
        throw Error(ErrorCode::kSpanOutOfBounds, "token offsets exceed sentence length",
                    tokens.sentence_id);
      }
      span.text = std::string(text.substr(bounds[span.start], bounds[span.end] - bounds[span.start]));
      unique.insert(std::move(span));
    }
    out[i].assign(unique.begin(), unique.end());
  }
  return out;
}

PointerLabels gold_labels(const AnnotatedSentence& sentence, const TokenizedSentence& tokens) {
  PointerLabels labels = PointerLabels::zeros(tokens.tokens.size());
  const SpansByType gold = gold_entities(sentence);
  for (EntityType type : kEntityTypes) {
    const std::size_t i = type_index(type);
    for (const EntitySpan& span : gold[i]) {
      const TokenRange r = align_span(span, tokens);
      labels.start[i][r.first] = 1;
      labels.end[i][r.last] = 1;
    }
  }
  return labels;
}

std::vector<ExtractorExample> make_extractor_examples(const Dataset& dataset,
                                                      const EmbeddingStore& store) {
  std::vector<ExtractorExample> out;
  out.reserve(dataset.sentences.size());
  for (const AnnotatedSentence& s : dataset.sentences) {
    const EmbeddedSentence& rec = store.at(s.id);
    out.push_back({&rec.embedding, gold_labels(s, rec.tokens)});
  }
  return out;
}

double loss_l1(const PointerHeadParams& params, std::span<const ExtractorExample> batch) {
  check_batch(params, batch);
  const auto idx = iota_indices(batch.size());
  return batch_loss(params.weights, batch, idx, nullptr);
}

PointerWeights grad_l1(const PointerHeadParams& params, std::span<const ExtractorExample> batch) {
  check_batch(params, batch);
  PointerWeights grad = PointerWeights::zeros(params.weights.dim, params.weights.hidden);
  const auto idx = iota_indices(batch.size());
  batch_loss(params.weights, batch, idx, &grad);
  return grad;
}

ExtractorTrainResult train_extractor(std::uint64_t init_seed,
                                     std::span<const ExtractorExample> train,
                                     std::span<const ExtractorExample> val,
                                     const ExtractorHyper& hyper) {
  if (train.empty()) throw Error(ErrorCode::kEmptyBatch, "no training sentences");
  for (const ExtractorExample& ex : train) {
    if (ex.embedding == nullptr) throw Error(ErrorCode::kMissingEmbeddings, "training example without embeddings");
  }
  const std::size_t dim = train.front().embedding->dim;
  PointerHeadParams params = PointerHeadParams::initialize(dim, init_seed, hyper.hidden);
  params.start_threshold = hyper.start_threshold;
  params.end_threshold = hyper.end_threshold;
  params.validate();
  check_batch(params, train);
  if (!val.empty()) check_batch(params, val);

  const auto selection = val.empty() ? train : val;
  auto evaluate = [&](std::size_t epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_l1(params, train);
    rec.val_loss = loss_l1(params, selection);
    return rec;
  };

  ExtractorTrainResult result;
  result.params = params;
  result.log.epochs.push_back(evaluate(0));
  result.log.best_epoch = 0;
  result.log.best_val_loss = result.log.epochs.back().val_loss;

  const std::size_t batch_size = hyper.batch_size == 0 ? train.size() : hyper.batch_size;
  Rng rng(derive_seed(init_seed, 0x5EED));
  std::vector<std::size_t> order = iota_indices(train.size());
  PointerWeights grad = PointerWeights::zeros(dim, hyper.hidden);
  for (std::size_t epoch = 1; epoch <= hyper.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
      const std::size_t end = std::min(order.size(), begin + batch_size);
      grad = PointerWeights::zeros(dim, hyper.hidden);
      batch_loss(params.weights, train, std::span(order).subspan(begin, end - begin), &grad);
      params.weights.axpy(-hyper.learning_rate, grad);
    }
    EpochRecord rec = evaluate(epoch);
    if (!std::isfinite(rec.train_loss)) {
      throw Error(ErrorCode::kNonFinite, "extractor training diverged at epoch " + std::to_string(epoch));
    }
    result.log.epochs.push_back(rec);
    if (rec.val_loss < result.log.best_val_loss) {
      result.log.best_val_loss = rec.val_loss;
      result.log.best_epoch = epoch;
      result.params = params;
    }
  }
  return result;
}

}  // namespace tuplex
