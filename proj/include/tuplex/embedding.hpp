#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tuplex/corpus.hpp"

namespace tuplex {

// Character (code point) range of one token, half-open.
struct TokenSpan {
  std::uint32_t start = 0;
  std::uint32_t end = 0;
  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

struct TokenizedSentence {
  std::string sentence_id;
  std::vector<TokenSpan> tokens;
  friend bool operator==(const TokenizedSentence&, const TokenizedSentence&) = default;
};

// One d-dimensional vector per token, stored row-major.
struct EmbeddingRecord {
  std::string sentence_id;
  std::size_t dim = 0;
  std::vector<float> values;

  std::size_t token_count() const { return dim == 0 ? 0 : values.size() / dim; }
  std::span<const float> vector(std::size_t token) const {
    return {values.data() + token * dim, dim};
  }
  friend bool operator==(const EmbeddingRecord&, const EmbeddingRecord&) = default;
};

struct EmbeddedSentence {
  TokenizedSentence tokens;
  EmbeddingRecord embedding;
  friend bool operator==(const EmbeddedSentence&, const EmbeddedSentence&) = default;
};

// TUPX interchange format, little-endian throughout.
inline constexpr std::uint32_t kTupxVersion = 1;

std::size_t write_embeddings(std::span<const EmbeddedSentence> records, std::ostream& sink);
std::vector<EmbeddedSentence> read_embeddings(std::istream& source);

void write_embeddings_file(std::span<const EmbeddedSentence> records, const std::string& path);
std::vector<EmbeddedSentence> read_embeddings_file(const std::string& path);

// Whitespace-and-punctuation tokenizer. ASCII punctuation becomes a token of
// its own, except '.' and ',' between two digits (decimal numbers stay whole).
TokenizedSentence tokenize(const AnnotatedSentence& sentence);

// Frozen stand-in encoder: each token's vector is a keyed hash of its surface
// text mapped to [-1, 1]^d. Identical tokens always share a vector.
EmbeddedSentence synthetic_embed(const AnnotatedSentence& sentence, std::size_t dim,
                                 std::uint64_t seed);
std::vector<float> synthetic_token_vector(std::string_view token, std::size_t dim,
                                          std::uint64_t seed);

// Inclusive token index range.
struct TokenRange {
  std::size_t first = 0;
  std::size_t last = 0;
  friend bool operator==(const TokenRange&, const TokenRange&) = default;
};

// Minimal range of tokens covering [span.start, span.end).
TokenRange align_span(const EntitySpan& span, const TokenizedSentence& tokens);

// Sentence-id keyed lookup over a loaded embedding file.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  explicit EmbeddingStore(std::vector<EmbeddedSentence> records);

  const EmbeddedSentence& at(const std::string& sentence_id) const;
  bool contains(const std::string& sentence_id) const;
  std::size_t size() const { return records_.size(); }
  std::size_t dim() const { return dim_; }

 private:
  std::map<std::string, EmbeddedSentence> records_;
  std::size_t dim_ = 0;
};

}  // namespace tuplex
