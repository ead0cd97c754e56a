#include "tuplex/embedding.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>

#include <sodium.h>

#include "tuplex/error.hpp"
#include "tuplex/rng.hpp"

namespace tuplex {

namespace {

constexpr std::array<char, 4> kMagic = {'T', 'U', 'P', 'X'};

class ByteWriter {
 public:
  explicit ByteWriter(std::ostream& out) : out_(out) {}

  void u32(std::uint32_t v) {
    const char bytes[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                           static_cast<char>((v >> 16) & 0xFF),
                           static_cast<char>((v >> 24) & 0xFF)};
    raw(bytes, 4);
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(const char* data, std::size_t n) {
    out_.write(data, static_cast<std::streamsize>(n));
    written_ += n;
  }
  std::size_t written() const { return written_; }

 private:
  std::ostream& out_;
  std::size_t written_ = 0;
};

class ByteReader {
 public:
  explicit ByteReader(std::string data) : data_(std::move(data)) {}

  void need(std::size_t n, const char* what) const {
    if (data_.size() - pos_ < n) {
      throw Error(ErrorCode::kTruncated, std::string("payload ends inside ") + what);
    }
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) {
      v = (v << 8) | static_cast<unsigned char>(data_[pos_ + static_cast<std::size_t>(i)]);
    }
    pos_ += 4;
    return v;
  }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  std::string bytes(std::size_t n, const char* what) {
    need(n, what);
    std::string out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  std::string data_;
  std::size_t pos_ = 0;
};

void check_record(const EmbeddedSentence& r) {
  const auto& emb = r.embedding;
  if (emb.dim == 0) {
    throw Error(ErrorCode::kInconsistentDim, "embedding dimension must be positive",
                emb.sentence_id);
  }
  if (emb.values.size() != r.tokens.tokens.size() * emb.dim) {
    throw Error(ErrorCode::kCountMismatch,
                "token count " + std::to_string(r.tokens.tokens.size()) +
                    " does not match vector count",
                emb.sentence_id);
  }
  if (r.tokens.sentence_id != emb.sentence_id) {
    throw Error(ErrorCode::kCountMismatch, "token list and vectors belong to different sentences",
                emb.sentence_id);
  }
}

void check_token_order(const TokenizedSentence& tok) {
  std::uint32_t prev_end = 0;
  for (const TokenSpan& t : tok.tokens) {
    if (t.start >= t.end || t.start < prev_end) {
      throw Error(ErrorCode::kCountMismatch, "token offsets are not ordered and disjoint",
                  tok.sentence_id);
    }
    prev_end = t.end;
  }
}

bool is_space(char32_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool is_ascii_punct(char32_t c) {
  return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
         (c >= 0x7B && c <= 0x7E);
}

bool is_digit(char32_t c) { return c >= '0' && c <= '9'; }

}  // namespace

std::size_t write_embeddings(std::span<const EmbeddedSentence> records, std::ostream& sink) {
  std::size_t dim = 0;
  for (const EmbeddedSentence& r : records) {
    check_record(r);
    if (dim == 0) dim = r.embedding.dim;
    if (r.embedding.dim != dim) {
      throw Error(ErrorCode::kInconsistentDim,
                  "dimension " + std::to_string(r.embedding.dim) + " differs from " +
                      std::to_string(dim),
                  r.embedding.sentence_id);
    }
  }

  ByteWriter out(sink);
  out.raw(kMagic.data(), kMagic.size());
  out.u32(kTupxVersion);
  out.u32(static_cast<std::uint32_t>(records.size()));
  for (const EmbeddedSentence& r : records) {
    const std::string& id = r.embedding.sentence_id;
    out.u32(static_cast<std::uint32_t>(id.size()));
    out.raw(id.data(), id.size());
    out.u32(static_cast<std::uint32_t>(r.tokens.tokens.size()));
    out.u32(static_cast<std::uint32_t>(r.embedding.dim));
    for (std::size_t t = 0; t < r.tokens.tokens.size(); ++t) {
      out.u32(r.tokens.tokens[t].start);
      out.u32(r.tokens.tokens[t].end);
      for (float v : r.embedding.vector(t)) out.f32(v);
    }
  }
  if (!sink) throw Error(ErrorCode::kIo, "failed writing embedding stream");
  return out.written();
}

std::vector<EmbeddedSentence> read_embeddings(std::istream& source) {
  ByteReader in(std::string(std::istreambuf_iterator<char>(source), {}));
  const std::string magic = in.bytes(4, "magic");
  if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) {
    throw Error(ErrorCode::kBadMagic, "not a TUPX embedding file");
  }
  const std::uint32_t version = in.u32("version");
  if (version != kTupxVersion) {
    throw Error(ErrorCode::kUnsupportedVersion, "unsupported TUPX version " + std::to_string(version));
  }
  const std::uint32_t count = in.u32("sentence count");
  std::vector<EmbeddedSentence> out;
  std::size_t file_dim = 0;
  for (std::uint32_t s = 0; s < count; ++s) {
    EmbeddedSentence r;
    const std::uint32_t id_len = in.u32("id length");
    r.embedding.sentence_id = in.bytes(id_len, "sentence id");
    r.tokens.sentence_id = r.embedding.sentence_id;
    const std::uint32_t tokens = in.u32("token count");
    const std::uint32_t dim = in.u32("dimension");
    const std::string& id = r.embedding.sentence_id;
    if (dim == 0) throw Error(ErrorCode::kInconsistentDim, "zero embedding dimension", id);
    if (file_dim == 0) file_dim = dim;
    if (dim != file_dim) {
      throw Error(ErrorCode::kInconsistentDim,
                  "dimension " + std::to_string(dim) + " differs from " + std::to_string(file_dim), id);
    }
    // Bound the allocation by what the payload can actually hold.
    in.need(static_cast<std::size_t>(tokens) * (8 + 4 * static_cast<std::size_t>(dim)), "token payload");
    r.embedding.dim = dim;
    r.tokens.tokens.reserve(tokens);
    r.embedding.values.reserve(static_cast<std::size_t>(tokens) * dim);
    for (std::uint32_t t = 0; t < tokens; ++t) {
      TokenSpan span;
      span.start = in.u32("token start");
      span.end = in.u32("token end");
      r.tokens.tokens.push_back(span);
      for (std::uint32_t k = 0; k < dim; ++k) {
        const float v = in.f32("vector component");
        if (!std::isfinite(v)) throw Error(ErrorCode::kNonFinite, "non-finite vector component", id);
        r.embedding.values.push_back(v);
      }
    }
    check_token_order(r.tokens);
    out.push_back(std::move(r));
  }
  if (!in.at_end()) throw Error(ErrorCode::kCountMismatch, "trailing bytes after last sentence");
  return out;
}

void write_embeddings_file(std::span<const EmbeddedSentence> records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path + " for writing");
  write_embeddings(records, out);
}

std::vector<EmbeddedSentence> read_embeddings_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return read_embeddings(in);
}

TokenizedSentence tokenize(const AnnotatedSentence& sentence) {
  const auto bounds = utf8::boundaries(sentence.text);
  const std::size_t n = bounds.size() - 1;
  // Only ASCII matters for classification; multi-byte code points are word characters.
  std::vector<char32_t> cps(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<unsigned char>(sentence.text[bounds[i]]);
    cps[i] = c < 0x80 ? static_cast<char32_t>(c) : char32_t{0x80};
  }
  auto is_word_char = [&](std::size_t i) {
    const char32_t c = cps[i];
    if (is_space(c)) return false;
    if (!is_ascii_punct(c)) return true;
    return (c == '.' || c == ',') && i > 0 && i + 1 < n && is_digit(cps[i - 1]) &&
           is_digit(cps[i + 1]);
  };

  TokenizedSentence out;
  out.sentence_id = sentence.id;
  std::size_t i = 0;
  while (i < n) {
    if (is_space(cps[i])) {
      ++i;
    } else if (is_word_char(i)) {
      const std::size_t start = i;
      while (i < n && is_word_char(i)) ++i;
      out.tokens.push_back({static_cast<std::uint32_t>(start), static_cast<std::uint32_t>(i)});
    } else {
      out.tokens.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i + 1)});
      ++i;
    }
  }
  return out;
}

std::vector<float> synthetic_token_vector(std::string_view token, std::size_t dim,
                                          std::uint64_t seed) {
  if (sodium_init() < 0) throw Error(ErrorCode::kIo, "libsodium initialisation failed");
  std::string message(8, '\0');
  for (int i = 0; i < 8; ++i) message[static_cast<std::size_t>(i)] = static_cast<char>((seed >> (8 * i)) & 0xFF);
  message.append(token);
  unsigned char digest[8];
  crypto_generichash(digest, sizeof digest, reinterpret_cast<const unsigned char*>(message.data()),
                     message.size(), nullptr, 0);
  std::uint64_t stream = 0;
  for (int i = 7; i >= 0; --i) stream = (stream << 8) | digest[i];

  Rng rng(stream);
  std::vector<float> v(dim);
  for (float& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  return v;
}

EmbeddedSentence synthetic_embed(const AnnotatedSentence& sentence, std::size_t dim,
                                 std::uint64_t seed) {
  if (dim < 8) {
    throw Error(ErrorCode::kInvalidArgument,
                "synthetic embedding dimension must be at least 8, got " + std::to_string(dim),
                sentence.id);
  }
  EmbeddedSentence out;
  out.tokens = tokenize(sentence);
  out.embedding.sentence_id = sentence.id;
  out.embedding.dim = dim;
  out.embedding.values.reserve(out.tokens.tokens.size() * dim);
  const auto bounds = utf8::boundaries(sentence.text);
  for (const TokenSpan& t : out.tokens.tokens) {
    const std::string_view surface(sentence.text.data() + bounds[t.start],
                                   bounds[t.end] - bounds[t.start]);
    const auto v = synthetic_token_vector(surface, dim, seed);
    out.embedding.values.insert(out.embedding.values.end(), v.begin(), v.end());
  }
  return out;
}

TokenRange align_span(const EntitySpan& span, const TokenizedSentence& tokens) {
  const auto& toks = tokens.tokens;
  std::size_t first = toks.size();
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (toks[i].end > span.start) {
      first = i;
      break;
    }
  }
  std::size_t last = toks.size();
  for (std::size_t i = toks.size(); i-- > 0;) {
    if (toks[i].start < span.end) {
      last = i;
      break;
    }
  }
  if (first == toks.size() || last == toks.size() || first > last) {
    throw Error(ErrorCode::kAlignmentFailure,
                std::string(slot_name(span.type)) + " span \"" + span.text + "\" covers no token",
                tokens.sentence_id);
  }
  return {first, last};
}

EmbeddingStore::EmbeddingStore(std::vector<EmbeddedSentence> records) {
  for (EmbeddedSentence& r : records) {
    check_record(r);
    if (dim_ == 0) dim_ = r.embedding.dim;
    if (r.embedding.dim != dim_) {
      throw Error(ErrorCode::kInconsistentDim, "mixed embedding dimensions", r.embedding.sentence_id);
    }
    std::string id = r.embedding.sentence_id;
    if (!records_.emplace(id, std::move(r)).second) {
      throw Error(ErrorCode::kDuplicateId, "duplicate embedding record", id);
    }
  }
}

const EmbeddedSentence& EmbeddingStore::at(const std::string& sentence_id) const {
  auto it = records_.find(sentence_id);
  if (it == records_.end()) {
    throw Error(ErrorCode::kMissingEmbeddings, "no embeddings for sentence", sentence_id);
  }
  return it->second;
}

bool EmbeddingStore::contains(const std::string& sentence_id) const {
  return records_.count(sentence_id) != 0;
}

}  // namespace tuplex
