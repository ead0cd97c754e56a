#include <doctest.h>

#include <cstring>
#include <sstream>

#include "helpers.hpp"
#include "tuplex/embedding.hpp"
#include "tuplex/error.hpp"

using namespace tuplex;

namespace {

EmbeddedSentence tiny(const std::string& id, std::vector<TokenSpan> tokens, std::size_t dim,
                      std::vector<float> values) {
  return {{id, std::move(tokens)}, {id, dim, std::move(values)}};
}

std::string write(const std::vector<EmbeddedSentence>& records) {
  std::ostringstream out;
  write_embeddings(records, out);
  return out.str();
}

std::vector<EmbeddedSentence> read(const std::string& bytes) {
  std::istringstream in(bytes);
  return read_embeddings(in);
}

ErrorCode read_error(const std::string& bytes) {
  try {
    read(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kIo;
}

}  // namespace

TEST_CASE("empty embedding file is twelve bytes") {
  const std::string bytes = write({});
  REQUIRE(bytes.size() == 12);
  CHECK(read(bytes).empty());
}

TEST_CASE("vectors are little-endian f32 at the end of the record") {
  const std::string bytes = write({tiny("s", {{0, 1}}, 2, {1.0f, 0.0f})});
  REQUIRE(bytes.size() >= 8);
  const unsigned char expected[8] = {0x00, 0x00, 0x80, 0x3f, 0, 0, 0, 0};
  CHECK(std::memcmp(bytes.data() + bytes.size() - 8, expected, 8) == 0);
}

TEST_CASE("write then read") {
  const std::vector<EmbeddedSentence> records = {
      tiny("a", {{0, 3}, {4, 6}}, 3, {1, 2, 3, 4, 5, 6}),
      tiny("b", {{0, 1}}, 3, {-1.5f, 0.25f, 7}),
  };
  CHECK(read(write(records)) == records);
}

TEST_CASE("reader rejects damaged files") {
  const std::string good = write({tiny("s", {{0, 1}, {2, 3}, {4, 5}}, 2, {1, 2, 3, 4, 5, 6})});
  SUBCASE("bad magic") {
    std::string bad = good;
    bad[0] = 'X';
    CHECK(read_error(bad) == ErrorCode::kBadMagic);
  }
  SUBCASE("truncated payload") {
    CHECK(read_error(good.substr(0, good.size() - 8)) == ErrorCode::kTruncated);
  }
  SUBCASE("unsupported version") {
    std::string bad = good;
    bad[4] = 9;
    CHECK(read_error(bad) == ErrorCode::kUnsupportedVersion);
  }
  SUBCASE("non-finite component") {
    std::string bad = good;
    const unsigned char nan[4] = {0x00, 0x00, 0xc0, 0x7f};
    std::memcpy(bad.data() + bad.size() - 4, nan, 4);
    CHECK(read_error(bad) == ErrorCode::kNonFinite);
  }
  SUBCASE("trailing bytes") {
    CHECK(read_error(good + "x") == ErrorCode::kCountMismatch);
  }
}

TEST_CASE("writer rejects mixed dimensions") {
  std::ostringstream out;
  const std::vector<EmbeddedSentence> records = {tiny("a", {{0, 1}}, 2, {1, 2}), tiny("b", {{0, 1}}, 3, {1, 2, 3})};
  CHECK_THROWS_AS(write_embeddings(records, out), Error);
}

TEST_CASE("tokenizer keeps decimals whole and splits punctuation") {
  AnnotatedSentence s;
  s.id = "t";
  s.text = "Al0.3CoCrFeNi has 14.9% elongation, 1,020 MPa.";
  const TokenizedSentence tok = tokenize(s);
  std::vector<std::string> words;
  for (const TokenSpan& t : tok.tokens) words.push_back(utf8::slice(s.text, t.start, t.end));
  const std::vector<std::string> expected = {"Al0.3CoCrFeNi", "has", "14.9", "%", "elongation", ",",
                                             "1,020", "MPa", "."};
  CHECK(words == expected);
}

TEST_CASE("synthetic embedder") {
  AnnotatedSentence s;
  s.id = "e";
  s.text = "879 MPa and 969 MPa";
  const EmbeddedSentence a = synthetic_embed(s, 16, 1);
  CHECK(a == synthetic_embed(s, 16, 1));
  REQUIRE(a.tokens.tokens.size() == 5);
  const auto v1 = a.embedding.vector(1);
  const auto v4 = a.embedding.vector(4);
  CHECK(std::equal(v1.begin(), v1.end(), v4.begin()));
  CHECK(synthetic_token_vector("MPa", 16, 1) != synthetic_token_vector("MPa", 16, 2));
  for (float x : a.embedding.values) CHECK(std::abs(x) <= 1.0f);
}

TEST_CASE("span alignment uses the minimal covering token range") {
  const AnnotatedSentence s = test::fig1b();
  const TokenizedSentence tok = tokenize(s);
  const auto index_of = [&](std::string_view word) {
    for (std::size_t i = 0; i < tok.tokens.size(); ++i) {
      if (utf8::slice(s.text, tok.tokens[i].start, tok.tokens[i].end) == word) return i;
    }
    return tok.tokens.size();
  };
  const EntitySpan rt = test::span_of(s.text, "room temperature", EntityType::kConditionValue);
  const std::size_t room = index_of("room");
  CHECK(align_span(rt, tok) == TokenRange{room, room + 1});
  const EntitySpan m = test::span_of(s.text, "AlNbTiV", EntityType::kMaterial);
  CHECK(align_span(m, tok) == TokenRange{index_of("AlNbTiV"), index_of("AlNbTiV")});
  // Starts in the middle of "AlNbTiV".
  EntitySpan inner = m;
  inner.start += 2;
  inner.text = inner.text.substr(2);
  CHECK(align_span(inner, tok) == TokenRange{index_of("AlNbTiV"), index_of("AlNbTiV")});
  // Whitespace between two tokens covers nothing.
  EntitySpan gap = rt;
  gap.start = rt.start + 4;
  gap.end = rt.start + 5;
  CHECK_THROWS_AS(align_span(gap, tok), Error);
}

TEST_CASE("embedding store") {
  const EmbeddingStore store({tiny("a", {{0, 1}}, 2, {1, 2}), tiny("b", {{0, 1}}, 2, {3, 4})});
  CHECK(store.size() == 2);
  CHECK(store.dim() == 2);
  CHECK(store.contains("a"));
  CHECK_THROWS_AS(store.at("zzz"), Error);
  CHECK_THROWS_AS(EmbeddingStore({tiny("a", {{0, 1}}, 2, {1, 2}), tiny("a", {{0, 1}}, 2, {1, 2})}), Error);
}
