#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include <json.hpp>

#include "helpers.hpp"
#include "tuplex/corpus.hpp"
#include "tuplex/error.hpp"
#include "tuplex/synthgen.hpp"

using namespace tuplex;
using nlohmann::json;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected tuplex::Error");
  return ErrorCode::kIo;
}

Dataset one(const AnnotatedSentence& s) { return Dataset{{s}}; }

AnnotatedSentence with_k(const std::string& id, std::size_t k) {
  AnnotatedSentence s = test::fig1b();
  s.id = id;
  s.tuples.resize(std::min<std::size_t>(k, 1));
  while (s.tuples.size() < k) s.tuples.push_back(s.tuples[0]);
  return s;
}

}  // namespace

TEST_CASE("utf8 offsets count code points") {
  CHECK(utf8::length("800°C") == 5);
  CHECK(utf8::slice("at 800°C.", 3, 8) == "800°C");
  CHECK_THROWS_AS(utf8::slice("abc", 2, 4), Error);
}

TEST_CASE("parse the two-tuple sentence") {
  const std::string raw = serialize_dataset(one(test::fig1b()));
  const Dataset d = parse_dataset(raw);
  REQUIRE(d.sentences.size() == 1);
  const AnnotatedSentence& s = d.sentences[0];
  REQUIRE(s.tuples.size() == 2);
  CHECK(s.tuples[0].material.text == "AlNbTiV");
  CHECK(s.tuples[0].condition_value->text == "room temperature");
  CHECK(s.tuples[1].property_value.text == "685 MPa");
  CHECK(s.tuples[1].condition_value->text == "800°C");
  CHECK(s.tuples[0].property_value.type == EntityType::kPropertyValue);
}

TEST_CASE("empty corpus") {
  CHECK(parse_dataset(R"({"sentences": []})").sentences.empty());
  CHECK(serialize_dataset(Dataset{}) == R"({"sentences":[]})");
}

TEST_CASE("serialization is canonical and round trips") {
  const Dataset d = one(test::fig1b());
  const std::string a = serialize_dataset(d);
  CHECK(a == serialize_dataset(d));
  CHECK(serialize_dataset(parse_dataset(a)) == a);
  const Dataset back = parse_dataset(a);
  CHECK(back.sentences[0].tuples == d.sentences[0].tuples);
  CHECK(back.sentences[0].text == d.sentences[0].text);
}

TEST_CASE("parse rejects invalid input") {
  json doc = json::parse(serialize_dataset(one(test::fig1b())));
  SUBCASE("text mismatch") {
    auto& pv = doc["sentences"][0]["tuples"][0]["property_value"];
    pv["start"] = pv["start"].get<int>() + 1;
    pv["end"] = pv["end"].get<int>() - 1;
    CHECK(code_of([&] { parse_dataset(doc.dump()); }) == ErrorCode::kSpanTextMismatch);
  }
  SUBCASE("out of bounds") {
    doc["sentences"][0]["tuples"][0]["material"]["end"] = 1000;
    CHECK(code_of([&] { parse_dataset(doc.dump()); }) == ErrorCode::kSpanOutOfBounds);
  }
  SUBCASE("empty span") {
    auto& m = doc["sentences"][0]["tuples"][0]["material"];
    m["end"] = m["start"];
    CHECK(code_of([&] { parse_dataset(doc.dump()); }) == ErrorCode::kSpanOutOfBounds);
  }
  SUBCASE("missing mandatory slot") {
    doc["sentences"][0]["tuples"][0].erase("property");
    CHECK(code_of([&] { parse_dataset(doc.dump()); }) == ErrorCode::kMissingSlot);
  }
  SUBCASE("null mandatory slot") {
    doc["sentences"][0]["tuples"][0]["material"] = nullptr;
    CHECK(code_of([&] { parse_dataset(doc.dump()); }) == ErrorCode::kMissingSlot);
  }
  SUBCASE("condition value without condition") {
    doc["sentences"][0]["tuples"][0]["condition"] = nullptr;
    CHECK(code_of([&] { parse_dataset(doc.dump()); }) == ErrorCode::kMissingSlot);
  }
  SUBCASE("duplicate id") {
    doc["sentences"].push_back(doc["sentences"][0]);
    CHECK(code_of([&] { parse_dataset(doc.dump()); }) == ErrorCode::kDuplicateId);
  }
  SUBCASE("malformed") {
    CHECK(code_of([] { parse_dataset("{\"sentences\": ["); }) == ErrorCode::kMalformedJson);
    CHECK(code_of([] { parse_dataset("[]"); }) == ErrorCode::kMalformedJson);
  }
}

TEST_CASE("the sentence id is attached to span errors") {
  json doc = json::parse(serialize_dataset(one(test::fig1b())));
  doc["sentences"][0]["tuples"][0]["material"]["text"] = "AlNbTiX";
  try {
    parse_dataset(doc.dump());
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.sentence_id() == "fig1b");
  }
}

TEST_CASE("condition and condition value may be absent") {
  AnnotatedSentence s = test::fig1b();
  s.tuples[0].condition.reset();
  s.tuples[0].condition_value.reset();
  const Dataset back = parse_dataset(serialize_dataset(one(s)));
  CHECK_FALSE(back.sentences[0].tuples[0].condition.has_value());
  CHECK(back.sentences[0].tuples[1].condition.has_value());
}

TEST_CASE("split by tuple count") {
  SUBCASE("single one-tuple sentence") {
    const TupleCountSplit split = split_by_tuple_count(one(with_k("a", 1)));
    CHECK(split.bucket(1).sentences.size() == 1);
    for (std::size_t k = 2; k <= 4; ++k) CHECK(split.bucket(k).sentences.empty());
    CHECK(split.excluded.sentences.empty());
  }
  SUBCASE("five tuples are excluded") {
    const TupleCountSplit split = split_by_tuple_count(one(with_k("a", 5)));
    CHECK(split.excluded.sentences.size() == 1);
  }
  SUBCASE("buckets partition the input") {
    Dataset d;
    for (std::size_t i = 0; i < 12; ++i) d.sentences.push_back(with_k("s" + std::to_string(i), 1 + i % 6));
    const TupleCountSplit split = split_by_tuple_count(d);
    std::size_t total = split.excluded.sentences.size();
    for (std::size_t k = 1; k <= 4; ++k) total += split.bucket(k).sentences.size();
    CHECK(total == d.sentences.size());
  }
  SUBCASE("zero tuples") {
    CHECK(code_of([] { split_by_tuple_count(one(with_k("a", 0))); }) == ErrorCode::kEmptySentence);
  }
}

TEST_CASE("stats") {
  SUBCASE("single sentence") {
    const DistributionReport r = stats(one(with_k("a", 1)));
    REQUIRE(r.by_count.size() == 1);
    CHECK(r.by_count.at(1).proportion == doctest::Approx(1.0));
  }
  SUBCASE("k = 1 and k = 3") {
    const DistributionReport r = stats(Dataset{{with_k("a", 1), with_k("b", 3)}});
    CHECK(r.by_count.at(1).proportion == doctest::Approx(0.5));
    CHECK(r.by_count.at(3).proportion == doctest::Approx(0.5));
    CHECK(r.by_count.at(3).tuples == 3);
    CHECK(r.total_tuples == 4);
    CHECK(r.total_sentences == 2);
  }
  SUBCASE("proportions sum to one") {
    SynthConfig cfg;
    cfg.n_sentences = 333;
    const DistributionReport r = stats(generate(cfg, 5));
    double sum = 0.0;
    for (const auto& [k, row] : r.by_count) sum += row.proportion;
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }
}

TEST_CASE("train/validation split") {
  SynthConfig cfg;
  cfg.n_sentences = 215;
  const Dataset d215 = generate(cfg, 3);
  cfg.n_sentences = 100;
  const Dataset d100 = generate(cfg, 3);

  const auto [tr100, va100] = train_val_split(d100, 9);
  CHECK(tr100.sentences.size() == 90);
  CHECK(va100.sentences.size() == 10);

  const auto [tr, va] = train_val_split(d215, 9);
  CHECK(tr.sentences.size() == 193);
  CHECK(va.sentences.size() == 22);

  std::set<std::string> ids;
  for (const auto* part : {&tr, &va}) {
    for (const auto& s : part->sentences) CHECK(ids.insert(s.id).second);
  }
  CHECK(ids.size() == 215);

  const auto [tr2, va2] = train_val_split(d215, 9);
  CHECK(serialize_dataset(tr2) == serialize_dataset(tr));
  CHECK(serialize_dataset(va2) == serialize_dataset(va));
  const auto [tr3, va3] = train_val_split(d215, 10);
  CHECK(serialize_dataset(va3) != serialize_dataset(va));

  cfg.n_sentences = 9;
  const Dataset small = generate(cfg, 3);
  CHECK(code_of([&] { train_val_split(small, 1); }) == ErrorCode::kTooFewSentences);
}
