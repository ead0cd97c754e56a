#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "tuplex/corpus.hpp"
#include "tuplex/error.hpp"
#include "tuplex/synthgen.hpp"

using namespace tuplex;

TEST_CASE("generation is deterministic") {
  SynthConfig cfg;
  cfg.n_sentences = 200;
  CHECK(serialize_dataset(generate(cfg, 11)) == serialize_dataset(generate(cfg, 11)));
  CHECK(serialize_dataset(generate(cfg, 11)) != serialize_dataset(generate(cfg, 12)));
}

TEST_CASE("fixed tuple count") {
  SynthConfig cfg;
  cfg.n_sentences = 50;
  cfg.k_distribution = {0.0, 1.0, 0.0, 0.0};
  const Dataset d = generate(cfg, 1);
  REQUIRE(d.sentences.size() == 50);
  for (const auto& s : d.sentences) CHECK(s.tuples.size() == 2);
}

TEST_CASE("ten thousand sentences validate") {
  SynthConfig cfg;
  cfg.n_sentences = 10000;
  cfg.condition_omission_rate = 0.3;
  const Dataset d = generate(cfg, 99);
  CHECK_NOTHROW(validate_dataset(d));
  // Serialized spans survive strict parsing, which re-checks every offset.
  CHECK(parse_dataset(serialize_dataset(d)).sentences.size() == 10000);
}

TEST_CASE("tuple counts follow the configured distribution") {
  SynthConfig cfg;
  cfg.n_sentences = 2000;
  cfg.k_distribution = {0.1, 0.2, 0.3, 0.4};
  const Dataset d = generate(cfg, 4);
  std::map<std::size_t, std::size_t> counts;
  for (const auto& s : d.sentences) ++counts[s.tuples.size()];
  for (std::size_t k = 1; k <= 4; ++k) {
    const double p = cfg.k_distribution[k - 1];
    const double n = static_cast<double>(cfg.n_sentences);
    const double sigma = std::sqrt(n * p * (1 - p));
    CHECK(std::abs(static_cast<double>(counts[k]) - n * p) <= 3 * sigma);
  }
}

TEST_CASE("pattern A shares the material") {
  const Vocabulary v = vocab(7);
  SynthConfig cfg;
  const AnnotatedSentence s = generate_sentence(v, cfg, 2, Pattern::kA, 3, 0);
  REQUIRE(s.tuples.size() == 2);
  CHECK(s.tuples[0].material == s.tuples[1].material);
  CHECK(s.tuples[0].property != s.tuples[1].property);
  CHECK(s.tuples[0].property_value != s.tuples[1].property_value);
  CHECK(s.text.find(" of ") != std::string::npos);
}

TEST_CASE("pattern B differs only in values") {
  const Vocabulary v = vocab(7);
  SynthConfig cfg;
  cfg.condition_omission_rate = 0.5;
  for (std::size_t i = 0; i < 50; ++i) {
    const AnnotatedSentence s = generate_sentence(v, cfg, 1 + i % 4, Pattern::kB, 3, i);
    for (const TupleRecord& t : s.tuples) {
      CHECK(t.material == s.tuples[0].material);
      CHECK(t.property == s.tuples[0].property);
      CHECK(t.condition == s.tuples[0].condition);
    }
    if (s.tuples.size() > 1) CHECK(s.tuples[0].property_value != s.tuples[1].property_value);
  }
}

TEST_CASE("pattern C shares the property") {
  const Vocabulary v = vocab(7);
  const AnnotatedSentence s = generate_sentence(v, SynthConfig{}, 3, Pattern::kC, 3, 0);
  REQUIRE(s.tuples.size() == 3);
  std::set<EntitySpan> materials;
  for (const TupleRecord& t : s.tuples) {
    CHECK(t.property == s.tuples[0].property);
    materials.insert(t.material);
  }
  CHECK(materials.size() == 3);
}

TEST_CASE("vocabulary") {
  const Vocabulary a = vocab(7);
  const Vocabulary b = vocab(7);
  CHECK(a.alloys == b.alloys);
  bool yield_mpa = false;
  for (const PropertyEntry& p : a.properties) yield_mpa = yield_mpa || (p.name == "yield strength" && p.unit == "MPa");
  CHECK(yield_mpa);
  for (const std::string& alloy : a.alloys) CHECK(is_alloy_formula(alloy));
  CHECK(is_alloy_formula("Al0.3CoCrFeNi"));
  CHECK_FALSE(is_alloy_formula("alloy"));
  CHECK(render_quantity("879", "MPa") == "879 MPa");
  CHECK(render_quantity("14.9", "%") == "14.9%");
}

TEST_CASE("config validation and JSON") {
  SynthConfig cfg;
  cfg.condition_omission_rate = 0.25;
  cfg.n_sentences = 12;
  const SynthConfig back = SynthConfig::from_json(cfg.to_json());
  CHECK(back.n_sentences == 12);
  CHECK(back.condition_omission_rate == 0.25);
  cfg.k_distribution = {0, 0, 0, 0};
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = SynthConfig{};
  cfg.condition_omission_rate = 1.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
}
