#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "tuplex/checkpoint.hpp"
#include "tuplex/cli.hpp"
#include "tuplex/error.hpp"
#include "tuplex/pipeline.hpp"
#include "tuplex/synthgen.hpp"

using namespace tuplex;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("tuplex-unit-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("f32 base64 encoding") {
  const std::vector<double> v = {0.0, 1.0, -2.5, 0.125, 3.0e-5};
  const std::vector<double> back = decode_f32(encode_f32(v));
  REQUIRE(back.size() == v.size());
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(back[i] == static_cast<double>(static_cast<float>(v[i])));
  CHECK(decode_f32(encode_f32({})).empty());
  const std::vector<double> bad = {std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS(decode_f32(encode_f32(bad)), Error);
  CHECK_THROWS_AS(decode_f32("not base64!"), Error);
}

TEST_CASE("extractor checkpoint round trip") {
  PointerHeadParams p = PointerHeadParams::initialize(6, 3, 4);
  p.start_threshold[2] = 0.4;
  const json j = extractor_to_json(p, {{"note", "x"}});
  CHECK(j.at("format") == "tuplex-extractor");
  CHECK(j.at("config").at("note") == "x");
  const PointerHeadParams back = extractor_from_json(j);
  CHECK(back.weights.hidden == 4);
  CHECK(back.start_threshold[2] == 0.4);
  const auto a = p.weights.flatten(), b = back.weights.flatten();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] == static_cast<double>(static_cast<float>(a[i])));
  // A second save of the loaded parameters is byte-identical.
  CHECK(extractor_to_json(back, {{"note", "x"}}).dump() == extractor_to_json(extractor_from_json(j), {{"note", "x"}}).dump());

  json broken = j;
  broken["format_version"] = 99;
  CHECK_THROWS_AS(extractor_from_json(broken), Error);
  broken = j;
  broken["format"] = "tuplex-allocator";
  CHECK_THROWS_AS(extractor_from_json(broken), Error);
}

TEST_CASE("allocator checkpoint round trip") {
  AllocatorModel m = AllocatorModel::zeros(4);
  for (std::size_t p = 0; p < 4; ++p) m.heads[p] = AllocParams::random(4, p);
  m.set_lambda(1.5);
  m.set_flags(false, true, true);
  const AllocatorModel back = allocator_from_json(allocator_to_json(m, 42));
  CHECK(back.lambda() == 1.5);
  CHECK_FALSE(back.enable_inter());
  CHECK(back.enable_intra());
  CHECK(back.dim() == 4);
  for (std::size_t p = 0; p < 4; ++p) {
    for (std::size_t k = 0; k < m.heads[p].weight.size(); ++k) {
      CHECK(back.heads[p].weight[k] == static_cast<double>(static_cast<float>(m.heads[p].weight[k])));
    }
  }
}

namespace {

struct Fixture {
  Dataset data;
  EmbeddingStore store;
  Pipeline pipeline;
};

Fixture fixture() {
  Fixture f;
  SynthConfig cfg;
  cfg.n_sentences = 30;
  f.data = generate(cfg, 6);
  std::vector<EmbeddedSentence> recs;
  for (const auto& s : f.data.sentences) recs.push_back(synthetic_embed(s, 8, 6));
  f.store = EmbeddingStore(std::move(recs));
  ExtractorHyper eh;
  eh.epochs = 5;
  eh.hidden = 8;
  eh.learning_rate = 0.2;
  f.pipeline.extractor = train_extractor(6, make_extractor_examples(f.data, f.store), {}, eh).params;
  AllocatorHyper ah;
  ah.epochs = 5;
  f.pipeline.allocator = train_allocator(6, make_allocator_examples(f.data, f.store, true, true), {}, 8, ah).model;
  return f;
}

}  // namespace

TEST_CASE("extraction is independent of the thread count") {
  const Fixture f = fixture();
  const auto one = extract(f.pipeline, f.data, f.store, 1);
  const auto three = extract(f.pipeline, f.data, f.store, 3);
  CHECK(serialize_predictions(one) == serialize_predictions(three));
  REQUIRE(one.size() == f.data.sentences.size());
  CHECK(std::is_sorted(one.begin(), one.end(), [](const auto& a, const auto& b) { return a.id < b.id; }));
}

TEST_CASE("dimension mismatch is reported with the sentence id") {
  Fixture f = fixture();
  f.pipeline.extractor = PointerHeadParams::initialize(5, 1);
  try {
    extract_sentence(f.pipeline, f.data.sentences[0], f.store.at(f.data.sentences[0].id));
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDimensionMismatch);
    CHECK(e.sentence_id() == f.data.sentences[0].id);
  }
}

TEST_CASE("prediction files round trip") {
  const Fixture f = fixture();
  const auto preds = extract(f.pipeline, f.data, f.store, 1);
  const std::string raw = serialize_predictions(preds, {{"seed", 6}});
  const auto back = parse_predictions(raw);
  CHECK(serialize_predictions(back, {{"seed", 6}}) == raw);
  CHECK(json::parse(raw).at("config").at("seed") == 6);
}

TEST_CASE("gold predictions score perfectly") {
  SynthConfig cfg;
  cfg.n_sentences = 40;
  const Dataset d = generate(cfg, 1);
  const auto preds = parse_predictions(serialize_dataset(d));
  const EvalResult r = evaluate(d, preds, "all", "gold");
  CHECK(r.tuple.metrics().f1 == 1.0);
  for (const Counts& c : r.per_type) {
    if (c.gold > 0) CHECK(c.metrics().f1 == 1.0);
  }
  const std::vector<SentencePrediction> missing(preds.begin() + 1, preds.end());
  CHECK_THROWS_AS(evaluate(d, missing, "all", "gold"), Error);
}

TEST_CASE("dataset selectors") {
  SynthConfig cfg;
  cfg.n_sentences = 95;
  const Dataset d = generate(cfg, 2);
  const TupleCountSplit split = split_by_tuple_count(d);
  CHECK(select_dataset(d, "2", 1).sentences.size() == split.bucket(2).sentences.size());
  CHECK(select_dataset(d, "all", 1).sentences.size() == 95);
  const Dataset r = select_dataset(d, "random", 1);
  CHECK(r.sentences.size() == 10);
  CHECK(serialize_dataset(r) == serialize_dataset(select_dataset(d, "random", 1)));
  CHECK_THROWS_AS(select_dataset(d, "7", 1), Error);
}

TEST_CASE("run config") {
  const RunConfig c = RunConfig::from_json({{"seed", 5}, {"allocator", {{"lambda", 1.0}}}});
  CHECK(c.require_seed() == 5);
  CHECK(c.allocator_hyper().lambda == 1.0);
  CHECK(RunConfig::from_json(c.to_json()).to_json() == c.to_json());
  CHECK_THROWS_AS(RunConfig::from_json({{"sede", 5}}), Error);
  CHECK_THROWS_AS(RunConfig::from_json(json::object()).require_seed(), Error);
}

TEST_CASE("command line pipeline") {
  TempDir dir;
  std::ostringstream log;
  RunConfig cfg = RunConfig::from_json({{"seed", 3}});
  cfg.synth.n_sentences = 40;
  cfg.dim = 8;
  cfg.output_path = dir / "corpus.json";
  cmd_synth(cfg, log);
  const std::string corpus = read_text_file(cfg.output_path);
  cmd_synth(cfg, log);
  CHECK(read_text_file(cfg.output_path) == corpus);

  cfg.dataset_path = dir / "corpus.json";
  cfg.output_path = dir / "emb.tupx";
  cmd_embed_synthetic(cfg, log);
  CHECK(read_embeddings_file(cfg.output_path).size() == 40);

  SUBCASE("evaluate gold against itself") {
    cfg.predictions = {{"gold", dir / "corpus.json"}};
    cfg.output_path = dir / "report.json";
    cmd_evaluate(cfg, log);
    const json report = read_json_file(cfg.output_path);
    for (const json& row : report.at("results")) CHECK(row.at("tuple").at("f1").get<double>() == 1.0);
    CHECK(report.at("results").back().at("dataset") == "all");
    CHECK(report.at("run_config").at("seed") == 3);
  }
  SUBCASE("train, extract and evaluate") {
    cfg.embeddings_path = dir / "emb.tupx";
    cfg.extractor.epochs = 3;
    cfg.extractor.hidden = 4;
    cfg.allocator.epochs = 3;
    cfg.output_path = dir / "ext.json";
    cmd_train_extractor(cfg, log);
    cfg.output_path = dir / "alloc.json";
    cmd_train_allocator(cfg, log);
    cfg.extractor_path = dir / "ext.json";
    cfg.allocator_path = dir / "alloc.json";
    cfg.output_path = dir / "pred.json";
    cmd_extract(cfg, log);
    const std::string first = read_text_file(cfg.output_path);
    cfg.threads = 2;
    cmd_extract(cfg, log);
    const std::string second = read_text_file(cfg.output_path);
    // Only the echoed thread count differs.
    json a = json::parse(first), b = json::parse(second);
    a.erase("config");
    b.erase("config");
    CHECK(a == b);

    cfg.predictions = {{"model", dir / "pred.json"}};
    cfg.output_path = dir / "report.json";
    cmd_evaluate(cfg, log);
    CHECK(read_json_file(cfg.output_path).at("results").size() >= 2);
  }
  SUBCASE("missing files become errors") {
    cfg.dataset_path = dir / "nope.json";
    CHECK_THROWS_AS(cmd_stats(cfg, log), Error);
    try {
      cmd_stats(cfg, log);
    } catch (const std::exception& e) {
      CHECK(error_json(e).at("error").at("code") == "io");
    }
  }
}
