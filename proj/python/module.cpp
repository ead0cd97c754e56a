#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include <json.hpp>

#include "tuplex/checkpoint.hpp"
#include "tuplex/cli.hpp"
#include "tuplex/corpus.hpp"
#include "tuplex/embedding.hpp"
#include "tuplex/error.hpp"
#include "tuplex/eval.hpp"
#include "tuplex/pipeline.hpp"
#include "tuplex/pointer_net.hpp"
#include "tuplex/synthgen.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace tuplex;

namespace {

// Corpus and report documents cross the boundary as JSON text; the Python
// package decodes them.

std::string generate_corpus(std::size_t n, std::uint64_t seed, double omission,
                            std::array<double, 4> k_distribution, std::uint64_t vocab_seed) {
  SynthConfig cfg;
  cfg.n_sentences = n;
  cfg.condition_omission_rate = omission;
  cfg.k_distribution = k_distribution;
  cfg.vocab_seed = vocab_seed;
  cfg.validate();
  return serialize_dataset(generate(cfg, seed));
}

std::string corpus_stats(const std::string& corpus) {
  const DistributionReport r = stats(parse_dataset(corpus));
  json by_count = json::object();
  for (const auto& [k, row] : r.by_count) {
    by_count[std::to_string(k)] = {{"sentences", row.sentences}, {"tuples", row.tuples}, {"proportion", row.proportion}};
  }
  return json{{"by_count", by_count}, {"total_sentences", r.total_sentences}, {"total_tuples", r.total_tuples}}
      .dump();
}

std::size_t embed_synthetic(const std::string& corpus, const std::string& path, std::size_t dim,
                            std::uint64_t seed) {
  const Dataset d = parse_dataset(corpus);
  std::vector<EmbeddedSentence> records;
  records.reserve(d.sentences.size());
  for (const AnnotatedSentence& s : d.sentences) records.push_back(synthetic_embed(s, dim, seed));
  write_embeddings_file(records, path);
  return records.size();
}

py::list read_embeddings_py(const std::string& path) {
  py::list out;
  for (const EmbeddedSentence& r : read_embeddings_file(path)) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> tokens;
    for (const TokenSpan& t : r.tokens.tokens) tokens.emplace_back(t.start, t.end);
    const std::size_t n = r.embedding.token_count(), d = r.embedding.dim;
    py::array_t<float> vectors({n, d});
    std::copy(r.embedding.values.begin(), r.embedding.values.end(), vectors.mutable_data());
    out.append(py::make_tuple(r.tokens.sentence_id, tokens, vectors));
  }
  return out;
}

std::string train_extractor_json(const std::string& corpus, const std::string& embeddings, std::uint64_t seed,
                                 std::size_t epochs, std::size_t hidden, double lr, std::size_t batch_size) {
  const Dataset d = parse_dataset(corpus);
  const EmbeddingStore store(read_embeddings_file(embeddings));
  ExtractorHyper hyper;
  hyper.epochs = epochs;
  hyper.hidden = hidden;
  hyper.learning_rate = lr;
  hyper.batch_size = batch_size;
  const auto examples = make_extractor_examples(d, store);
  py::gil_scoped_release release;
  return extractor_to_json(train_extractor(seed, examples, {}, hyper).params).dump();
}

std::string train_allocator_json(const std::string& corpus, const std::string& embeddings, std::uint64_t seed,
                                 std::size_t epochs, double lr, double lambda, bool inter, bool intra) {
  const Dataset d = parse_dataset(corpus);
  const EmbeddingStore store(read_embeddings_file(embeddings));
  AllocatorHyper hyper;
  hyper.epochs = epochs;
  hyper.learning_rate = lr;
  hyper.lambda = lambda;
  hyper.enable_inter = inter;
  hyper.enable_intra = intra;
  const AllocExamples examples = make_allocator_examples(d, store, inter, intra);
  py::gil_scoped_release release;
  return allocator_to_json(train_allocator(seed, examples, {}, store.dim(), hyper).model, seed).dump();
}

std::string extract_json(const std::string& corpus, const std::string& embeddings, const std::string& extractor,
                         const std::string& allocator, std::size_t threads) {
  const Dataset d = parse_dataset(corpus);
  const EmbeddingStore store(read_embeddings_file(embeddings));
  const Pipeline p{extractor_from_json(json::parse(extractor)), allocator_from_json(json::parse(allocator))};
  std::vector<SentencePrediction> preds;
  {
    py::gil_scoped_release release;
    preds = extract(p, d, store, threads);
  }
  return serialize_predictions(preds);
}

std::string evaluate_json(const std::string& gold, const std::string& predictions, const std::string& dataset,
                          const std::string& config) {
  const EvalResult r = evaluate(parse_dataset(gold), parse_predictions(predictions), dataset, config);
  return result_to_json(r).dump();
}

std::string run_command(const std::string& command, const std::string& config) {
  const RunConfig cfg = RunConfig::from_json(json::parse(config));
  std::ostringstream log;
  py::gil_scoped_release release;
  if (command == "synth") cmd_synth(cfg, log);
  else if (command == "embed-synth") cmd_embed_synthetic(cfg, log);
  else if (command == "train-extractor") cmd_train_extractor(cfg, log);
  else if (command == "train-allocator") cmd_train_allocator(cfg, log);
  else if (command == "extract") cmd_extract(cfg, log);
  else if (command == "evaluate") cmd_evaluate(cfg, log);
  else if (command == "stats") cmd_stats(cfg, log);
  else throw Error(ErrorCode::kInvalidArgument, "unknown command " + command);
  return log.str();
}

std::vector<std::pair<std::size_t, std::size_t>> decode(const std::vector<std::uint8_t>& heads,
                                                         const std::vector<std::uint8_t>& tails) {
  if (heads.size() != tails.size()) throw Error(ErrorCode::kDimensionMismatch, "head and tail lists differ in length");
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const TokenRange& r : decode_token_ranges(heads, tails)) out.emplace_back(r.first, r.last);
  return out;
}

}  // namespace

PYBIND11_MODULE(_tuplex, m) {
  // args are (code, message, sentence_id).
  static const py::handle error = py::exception<Error>(m, "TuplexError").release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetObject(error.ptr(),
                      py::make_tuple(std::string(error_code_name(e.code())), e.what(), e.sentence_id()).ptr());
    } catch (const json::exception& e) {
      PyErr_SetObject(error.ptr(), py::make_tuple("malformed_json", e.what(), "").ptr());
    }
  });

  m.attr("__version__") = "0.1.0";
  m.def("f1_score", &f1_score, py::arg("precision"), py::arg("recall"));
  m.def("decode_spans", &decode, py::arg("heads"), py::arg("tails"),
        "Nearest-tail pairing of head and tail labels; returns inclusive token ranges.");
  m.def("generate_corpus", &generate_corpus, py::arg("n_sentences"), py::arg("seed"),
        py::arg("condition_omission_rate") = 0.1,
        py::arg("k_distribution") = std::array<double, 4>{0.25, 0.25, 0.25, 0.25}, py::arg("vocab_seed") = 7);
  m.def("canonicalize", [](const std::string& corpus) { return serialize_dataset(parse_dataset(corpus)); },
        py::arg("corpus"));
  m.def("corpus_stats", &corpus_stats, py::arg("corpus"));
  m.def("select", [](const std::string& corpus, const std::string& selector, std::uint64_t seed) {
    return serialize_dataset(select_dataset(parse_dataset(corpus), selector, seed));
  }, py::arg("corpus"), py::arg("selector"), py::arg("seed") = 0);
  m.def("embed_synthetic", &embed_synthetic, py::arg("corpus"), py::arg("path"), py::arg("dim") = 32,
        py::arg("seed") = 0);
  m.def("read_embeddings", &read_embeddings_py, py::arg("path"));
  m.def("train_extractor", &train_extractor_json, py::arg("corpus"), py::arg("embeddings"), py::arg("seed"),
        py::arg("epochs") = 200, py::arg("hidden") = 0, py::arg("learning_rate") = 0.05, py::arg("batch_size") = 8);
  m.def("train_allocator", &train_allocator_json, py::arg("corpus"), py::arg("embeddings"), py::arg("seed"),
        py::arg("epochs") = 200, py::arg("learning_rate") = 1e-4, py::arg("lambda_") = 1.2,
        py::arg("enable_inter") = true, py::arg("enable_intra") = true);
  m.def("extract", &extract_json, py::arg("corpus"), py::arg("embeddings"), py::arg("extractor"),
        py::arg("allocator"), py::arg("threads") = 1);
  m.def("evaluate", &evaluate_json, py::arg("gold"), py::arg("predictions"), py::arg("dataset") = "all",
        py::arg("config") = "default");
  m.def("run", &run_command, py::arg("command"), py::arg("config"));
}
