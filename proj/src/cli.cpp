#include "tuplex/cli.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "tuplex/checkpoint.hpp"
#include "tuplex/embedding.hpp"
#include "tuplex/error.hpp"
#include "tuplex/pipeline.hpp"

namespace tuplex {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw Error(ErrorCode::kInvalidArgument, "unknown config key '" + where + "." + key + "'");
  }
}

template <class T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

template <class T>
void read_if(const json& j, const char* key, std::optional<T>& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

Dataset load_dataset(const std::string& path) {
  if (path.empty()) throw Error(ErrorCode::kInvalidArgument, "a dataset path is required");
  return parse_dataset(read_text_file(path));
}

EmbeddingStore load_store(const std::string& path) {
  if (path.empty()) throw Error(ErrorCode::kInvalidArgument, "an embeddings path is required");
  return EmbeddingStore(read_embeddings_file(path));
}

const std::string& require_output(const RunConfig& cfg) {
  if (cfg.output_path.empty()) throw Error(ErrorCode::kInvalidArgument, "an output path is required");
  return cfg.output_path;
}

std::pair<Dataset, Dataset> training_split(const RunConfig& cfg) {
  const std::uint64_t seed = cfg.require_seed();
  Dataset data = select_dataset(load_dataset(cfg.dataset_path), cfg.dataset_k, seed);
  if (data.sentences.size() < 10) return {std::move(data), Dataset{}};
  return train_val_split(data, seed);
}

void summary(std::ostream& log, json j) { log << j.dump() << '\n'; }

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
  RunConfig cfg;
  try {
    check_keys(j, {"seed", "threads", "dataset_k", "paths", "synth", "embedding", "extractor", "allocator"},
               "config");
    read_if(j, "seed", cfg.seed);
    read_if(j, "threads", cfg.threads);
    if (j.contains("dataset_k")) {
      const json& k = j.at("dataset_k");
      cfg.dataset_k = k.is_number_unsigned() ? std::to_string(k.get<unsigned>()) : k.get<std::string>();
    }
    if (j.contains("paths")) {
      const json& p = j.at("paths");
      check_keys(p, {"dataset", "embeddings", "extractor", "allocator", "output", "predictions"}, "paths");
      read_if(p, "dataset", cfg.dataset_path);
      read_if(p, "embeddings", cfg.embeddings_path);
      read_if(p, "extractor", cfg.extractor_path);
      read_if(p, "allocator", cfg.allocator_path);
      read_if(p, "output", cfg.output_path);
      if (p.contains("predictions")) {
        for (const json& e : p.at("predictions")) {
          cfg.predictions.push_back({e.at("name").get<std::string>(), e.at("path").get<std::string>()});
        }
      }
    }
    if (j.contains("synth")) cfg.synth = SynthConfig::from_json(j.at("synth"));
    if (j.contains("embedding")) {
      check_keys(j.at("embedding"), {"d"}, "embedding");
      read_if(j.at("embedding"), "d", cfg.dim);
    }
    if (j.contains("extractor")) {
      const json& e = j.at("extractor");
      check_keys(e, {"learning_rate", "epochs", "batch_size", "hidden", "thresholds"}, "extractor");
      read_if(e, "learning_rate", cfg.extractor.learning_rate);
      read_if(e, "epochs", cfg.extractor.epochs);
      read_if(e, "batch_size", cfg.extractor.batch_size);
      read_if(e, "hidden", cfg.extractor.hidden);
      if (e.contains("thresholds")) {
        for (const auto& [name, th] : e.at("thresholds").items()) {
          const auto type = entity_type_from_name(name);
          if (!type) throw Error(ErrorCode::kInvalidArgument, "unknown entity type '" + name + "' in thresholds");
          read_if(th, "start", cfg.extractor.start_threshold[type_index(*type)]);
          read_if(th, "end", cfg.extractor.end_threshold[type_index(*type)]);
        }
      }
    }
    if (j.contains("allocator")) {
      const json& a = j.at("allocator");
      check_keys(a, {"learning_rate", "epochs", "batch_size", "lambda", "enable_inter", "enable_intra",
                     "enable_allocation"},
                 "allocator");
      read_if(a, "learning_rate", cfg.allocator.learning_rate);
      read_if(a, "epochs", cfg.allocator.epochs);
      read_if(a, "batch_size", cfg.allocator.batch_size);
      read_if(a, "lambda", cfg.lambda);
      read_if(a, "enable_inter", cfg.enable_inter);
      read_if(a, "enable_intra", cfg.enable_intra);
      read_if(a, "enable_allocation", cfg.enable_allocation);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedJson, std::string("bad config: ") + e.what());
  }
  if (cfg.threads == 0) throw Error(ErrorCode::kInvalidArgument, "threads must be at least 1");
  if (cfg.lambda && !(*cfg.lambda >= 1.0)) throw Error(ErrorCode::kInvalidArgument, "lambda must be >= 1");
  return cfg;
}

json RunConfig::to_json() const {
  json j;
  j["seed"] = seed ? json(*seed) : json(nullptr);
  j["threads"] = threads;
  j["dataset_k"] = dataset_k;
  json preds = json::array();
  for (const NamedPath& p : predictions) preds.push_back({{"name", p.name}, {"path", p.path}});
  j["paths"] = {{"dataset", dataset_path},     {"embeddings", embeddings_path},
                {"extractor", extractor_path}, {"allocator", allocator_path},
                {"output", output_path},       {"predictions", preds}};
  j["synth"] = synth.to_json();
  j["embedding"] = {{"d", dim}};
  json thresholds = json::object();
  for (EntityType t : kEntityTypes) {
    thresholds[std::string(slot_name(t))] = {{"start", extractor.start_threshold[type_index(t)]},
                                             {"end", extractor.end_threshold[type_index(t)]}};
  }
  j["extractor"] = {{"learning_rate", extractor.learning_rate},
                    {"epochs", extractor.epochs},
                    {"batch_size", extractor.batch_size},
                    {"hidden", extractor.hidden},
                    {"thresholds", thresholds}};
  json alloc = {{"learning_rate", allocator.learning_rate},
                {"epochs", allocator.epochs},
                {"batch_size", allocator.batch_size}};
  if (lambda) alloc["lambda"] = *lambda;
  if (enable_inter) alloc["enable_inter"] = *enable_inter;
  if (enable_intra) alloc["enable_intra"] = *enable_intra;
  if (enable_allocation) alloc["enable_allocation"] = *enable_allocation;
  j["allocator"] = alloc;
  return j;
}

std::uint64_t RunConfig::require_seed() const {
  if (!seed) throw Error(ErrorCode::kInvalidArgument, "a seed is required (--seed or \"seed\" in the config)");
  return *seed;
}

AllocatorHyper RunConfig::allocator_hyper() const {
  AllocatorHyper h = allocator;
  if (lambda) h.lambda = *lambda;
  if (enable_inter) h.enable_inter = *enable_inter;
  if (enable_intra) h.enable_intra = *enable_intra;
  if (enable_allocation) h.enable_allocation = *enable_allocation;
  return h;
}

RunConfig load_run_config(const std::string& config_path, const json& overrides) {
  json base = json::object();
  if (!config_path.empty()) {
    try {
      base = json::parse(read_text_file(config_path));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kMalformedJson, config_path + ": " + e.what());
    }
  }
  base.merge_patch(overrides);
  return RunConfig::from_json(base);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& text, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path);
}

void cmd_synth(const RunConfig& cfg, std::ostream& log) {
  const std::string& out = require_output(cfg);
  const Dataset d = generate(cfg.synth, cfg.require_seed());
  write_text_file(serialize_dataset(d) + "\n", out);
  write_json_file(cfg.to_json(), out + ".config.json");
  summary(log, {{"command", "synth"}, {"output", out}, {"sentences", d.sentences.size()}});
}

void cmd_embed_synthetic(const RunConfig& cfg, std::ostream& log) {
  const std::string& out = require_output(cfg);
  const std::uint64_t seed = cfg.require_seed();
  const Dataset d = load_dataset(cfg.dataset_path);
  std::vector<EmbeddedSentence> records;
  records.reserve(d.sentences.size());
  for (const AnnotatedSentence& s : d.sentences) records.push_back(synthetic_embed(s, cfg.dim, seed));
  write_embeddings_file(records, out);
  write_json_file(cfg.to_json(), out + ".config.json");
  summary(log, {{"command", "embed-synth"}, {"output", out}, {"sentences", records.size()}, {"d", cfg.dim}});
}

void cmd_train_extractor(const RunConfig& cfg, std::ostream& log) {
  const std::string& out = require_output(cfg);
  const auto [train, val] = training_split(cfg);
  const EmbeddingStore store = load_store(cfg.embeddings_path);
  const auto tr = make_extractor_examples(train, store);
  const auto va = make_extractor_examples(val, store);
  const ExtractorTrainResult r = train_extractor(cfg.require_seed(), tr, va, cfg.extractor);
  write_json_file(extractor_to_json(r.params, cfg.to_json()), out);
  summary(log, {{"command", "train-extractor"},
                {"output", out},
                {"train_sentences", train.sentences.size()},
                {"val_sentences", val.sentences.size()},
                {"best_epoch", r.log.best_epoch},
                {"best_val_loss", r.log.best_val_loss}});
}

void cmd_train_allocator(const RunConfig& cfg, std::ostream& log) {
  const std::string& out = require_output(cfg);
  const auto [train, val] = training_split(cfg);
  const EmbeddingStore store = load_store(cfg.embeddings_path);
  const AllocatorHyper hyper = cfg.allocator_hyper();
  const AllocExamples tr = make_allocator_examples(train, store, hyper.enable_inter, hyper.enable_intra);
  const AllocExamples va = make_allocator_examples(val, store, hyper.enable_inter, hyper.enable_intra);
  const AllocatorTrainResult r = train_allocator(cfg.require_seed(), tr, va, store.dim(), hyper);
  write_json_file(allocator_to_json(r.model, cfg.require_seed(), cfg.to_json()), out);
  json best = json::object();
  for (std::size_t p = 0; p < kPartnerTypes.size(); ++p) {
    best[std::string(slot_name(kPartnerTypes[p]))] = {{"best_epoch", r.logs[p].best_epoch},
                                                       {"best_val_loss", r.logs[p].best_val_loss}};
  }
  summary(log, {{"command", "train-allocator"},
                {"output", out},
                {"train_sentences", train.sentences.size()},
                {"val_sentences", val.sentences.size()},
                {"heads", best}});
}

void cmd_extract(const RunConfig& cfg, std::ostream& log) {
  const std::string& out = require_output(cfg);
  if (cfg.extractor_path.empty() || cfg.allocator_path.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "extract needs both an extractor and an allocator checkpoint");
  }
  Pipeline pipeline{extractor_from_json(read_json_file(cfg.extractor_path)),
                    allocator_from_json(read_json_file(cfg.allocator_path))};
  AllocatorModel& m = pipeline.allocator;
  if (cfg.lambda) m.set_lambda(*cfg.lambda);
  m.set_flags(cfg.enable_inter.value_or(m.enable_inter()), cfg.enable_intra.value_or(m.enable_intra()),
              cfg.enable_allocation.value_or(m.enable_allocation()));
  const Dataset d = select_dataset(load_dataset(cfg.dataset_path), cfg.dataset_k, cfg.seed.value_or(0));
  const EmbeddingStore store = load_store(cfg.embeddings_path);
  const auto preds = extract(pipeline, d, store, cfg.threads);
  write_text_file(serialize_predictions(preds, cfg.to_json()) + "\n", out);
  std::size_t tuples = 0;
  for (const SentencePrediction& p : preds) tuples += p.tuples.size();
  summary(log, {{"command", "extract"}, {"output", out}, {"sentences", preds.size()}, {"tuples", tuples}});
}

void cmd_evaluate(const RunConfig& cfg, std::ostream& log) {
  if (cfg.predictions.empty()) throw Error(ErrorCode::kInvalidArgument, "evaluate needs at least one --pred");
  const Dataset gold = load_dataset(cfg.dataset_path);
  std::vector<std::pair<std::string, Dataset>> slices;
  if (cfg.dataset_k == "all") {
    const TupleCountSplit split = split_by_tuple_count(gold);
    for (std::size_t k = 1; k <= 4; ++k) {
      if (!split.bucket(k).sentences.empty()) slices.emplace_back(std::to_string(k), split.bucket(k));
    }
    slices.emplace_back("all", gold);
  } else {
    slices.emplace_back(cfg.dataset_k, select_dataset(gold, cfg.dataset_k, cfg.seed.value_or(0)));
  }
  std::vector<EvalResult> results;
  for (const NamedPath& p : cfg.predictions) {
    const auto preds = parse_predictions(read_text_file(p.path));
    for (const auto& [name, slice] : slices) results.push_back(evaluate(slice, preds, name, p.name));
  }
  json report = report_json(results);
  report["run_config"] = cfg.to_json();
  if (!cfg.output_path.empty()) write_json_file(report, cfg.output_path);
  log << report_table(results);
}

void cmd_stats(const RunConfig& cfg, std::ostream& log) {
  const Dataset d = select_dataset(load_dataset(cfg.dataset_path), cfg.dataset_k, cfg.seed.value_or(0));
  const DistributionReport r = stats(d);
  json by_count = json::object();
  for (const auto& [k, row] : r.by_count) {
    by_count[std::to_string(k)] = {{"sentences", row.sentences}, {"tuples", row.tuples}, {"proportion", row.proportion}};
  }
  json out = {{"by_count", by_count},
              {"total_sentences", r.total_sentences},
              {"total_tuples", r.total_tuples},
              {"run_config", cfg.to_json()}};
  if (!cfg.output_path.empty()) write_json_file(out, cfg.output_path);
  out.erase("run_config");
  summary(log, out);
}

json error_json(const std::exception& e) {
  json err;
  if (const auto* te = dynamic_cast<const Error*>(&e)) {
    err["code"] = std::string(error_code_name(te->code()));
    err["sentence_id"] = te->sentence_id().empty() ? json(nullptr) : json(te->sentence_id());
  } else {
    err["code"] = "internal";
    err["sentence_id"] = nullptr;
  }
  err["message"] = e.what();
  return {{"error", err}};
}

}  // namespace tuplex
