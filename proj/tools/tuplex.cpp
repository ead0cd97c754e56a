#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tuplex/cli.hpp"

using nlohmann::json;

namespace {

// Command line values that, when given, are merged over the config file.
struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::string> dataset_k;
  std::optional<std::string> dataset, embeddings, extractor, allocator, output;
  std::vector<std::string> preds;
  std::optional<std::size_t> n_sentences, dim, epochs, batch_size, hidden;
  std::optional<double> omission, lr, lambda;
  bool no_inter = false, no_intra = false, no_allocation = false;

  json patch(const std::string& command) const {
    json j = json::object();
    if (seed) j["seed"] = *seed;
    if (threads) j["threads"] = *threads;
    if (dataset_k) j["dataset_k"] = *dataset_k;
    auto path = [&](const char* key, const std::optional<std::string>& v) {
      if (v) j["paths"][key] = *v;
    };
    path("dataset", dataset);
    path("embeddings", embeddings);
    path("extractor", extractor);
    path("allocator", allocator);
    path("output", output);
    if (!preds.empty()) {
      json list = json::array();
      for (const std::string& p : preds) {
        const auto eq = p.find('=');
        list.push_back(eq == std::string::npos ? json{{"name", p}, {"path", p}}
                                               : json{{"name", p.substr(0, eq)}, {"path", p.substr(eq + 1)}});
      }
      j["paths"]["predictions"] = list;
    }
    if (n_sentences) j["synth"]["n_sentences"] = *n_sentences;
    if (omission) j["synth"]["condition_omission_rate"] = *omission;
    if (dim) j["embedding"]["d"] = *dim;
    const char* stage = command == "train-extractor" ? "extractor" : "allocator";
    if (epochs) j[stage]["epochs"] = *epochs;
    if (batch_size) j[stage]["batch_size"] = *batch_size;
    if (lr) j[stage]["learning_rate"] = *lr;
    if (hidden) j["extractor"]["hidden"] = *hidden;
    if (lambda) j["allocator"]["lambda"] = *lambda;
    if (no_inter) j["allocator"]["enable_inter"] = false;
    if (no_intra) j["allocator"]["enable_intra"] = false;
    if (no_allocation) j["allocator"]["enable_allocation"] = false;
    return j;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-tuple extraction: pointer-network entities, attention-based allocation"};
  app.require_subcommand(1);
  Overrides o;
  app.add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "random seed");
  app.add_option("--threads", o.threads, "worker threads for extraction");
  app.add_option("--dataset-k", o.dataset_k, "dataset selector: 1, 2, 3, 4, random or all");

  auto* synth = app.add_subcommand("synth", "generate a synthetic annotated corpus");
  synth->add_option("--out", o.output, "corpus JSON to write");
  synth->add_option("--n", o.n_sentences, "number of sentences");
  synth->add_option("--omission", o.omission, "per-tuple condition omission rate");

  auto* embed = app.add_subcommand("embed-synth", "write synthetic token embeddings (TUPX)");
  embed->add_option("--dataset", o.dataset, "corpus JSON");
  embed->add_option("--out", o.output, "TUPX file to write");
  embed->add_option("--dim", o.dim, "embedding dimension");

  auto* tx = app.add_subcommand("train-extractor", "train the pointer-network entity extractor");
  auto* ta = app.add_subcommand("train-allocator", "train the entity allocation model");
  for (auto* cmd : {tx, ta}) {
    cmd->add_option("--dataset", o.dataset, "training corpus JSON");
    cmd->add_option("--embeddings", o.embeddings, "TUPX embeddings of the corpus");
    cmd->add_option("--out", o.output, "checkpoint to write");
    cmd->add_option("--epochs", o.epochs);
    cmd->add_option("--batch-size", o.batch_size);
    cmd->add_option("--lr", o.lr, "learning rate");
  }
  tx->add_option("--hidden", o.hidden, "width of the shared tanh layer (0 = linear heads)");
  ta->add_option("--lambda", o.lambda, "diagonal boost factor");
  ta->add_flag("--no-inter", o.no_inter, "disable inter-entity attention");
  ta->add_flag("--no-intra", o.no_intra, "disable intra-entity attention");

  auto* ex = app.add_subcommand("extract", "extract tuples with trained checkpoints");
  ex->add_option("--dataset", o.dataset, "sentences to process (corpus JSON)");
  ex->add_option("--embeddings", o.embeddings, "TUPX embeddings of those sentences");
  ex->add_option("--extractor", o.extractor, "extractor checkpoint");
  ex->add_option("--allocator", o.allocator, "allocator checkpoint");
  ex->add_option("--out", o.output, "predictions JSON to write");
  ex->add_option("--lambda", o.lambda, "override the checkpoint's diagonal boost");
  ex->add_flag("--no-inter", o.no_inter, "disable inter-entity attention");
  ex->add_flag("--no-intra", o.no_intra, "disable intra-entity attention");
  ex->add_flag("--no-allocation", o.no_allocation, "emit every entity combination instead");

  auto* ev = app.add_subcommand("evaluate", "score predictions against gold tuples");
  ev->add_option("--gold", o.dataset, "gold corpus JSON");
  ev->add_option("--pred", o.preds, "predictions as name=path; repeat for ablation grids");
  ev->add_option("--out", o.output, "report JSON to write");

  auto* st = app.add_subcommand("stats", "tuple-count distribution of a corpus");
  st->add_option("--dataset", o.dataset, "corpus JSON");
  st->add_option("--out", o.output, "report JSON to write");

  for (auto* cmd : app.get_subcommands({})) cmd->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  CLI::App* cmd = app.get_subcommands().front();
  const std::string name = cmd->get_name();
  try {
    const tuplex::RunConfig cfg = tuplex::load_run_config(o.config, o.patch(name));
    if (name == "synth") tuplex::cmd_synth(cfg, std::cout);
    else if (name == "embed-synth") tuplex::cmd_embed_synthetic(cfg, std::cout);
    else if (name == "train-extractor") tuplex::cmd_train_extractor(cfg, std::cout);
    else if (name == "train-allocator") tuplex::cmd_train_allocator(cfg, std::cout);
    else if (name == "extract") tuplex::cmd_extract(cfg, std::cout);
    else if (name == "evaluate") tuplex::cmd_evaluate(cfg, std::cout);
    else if (name == "stats") tuplex::cmd_stats(cfg, std::cout);
  } catch (const std::exception& e) {
    std::cerr << tuplex::error_json(e).dump() << '\n';
    return 1;
  }
  return 0;
}
