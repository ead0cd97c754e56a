#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tuplex/allocator.hpp"
#include "tuplex/pointer_net.hpp"
#include "tuplex/synthgen.hpp"

namespace tuplex {

struct NamedPath {
  std::string name;
  std::string path;
};

// Effective configuration of one command. Built from the JSON config file
// with command line overrides merged on top, and echoed into every output.
struct RunConfig {
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  std::string dataset_k = "all";

  std::string dataset_path;
  std::string embeddings_path;
  std::string extractor_path;
  std::string allocator_path;
  std::string output_path;
  std::vector<NamedPath> predictions;

  SynthConfig synth;
  std::size_t dim = 32;
  ExtractorHyper extractor;
  AllocatorHyper allocator;

  // Allocator settings given explicitly; extract applies them on top of the
  // checkpoint, training uses them in place of the defaults.
  std::optional<double> lambda;
  std::optional<bool> enable_inter;
  std::optional<bool> enable_intra;
  std::optional<bool> enable_allocation;

  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  std::uint64_t require_seed() const;
  AllocatorHyper allocator_hyper() const;
};

// Reads `config_path` (if non-empty), applies `overrides` as a JSON merge
// patch and parses the result.
RunConfig load_run_config(const std::string& config_path, const nlohmann::json& overrides);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& text, const std::string& path);

// Each command writes its primary output to cfg.output_path and a one-line
// JSON summary to `log`.
void cmd_synth(const RunConfig& cfg, std::ostream& log);
void cmd_embed_synthetic(const RunConfig& cfg, std::ostream& log);
void cmd_train_extractor(const RunConfig& cfg, std::ostream& log);
void cmd_train_allocator(const RunConfig& cfg, std::ostream& log);
void cmd_extract(const RunConfig& cfg, std::ostream& log);
// Also prints the text table to `log`.
void cmd_evaluate(const RunConfig& cfg, std::ostream& log);
void cmd_stats(const RunConfig& cfg, std::ostream& log);

nlohmann::json error_json(const std::exception& e);

}  // namespace tuplex
