#include "tuplex/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "tuplex/error.hpp"

namespace tuplex {

double f1_score(double precision, double recall) {
  const double denom = precision + recall;
  return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

MetricTriple Counts::metrics() const {
  MetricTriple m;
  m.precision = pred == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(pred);
  m.recall = gold == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(gold);
  m.f1 = f1_score(m.precision, m.recall);
  return m;
}

namespace {

template <class T>
std::size_t matched(std::span<const T> pred, std::span<const T> gold) {
  std::map<T, std::size_t> remaining;
  for (const T& g : gold) ++remaining[g];
  std::size_t correct = 0;
  for (const T& p : pred) {
    auto it = remaining.find(p);
    if (it != remaining.end() && it->second > 0) {
      --it->second;
      ++correct;
    }
  }
  return correct;
}

}  // namespace

TypeCounts entity_counts(const SpansByType& pred, const SpansByType& gold) {
  TypeCounts out;
  for (EntityType t : kEntityTypes) {
    const std::size_t i = type_index(t);
    out[i] = {pred[i].size(), gold[i].size(),
              matched<EntitySpan>(pred[i], gold[i])};
  }
  return out;
}

std::array<MetricTriple, kNumEntityTypes> entity_prf(const SpansByType& pred, const SpansByType& gold) {
  const TypeCounts counts = entity_counts(pred, gold);
  std::array<MetricTriple, kNumEntityTypes> out;
  for (std::size_t i = 0; i < kNumEntityTypes; ++i) out[i] = counts[i].metrics();
  return out;
}

Counts tuple_counts(std::span<const TupleRecord> pred, std::span<const TupleRecord> gold) {
  const std::set<TupleRecord> distinct(pred.begin(), pred.end());
  const std::vector<TupleRecord> deduped(distinct.begin(), distinct.end());
  return {deduped.size(), gold.size(), matched<TupleRecord>(deduped, gold)};
}

MetricTriple tuple_prf(std::span<const TupleRecord> pred, std::span<const TupleRecord> gold) {
  return tuple_counts(pred, gold).metrics();
}

EvalResult& EvalResult::operator+=(const EvalResult& o) {
  for (std::size_t i = 0; i < kNumEntityTypes; ++i) per_type[i] += o.per_type[i];
  tuple += o.tuple;
  return *this;
}

namespace {

nlohmann::json metrics_json(const MetricTriple& m) {
  return {{"p", m.precision}, {"r", m.recall}, {"f1", m.f1}};
}

nlohmann::json counts_json(const Counts& c) {
  return {{"pred", c.pred}, {"gold", c.gold}, {"correct", c.correct}};
}

Counts counts_from_json(const nlohmann::json& j) {
  return {j.at("pred").get<std::size_t>(), j.at("gold").get<std::size_t>(),
          j.at("correct").get<std::size_t>()};
}

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string render(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths;
  for (const auto& row : rows) {
    widths.resize(std::max(widths.size(), row.size()), 0);
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
  }
  std::string out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::string line;
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      if (c > 0) line += "  ";
      line += pad(rows[r][c], widths[c]);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t w : widths) total += w;
      out += std::string(total + 2 * (widths.size() - 1), '-') + '\n';
    }
  }
  return out;
}

std::vector<std::string> distinct_in_order(std::span<const EvalResult> results,
                                           std::string EvalResult::*field) {
  std::vector<std::string> out;
  for (const EvalResult& r : results) {
    if (std::find(out.begin(), out.end(), r.*field) == out.end()) out.push_back(r.*field);
  }
  return out;
}

const EvalResult* find_result(std::span<const EvalResult> results, const std::string& dataset,
                              const std::string& config) {
  for (const EvalResult& r : results) {
    if (r.dataset == dataset && r.config == config) return &r;
  }
  return nullptr;
}

}  // namespace

nlohmann::json result_to_json(const EvalResult& r) {
  nlohmann::json per_type = nlohmann::json::object();
  for (EntityType t : kEntityTypes) {
    const Counts& c = r.per_type[type_index(t)];
    nlohmann::json entry = metrics_json(c.metrics());
    entry["counts"] = counts_json(c);
    per_type[std::string(slot_name(t))] = entry;
  }
  return {{"dataset", r.dataset},
          {"config", r.config},
          {"per_type", per_type},
          {"tuple", metrics_json(r.tuple.metrics())},
          {"counts", counts_json(r.tuple)}};
}

EvalResult result_from_json(const nlohmann::json& j) {
  try {
    EvalResult r;
    r.dataset = j.at("dataset").get<std::string>();
    r.config = j.at("config").get<std::string>();
    for (EntityType t : kEntityTypes) {
      r.per_type[type_index(t)] = counts_from_json(j.at("per_type").at(std::string(slot_name(t))).at("counts"));
    }
    r.tuple = counts_from_json(j.at("counts"));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedJson, std::string("bad evaluation result: ") + e.what());
  }
}

nlohmann::json report_json(std::span<const EvalResult> results) {
  nlohmann::json out;
  out["results"] = nlohmann::json::array();
  for (const EvalResult& r : results) out["results"].push_back(result_to_json(r));
  const auto configs = distinct_in_order(results, &EvalResult::config);
  if (configs.size() > 1) {
    const auto datasets = distinct_in_order(results, &EvalResult::dataset);
    nlohmann::json grid;
    grid["datasets"] = datasets;
    grid["configs"] = configs;
    grid["cells"] = nlohmann::json::array();
    for (const std::string& d : datasets) {
      nlohmann::json row = nlohmann::json::array();
      for (const std::string& c : configs) {
        const EvalResult* r = find_result(results, d, c);
        row.push_back(r == nullptr ? nlohmann::json(nullptr) : metrics_json(r->tuple.metrics()));
      }
      grid["cells"].push_back(row);
    }
    out["grid"] = grid;
  }
  return out;
}

std::string report_table(std::span<const EvalResult> results) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header = {"dataset", "config"};
  for (EntityType t : kEntityTypes) header.push_back(std::string(slot_name(t)) + ".f1");
  for (const char* h : {"tuple.p", "tuple.r", "tuple.f1"}) header.emplace_back(h);
  rows.push_back(header);
  for (const EvalResult& r : results) {
    std::vector<std::string> row = {r.dataset, r.config};
    for (const Counts& c : r.per_type) row.push_back(fixed3(c.metrics().f1));
    const MetricTriple m = r.tuple.metrics();
    for (double v : {m.precision, m.recall, m.f1}) row.push_back(fixed3(v));
    rows.push_back(row);
  }
  std::string out = render(rows);

  const auto configs = distinct_in_order(results, &EvalResult::config);
  if (configs.size() > 1) {
    const auto datasets = distinct_in_order(results, &EvalResult::dataset);
    std::vector<std::vector<std::string>> grid;
    std::vector<std::string> head = {"dataset"};
    for (const std::string& c : configs) {
      for (const char* m : {".p", ".r", ".f1"}) head.push_back(c + m);
    }
    grid.push_back(head);
    for (const std::string& d : datasets) {
      std::vector<std::string> row = {d};
      for (const std::string& c : configs) {
        const EvalResult* r = find_result(results, d, c);
        if (r == nullptr) {
          row.insert(row.end(), {"-", "-", "-"});
          continue;
        }
        const MetricTriple m = r->tuple.metrics();
        for (double v : {m.precision, m.recall, m.f1}) row.push_back(fixed3(v));
      }
      grid.push_back(row);
    }
    out += '\n' + render(grid);
  }
  return out;
}

}  // namespace tuplex
