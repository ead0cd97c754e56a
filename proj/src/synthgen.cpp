#include "tuplex/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "tuplex/error.hpp"
#include "tuplex/rng.hpp"

namespace tuplex {

using nlohmann::json;

namespace {

constexpr std::array<const char*, 15> kElements = {"Al", "Co", "Cr", "Fe", "Ni", "Mn", "Ti", "V",
                                                   "Nb", "Mo", "Ta", "W",  "Zr", "Hf", "Cu"};
constexpr std::array<const char*, 5> kSubscripts = {"0.3", "0.5", "1.5", "2", "0.2"};
constexpr std::size_t kAlloyCount = 24;
constexpr std::size_t kValuesPerProperty = 8;

void check_distribution(const double* p, std::size_t n, const char* name) {
  double sum = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(p[i] >= 0.0 && p[i] <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, std::string(name) + " entries must lie in [0, 1]");
    }
    any = any || p[i] > 0.0;
    sum += p[i];
  }
  if (!any) throw Error(ErrorCode::kDegenerateConfig, std::string(name) + " is all zero");
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument, std::string(name) + " must sum to 1");
  }
}

std::string format_int(long v) { return std::to_string(v); }

std::string format_decimal(int tenths) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%d.%d", tenths / 10, tenths % 10);
  return buf;
}

// Draws `count` distinct strings from `make` until enough are collected.
template <class Make>
std::vector<std::string> distinct(Rng& rng, std::size_t count, Make make) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  while (out.size() < count) {
    std::string s = make(rng);
    if (seen.insert(s).second) out.push_back(std::move(s));
  }
  return out;
}

// Appends literal text and entity mentions, tracking code point offsets.
class SentenceBuilder {
 public:
  void text(std::string_view s) {
    text_.append(s);
    length_ += utf8::length(s);
  }

  EntitySpan entity(EntityType type, const std::string& surface) {
    EntitySpan span{type, length_, length_ + utf8::length(surface), surface};
    text(surface);
    return span;
  }

  std::string str() const { return text_; }

 private:
  std::string text_;
  std::size_t length_ = 0;
};

std::string join_separator(std::size_t i, std::size_t n) {
  if (i == 0) return "";
  return i + 1 == n ? " and " : ", ";
}

struct Slot {
  std::string alloy;
  std::size_t property = 0;
  std::string value;
  bool has_condition = false;
  std::size_t condition = 0;
  std::string condition_value;
};

}  // namespace

void SynthConfig::validate() const {
  check_distribution(k_distribution.data(), k_distribution.size(), "k_distribution");
  check_distribution(pattern_mix.data(), pattern_mix.size(), "pattern_mix");
  if (!(condition_omission_rate >= 0.0 && condition_omission_rate <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "condition_omission_rate must lie in [0, 1]");
  }
  if (n_sentences == 0) throw Error(ErrorCode::kDegenerateConfig, "n_sentences must be positive");
}

json SynthConfig::to_json() const {
  return json{{"n_sentences", n_sentences},
              {"k_distribution",
               {{"1", k_distribution[0]}, {"2", k_distribution[1]}, {"3", k_distribution[2]},
                {"4", k_distribution[3]}}},
              {"pattern_mix", {{"A", pattern_mix[0]}, {"B", pattern_mix[1]}, {"C", pattern_mix[2]}}},
              {"condition_omission_rate", condition_omission_rate},
              {"vocab_seed", vocab_seed}};
}

SynthConfig SynthConfig::from_json(const json& j) {
  SynthConfig cfg;
  try {
    if (j.contains("n_sentences")) cfg.n_sentences = j.at("n_sentences").get<std::size_t>();
    if (j.contains("k_distribution")) {
      cfg.k_distribution = {0, 0, 0, 0};
      for (const auto& [key, value] : j.at("k_distribution").items()) {
        const int k = std::stoi(key);
        if (k < 1 || k > 4) throw Error(ErrorCode::kInvalidArgument, "k_distribution keys must be 1..4");
        cfg.k_distribution[static_cast<std::size_t>(k - 1)] = value.get<double>();
      }
    }
    if (j.contains("pattern_mix")) {
      cfg.pattern_mix = {0, 0, 0};
      for (const auto& [key, value] : j.at("pattern_mix").items()) {
        if (key.size() != 1 || key[0] < 'A' || key[0] > 'C') {
          throw Error(ErrorCode::kInvalidArgument, "pattern_mix keys must be A, B or C");
        }
        cfg.pattern_mix[static_cast<std::size_t>(key[0] - 'A')] = value.get<double>();
      }
    }
    if (j.contains("condition_omission_rate")) {
      cfg.condition_omission_rate = j.at("condition_omission_rate").get<double>();
    }
    if (j.contains("vocab_seed")) cfg.vocab_seed = j.at("vocab_seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedJson, std::string("synth config: ") + e.what());
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::kInvalidArgument, "synth config: k_distribution keys must be integers");
  }
  cfg.validate();
  return cfg;
}

std::string render_quantity(const std::string& number, const std::string& unit) {
  return unit == "%" ? number + unit : number + " " + unit;
}

bool is_alloy_formula(std::string_view name) {
  if (name.empty()) return false;
  std::size_t i = 0;
  while (i < name.size()) {
    bool matched = false;
    for (const char* el : kElements) {
      const std::string_view sym(el);
      // Longest match first: two-letter symbols are tried before "V"/"W".
      if (sym.size() == 2 && name.substr(i, 2) == sym) {
        i += 2;
        matched = true;
        break;
      }
    }
    if (!matched) {
      for (const char* el : kElements) {
        const std::string_view sym(el);
        if (sym.size() == 1 && name.substr(i, 1) == sym) {
          i += 1;
          matched = true;
          break;
        }
      }
    }
    if (!matched) return false;
    // optional subscript: digits, optionally "." digits
    std::size_t digits = 0;
    while (i < name.size() && name[i] >= '0' && name[i] <= '9') ++i, ++digits;
    if (digits > 0 && i < name.size() && name[i] == '.') {
      ++i;
      std::size_t frac = 0;
      while (i < name.size() && name[i] >= '0' && name[i] <= '9') ++i, ++frac;
      if (frac == 0) return false;
    }
  }
  return true;
}

Vocabulary vocab(std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0xA110));
  Vocabulary v;

  v.alloys = distinct(rng, kAlloyCount, [](Rng& r) {
    std::vector<std::size_t> elements(kElements.size());
    for (std::size_t i = 0; i < elements.size(); ++i) elements[i] = i;
    r.shuffle(elements);
    const std::size_t n = 3 + r.index(3);
    elements.resize(n);
    std::sort(elements.begin(), elements.end(), [](std::size_t a, std::size_t b) {
      return std::string_view(kElements[a]) < std::string_view(kElements[b]);
    });
    std::string name;
    for (std::size_t e : elements) {
      name += kElements[e];
      if (r.bernoulli(0.15)) name += kSubscripts[r.index(kSubscripts.size())];
    }
    return name;
  });

  // Non-multiples of ten keep property numbers disjoint from condition numbers.
  auto integers = [&](long lo, long hi) {
    return distinct(rng, kValuesPerProperty, [lo, hi](Rng& r) {
      long x = lo + static_cast<long>(r.index(static_cast<std::size_t>(hi - lo)));
      if (x % 10 == 0) ++x;
      return format_int(x);
    });
  };
  auto percents = [&] {
    return distinct(rng, kValuesPerProperty, [](Rng& r) {
      int tenths = 20 + static_cast<int>(r.index(580));
      if (tenths % 10 == 0) ++tenths;
      return format_decimal(tenths);
    });
  };

  v.properties.push_back({"yield strength", "MPa", integers(300, 2400)});
  v.properties.push_back({"ultimate tensile strength", "MPa", integers(400, 2600)});
  v.properties.push_back({"compressive strength", "MPa", integers(800, 3000)});
  v.properties.push_back({"hardness", "HV", integers(150, 750)});
  v.properties.push_back({"Young's modulus", "GPa", integers(60, 250)});
  v.properties.push_back({"elongation", "%", percents()});

  std::vector<std::string> temperatures = {"25",  "100", "200", "300", "400",  "500",  "600",
                                           "700", "800", "900", "1000", "1100", "1200"};
  rng.shuffle(temperatures);
  temperatures.resize(8);
  v.conditions.push_back({"temperature", "°C", temperatures});
  v.conditions.push_back({"strain rate", "s-1", {"0.001", "0.0001", "0.01", "0.1"}});
  return v;
}

AnnotatedSentence generate_sentence(const Vocabulary& vocabulary, const SynthConfig& cfg,
                                    std::size_t k, Pattern pattern, std::uint64_t seed,
                                    std::size_t index) {
  Rng rng(derive_seed(seed, 2 * static_cast<std::uint64_t>(index) + 1));

  auto pick_distinct = [&](std::size_t pool, std::size_t n) {
    std::vector<std::size_t> idx(pool);
    for (std::size_t i = 0; i < pool; ++i) idx[i] = i;
    rng.shuffle(idx);
    idx.resize(n);
    return idx;
  };

  // Fill the tuple slots first, then render them through a template.
  std::vector<Slot> slots(k);
  const std::size_t shared_alloy = rng.index(vocabulary.alloys.size());
  const std::size_t shared_property = rng.index(vocabulary.properties.size());
  const std::size_t condition_kind = rng.index(vocabulary.conditions.size());
  const ConditionEntry& condition = vocabulary.conditions[condition_kind];

  switch (pattern) {
    case Pattern::kA: {
      const auto props = pick_distinct(vocabulary.properties.size(), k);
      for (std::size_t i = 0; i < k; ++i) {
        slots[i].alloy = vocabulary.alloys[shared_alloy];
        slots[i].property = props[i];
      }
      break;
    }
    case Pattern::kB:
    case Pattern::kC: {
      const auto alloys = pick_distinct(vocabulary.alloys.size(), k);
      for (std::size_t i = 0; i < k; ++i) {
        slots[i].alloy = vocabulary.alloys[pattern == Pattern::kB ? shared_alloy : alloys[i]];
        slots[i].property = shared_property;
      }
      break;
    }
  }

  // Values are distinct within a sentence; in pattern C they share one property pool.
  std::map<std::size_t, std::vector<std::size_t>> used_values;
  for (Slot& s : slots) {
    const PropertyEntry& prop = vocabulary.properties[s.property];
    auto& used = used_values[s.property];
    std::size_t pick = rng.index(prop.numbers.size());
    while (std::find(used.begin(), used.end(), pick) != used.end()) {
      pick = rng.index(prop.numbers.size());
    }
    used.push_back(pick);
    s.value = render_quantity(prop.numbers[pick], prop.unit);
  }
  const auto condition_values = pick_distinct(condition.numbers.size(), k);
  for (std::size_t i = 0; i < k; ++i) {
    // Pattern B is defined by its varying conditions, so it never omits them.
    slots[i].has_condition = pattern == Pattern::kB || !rng.bernoulli(cfg.condition_omission_rate);
    slots[i].condition = condition_kind;
    slots[i].condition_value = render_quantity(condition.numbers[condition_values[i]], condition.unit);
  }

  SentenceBuilder b;
  std::vector<TupleRecord> tuples(k);
  auto condition_phrase = [&](std::size_t i) {
    if (!slots[i].has_condition) return;
    b.text(" at a ");
    tuples[i].condition = b.entity(EntityType::kCondition, condition.name);
    b.text(" of ");
    tuples[i].condition_value = b.entity(EntityType::kConditionValue, slots[i].condition_value);
  };
  auto value = [&](std::size_t i) {
    tuples[i].property_value = b.entity(EntityType::kPropertyValue, slots[i].value);
  };
  auto property = [&](std::size_t i) {
    return b.entity(EntityType::kProperty, vocabulary.properties[slots[i].property].name);
  };
  auto alloy = [&](std::size_t i) { return b.entity(EntityType::kMaterial, slots[i].alloy); };

  const std::size_t variant = rng.index(2);
  switch (pattern) {
    case Pattern::kA: {
      EntitySpan m;
      if (variant == 0) {
        m = alloy(0);
        b.text(" has ");
      } else {
        b.text("The ");
        m = alloy(0);
        b.text(" alloy exhibits ");
      }
      for (std::size_t i = 0; i < k; ++i) {
        b.text(join_separator(i, k));
        b.text("a ");
        tuples[i].material = m;
        tuples[i].property = property(i);
        b.text(" of ");
        value(i);
        condition_phrase(i);
      }
      b.text(".");
      break;
    }
    case Pattern::kB: {
      EntitySpan m;
      EntitySpan p;
      EntitySpan c;
      if (variant == 0) {
        b.text("With increasing ");
        c = b.entity(EntityType::kCondition, condition.name);
        b.text(", the ");
        p = property(0);
        b.text(" of ");
        m = alloy(0);
        b.text(" is ");
      } else {
        m = alloy(0);
        b.text(" shows a ");
        p = property(0);
        b.text(" of ");
      }
      for (std::size_t i = 0; i < k; ++i) {
        b.text(join_separator(i, k));
        value(i);
        b.text(" at ");
        tuples[i].condition_value = b.entity(EntityType::kConditionValue, slots[i].condition_value);
      }
      if (variant == 1) {
        b.text(" when the ");
        c = b.entity(EntityType::kCondition, condition.name);
        b.text(" is varied");
      }
      b.text(".");
      for (auto& t : tuples) {
        t.material = m;
        t.property = p;
        t.condition = c;
      }
      break;
    }
    case Pattern::kC: {
      b.text("The ");
      const EntitySpan p = property(0);
      if (variant == 0) {
        b.text(" of ");
        for (std::size_t i = 0; i < k; ++i) {
          b.text(join_separator(i, k));
          tuples[i].material = alloy(i);
        }
        b.text(k == 1 ? " is " : " are ");
        for (std::size_t i = 0; i < k; ++i) {
          b.text(join_separator(i, k));
          value(i);
          condition_phrase(i);
        }
        if (k > 1) b.text(", respectively");
      } else {
        b.text(" is ");
        for (std::size_t i = 0; i < k; ++i) {
          b.text(join_separator(i, k));
          value(i);
          b.text(" for ");
          tuples[i].material = alloy(i);
          condition_phrase(i);
        }
      }
      b.text(".");
      for (auto& t : tuples) t.property = p;
      break;
    }
  }

  char id[32];
  std::snprintf(id, sizeof id, "syn-%06zu", index);
  AnnotatedSentence out{id, b.str(), std::move(tuples)};
  return out;
}

Dataset generate(const SynthConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const Vocabulary vocabulary = vocab(cfg.vocab_seed);
  Dataset out;
  out.sentences.reserve(cfg.n_sentences);
  for (std::size_t i = 0; i < cfg.n_sentences; ++i) {
    Rng rng(derive_seed(seed, 2 * static_cast<std::uint64_t>(i)));
    const std::size_t k = 1 + rng.categorical(cfg.k_distribution);
    const auto pattern = static_cast<Pattern>(rng.categorical(cfg.pattern_mix));
    out.sentences.push_back(generate_sentence(vocabulary, cfg, k, pattern, seed, i));
  }
  return out;
}

}  // namespace tuplex
