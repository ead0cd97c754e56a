#include "tuplex/checkpoint.hpp"

#include <sodium.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "tuplex/error.hpp"

namespace tuplex {

std::string encode_f32(std::span<const double> values) {
  std::vector<unsigned char> bytes(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(values[i]));
    for (int b = 0; b < 4; ++b) bytes[4 * i + b] = static_cast<unsigned char>(bits >> (8 * b));
  }
  const int variant = sodium_base64_VARIANT_ORIGINAL;
  std::string out(sodium_base64_ENCODED_LEN(bytes.size(), variant), '\0');
  sodium_bin2base64(out.data(), out.size(), bytes.data(), bytes.size(), variant);
  out.resize(std::strlen(out.c_str()));
  return out;
}

std::vector<double> decode_f32(std::string_view encoded) {
  std::vector<unsigned char> bytes(encoded.size() / 4 * 3 + 3);
  std::size_t len = 0;
  const char* end = nullptr;
  if (sodium_base642bin(bytes.data(), bytes.size(), encoded.data(), encoded.size(), nullptr, &len, &end,
                        sodium_base64_VARIANT_ORIGINAL) != 0 ||
      end != encoded.data() + encoded.size()) {
    throw Error(ErrorCode::kBadCheckpoint, "invalid base64 parameter array");
  }
  if (len % 4 != 0) throw Error(ErrorCode::kBadCheckpoint, "parameter array is not a whole number of f32");
  std::vector<double> out(len / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[4 * i + b]) << (8 * b);
    out[i] = std::bit_cast<float>(bits);
    if (!std::isfinite(out[i])) throw Error(ErrorCode::kNonFinite, "non-finite value in checkpoint");
  }
  return out;
}

namespace {

void check_header(const nlohmann::json& j, std::string_view format) {
  if (!j.is_object() || j.value("format", "") != format) {
    throw Error(ErrorCode::kBadCheckpoint, "not a " + std::string(format) + " checkpoint");
  }
  if (j.value("format_version", -1) != kCheckpointVersion) {
    throw Error(ErrorCode::kUnsupportedVersion, "unsupported checkpoint format_version");
  }
}

void fill(std::span<double> dst, const nlohmann::json& src, const std::string& name) {
  const std::vector<double> values = decode_f32(src.get<std::string>());
  if (values.size() != dst.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "checkpoint array " + name + " has " + std::to_string(values.size()) + " values, expected " +
                    std::to_string(dst.size()));
  }
  std::copy(values.begin(), values.end(), dst.begin());
}

template <class F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kBadCheckpoint, std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace

nlohmann::json extractor_to_json(const PointerHeadParams& params, const nlohmann::json& config) {
  nlohmann::json j;
  j["format"] = "tuplex-extractor";
  j["format_version"] = kCheckpointVersion;
  j["d"] = params.weights.dim;
  j["hidden"] = params.weights.hidden;
  j["seed"] = params.seed;
  nlohmann::json thresholds = nlohmann::json::object();
  for (EntityType t : kEntityTypes) {
    thresholds[std::string(slot_name(t))] = {{"start", params.start_threshold[type_index(t)]},
                                             {"end", params.end_threshold[type_index(t)]}};
  }
  j["thresholds"] = thresholds;
  nlohmann::json arrays = nlohmann::json::object();
  params.weights.visit([&](const std::string& name, std::span<const double> values) {
    if (!values.empty()) arrays[name] = encode_f32(values);
  });
  j["params"] = arrays;
  j["config"] = config;
  return j;
}

PointerHeadParams extractor_from_json(const nlohmann::json& j) {
  check_header(j, "tuplex-extractor");
  return guarded([&] {
    PointerHeadParams p;
    p.weights = PointerWeights::zeros(j.at("d").get<std::size_t>(), j.at("hidden").get<std::size_t>());
    p.seed = j.at("seed").get<std::uint64_t>();
    for (EntityType t : kEntityTypes) {
      const auto& th = j.at("thresholds").at(std::string(slot_name(t)));
      p.start_threshold[type_index(t)] = th.at("start").get<double>();
      p.end_threshold[type_index(t)] = th.at("end").get<double>();
    }
    const auto& arrays = j.at("params");
    p.weights.visit([&](const std::string& name, std::span<double> values) {
      if (!values.empty()) fill(values, arrays.at(name), name);
    });
    p.validate();
    return p;
  });
}

nlohmann::json allocator_to_json(const AllocatorModel& model, std::uint64_t seed, const nlohmann::json& config) {
  nlohmann::json j;
  j["format"] = "tuplex-allocator";
  j["format_version"] = kCheckpointVersion;
  j["d"] = model.dim();
  j["seed"] = seed;
  j["lambda"] = model.lambda();
  j["flags"] = {{"enable_inter", model.enable_inter()},
                {"enable_intra", model.enable_intra()},
                {"enable_allocation", model.enable_allocation()}};
  nlohmann::json heads = nlohmann::json::object();
  for (std::size_t p = 0; p < kPartnerTypes.size(); ++p) {
    const AllocParams& h = model.heads[p];
    heads[std::string(slot_name(kPartnerTypes[p]))] = {
        {"weight", encode_f32(h.weight)}, {"bias", encode_f32(std::span<const double>(&h.bias, 1))}};
  }
  j["heads"] = heads;
  j["config"] = config;
  return j;
}

AllocatorModel allocator_from_json(const nlohmann::json& j) {
  check_header(j, "tuplex-allocator");
  return guarded([&] {
    AllocatorModel m;
    const auto dim = j.at("d").get<std::size_t>();
    const auto& flags = j.at("flags");
    for (std::size_t p = 0; p < kPartnerTypes.size(); ++p) {
      const std::string name(slot_name(kPartnerTypes[p]));
      const auto& src = j.at("heads").at(name);
      AllocParams& h = m.heads[p];
      h.dim = dim;
      h.weight.assign(6 * dim, 0.0);
      fill(h.weight, src.at("weight"), name + ".weight");
      fill(std::span<double>(&h.bias, 1), src.at("bias"), name + ".bias");
    }
    m.set_lambda(j.at("lambda").get<double>());
    m.set_flags(flags.at("enable_inter").get<bool>(), flags.at("enable_intra").get<bool>(),
                flags.at("enable_allocation").get<bool>());
    m.validate();
    return m;
  });
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedJson, path + ": " + e.what());
  }
}

void write_json_file(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path);
}

}  // namespace tuplex
