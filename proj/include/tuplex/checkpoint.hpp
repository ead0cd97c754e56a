#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tuplex/allocator.hpp"
#include "tuplex/pointer_net.hpp"

namespace tuplex {

inline constexpr int kCheckpointVersion = 1;

// Base64 of the little-endian f32 encoding of `values`.
std::string encode_f32(std::span<const double> values);
std::vector<double> decode_f32(std::string_view encoded);

// Checkpoints carry an optional free-form "config" object echoing the run
// configuration; it is ignored on load.
nlohmann::json extractor_to_json(const PointerHeadParams& params,
                                 const nlohmann::json& config = nlohmann::json::object());
PointerHeadParams extractor_from_json(const nlohmann::json& j);

nlohmann::json allocator_to_json(const AllocatorModel& model, std::uint64_t seed,
                                 const nlohmann::json& config = nlohmann::json::object());
AllocatorModel allocator_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::string& path);
// Writes j.dump(2) plus a trailing newline.
void write_json_file(const nlohmann::json& j, const std::string& path);

}  // namespace tuplex
