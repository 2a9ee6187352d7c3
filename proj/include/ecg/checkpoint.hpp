#pragma once

#include "ecg/model.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace ecg {

// "ECGM" container: magic, u16 version, u32-length-prefixed config echo
// (ModelConfig::to_text), u32 tensor count, then per tensor a u16-prefixed
// name, u8 rank, u32 dims and little-endian f32 values.
inline constexpr std::uint16_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize_checkpoint(const ModelParams& params);
ModelParams deserialize_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

/// Loads and requires every tensor to match the shapes `expected` implies.
ModelParams load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected);

} // namespace ecg
