#pragma once

#include <optional>
#include <string>

#include "gntm/training.hpp"

namespace gntm {

inline constexpr std::uint16_t kCheckpointVersion = 1;

/// Layout after the container header: config block, metadata, tensor table
/// (name, rank, dims, float64 payload, CRC32 of the payload), NormStats
/// block, then a CRC32 of the whole file.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);

/// Throws FormatError on bad magic, version, truncation or checksum failure.
/// With `expected` set, a differing config throws DimensionError naming the
/// first tensor whose shape disagrees.
Checkpoint load_checkpoint(const std::string& path, const std::optional<ModelConfig>& expected = std::nullopt);

}  // namespace gntm
