#pragma once

// Checkpoint file layout:
//
//   KANAE1 <n>\n          header line; n = byte length of the JSON block
//   <JSON, n bytes>       {"format","dtype","byte_order","metadata","tensors":[...]}
//   <payload>             raw little-endian float64 tensors in declared order
//
// Each tensor entry carries name, kind (parameter|buffer), shape, offset and
// nbytes; offsets are relative to the first payload byte.

#include "kanae/nn/layer.hpp"

#include <filesystem>
#include <map>
#include <json.hpp>

namespace kanae::nn {

inline constexpr const char* kCheckpointMagic = "KANAE1";

void write_checkpoint(const std::filesystem::path& path, const nlohmann::json& metadata,
                      const std::vector<ParamRef>& parameters, const std::vector<BufferRef>& buffers);

/// Parsed JSON block only (no payload read).
nlohmann::json read_checkpoint_header(const std::filesystem::path& path);

struct CheckpointContents {
  nlohmann::json header;
  std::map<std::string, Tensor> tensors;
};

CheckpointContents read_checkpoint(const std::filesystem::path& path);

/// Copies tensors from `contents` into matching parameters/buffers. Every
/// parameter and buffer must be present with the same shape.
void restore_checkpoint(const CheckpointContents& contents, const std::vector<ParamRef>& parameters,
                        const std::vector<BufferRef>& buffers);

} // namespace kanae::nn
