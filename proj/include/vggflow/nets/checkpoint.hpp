// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"
#include "vggflow/nets/mlp.hpp"
#include "vggflow/numcore/errors.hpp"

namespace vggflow::nets {

inline constexpr int kCheckpointSchemaVersion = 1;

struct CheckpointMeta {
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
};

class CheckpointError : public ValidationError {
 public:
  enum class Kind { Version, Malformed, Shape, Io };
  CheckpointError(Kind kind, const std::string& what) : ValidationError(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

nlohmann::json spec_to_json(const MlpSpec& spec);
/// Rejects unknown keys; missing keys keep MlpSpec defaults.
MlpSpec spec_from_json(const nlohmann::json& j);

std::string encode_tensor_data(const Tensor& t);
std::vector<double> decode_tensor_data(const std::string& text);

nlohmann::json checkpoint_to_json(const Mlp& mlp, const CheckpointMeta& meta);
Mlp checkpoint_from_json(const nlohmann::json& j, CheckpointMeta* meta = nullptr);

void save_checkpoint(const std::filesystem::path& path, const Mlp& mlp, const CheckpointMeta& meta = {});
Mlp load_checkpoint(const std::filesystem::path& path, CheckpointMeta* meta = nullptr);

}  // namespace vggflow::nets
