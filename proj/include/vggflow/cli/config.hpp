// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"
#include "vggflow/align/trainer.hpp"
#include "vggflow/baselines/trainer.hpp"
#include "vggflow/flow/pretrain.hpp"
#include "vggflow/flow/toy.hpp"

namespace vggflow::cli {

enum class Method { VggFlow, Refl, Draft, PmpAdjoint, LeanAdjoint };

std::string to_string(Method m);
Method parse_method(std::string_view name);

struct PretrainSection {
  nets::MlpSpec net;
  flow::PretrainConfig train;
};

/// Union of the finetune knobs; `method` selects which trainer reads them.
struct FinetuneSection {
  Method method = Method::VggFlow;
  align::FinetuneConfig vgg;
  baselines::BaselineConfig baseline;
};

struct EvalSection {
  std::size_t n_samples = 256;
  bool w2 = true;
  bool kl = true;
  std::size_t kl_samples = 1024;
  std::size_t kl_steps = 40;
  bool w2_bound = true;
  std::size_t bound_samples = 512;
  /// Finetune saves a checkpoint every this many rounds; 0 disables.
  std::size_t eval_every = 50;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 0;
  flow::ToyDistribution data = flow::default_mixture();
  rewards::RewardSpec reward = rewards::Ring{3.0, 1.0, 1.0};
  PretrainSection pretrain;
  FinetuneSection finetune;
  EvalSection eval;
  std::filesystem::path output_dir = "runs/experiment";

  /// Cross-section checks; section validators run too.
  void validate() const;
};

/// Parses a config document. `seed` is required; every other key falls back
/// to its default. Unknown keys, type mismatches and invalid values throw
/// ValidationError naming the offending key.
ExperimentConfig config_from_json(const nlohmann::ordered_json& doc);
ExperimentConfig parse_config(const std::filesystem::path& path);

/// Every field with its resolved value; config_from_json(config_to_json(c))
/// reproduces c.
nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg);

/// Seeds handed to the pretrain and finetune stages, derived from `seed`.
std::uint64_t stage_seed(std::uint64_t seed, std::string_view stage);

}  // namespace vggflow::cli
