// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string_view>

#include "vggflow/cli/config.hpp"

namespace vggflow::cli {

enum class Subcommand { Pretrain, Finetune, Eval, Oracle, Selfcheck };

std::string to_string(Subcommand s);
Subcommand parse_subcommand(std::string_view name);

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitNumerical = 2 };

struct RunOptions {
  Subcommand command = Subcommand::Selfcheck;
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
};

/// Artifact paths inside an output directory.
struct Layout {
  std::filesystem::path root;

  std::filesystem::path resolved_config() const { return root / "resolved_config.json"; }
  std::filesystem::path checkpoints() const { return root / "checkpoints"; }
  std::filesystem::path base_checkpoint() const { return checkpoints() / "base.json"; }
  std::filesystem::path finetuned_checkpoint() const { return checkpoints() / "finetuned.json"; }
  std::filesystem::path round_checkpoint(std::size_t round) const;
  std::filesystem::path metrics() const { return root / "metrics.csv"; }
  std::filesystem::path pretrain_losses() const { return root / "pretrain_loss.csv"; }
  std::filesystem::path report() const { return root / "report.json"; }
  std::filesystem::path pareto() const { return root / "pareto.csv"; }
  std::filesystem::path samples() const { return root / "samples.csv"; }
  std::filesystem::path checks() const { return root / "checks.json"; }
};

void run_pretrain(const ExperimentConfig& cfg, const Layout& layout, std::ostream& log);
void run_finetune(const ExperimentConfig& cfg, const Layout& layout, std::ostream& log);
void run_eval(const ExperimentConfig& cfg, const Layout& layout, std::ostream& log);
/// Oracle and selfcheck return false when any check fails.
bool run_oracle(std::uint64_t seed, const Layout& layout, std::ostream& log);
bool run_selfcheck(std::uint64_t seed, const Layout& layout, std::ostream& log);

/// Resolves the config, applies overrides, writes resolved_config.json and
/// dispatches. Maps ValidationError to 1, NumericalError and failed checks
/// to 2.
int run(const RunOptions& opts, std::ostream& log, std::ostream& err);

/// Parses argv with subcommands and flags, then calls run().
int main_entry(int argc, char** argv);

}  // namespace vggflow::cli
