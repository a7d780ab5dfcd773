// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "vggflow/cli/run.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "vggflow/cli/selfcheck.hpp"
#include "vggflow/flow/sampler.hpp"
#include "vggflow/nets/checkpoint.hpp"
#include "vggflow/numcore/errors.hpp"
#include "vggflow/verify/bounds.hpp"
#include "vggflow/verify/metrics.hpp"

namespace vggflow::cli {

namespace fs = std::filesystem;

std::string to_string(Subcommand s) {
  switch (s) {
    case Subcommand::Pretrain: return "pretrain";
    case Subcommand::Finetune: return "finetune";
    case Subcommand::Eval: return "eval";
    case Subcommand::Oracle: return "oracle";
    case Subcommand::Selfcheck: return "selfcheck";
  }
  return "unknown";
}

Subcommand parse_subcommand(std::string_view name) {
  for (Subcommand s :
       {Subcommand::Pretrain, Subcommand::Finetune, Subcommand::Eval, Subcommand::Oracle, Subcommand::Selfcheck}) {
    if (to_string(s) == name) return s;
  }
  throw ValidationError("unknown subcommand '" + std::string(name) + "'");
}

fs::path Layout::round_checkpoint(std::size_t round) const {
  char name[32];
  std::snprintf(name, sizeof name, "round_%06zu.json", round);
  return checkpoints() / name;
}

namespace {

void require_artifact(const fs::path& path, const char* producer) {
  if (!fs::exists(path)) {
    throw ValidationError("missing artifact '" + path.string() + "'; run `" + producer + "` first");
  }
}

flow::FieldPtr load_base(const Layout& layout, std::size_t dim) {
  require_artifact(layout.base_checkpoint(), "pretrain");
  nets::Mlp net = nets::load_checkpoint(layout.base_checkpoint());
  if (net.spec().input_dim != dim) throw ValidationError("base checkpoint dimension does not match the data");
  return std::make_shared<flow::MlpField>(std::move(net));
}

/// Noise shared by every sample export and evaluation of one experiment.
Tensor eval_noise(const ExperimentConfig& cfg) {
  Rng rng(stage_seed(cfg.seed, "eval"));
  return rng.normal_matrix(cfg.eval.n_samples, flow::dim(cfg.data));
}

const flow::SamplerConfig& sampler(const ExperimentConfig& cfg) { return cfg.finetune.vgg.sampler; }

void write_json(const fs::path& path, const nlohmann::ordered_json& doc) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open '" + path.string() + "' for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw ValidationError("failed writing '" + path.string() + "'");
}

void log_checks(const std::vector<CheckResult>& checks, std::ostream& log) {
  for (const auto& c : checks) {
    log << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
  }
}

}  // namespace

void run_pretrain(const ExperimentConfig& cfg, const Layout& layout, std::ostream& log) {
  Rng rng(stage_seed(cfg.seed, "pretrain"));
  const flow::PretrainResult result = flow::pretrain_rectified_flow(cfg.data, cfg.pretrain.net, cfg.pretrain.train, rng);
  fs::create_directories(layout.checkpoints());
  nets::save_checkpoint(layout.base_checkpoint(), result.net, {cfg.seed, cfg.pretrain.train.steps});

  std::ofstream losses(layout.pretrain_losses());
  losses << "step,loss\n";
  char line[64];
  for (std::size_t i = 0; i < result.losses.size(); ++i) {
    std::snprintf(line, sizeof line, "%zu,%.17g\n", i, result.losses[i]);
    losses << line;
  }
  const flow::MlpField base(result.net);
  flow::write_samples_csv(layout.samples(), flow::integrate_endpoint(base, eval_noise(cfg), sampler(cfg)));
  log << "pretrain: " << result.losses.size() << " steps, final loss " << result.losses.back() << '\n';
}

void run_finetune(const ExperimentConfig& cfg, const Layout& layout, std::ostream& log) {
  const flow::FieldPtr base = load_base(layout, flow::dim(cfg.data));
  fs::create_directories(layout.checkpoints());
  const std::size_t every = cfg.eval.eval_every;
  const auto observer = [&](const align::RoundMetrics& m, const flow::FinetunedField& policy) {
    if (every > 0 && (m.round + 1) % every == 0) {
      nets::save_checkpoint(layout.round_checkpoint(m.round + 1), policy.residual(), {cfg.seed, m.round + 1});
    }
  };
  const align::TrainResult result = cfg.finetune.method == Method::VggFlow
                                        ? align::vgg_flow_train(cfg.finetune.vgg, base, cfg.reward, observer)
                                        : baselines::baseline_train(cfg.finetune.baseline, base, cfg.reward, observer);
  for (const auto& w : result.warnings) log << "warning: round " << w.round << ": " << w.message << '\n';
  nets::save_checkpoint(layout.finetuned_checkpoint(), result.policy.residual(), {cfg.seed, result.metrics.size()});
  align::write_metrics_csv(layout.metrics(), result.metrics);
  flow::write_samples_csv(layout.samples(), flow::integrate_endpoint(result.policy, eval_noise(cfg), sampler(cfg)));
  log << "finetune (" << to_string(cfg.finetune.method) << "): " << result.metrics.size() << " rounds, mean reward "
      << result.metrics.front().mean_reward << " -> " << result.metrics.back().mean_reward << '\n';
}

void run_eval(const ExperimentConfig& cfg, const Layout& layout, std::ostream& log) {
  const flow::FieldPtr base = load_base(layout, flow::dim(cfg.data));
  require_artifact(layout.finetuned_checkpoint(), "finetune");
  const flow::FinetunedField finetuned(base, nets::load_checkpoint(layout.finetuned_checkpoint()));

  const Tensor noise = eval_noise(cfg);
  const Tensor y1 = flow::integrate_endpoint(*base, noise, sampler(cfg));
  const Tensor x1 = flow::integrate_endpoint(finetuned, noise, sampler(cfg));
  Rng rng(stage_seed(cfg.seed, "eval.metrics"));

  verify::MetricReport report;
  report.mean_reward = rewards::mean_reward(cfg.reward, x1);
  report.diversity = verify::diversity(x1);
  if (cfg.eval.w2) {
    const verify::W2Result w2 = verify::w2_distance(x1, y1);
    report.w2_to_base = w2.squared;
    report.w2_exact = w2.exact;
  }
  if (cfg.eval.kl) {
    const verify::KlResult kl =
        verify::kl_between_flows(finetuned, *base, {.n_samples = cfg.eval.kl_samples, .n_steps = cfg.eval.kl_steps}, rng);
    report.kl_to_base = kl.kl;
    report.kl_stderr = kl.stderr_kl;
    report.kl_identity_rhs = kl.identity_rhs;
    report.kl_term_a = kl.term_a;
    report.kl_term_b = kl.term_b;
    report.kl_term_c = kl.term_c;
  }
  if (cfg.eval.w2_bound) {
    const verify::W2Bound b = verify::w2_bound_check(finetuned, *base, cfg.eval.bound_samples, sampler(cfg).n_steps, rng);
    report.bound_lhs = b.lhs;
    report.bound_rhs = b.rhs;
  }
  verify::write_report(layout.report(), report);

  // Reward and distance to the base for every periodic checkpoint; round 0 is the base.
  std::map<std::size_t, fs::path> rounds;
  for (const auto& entry : fs::directory_iterator(layout.checkpoints())) {
    std::size_t round = 0;
    const std::string name = entry.path().filename().string();
    if (std::sscanf(name.c_str(), "round_%zu.json", &round) == 1) rounds.emplace(round, entry.path());
  }
  std::ofstream pareto(layout.pareto());
  pareto << "round,mean_reward,diversity,w2_to_base\n";
  char line[160];
  auto row = [&](std::size_t round, const Tensor& samples) {
    std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.17g\n", round, rewards::mean_reward(cfg.reward, samples),
                  verify::diversity(samples), verify::w2_distance(samples, y1).squared);
    pareto << line;
  };
  row(0, y1);
  for (const auto& [round, path] : rounds) {
    const flow::FinetunedField policy(base, nets::load_checkpoint(path));
    row(round, flow::integrate_endpoint(policy, noise, sampler(cfg)));
  }
  log << "eval: mean reward " << report.mean_reward << ", W2^2 to base " << report.w2_to_base << ", "
      << rounds.size() << " periodic checkpoints\n";
}

bool run_oracle(std::uint64_t seed, const Layout& layout, std::ostream& log) {
  const auto checks = oracle_suite(seed);
  fs::create_directories(layout.root);
  write_json(layout.checks(), checks_json(checks));
  log_checks(checks, log);
  return all_passed(checks);
}

bool run_selfcheck(std::uint64_t seed, const Layout& layout, std::ostream& log) {
  const auto checks = selfcheck_suite(seed);
  fs::create_directories(layout.root);
  write_json(layout.checks(), checks_json(checks));
  log_checks(checks, log);
  return all_passed(checks);
}

int run(const RunOptions& opts, std::ostream& log, std::ostream& err) {
  try {
    std::optional<ExperimentConfig> cfg;
    if (opts.config) cfg = parse_config(*opts.config);
    const bool needs_config = opts.command == Subcommand::Pretrain || opts.command == Subcommand::Finetune ||
                              opts.command == Subcommand::Eval;
    if (needs_config && !cfg) throw ValidationError(to_string(opts.command) + " requires --config");

    std::uint64_t seed = cfg ? cfg->seed : 0;
    if (opts.seed) seed = *opts.seed;
    fs::path out = opts.out ? *opts.out : cfg ? cfg->output_dir : fs::path("runs") / to_string(opts.command);
    if (cfg) {
      cfg->seed = seed;
      cfg->finetune.vgg.seed = cfg->finetune.baseline.seed = stage_seed(seed, "finetune");
      cfg->output_dir = out;
    }
    const Layout layout{out};
    fs::create_directories(layout.root);
    if (cfg) write_json(layout.resolved_config(), config_to_json(*cfg));
    // Every stage runs on the calling thread, so results are reproducible
    // with or without --deterministic.

    switch (opts.command) {
      case Subcommand::Pretrain: run_pretrain(*cfg, layout, log); break;
      case Subcommand::Finetune: run_finetune(*cfg, layout, log); break;
      case Subcommand::Eval: run_eval(*cfg, layout, log); break;
      case Subcommand::Oracle:
        if (!run_oracle(seed, layout, log)) return kExitNumerical;
        break;
      case Subcommand::Selfcheck:
        if (!run_selfcheck(seed, layout, log)) return kExitNumerical;
        break;
    }
    return kExitOk;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}

int main_entry(int argc, char** argv) {
  CLI::App app{"Value-gradient flow finetuning experiments"};
  app.require_subcommand(1, 1);
  RunOptions opts;
  std::string config, out;
  std::uint64_t seed = 0;

  for (Subcommand s :
       {Subcommand::Pretrain, Subcommand::Finetune, Subcommand::Eval, Subcommand::Oracle, Subcommand::Selfcheck}) {
    static const std::map<Subcommand, const char*> help{
        {Subcommand::Pretrain, "Train the base rectified flow on the toy data"},
        {Subcommand::Finetune, "Finetune the base toward the reward"},
        {Subcommand::Eval, "Compare the finetuned model with the base"},
        {Subcommand::Oracle, "Cross-check the linear-quadratic oracles"},
        {Subcommand::Selfcheck, "Run the invariant suite"}};
    CLI::App* sub = app.add_subcommand(to_string(s), help.at(s));
    sub->add_option("--config", config, "Experiment config (JSON)");
    sub->add_option("--out", out, "Output directory");
    sub->add_option("--seed", seed, "Seed overriding the config");
    sub->add_flag("--deterministic", opts.deterministic, "Single-threaded, bitwise reproducible execution");
    sub->callback([&opts, s] { opts.command = s; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }
  for (CLI::App* sub : app.get_subcommands()) {
    if (sub->count("--config")) opts.config = config;
    if (sub->count("--out")) opts.out = out;
    if (sub->count("--seed")) opts.seed = seed;
  }
  return run(opts, std::cout, std::cerr);
}

}  // namespace vggflow::cli
