// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "vggflow/cli/run.hpp"
#include "vggflow/cli/selfcheck.hpp"
#include "vggflow/numcore/errors.hpp"

using namespace vggflow;
using namespace vggflow::cli;
using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::string error_of(const json& doc) {
  try {
    config_from_json(doc);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("vggflow_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const json& doc) {
  const fs::path path = dir / "config.json";
  std::ofstream(path) << doc.dump(2);
  return path;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json small_experiment(std::uint64_t seed) {
  json doc = json::parse(R"({
    "name": "small",
    "pretrain": {"steps": 60, "batch": 64, "net": {"hidden": [16, 16], "time_embed_dim": 4}},
    "finetune": {"n_rounds": 12, "batch": 8, "residual_net": {"hidden": [16], "time_embed_dim": 4},
                 "value_net": {"hidden": [16], "time_embed_dim": 4}},
    "eval": {"n_samples": 64, "kl_samples": 64, "kl_steps": 10, "bound_samples": 32, "eval_every": 5}
  })");
  doc["seed"] = seed;
  return doc;
}

int run_quiet(RunOptions opts) {
  std::ostringstream log, err;
  return run(opts, log, err);
}

}  // namespace

TEST_CASE("parse_config: seed is required and named") {
  CHECK(error_of(json::object()).find("'seed'") != std::string::npos);
  CHECK(error_of(json{{"seed", -1}}).find("'seed'") != std::string::npos);
  CHECK(error_of(json{{"seed", "7"}}).find("'seed'") != std::string::npos);
}

TEST_CASE("parse_config: unknown keys are rejected by name") {
  CHECK(error_of(json{{"seed", 1}, {"foo", 2}}).find("'foo'") != std::string::npos);
  CHECK(error_of(json{{"seed", 1}, {"finetune", {{"foo", 2}}}}).find("'finetune.foo'") != std::string::npos);
  CHECK(error_of(json{{"seed", 1}, {"finetune", {{"sampler", {{"foo", 2}}}}}}).find("'finetune.sampler.foo'") !=
        std::string::npos);
  CHECK(error_of(json{{"seed", 1}, {"pretrain", {{"net", {{"foo", 2}}}}}}).find("foo") != std::string::npos);
  CHECK(error_of(json{{"seed", 1}, {"reward", {{"family", "ring"}, {"foo", 2}}}}).find("'reward.foo'") !=
        std::string::npos);
}

TEST_CASE("parse_config: type mismatches and bad values name the key") {
  CHECK(error_of(json{{"seed", 1}, {"finetune", {{"batch", 2.5}}}}).find("'finetune.batch'") != std::string::npos);
  CHECK(error_of(json{{"seed", 1}, {"finetune", {{"beta", "high"}}}}).find("'finetune.beta'") != std::string::npos);
  CHECK(error_of(json{{"seed", 1}, {"finetune", {{"method", "ppo"}}}}).find("'finetune.method'") != std::string::npos);
  CHECK(error_of(json{{"seed", 1}, {"finetune", {{"eta", "cubic"}}}}).find("'finetune.eta'") != std::string::npos);
  CHECK(error_of(json{{"seed", 1}, {"eval", {{"w2", 1}}}}).find("'eval.w2'") != std::string::npos);
  CHECK(error_of(json{{"seed", 1}, {"finetune", {{"bins", 0}}}}).find("bins") != std::string::npos);
  CHECK(error_of(json{{"seed", 1}, {"data", {{"family", "spiral"}}}}).find("'data.family'") != std::string::npos);
}

TEST_CASE("parse_config: minimal config resolves the default protocol") {
  const ExperimentConfig cfg = config_from_json(json{{"seed", 3}});
  const json resolved = config_to_json(cfg);
  CHECK(resolved["seed"] == 3);
  CHECK(resolved["finetune"]["method"] == "vgg_flow");
  CHECK(resolved["finetune"]["bins"] == 5);
  CHECK(resolved["finetune"]["alpha"] == 1e4);
  CHECK(resolved["finetune"]["clip_percentile"] == 80.0);
  CHECK(resolved["finetune"]["eta"] == "quadratic");
  CHECK(resolved["finetune"]["consistency_mode"] == "partial");
  CHECK(resolved["finetune"]["sampler"]["n_steps"] == 20);
  CHECK(resolved["finetune"]["sampler"]["integrator"] == "euler");
  CHECK(resolved["finetune"]["draft_k"] == 5);
  CHECK(resolved["data"]["family"] == "gaussian_mixture");
  CHECK(resolved["reward"]["family"] == "ring");
  CHECK(resolved["output_dir"] == "runs/experiment");
}

TEST_CASE("parse_config: resolved config round-trips") {
  json doc = small_experiment(11);
  doc["reward"] = json::parse(R"({"family": "quadratic", "H": [[1, 0.2], [0.2, 2]], "h": [0.5, -1], "relu": true})");
  doc["finetune"]["method"] = "draft";
  doc["finetune"]["sampler"] = {{"n_steps", 10}, {"integrator", "euler"}};
  const json once = config_to_json(config_from_json(doc));
  const json twice = config_to_json(config_from_json(once));
  CHECK(once == twice);
  CHECK(once["reward"]["relu"] == true);
  CHECK(once["finetune"]["method"] == "draft");

  json board = {{"seed", 2}, {"data", {{"family", "checkerboard"}, {"cell_size", 0.5}}}};
  const json b = config_to_json(config_from_json(board));
  CHECK(b["data"]["cell_size"] == 0.5);
  CHECK(config_to_json(config_from_json(b)) == b);
}

TEST_CASE("parse_config: shared knobs reach the baseline config") {
  json doc = small_experiment(5);
  doc["finetune"]["method"] = "pmp_adjoint";
  doc["finetune"]["beta"] = 2.5;
  doc["finetune"]["lr"] = 3e-4;
  const ExperimentConfig cfg = config_from_json(doc);
  CHECK(cfg.finetune.method == Method::PmpAdjoint);
  CHECK(cfg.finetune.baseline.kind == baselines::BaselineKind::PmpAdjoint);
  CHECK(cfg.finetune.baseline.beta == 2.5);
  CHECK(cfg.finetune.baseline.lr == 3e-4);
  CHECK(cfg.finetune.baseline.n_rounds == 12);
  CHECK(cfg.finetune.baseline.residual_net.hidden == std::vector<std::size_t>{16});
  CHECK(cfg.finetune.baseline.seed == cfg.finetune.vgg.seed);
  CHECK_THROWS_AS(parse_config("/nonexistent/config.json"), ValidationError);
}

TEST_CASE("run: finetune needs a pretrain checkpoint") {
  const fs::path dir = scratch("missing");
  const fs::path cfg = write_config(dir, small_experiment(1));
  CHECK(run_quiet({Subcommand::Finetune, cfg, dir / "out", {}, true}) == kExitValidation);
  CHECK(run_quiet({Subcommand::Eval, cfg, dir / "out", {}, true}) == kExitValidation);
  CHECK(run_quiet({Subcommand::Pretrain, {}, dir / "out", {}, true}) == kExitValidation);
}

TEST_CASE("run: numerical failures exit with 2") {
  const fs::path dir = scratch("numerical");
  json doc = small_experiment(1);
  doc["data"] = json::parse(R"({"family": "gaussian", "mean": [1e200, 0], "variance": [1, 1]})");
  CHECK(run_quiet({Subcommand::Pretrain, write_config(dir, doc), dir / "out", {}, true}) == kExitNumerical);
}

TEST_CASE("run: pipeline layout and bitwise-reproducible finetuning") {
  const fs::path dir = scratch("pipeline");
  const fs::path cfg = write_config(dir, small_experiment(21));
  const Layout layout{dir / "out"};
  REQUIRE(run_quiet({Subcommand::Pretrain, cfg, layout.root, {}, true}) == kExitOk);
  REQUIRE(run_quiet({Subcommand::Finetune, cfg, layout.root, {}, true}) == kExitOk);
  const std::string first = slurp(layout.metrics());
  REQUIRE(run_quiet({Subcommand::Finetune, cfg, layout.root, {}, true}) == kExitOk);
  CHECK(slurp(layout.metrics()) == first);
  REQUIRE(run_quiet({Subcommand::Eval, cfg, layout.root, {}, true}) == kExitOk);

  for (const fs::path& p : {layout.resolved_config(), layout.base_checkpoint(), layout.finetuned_checkpoint(),
                            layout.round_checkpoint(5), layout.round_checkpoint(10), layout.metrics(), layout.report(),
                            layout.pareto(), layout.samples()}) {
    CHECK_MESSAGE(fs::exists(p), p.string());
  }
  CHECK(first.rfind(align::metrics_csv_header() + "\n", 0) == 0);
  CHECK(std::count(first.begin(), first.end(), '\n') == 13);

  const json report = json::parse(slurp(layout.report()));
  for (const char* key : {"mean_reward", "diversity", "w2_to_base", "kl_to_base", "w2_bound", "kl_identity"})
    CHECK_MESSAGE(report.contains(key), key);
  const std::string pareto = slurp(layout.pareto());
  CHECK(pareto.find("\n0,") != std::string::npos);
  CHECK(pareto.find("\n10,") != std::string::npos);

  // Re-running from the resolved config reproduces the run.
  const Layout again{dir / "again"};
  fs::create_directories(again.checkpoints());
  fs::copy_file(layout.base_checkpoint(), again.base_checkpoint());
  REQUIRE(run_quiet({Subcommand::Finetune, layout.resolved_config(), again.root, {}, true}) == kExitOk);
  CHECK(slurp(again.metrics()) == first);

  // A seed override changes the run and is echoed.
  REQUIRE(run_quiet({Subcommand::Finetune, cfg, again.root, 99, true}) == kExitOk);
  CHECK(slurp(again.metrics()) != first);
  CHECK(json::parse(slurp(again.resolved_config()))["seed"] == 99);
}

TEST_CASE("run: every finetune method runs through the CLI") {
  const fs::path dir = scratch("methods");
  json doc = small_experiment(4);
  doc["finetune"]["n_rounds"] = 3;
  const fs::path root = dir / "out";
  REQUIRE(run_quiet({Subcommand::Pretrain, write_config(dir, doc), root, {}, true}) == kExitOk);
  for (const char* method : {"vgg_flow", "refl", "draft", "pmp_adjoint", "lean_adjoint"}) {
    doc["finetune"]["method"] = method;
    CHECK_MESSAGE(run_quiet({Subcommand::Finetune, write_config(dir, doc), root, {}, true}) == kExitOk, method);
  }
}

TEST_CASE("oracle: bundled instance passes and writes its checks") {
  const fs::path dir = scratch("oracle");
  CHECK(run_quiet({Subcommand::Oracle, {}, dir, 0, true}) == kExitOk);
  const json checks = json::parse(slurp(Layout{dir}.checks()));
  CHECK(checks["passed"] == true);
  bool found = false;
  for (const auto& c : checks["checks"]) found = found || c["name"] == "bundled_lq_riccati_vs_brute_force";
  CHECK(found);
}

TEST_CASE("selfcheck: every invariant passes") {
  const auto checks = selfcheck_suite(0);
  for (const auto& c : checks) CHECK_MESSAGE(c.passed, c.name << ": " << c.detail);
  CHECK(checks.size() >= 10);
}

TEST_CASE("subcommand names") {
  for (Subcommand s :
       {Subcommand::Pretrain, Subcommand::Finetune, Subcommand::Eval, Subcommand::Oracle, Subcommand::Selfcheck}) {
    CHECK(parse_subcommand(to_string(s)) == s);
  }
  CHECK_THROWS_AS(parse_subcommand("train"), ValidationError);
  CHECK(parse_method("lean_adjoint") == Method::LeanAdjoint);
  CHECK_THROWS_AS(parse_method("ppo"), ValidationError);
}
