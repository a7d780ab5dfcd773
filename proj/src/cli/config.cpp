// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "vggflow/cli/config.hpp"

#include <fstream>
#include <set>

#include "vggflow/nets/checkpoint.hpp"
#include "vggflow/numcore/errors.hpp"

namespace vggflow::cli {

using json = nlohmann::ordered_json;

std::string to_string(Method m) {
  switch (m) {
    case Method::VggFlow: return "vgg_flow";
    case Method::Refl: return "refl";
    case Method::Draft: return "draft";
    case Method::PmpAdjoint: return "pmp_adjoint";
    case Method::LeanAdjoint: return "lean_adjoint";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::VggFlow, Method::Refl, Method::Draft, Method::PmpAdjoint, Method::LeanAdjoint}) {
    if (to_string(m) == name) return m;
  }
  throw ValidationError("unknown finetune method '" + std::string(name) + "'");
}

std::uint64_t stage_seed(std::uint64_t seed, std::string_view stage) { return Rng(seed).split(stage).next_u64(); }

namespace {

[[noreturn]] void fail(const std::string& key, const std::string& msg) {
  throw ValidationError("config key '" + key + "': " + msg);
}

/// Reads the keys of one JSON object and rejects the ones nobody asked for.
class Section {
 public:
  Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string key(std::string_view name) const { return path_.empty() ? std::string(name) : path_ + "." + std::string(name); }

  const json* find(std::string_view name) {
    seen_.emplace(name);
    const auto it = obj_.find(std::string(name));
    return it == obj_.end() ? nullptr : &*it;
  }

  const json& require(std::string_view name) {
    const json* v = find(name);
    if (!v) fail(key(name), "missing required key");
    return *v;
  }

  void read(std::string_view name, std::size_t& out) {
    if (const json* v = find(name)) out = as_size(*v, key(name));
  }
  void read(std::string_view name, double& out) {
    if (const json* v = find(name)) out = as_double(*v, key(name));
  }
  void read(std::string_view name, bool& out) {
    if (const json* v = find(name)) {
      if (!v->is_boolean()) fail(key(name), "expected a boolean");
      out = v->get<bool>();
    }
  }
  void read(std::string_view name, std::string& out) {
    if (const json* v = find(name)) out = as_string(*v, key(name));
  }

  /// Rejects every key that was not read.
  void finish() const {
    for (const auto& [k, v] : obj_.items()) {
      if (!seen_.contains(k)) fail(key(k), "unknown key");
    }
  }

  static std::uint64_t as_u64(const json& v, const std::string& key) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    fail(key, "expected a non-negative integer");
  }
  static std::size_t as_size(const json& v, const std::string& key) { return static_cast<std::size_t>(as_u64(v, key)); }
  static double as_double(const json& v, const std::string& key) {
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
  }
  static std::string as_string(const json& v, const std::string& key) {
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string, std::less<>> seen_;
};

std::vector<double> as_vector(const json& v, const std::string& key) {
  if (!v.is_array()) fail(key, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) out.push_back(Section::as_double(e, key));
  return out;
}

Tensor as_matrix(const json& v, const std::string& key) {
  if (!v.is_array() || v.empty()) fail(key, "expected a non-empty array of rows");
  std::vector<double> data;
  std::size_t cols = 0;
  for (const auto& row : v) {
    const auto values = as_vector(row, key);
    if (cols == 0) cols = values.size();
    if (values.size() != cols || cols == 0) fail(key, "rows must be non-empty and equally long");
    data.insert(data.end(), values.begin(), values.end());
  }
  return Tensor(Shape{v.size(), cols}, std::move(data));
}

json matrix_json(const Tensor& m) {
  json out = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto row = m.row_span(i);
    out.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return out;
}

template <class F>
auto with_key(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const ValidationError& e) {
    fail(key, e.what());
  }
}

nets::MlpSpec read_net(Section& s, std::string_view name, nets::MlpSpec fallback) {
  const json* v = s.find(name);
  if (!v) return fallback;
  return with_key(s.key(name), [&] { return nets::spec_from_json(nlohmann::json::parse(v->dump())); });
}

json net_json(const nets::MlpSpec& spec) { return json::parse(nets::spec_to_json(spec).dump()); }

flow::ToyDistribution read_data(const json& v) {
  Section s(v, "data");
  std::string family;
  s.read("family", family);
  if (family.empty()) fail("data.family", "missing required key");
  flow::ToyDistribution out;
  if (family == "gaussian_mixture") {
    flow::GaussianMixture g = flow::default_mixture();
    if (const json* m = s.find("means")) g.means = as_matrix(*m, "data.means");
    s.read("variance", g.variance);
    if (const json* w = s.find("weights")) g.weights = as_vector(*w, "data.weights");
    else g.weights.assign(g.means.rows(), 1.0 / static_cast<double>(g.means.rows()));
    out = g;
  } else if (family == "checkerboard") {
    flow::Checkerboard c;
    s.read("cell_size", c.cell_size);
    s.read("extent", c.extent);
    out = c;
  } else if (family == "gaussian") {
    flow::Gaussian g{as_vector(s.require("mean"), "data.mean"), as_vector(s.require("variance"), "data.variance")};
    out = g;
  } else {
    fail("data.family", "unknown family '" + family + "'");
  }
  s.finish();
  with_key("data", [&] {
    flow::validate(out);
    return 0;
  });
  return out;
}

json data_json(const flow::ToyDistribution& d) {
  json out;
  out["family"] = flow::family_name(d);
  if (const auto* g = std::get_if<flow::GaussianMixture>(&d)) {
    out["means"] = matrix_json(g->means);
    out["variance"] = g->variance;
    out["weights"] = g->weights;
  } else if (const auto* c = std::get_if<flow::Checkerboard>(&d)) {
    out["cell_size"] = c->cell_size;
    out["extent"] = c->extent;
  } else if (const auto* n = std::get_if<flow::Gaussian>(&d)) {
    out["mean"] = n->mean;
    out["variance"] = n->variance;
  }
  return out;
}

rewards::RewardSpec read_reward(const json& v) {
  Section s(v, "reward");
  std::string family;
  s.read("family", family);
  if (family.empty()) fail("reward.family", "missing required key");
  bool relu = false;
  s.read("relu", relu);
  rewards::RewardSpec out;
  if (family == "ring") {
    rewards::Ring r;
    s.read("radius", r.radius);
    s.read("width", r.width);
    s.read("offset", r.offset);
    out = r;
  } else if (family == "quadratic") {
    const Tensor H = as_matrix(s.require("H"), "reward.H");
    const auto h = as_vector(s.require("h"), "reward.h");
    out = rewards::Quadratic{H, Tensor::row(h)};
  } else if (family == "gauss_mix_log_density") {
    rewards::GaussMixLogDensity g{as_matrix(s.require("means"), "reward.means"), {}, 1.0};
    if (const json* w = s.find("weights")) g.weights = as_vector(*w, "reward.weights");
    else g.weights.assign(g.means.rows(), 1.0 / static_cast<double>(g.means.rows()));
    s.read("variance", g.variance);
    out = g;
  } else {
    fail("reward.family", "unknown family '" + family + "'");
  }
  s.finish();
  if (relu) out = rewards::relu_wrap(out);
  return out;
}

json reward_json(const rewards::RewardSpec& spec) {
  json out;
  const rewards::RewardSpec* inner = &spec;
  bool relu = false;
  if (const auto* w = std::get_if<rewards::ReluWrapped>(&spec)) {
    inner = w->inner.get();
    relu = true;
  }
  out["family"] = rewards::family_name(*inner);
  if (const auto* r = std::get_if<rewards::Ring>(inner)) {
    out["radius"] = r->radius;
    out["width"] = r->width;
    out["offset"] = r->offset;
  } else if (const auto* q = std::get_if<rewards::Quadratic>(inner)) {
    out["H"] = matrix_json(q->H);
    out["h"] = std::vector<double>(q->h.data().begin(), q->h.data().end());
  } else if (const auto* g = std::get_if<rewards::GaussMixLogDensity>(inner)) {
    out["means"] = matrix_json(g->means);
    out["weights"] = g->weights;
    out["variance"] = g->variance;
  }
  out["relu"] = relu;
  return out;
}

void read_sampler(Section& parent, flow::SamplerConfig& sampler) {
  const json* v = parent.find("sampler");
  if (!v) return;
  Section s(*v, parent.key("sampler"));
  s.read("n_steps", sampler.n_steps);
  std::string integrator = flow::to_string(sampler.integrator);
  s.read("integrator", integrator);
  sampler.integrator = with_key(s.key("integrator"), [&] { return flow::parse_integrator(integrator); });
  s.finish();
}

void read_pretrain(const json& v, PretrainSection& out) {
  Section s(v, "pretrain");
  out.net = read_net(s, "net", out.net);
  s.read("steps", out.train.steps);
  s.read("batch", out.train.batch);
  s.read("learning_rate", out.train.learning_rate);
  s.read("weight_decay", out.train.weight_decay);
  s.read("cosine_decay", out.train.cosine_decay);
  s.finish();
}

void read_finetune(const json& v, FinetuneSection& out) {
  Section s(v, "finetune");
  align::FinetuneConfig& f = out.vgg;
  baselines::BaselineConfig& b = out.baseline;

  std::string method = to_string(out.method);
  s.read("method", method);
  out.method = with_key("finetune.method", [&] { return parse_method(method); });

  // Knobs shared by every method.
  s.read("n_rounds", f.n_rounds);
  s.read("batch", f.batch);
  s.read("bins", f.bins);
  s.read("jitter", f.jitter);
  s.read("beta", f.beta);
  s.read("weight_decay", f.weight_decay);
  s.read("grad_clip", f.grad_clip);
  s.read("divergence_margin", f.divergence_margin);
  s.read("divergence_patience", f.divergence_patience);
  read_sampler(s, f.sampler);
  f.residual_net = read_net(s, "residual_net", f.residual_net);

  // Value-gradient method.
  s.read("alpha", f.alpha);
  s.read("fd_eps", f.fd_eps);
  s.read("clip_percentile", f.clip_percentile);
  s.read("lr_theta", f.lr_theta);
  s.read("lr_phi", f.lr_phi);
  std::string eta = align::to_string(f.eta), mode = align::to_string(f.mode);
  s.read("eta", eta);
  s.read("consistency_mode", mode);
  f.eta = with_key("finetune.eta", [&] { return align::parse_eta(eta); });
  f.mode = with_key("finetune.consistency_mode", [&] { return align::parse_consistency_mode(mode); });
  f.value_net = read_net(s, "value_net", f.value_net);

  // Baselines.
  s.read("lr", b.lr);
  s.read("draft_k", b.draft_k);
  s.read("refl_min_step", b.refl_min_step);
  s.read("refl_max_step", b.refl_max_step);
  s.read("relu_wrap", b.relu_wrap);
  s.read("adjoint_fd_step", b.adjoint_fd_step);
  s.finish();

  b.n_rounds = f.n_rounds;
  b.batch = f.batch;
  b.bins = f.bins;
  b.beta = f.beta;
  b.weight_decay = f.weight_decay;
  b.grad_clip = f.grad_clip;
  b.divergence_margin = f.divergence_margin;
  b.divergence_patience = f.divergence_patience;
  b.sampler = f.sampler;
  b.residual_net = f.residual_net;
  switch (out.method) {
    case Method::Refl: b.kind = baselines::BaselineKind::Refl; break;
    case Method::Draft: b.kind = baselines::BaselineKind::Draft; break;
    case Method::PmpAdjoint: b.kind = baselines::BaselineKind::PmpAdjoint; break;
    case Method::LeanAdjoint: b.kind = baselines::BaselineKind::LeanAdjoint; break;
    case Method::VggFlow: break;
  }
}

json finetune_json(const FinetuneSection& s) {
  const align::FinetuneConfig& f = s.vgg;
  const baselines::BaselineConfig& b = s.baseline;
  json out;
  out["method"] = to_string(s.method);
  out["n_rounds"] = f.n_rounds;
  out["batch"] = f.batch;
  out["bins"] = f.bins;
  out["jitter"] = f.jitter;
  out["beta"] = f.beta;
  out["weight_decay"] = f.weight_decay;
  out["grad_clip"] = f.grad_clip;
  out["divergence_margin"] = f.divergence_margin;
  out["divergence_patience"] = f.divergence_patience;
  out["sampler"] = {{"n_steps", f.sampler.n_steps}, {"integrator", flow::to_string(f.sampler.integrator)}};
  out["residual_net"] = net_json(f.residual_net);
  out["alpha"] = f.alpha;
  out["fd_eps"] = f.fd_eps;
  out["clip_percentile"] = f.clip_percentile;
  out["lr_theta"] = f.lr_theta;
  out["lr_phi"] = f.lr_phi;
  out["eta"] = align::to_string(f.eta);
  out["consistency_mode"] = align::to_string(f.mode);
  out["value_net"] = net_json(f.value_net);
  out["lr"] = b.lr;
  out["draft_k"] = b.draft_k;
  out["refl_min_step"] = b.refl_min_step;
  out["refl_max_step"] = b.refl_max_step;
  out["relu_wrap"] = b.relu_wrap;
  out["adjoint_fd_step"] = b.adjoint_fd_step;
  return out;
}

void read_eval(const json& v, EvalSection& e) {
  Section s(v, "eval");
  s.read("n_samples", e.n_samples);
  s.read("w2", e.w2);
  s.read("kl", e.kl);
  s.read("kl_samples", e.kl_samples);
  s.read("kl_steps", e.kl_steps);
  s.read("w2_bound", e.w2_bound);
  s.read("bound_samples", e.bound_samples);
  s.read("eval_every", e.eval_every);
  s.finish();
}

json eval_json(const EvalSection& e) {
  return {{"n_samples", e.n_samples},   {"w2", e.w2},           {"kl", e.kl},
          {"kl_samples", e.kl_samples}, {"kl_steps", e.kl_steps}, {"w2_bound", e.w2_bound},
          {"bound_samples", e.bound_samples}, {"eval_every", e.eval_every}};
}

}  // namespace

void ExperimentConfig::validate() const {
  flow::validate(data);
  const std::size_t d = flow::dim(data);
  rewards::validate(reward, d);
  if (pretrain.net.input_dim != d || pretrain.net.output_dim != d) {
    throw ValidationError("pretrain.net: input and output width must equal the data dimension " + std::to_string(d));
  }
  pretrain.net.validate();
  if (pretrain.train.steps < 1 || pretrain.train.batch < 1) throw ValidationError("pretrain: steps and batch must be >= 1");
  if (!(pretrain.train.learning_rate > 0.0)) throw ValidationError("pretrain: learning_rate must be > 0");
  if (finetune.method == Method::VggFlow) {
    finetune.vgg.validate();
  } else {
    finetune.baseline.validate();
  }
  if (eval.n_samples < 2 || eval.kl_samples < 2 || eval.bound_samples < 1 || eval.kl_steps < 1) {
    throw ValidationError("eval: sample counts must be >= 2 and kl_steps >= 1");
  }
}

ExperimentConfig config_from_json(const json& doc) {
  Section root(doc, "");
  ExperimentConfig cfg;
  cfg.seed = Section::as_u64(root.require("seed"), "seed");
  root.read("name", cfg.name);
  if (cfg.name.empty()) fail("name", "must not be empty");
  cfg.output_dir = "runs/" + cfg.name;
  std::string out_dir;
  root.read("output_dir", out_dir);
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  if (const json* v = root.find("data")) cfg.data = read_data(*v);
  if (const json* v = root.find("reward")) cfg.reward = read_reward(*v);
  const std::size_t d = flow::dim(cfg.data);
  cfg.pretrain.net.input_dim = cfg.pretrain.net.output_dim = d;
  if (const json* v = root.find("pretrain")) read_pretrain(*v, cfg.pretrain);
  if (const json* v = root.find("finetune")) read_finetune(*v, cfg.finetune);
  if (const json* v = root.find("eval")) read_eval(*v, cfg.eval);
  root.finish();
  cfg.finetune.vgg.seed = stage_seed(cfg.seed, "finetune");
  cfg.finetune.baseline.seed = cfg.finetune.vgg.seed;
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return config_from_json(doc);
}

json config_to_json(const ExperimentConfig& cfg) {
  json out;
  out["name"] = cfg.name;
  out["seed"] = cfg.seed;
  out["output_dir"] = cfg.output_dir.string();
  out["data"] = data_json(cfg.data);
  out["reward"] = reward_json(cfg.reward);
  out["pretrain"] = {{"net", net_json(cfg.pretrain.net)},
                     {"steps", cfg.pretrain.train.steps},
                     {"batch", cfg.pretrain.train.batch},
                     {"learning_rate", cfg.pretrain.train.learning_rate},
                     {"weight_decay", cfg.pretrain.train.weight_decay},
                     {"cosine_decay", cfg.pretrain.train.cosine_decay}};
  out["finetune"] = finetune_json(cfg.finetune);
  out["eval"] = eval_json(cfg.eval);
  return out;
}

}  // namespace vggflow::cli
