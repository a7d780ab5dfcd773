// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "vggflow/nets/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/transform_width.hpp>

namespace vggflow::nets {

using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint encoding assumes a little-endian host");

[[noreturn]] void malformed(const std::string& what) {
  throw CheckpointError(CheckpointError::Kind::Malformed, "malformed checkpoint: " + what);
}

void require_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) malformed(where + " is not an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) throw ValidationError("unknown key '" + key + "' in " + where);
  }
}

}  // namespace

json spec_to_json(const MlpSpec& spec) {
  return json{{"input_dim", spec.input_dim},
              {"time_embed_dim", spec.time_embed_dim},
              {"hidden", spec.hidden},
              {"activation", to_string(spec.activation)},
              {"output_dim", spec.output_dim},
              {"final_init", to_string(spec.final_init)}};
}

MlpSpec spec_from_json(const json& j) {
  require_keys(j, {"input_dim", "time_embed_dim", "hidden", "activation", "output_dim", "final_init"}, "mlp spec");
  MlpSpec spec;
  try {
    if (j.contains("input_dim")) spec.input_dim = j.at("input_dim").get<std::size_t>();
    if (j.contains("time_embed_dim")) spec.time_embed_dim = j.at("time_embed_dim").get<std::size_t>();
    if (j.contains("hidden")) spec.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    if (j.contains("activation")) spec.activation = parse_activation(j.at("activation").get<std::string>());
    if (j.contains("output_dim")) spec.output_dim = j.at("output_dim").get<std::size_t>();
    if (j.contains("final_init")) spec.final_init = parse_final_init(j.at("final_init").get<std::string>());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("mlp spec: type mismatch: ") + e.what());
  }
  spec.validate();
  return spec;
}

std::string encode_tensor_data(const Tensor& t) {
  using namespace boost::archive::iterators;
  using Encoder = base64_from_binary<transform_width<const char*, 6, 8>>;
  std::string bytes(t.size() * sizeof(double), '\0');
  if (!bytes.empty()) std::memcpy(bytes.data(), t.data().data(), bytes.size());
  std::string out(Encoder(bytes.data()), Encoder(bytes.data() + bytes.size()));
  out.append((3 - bytes.size() % 3) % 3, '=');
  return out;
}

std::vector<double> decode_tensor_data(const std::string& text) {
  using namespace boost::archive::iterators;
  using Decoder = transform_width<binary_from_base64<std::string::const_iterator>, 8, 6>;
  if (text.size() % 4 != 0) malformed("base64 length is not a multiple of 4");
  const std::size_t pad = static_cast<std::size_t>(std::count(text.end() - std::min<std::size_t>(2, text.size()), text.end(), '='));
  std::string body = text;
  std::replace(body.end() - static_cast<std::ptrdiff_t>(pad), body.end(), '=', 'A');
  std::string bytes;
  try {
    bytes.assign(Decoder(body.cbegin()), Decoder(body.cend()));
  } catch (const std::exception& e) {
    malformed(std::string("bad base64: ") + e.what());
  }
  bytes.resize(bytes.size() - pad);
  if (bytes.size() % sizeof(double) != 0) malformed("buffer is not a whole number of float64 values");
  std::vector<double> values(bytes.size() / sizeof(double));
  if (!values.empty()) std::memcpy(values.data(), bytes.data(), bytes.size());
  return values;
}

json checkpoint_to_json(const Mlp& mlp, const CheckpointMeta& meta) {
  json tensors = json::object();
  for (const auto& [name, t] : mlp.params()) {
    tensors[name] = json{{"shape", t.shape()}, {"data", encode_tensor_data(t)}};
  }
  return json{{"schema_version", kCheckpointSchemaVersion},
              {"spec", spec_to_json(mlp.spec())},
              {"tensors", std::move(tensors)},
              {"meta", json{{"seed", meta.seed}, {"step", meta.step}}}};
}

Mlp checkpoint_from_json(const json& j, CheckpointMeta* meta) {
  if (!j.is_object()) malformed("document is not an object");
  for (const char* key : {"schema_version", "spec", "tensors", "meta"}) {
    if (!j.contains(key)) malformed(std::string("missing key '") + key + "'");
  }
  if (!j.at("schema_version").is_number_integer()) malformed("schema_version is not an integer");
  const int version = j.at("schema_version").get<int>();
  if (version != kCheckpointSchemaVersion) {
    throw CheckpointError(CheckpointError::Kind::Version, "checkpoint schema version " + std::to_string(version) +
                                                              " is not supported (expected " +
                                                              std::to_string(kCheckpointSchemaVersion) + ")");
  }
  const MlpSpec spec = spec_from_json(j.at("spec"));

  ParamSet params;
  const json& tensors = j.at("tensors");
  if (!tensors.is_object()) malformed("tensors is not an object");
  for (const auto& [name, entry] : tensors.items()) {
    if (!entry.is_object() || !entry.contains("shape") || !entry.contains("data")) {
      malformed("tensor '" + name + "' lacks shape or data");
    }
    Shape shape;
    std::string data;
    try {
      shape = entry.at("shape").get<Shape>();
      data = entry.at("data").get<std::string>();
    } catch (const json::exception& e) {
      malformed("tensor '" + name + "': " + e.what());
    }
    std::vector<double> values = decode_tensor_data(data);
    if (values.size() != shape_size(shape)) {
      throw CheckpointError(CheckpointError::Kind::Shape, "tensor '" + name + "' holds " +
                                                              std::to_string(values.size()) + " values for shape " +
                                                              shape_string(shape));
    }
    params.emplace(name, Tensor(std::move(shape), std::move(values)));
  }

  if (meta) {
    try {
      meta->seed = j.at("meta").value("seed", std::uint64_t{0});
      meta->step = j.at("meta").value("step", std::uint64_t{0});
    } catch (const json::exception& e) {
      malformed(std::string("meta: ") + e.what());
    }
  }

  try {
    return Mlp(spec, std::move(params));
  } catch (const CheckpointError&) {
    throw;
  } catch (const ValidationError& e) {
    throw CheckpointError(CheckpointError::Kind::Shape, std::string("checkpoint does not match its spec: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Mlp& mlp, const CheckpointMeta& meta) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(CheckpointError::Kind::Io, "cannot write checkpoint " + path.string());
  out << checkpoint_to_json(mlp, meta).dump(2) << '\n';
  if (!out) throw CheckpointError(CheckpointError::Kind::Io, "failed writing checkpoint " + path.string());
}

Mlp load_checkpoint(const std::filesystem::path& path, CheckpointMeta* meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointError::Kind::Io, "cannot read checkpoint " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  json j;
  try {
    j = json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    malformed(e.what());
  }
  return checkpoint_from_json(j, meta);
}

}  // namespace vggflow::nets
