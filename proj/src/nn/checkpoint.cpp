// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "nn/checkpoint.hpp"

#include <algorithm>

#include "common/error.hpp"
#include "common/files.hpp"

namespace avseci::nn {

namespace fs = std::filesystem;

namespace {

std::string blob_name(const std::string& tensor) {
  std::string s = tensor;
  std::replace(s.begin(), s.end(), '/', '_');
  return s + ".f32";
}

}  // namespace

std::string Checkpoint::config_hash() const { return sha256_hex(config.dump()); }

void Checkpoint::save(const fs::path& dir) const {
  fs::create_directories(dir);
  nlohmann::json manifest;
  manifest["format"] = "avseci-checkpoint v1";
  manifest["kind"] = kind;
  manifest["seed"] = seed;
  manifest["corpus_peak"] = corpus_peak;
  manifest["config"] = config;
  manifest["config_hash"] = config_hash();
  manifest["history"] = history;
  nlohmann::json list = nlohmann::json::array();
  for (const auto& t : tensors) {
    if (t.values.size() != numel(t.shape)) {
      throw ShapeError("checkpoint: tensor " + t.name + " does not match its shape");
    }
    std::vector<std::uint8_t> bytes;
    bytes.reserve(4 * t.values.size());
    for (double v : t.values) append_f32_le(bytes, static_cast<float>(v));
    write_file_atomic(dir / blob_name(t.name), bytes);
    list.push_back({{"name", t.name}, {"shape", t.shape}, {"file", blob_name(t.name)}});
  }
  manifest["tensors"] = list;
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

Checkpoint Checkpoint::load(const fs::path& dir) {
  const fs::path mpath = dir / "manifest.json";
  if (!fs::exists(mpath)) throw DataError("checkpoint: missing " + mpath.string());
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(read_file_text(mpath));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(mpath.string() + ": " + e.what());
  }
  Checkpoint ck;
  try {
    if (m.at("format") != "avseci-checkpoint v1") throw FormatError(mpath.string() + ": unknown format");
    ck.kind = m.at("kind").get<std::string>();
    ck.seed = m.at("seed").get<std::uint64_t>();
    ck.corpus_peak = m.at("corpus_peak").get<double>();
    ck.config = m.at("config");
    ck.history = m.value("history", nlohmann::json::object());
    for (const auto& entry : m.at("tensors")) {
      NamedTensor t;
      t.name = entry.at("name").get<std::string>();
      t.shape = entry.at("shape").get<Shape>();
      const auto bytes = read_file_bytes(dir / entry.at("file").get<std::string>());
      if (bytes.size() != 4 * numel(t.shape)) {
        throw FormatError("checkpoint: blob size mismatch for " + t.name);
      }
      t.values.resize(numel(t.shape));
      for (std::size_t i = 0; i < t.values.size(); ++i) t.values[i] = read_f32_le(bytes.data() + 4 * i);
      ck.tensors.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(mpath.string() + ": " + e.what());
  }
  return ck;
}

const NamedTensor& Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t;
  }
  throw DataError("checkpoint: no tensor named " + name);
}

bool Checkpoint::contains(const std::string& name) const {
  return std::any_of(tensors.begin(), tensors.end(), [&](const NamedTensor& t) { return t.name == name; });
}

void Checkpoint::add_parameters(const std::vector<Parameter*>& params) {
  for (const Parameter* p : params) tensors.push_back({p->name, p->value.shape, p->value.values});
}

void Checkpoint::add_optimizer(const Adam& opt) {
  const auto& ps = opt.params();
  for (std::size_t k = 0; k < ps.size(); ++k) {
    if (ps[k]->frozen) continue;
    tensors.push_back({"adam.m/" + ps[k]->name, ps[k]->value.shape, opt.first_moments()[k]});
    tensors.push_back({"adam.v/" + ps[k]->name, ps[k]->value.shape, opt.second_moments()[k]});
  }
  history["adam_steps"] = opt.steps();
}

void Checkpoint::restore(const std::vector<Parameter*>& params) const {
  for (Parameter* p : params) {
    const NamedTensor& t = find(p->name);
    if (t.shape != p->value.shape) {
      throw ShapeError("checkpoint: " + p->name + " has shape " + shape_str(t.shape) + ", model expects " +
                       shape_str(p->value.shape));
    }
    p->value.values = t.values;
    p->zero_grad();
  }
}

std::string checkpoint_hash(const fs::path& dir) {
  const std::string manifest_text = read_file_text(dir / "manifest.json");
  std::string acc = sha256_hex(manifest_text);
  const auto m = nlohmann::json::parse(manifest_text);
  for (const auto& entry : m.at("tensors")) {
    acc += sha256_file(dir / entry.at("file").get<std::string>());
  }
  return sha256_hex(acc);
}

}  // namespace avseci::nn
