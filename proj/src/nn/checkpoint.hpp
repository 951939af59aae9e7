// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "nn/adam.hpp"
#include "nn/tensor.hpp"

namespace avseci::nn {

struct NamedTensor {
  std::string name;
  Shape shape;
  Buffer values;
};

// On disk: <dir>/manifest.json plus one little-endian float32 blob per
// tensor (<dir>/<name>.f32). Values are rounded to float32 on save.
struct Checkpoint {
  std::string kind;
  std::uint64_t seed = 0;
  double corpus_peak = 0.0;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json history = nlohmann::json::object();
  std::vector<NamedTensor> tensors;

  std::string config_hash() const;

  void save(const std::filesystem::path& dir) const;
  static Checkpoint load(const std::filesystem::path& dir);

  const NamedTensor& find(const std::string& name) const;
  bool contains(const std::string& name) const;

  void add_parameters(const std::vector<Parameter*>& params);
  // Adam moments stored as "adam.m/<name>", "adam.v/<name>".
  void add_optimizer(const Adam& opt);
  // Copies stored values into matching parameters; shapes must agree.
  void restore(const std::vector<Parameter*>& params) const;
};

// SHA-256 over the manifest and every blob in manifest order.
std::string checkpoint_hash(const std::filesystem::path& dir);

}  // namespace avseci::nn
