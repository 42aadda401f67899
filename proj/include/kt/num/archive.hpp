#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "kt/num/tensor.hpp"

namespace kt::num {

// Single-file model archive: a JSON manifest (names, shapes, arbitrary
// metadata) followed by raw little-endian value blocks in manifest order.
struct Archive {
  nlohmann::json meta;
  std::vector<std::pair<std::string, Tensor>> tensors;

  void add(const std::string& name, const Tensor& t) { tensors.emplace_back(name, t); }
  const Tensor& get(const std::string& name) const;

  void write(const std::string& path) const;
  static Archive read(const std::string& path);
};

inline constexpr char kArchiveMagic[] = "KTAR1\n";

}  // namespace kt::num
