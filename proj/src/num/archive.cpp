#include "kt/num/archive.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "archive blocks are written as little-endian host doubles");

namespace kt::num {

const Tensor& Archive::get(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return t;
  throw std::out_of_range("Archive: no tensor named '" + name + "'");
}

void Archive::write(const std::string& path) const {
  nlohmann::json manifest;
  manifest["meta"] = meta;
  manifest["value_bits"] = int(sizeof(real) * 8);
  for (const auto& [name, t] : tensors) {
    manifest["tensors"].push_back({{"name", name}, {"shape", t.shape()}});
  }
  const std::string mj = manifest.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("Archive::write: cannot open " + path);
  out.write(kArchiveMagic, sizeof(kArchiveMagic) - 1);
  const std::uint64_t len = mj.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(mj.data(), std::streamsize(mj.size()));
  for (const auto& [name, t] : tensors) {
    out.write(reinterpret_cast<const char*>(t.data().data()),
              std::streamsize(t.size() * sizeof(real)));
  }
  if (!out) throw std::runtime_error("Archive::write: short write to " + path);
}

Archive Archive::read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("Archive::read: cannot open " + path);
  char magic[sizeof(kArchiveMagic) - 1];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kArchiveMagic, sizeof(magic)) != 0)
    throw std::runtime_error("Archive::read: bad magic in " + path);
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string mj(len, '\0');
  in.read(mj.data(), std::streamsize(len));
  if (!in) throw std::runtime_error("Archive::read: truncated manifest in " + path);
  nlohmann::json manifest = nlohmann::json::parse(mj);
  if (manifest.value("value_bits", 64) != int(sizeof(real) * 8))
    throw std::runtime_error("Archive::read: value width mismatch in " + path);

  Archive a;
  a.meta = manifest.value("meta", nlohmann::json::object());
  for (const auto& tj : manifest.value("tensors", nlohmann::json::array())) {
    const std::string name = tj.at("name").get<std::string>();
    const auto shape = tj.at("shape").get<std::vector<std::size_t>>();
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data().data()), std::streamsize(t.size() * sizeof(real)));
    if (!in) throw std::runtime_error("Archive::read: truncated block '" + name + "'");
    a.tensors.emplace_back(name, std::move(t));
  }
  return a;
}

}  // namespace kt::num
