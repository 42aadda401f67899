#include "kt/data/sample.hpp"

#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "kt/rng.hpp"

namespace kt::data {

namespace {

// Groups a store's rows by assignment log, preserving first-appearance
// order of logs and ingest order within each log.
std::unordered_map<std::string, std::vector<std::size_t>> rows_per_log(const LogStore& store,
                                                                       std::vector<std::string>& order) {
  std::unordered_map<std::string, std::vector<std::size_t>> by_log;
  for (std::size_t i = 0; i < store.rows.size(); ++i) {
    auto& v = by_log[store.rows[i].assignment_log_id];
    if (v.empty()) order.push_back(store.rows[i].assignment_log_id);
    v.push_back(i);
  }
  return by_log;
}

}  // namespace

std::vector<Sample> sample_assignment_logs(const LogStore& store, std::size_t n_samples,
                                           std::size_t sample_size, std::uint64_t seed) {
  std::vector<std::string> log_order;
  auto by_log = rows_per_log(store, log_order);

  const std::size_t need = n_samples * sample_size;
  if (by_log.size() < need) {
    throw std::runtime_error("sample_assignment_logs: need " + std::to_string(need) +
                             " distinct assignment logs, year '" + store.year_label + "' has " +
                             std::to_string(by_log.size()));
  }

  // One joint shuffle, then consecutive blocks: disjoint by construction.
  Rng rng = Rng::substream(seed, {0x5a4d504cULL, std::hash<std::string>{}(store.year_label)});
  rng.shuffle(log_order);

  std::vector<Sample> samples;
  samples.reserve(n_samples);
  for (std::size_t k = 0; k < n_samples; ++k) {
    Sample s;
    s.sample_id = int(k);
    s.year_label = store.year_label;
    s.seed = seed;
    for (std::size_t i = 0; i < sample_size; ++i) {
      s.assignment_log_ids.insert(log_order[k * sample_size + i]);
    }
    // Rows in store order, so a sample and its rematerialized manifest are
    // identical row for row.
    materialize_sample(s, store);
    samples.push_back(std::move(s));
  }
  return samples;
}

void write_sample_manifest(const Sample& sample, const std::string& path) {
  nlohmann::json j;
  j["sample_id"] = sample.sample_id;
  j["year_label"] = sample.year_label;
  j["seed"] = sample.seed;
  j["assignment_log_ids"] = std::vector<std::string>(sample.assignment_log_ids.begin(),
                                                     sample.assignment_log_ids.end());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_sample_manifest: cannot open " + path);
  out << j.dump(2) << '\n';
}

Sample read_sample_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_sample_manifest: cannot open " + path);
  nlohmann::json j;
  in >> j;
  Sample s;
  s.sample_id = j.at("sample_id").get<int>();
  s.year_label = j.at("year_label").get<std::string>();
  s.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& id : j.at("assignment_log_ids")) s.assignment_log_ids.insert(id.get<std::string>());
  return s;
}

void materialize_sample(Sample& sample, const LogStore& store) {
  sample.rows.clear();
  std::vector<std::string> log_order;
  auto by_log = rows_per_log(store, log_order);
  for (const auto& log : log_order) {
    if (!sample.assignment_log_ids.count(log)) continue;
    for (std::size_t ri : by_log[log]) sample.rows.push_back(store.rows[ri]);
  }
}

}  // namespace kt::data
