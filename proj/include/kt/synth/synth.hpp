#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "kt/data/types.hpp"

namespace kt::synth {

// Ground-truth generator parameters for one KC: prior, transfer (learn),
// guess, slip, forget.
struct KcTruth {
  double L0 = 0.3;
  double T = 0.2;
  double G = 0.15;
  double S = 0.1;
  double F = 0.0;
};

// Additive per-year shift of each parameter, clamped to [lo, hi].
struct DriftSpec {
  double dL0 = 0.0;
  double dT = 0.0;
  double dG = 0.0;
  double dS = 0.0;
  double dF = 0.0;
  double lo = 0.01;
  double hi = 0.99;
};

struct SynthConfig {
  std::size_t n_students = 100;
  std::size_t n_kcs = 2;
  std::size_t steps_per_student_per_kc = 10;
  std::map<std::string, KcTruth> truths;  // keyed by kc id
  DriftSpec drift;
  std::uint64_t seed = 1;
  int base_year = 2019;  // year_index 0 spans Sep base_year .. May base_year+1
};

// Evenly spread per-KC truths for quick setups; kc ids are "kc000"....
std::map<std::string, KcTruth> spread_truths(std::size_t n_kcs, std::uint64_t seed);

std::map<std::string, KcTruth> drift_params(const std::map<std::string, KcTruth>& truths,
                                            const DriftSpec& drift, std::size_t years);

// Latent mastery trace of one student on one KC, exported for oracle tests.
struct MasteryTrace {
  std::string student_id;
  std::string kc_id;
  std::vector<std::uint8_t> mastered;  // before each step
};

struct SynthYear {
  data::LogStore store;
  std::map<std::string, KcTruth> drifted_truths;
  std::vector<MasteryTrace> traces;
};

// Samples one academic year from the drifted ground truth. Deterministic in
// (config, year_index); per-student substreams make the row stream independent
// of any parallel generation order.
SynthYear simulate_year(const SynthConfig& config, std::size_t year_index);

// Side file with per-KC parameters and per-student mastery traces.
void write_truth_json(const SynthYear& year, const std::string& path);

std::string year_label_for(int base_year, std::size_t year_index);

}  // namespace kt::synth
