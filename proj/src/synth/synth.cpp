#include "kt/synth/synth.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "kt/rng.hpp"

namespace kt::synth {

namespace {

double clampd(double x, double lo, double hi) { return std::min(hi, std::max(lo, x)); }

std::string zero_pad(std::size_t v, int width) {
  std::string s = std::to_string(v);
  while (int(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

}  // namespace

std::string year_label_for(int base_year, std::size_t year_index) {
  int y = base_year + int(year_index);
  return std::to_string(y) + "-" + std::to_string(y + 1);
}

std::map<std::string, KcTruth> spread_truths(std::size_t n_kcs, std::uint64_t seed) {
  Rng rng = Rng::substream(seed, {0x7472757468ULL});
  std::map<std::string, KcTruth> truths;
  for (std::size_t k = 0; k < n_kcs; ++k) {
    KcTruth t;
    t.L0 = rng.uniform(0.2, 0.7);
    t.T = rng.uniform(0.1, 0.3);
    t.G = rng.uniform(0.1, 0.25);
    t.S = rng.uniform(0.05, 0.2);
    t.F = rng.uniform(0.01, 0.08);  // stays inside the default drift clamp
    truths["kc" + zero_pad(k, 3)] = t;
  }
  return truths;
}

std::map<std::string, KcTruth> drift_params(const std::map<std::string, KcTruth>& truths,
                                            const DriftSpec& drift, std::size_t years) {
  if (drift.lo >= drift.hi) throw std::invalid_argument("drift_params: lo must be < hi");
  std::map<std::string, KcTruth> out;
  const double y = double(years);
  for (const auto& [kc, t] : truths) {
    KcTruth d;
    d.L0 = clampd(t.L0 + y * drift.dL0, drift.lo, drift.hi);
    d.T = clampd(t.T + y * drift.dT, drift.lo, drift.hi);
    d.G = clampd(t.G + y * drift.dG, drift.lo, drift.hi);
    d.S = clampd(t.S + y * drift.dS, drift.lo, drift.hi);
    d.F = clampd(t.F + y * drift.dF, drift.lo, drift.hi);
    out[kc] = d;
  }
  return out;
}

SynthYear simulate_year(const SynthConfig& config, std::size_t year_index) {
  if (config.n_students < 1 || config.n_kcs < 1 || config.steps_per_student_per_kc < 1)
    throw std::invalid_argument("simulate_year: counts must be >= 1");
  if (config.truths.size() != config.n_kcs)
    throw std::invalid_argument("simulate_year: truths must cover every KC");

  SynthYear year;
  year.store.year_label = year_label_for(config.base_year, year_index);
  year.drifted_truths = drift_params(config.truths, config.drift, year_index);

  std::vector<std::string> kc_ids;
  kc_ids.reserve(config.n_kcs);
  for (const auto& [kc, _] : year.drifted_truths) kc_ids.push_back(kc);

  // School-year window: Sep 1 .. May 31, split into one slot per KC so each
  // assignment log occupies a contiguous stretch of the student's timeline.
  const int start_y = config.base_year + int(year_index);
  const UtcSeconds year_start = days_from_civil(start_y, 9, 1) * 86400;
  const UtcSeconds year_end = days_from_civil(start_y + 1, 5, 31) * 86400;
  const UtcSeconds slot = (year_end - year_start) / UtcSeconds(config.n_kcs);
  const std::size_t steps = config.steps_per_student_per_kc;

  year.store.rows.reserve(config.n_students * config.n_kcs * steps);
  for (std::size_t si = 0; si < config.n_students; ++si) {
    const std::string student = "y" + std::to_string(year_index) + "s" + zero_pad(si, 6);
    Rng rng = Rng::substream(config.seed, {0x73696dULL, year_index, si});
    for (std::size_t ki = 0; ki < config.n_kcs; ++ki) {
      const std::string& kc = kc_ids[ki];
      const KcTruth& t = year.drifted_truths.at(kc);
      const std::string log_id = student + "_" + kc;

      MasteryTrace trace;
      trace.student_id = student;
      trace.kc_id = kc;

      bool mastered = rng.bernoulli(t.L0);
      for (std::size_t step = 0; step < steps; ++step) {
        trace.mastered.push_back(mastered ? 1 : 0);
        const bool correct = rng.bernoulli(mastered ? 1.0 - t.S : t.G);

        data::InteractionRow row;
        row.student_id = student;
        row.assignment_log_id = log_id;
        row.problem_set_id = "ps_" + kc;
        row.exercise_id = "e_" + kc + "_" + zero_pad(step, 2);
        row.kc_id = kc;
        row.timestamp =
            year_start + slot * UtcSeconds(ki) + (slot * UtcSeconds(step + 1)) / UtcSeconds(steps + 1);
        row.correct = correct;
        row.gradable = 1;
        year.store.rows.push_back(std::move(row));

        mastered = mastered ? !rng.bernoulli(t.F) : rng.bernoulli(t.T);
      }
      year.traces.push_back(std::move(trace));
    }
  }
  return year;
}

void write_truth_json(const SynthYear& year, const std::string& path) {
  nlohmann::json j;
  j["year_label"] = year.store.year_label;
  for (const auto& [kc, t] : year.drifted_truths) {
    j["kcs"][kc] = {{"L0", t.L0}, {"T", t.T}, {"G", t.G}, {"S", t.S}, {"F", t.F}};
  }
  for (const auto& tr : year.traces) {
    nlohmann::json entry;
    entry["student_id"] = tr.student_id;
    entry["kc_id"] = tr.kc_id;
    entry["mastered"] = tr.mastered;
    j["traces"].push_back(std::move(entry));
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_truth_json: cannot open " + path);
  out << j.dump() << '\n';
}

}  // namespace kt::synth
