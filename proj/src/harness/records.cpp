#include "kt/harness/records.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "kt/models/model.hpp"

namespace kt::harness {

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("double formatting failed");
  return std::string(buf, ptr);
}

int family_order(const std::string& name) {
  int i = 0;
  for (models::Family f : models::kAllFamilies) {
    if (name == models::family_name(f)) return i;
    ++i;
  }
  return i;  // unknown families sort last, alphabetically via the name tiebreak
}

}  // namespace

int year_start(const std::string& year_label) {
  int y = 0;
  auto [ptr, ec] = std::from_chars(year_label.data(), year_label.data() + year_label.size(), y);
  if (ec != std::errc{}) throw std::invalid_argument("bad year label: " + year_label);
  return y;
}

void sort_records(std::vector<EvalRecord>& records) {
  std::sort(records.begin(), records.end(), [](const EvalRecord& a, const EvalRecord& b) {
    int fa = family_order(a.family), fb = family_order(b.family);
    return std::tie(fa, a.family, a.train_year, a.train_sample, a.eval_year, a.eval_sample) <
           std::tie(fb, b.family, b.train_year, b.train_sample, b.eval_year, b.eval_sample);
  });
}

void write_records_csv(const std::string& path, const std::vector<EvalRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "family,train_year,eval_year,years_between,train_sample,eval_sample,"
         "auc,log_loss,f1,n_interactions\n";
  for (const EvalRecord& r : records) {
    out << r.family << ',' << r.train_year << ',' << r.eval_year << ',' << r.years_between << ','
        << r.train_sample << ',' << r.eval_sample << ',' << format_double(r.auc) << ','
        << format_double(r.log_loss) << ',' << format_double(r.f1) << ',' << r.n_interactions
        << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<EvalRecord> read_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open records file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty records file: " + path);
  std::vector<EvalRecord> records;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 10) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected 10 fields, got " +
                               std::to_string(fields.size()));
    }
    EvalRecord r;
    r.family = fields[0];
    r.train_year = fields[1];
    r.eval_year = fields[2];
    r.years_between = std::stoi(fields[3]);
    r.train_sample = std::stoi(fields[4]);
    r.eval_sample = std::stoi(fields[5]);
    r.auc = std::stod(fields[6]);
    r.log_loss = std::stod(fields[7]);
    r.f1 = std::stod(fields[8]);
    r.n_interactions = std::stoull(fields[9]);
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace kt::harness
