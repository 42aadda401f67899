#include "kt/data/csv.hpp"

#include <array>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace kt::data {

namespace {

const std::array<const char*, 8> kColumns = {
    "student_id", "assignment_log_id", "problem_set_id", "exercise_id",
    "kc_id",      "timestamp",         "correct",        "gradable"};

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

LogStore ingest_csv(const std::string& path, const std::string& year_label, IngestReport* report) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("ingest_csv: cannot open " + path);

  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("ingest_csv: empty file " + path);
  header = strip_cr(header);
  if (header.size() >= 3 && header.compare(0, 3, "\xef\xbb\xbf") == 0) header.erase(0, 3);

  auto names = split_line(header);
  std::array<int, 8> col{};
  col.fill(-1);
  for (std::size_t i = 0; i < names.size(); ++i) {
    for (std::size_t c = 0; c < kColumns.size(); ++c) {
      if (names[i] == kColumns[c]) col[c] = int(i);
    }
  }
  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    if (col[c] < 0)
      throw std::runtime_error("ingest_csv: missing required column '" + std::string(kColumns[c]) +
                               "' in " + path);
  }

  LogStore store;
  store.year_label = year_label;
  IngestReport local;
  IngestReport& rep = report ? *report : local;

  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto fields = split_line(line);
    auto reject = [&](const std::string& why) {
      ++rep.rejected;
      if (rep.messages.size() < 100)
        rep.messages.push_back("line " + std::to_string(lineno) + ": " + why);
    };
    if (fields.size() < names.size()) {
      reject("expected " + std::to_string(names.size()) + " fields, got " +
             std::to_string(fields.size()));
      continue;
    }
    InteractionRow row;
    row.student_id = fields[col[0]];
    row.assignment_log_id = fields[col[1]];
    row.problem_set_id = fields[col[2]];
    row.exercise_id = fields[col[3]];
    row.kc_id = fields[col[4]];
    auto ts = parse_iso8601(fields[col[5]]);
    if (!ts) {
      reject("unparseable timestamp '" + fields[col[5]] + "'");
      continue;
    }
    row.timestamp = *ts;
    const std::string& cor = fields[col[6]];
    const std::string& grd = fields[col[7]];
    if (cor != "0" && cor != "1") {
      reject("correct must be 0 or 1, got '" + cor + "'");
      continue;
    }
    if (grd != "0" && grd != "1") {
      reject("gradable must be 0 or 1, got '" + grd + "'");
      continue;
    }
    row.correct = cor == "1";
    row.gradable = grd == "1";
    if (row.kc_id.empty()) {
      reject("empty kc_id");
      continue;
    }
    store.rows.push_back(std::move(row));
    ++rep.accepted;
  }
  return store;
}

void write_csv(const std::vector<InteractionRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path);
  out << "student_id,assignment_log_id,problem_set_id,exercise_id,kc_id,timestamp,correct,"
         "gradable\n";
  for (const auto& r : rows) {
    out << r.student_id << ',' << r.assignment_log_id << ',' << r.problem_set_id << ','
        << r.exercise_id << ',' << r.kc_id << ',' << format_iso8601(r.timestamp) << ','
        << int(r.correct) << ',' << int(r.gradable) << '\n';
  }
}

void write_csv(const LogStore& store, const std::string& path) { write_csv(store.rows, path); }

}  // namespace kt::data
