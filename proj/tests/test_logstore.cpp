#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "kt/data/csv.hpp"
#include "kt/data/filter.hpp"
#include "kt/data/sample.hpp"
#include "kt/data/sequences.hpp"
#include "kt/rng.hpp"

using namespace kt;
namespace fs = std::filesystem;

namespace {

std::string temp_file(const std::string& name) {
  return (fs::temp_directory_path() / name).string();
}

void write_text(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  out << body;
}

const char* kHeader =
    "student_id,assignment_log_id,problem_set_id,exercise_id,kc_id,timestamp,correct,gradable\n";

data::InteractionRow make_row(const std::string& student, const std::string& log,
                              const std::string& kc, UtcSeconds ts, int correct) {
  data::InteractionRow r;
  r.student_id = student;
  r.assignment_log_id = log;
  r.problem_set_id = "ps_" + kc;
  r.exercise_id = "e_" + kc;
  r.kc_id = kc;
  r.timestamp = ts;
  r.correct = std::uint8_t(correct);
  r.gradable = 1;
  return r;
}

}  // namespace

TEST_CASE("ingest: well-formed file") {
  std::string path = temp_file("kt_ingest_ok.csv");
  write_text(path, std::string(kHeader) +
                       "s1,a1,p1,e1,k1,2019-10-05T10:00:00Z,1,1\n"
                       "s1,a1,p1,e2,k1,2019-10-05T10:01:00Z,0,1\n"
                       "s2,a2,p1,e1,k1,2019-10-06T09:00:00Z,1,0\n");
  data::IngestReport report;
  data::LogStore store = data::ingest_csv(path, "2019-2020", &report);
  CHECK(store.rows.size() == 3);
  CHECK(report.accepted == 3);
  CHECK(report.rejected == 0);
  CHECK(store.year_label == "2019-2020");
  CHECK(store.rows[0].student_id == "s1");
  CHECK(store.rows[2].gradable == 0);
  fs::remove(path);
}

TEST_CASE("ingest: malformed rows dropped and reported") {
  std::string path = temp_file("kt_ingest_bad.csv");
  write_text(path, std::string(kHeader) +
                       "s1,a1,p1,e1,k1,2019-10-05T10:00:00Z,1,1\n"
                       "s1,a1,p1,e2,k1,2019-10-05T10:01:00Z,2,1\n"   // correct out of range
                       "s2,a2,p1,e1,k1,not-a-time,1,1\n"             // bad timestamp
                       "s3,a3,p1,e1,k1,2019-10-07T08:00:00Z,0,1\n");
  data::IngestReport report;
  data::LogStore store = data::ingest_csv(path, "2019-2020", &report);
  CHECK(store.rows.size() == 2);
  CHECK(report.rejected == 2);
  CHECK(report.messages.size() == 2);
  fs::remove(path);
}

TEST_CASE("ingest: header-only file yields an empty store") {
  std::string path = temp_file("kt_ingest_empty.csv");
  write_text(path, kHeader);
  data::LogStore store = data::ingest_csv(path, "2019-2020");
  CHECK(store.rows.empty());
  fs::remove(path);
}

TEST_CASE("ingest: missing file and missing column throw") {
  CHECK_THROWS(data::ingest_csv(temp_file("kt_definitely_absent.csv"), "y"));
  std::string path = temp_file("kt_ingest_nocol.csv");
  write_text(path, "student_id,assignment_log_id,timestamp\ns1,a1,2019-10-05T10:00:00Z\n");
  CHECK_THROWS(data::ingest_csv(path, "y"));
  fs::remove(path);
}

TEST_CASE("ingest: column order free, unknown columns ignored") {
  std::string path = temp_file("kt_ingest_reorder.csv");
  write_text(path,
             "timestamp,correct,student_id,assignment_log_id,problem_set_id,exercise_id,"
             "kc_id,gradable,extra\n"
             "2019-10-05T10:00:00Z,1,s1,a1,p1,e1,k1,1,junk\n");
  data::LogStore store = data::ingest_csv(path, "y");
  REQUIRE(store.rows.size() == 1);
  CHECK(store.rows[0].correct == 1);
  CHECK(store.rows[0].kc_id == "k1");
  fs::remove(path);
}

TEST_CASE("csv: write then ingest round-trips") {
  data::LogStore store;
  store.year_label = "2020-2021";
  store.rows.push_back(make_row("s1", "a1", "k1", 1602000000, 1));
  store.rows.push_back(make_row("s2", "a2", "k2", 1602000300, 0));
  std::string path = temp_file("kt_roundtrip.csv");
  data::write_csv(store, path);
  data::LogStore back = data::ingest_csv(path, "2020-2021");
  REQUIRE(back.rows.size() == 2);
  CHECK(back.rows[0].student_id == store.rows[0].student_id);
  CHECK(back.rows[0].timestamp == store.rows[0].timestamp);
  CHECK(back.rows[1].correct == store.rows[1].correct);
  fs::remove(path);
}

TEST_CASE("filter: summer months removed") {
  data::LogStore store;
  store.year_label = "y";
  // July 4th, 2020 vs October 5th, 2020
  store.rows.push_back(make_row("s1", "a1", "k1", days_from_civil(2020, 7, 4) * 86400, 1));
  store.rows.push_back(make_row("s1", "a2", "k1", days_from_civil(2020, 10, 5) * 86400, 1));
  std::map<std::string, std::size_t> counts{{"ps_k1", 1000}};
  data::FilterRules rules;
  data::LogStore kept = data::filter_eligible(store, rules, counts);
  REQUIRE(kept.rows.size() == 1);
  CHECK(kept.rows[0].assignment_log_id == "a2");
}

TEST_CASE("filter: problem-set count boundary keeps exactly 100") {
  data::LogStore store;
  store.year_label = "y";
  UtcSeconds t = days_from_civil(2020, 10, 5) * 86400;
  auto popular = make_row("s1", "a1", "k1", t, 1);
  auto boundary = make_row("s1", "a2", "k2", t, 1);
  auto rare = make_row("s1", "a3", "k3", t, 1);
  store.rows = {popular, boundary, rare};
  std::map<std::string, std::size_t> counts{
      {"ps_k1", 101}, {"ps_k2", 100}, {"ps_k3", 99}};
  data::LogStore kept = data::filter_eligible(store, data::FilterRules{}, counts);
  REQUIRE(kept.rows.size() == 2);
  CHECK(kept.rows[0].kc_id == "k1");
  CHECK(kept.rows[1].kc_id == "k2");  // exactly 100 is retained
}

TEST_CASE("filter: drops non-gradable rows and is idempotent") {
  data::LogStore store;
  store.year_label = "y";
  UtcSeconds t = days_from_civil(2021, 2, 1) * 86400;
  store.rows.push_back(make_row("s1", "a1", "k1", t, 1));
  store.rows.push_back(make_row("s2", "a2", "k1", t + 60, 0));
  store.rows[1].gradable = 0;
  std::map<std::string, std::size_t> counts{{"ps_k1", 500}};
  data::LogStore once = data::filter_eligible(store, data::FilterRules{}, counts);
  REQUIRE(once.rows.size() == 1);
  data::LogStore twice = data::filter_eligible(once, data::FilterRules{}, counts);
  CHECK(twice.rows.size() == once.rows.size());
  CHECK(twice.rows[0].assignment_log_id == once.rows[0].assignment_log_id);
}

TEST_CASE("filter: preserves input order") {
  data::LogStore store;
  store.year_label = "y";
  UtcSeconds t = days_from_civil(2021, 3, 1) * 86400;
  for (int i = 0; i < 10; ++i)
    store.rows.push_back(make_row("s" + std::to_string(9 - i), "a" + std::to_string(i), "k1",
                                  t + i, i % 2));
  std::map<std::string, std::size_t> counts{{"ps_k1", 500}};
  data::LogStore kept = data::filter_eligible(store, data::FilterRules{}, counts);
  REQUIRE(kept.rows.size() == 10);
  for (int i = 0; i < 10; ++i) CHECK(kept.rows[i].assignment_log_id == "a" + std::to_string(i));
}

TEST_CASE("count_problem_set_assignments: distinct logs pooled over years") {
  data::LogStore y1, y2;
  y1.year_label = "y1";
  y2.year_label = "y2";
  UtcSeconds t = days_from_civil(2020, 11, 1) * 86400;
  // same assignment log appearing in multiple rows counts once
  y1.rows.push_back(make_row("s1", "a1", "k1", t, 1));
  y1.rows.push_back(make_row("s1", "a1", "k1", t + 1, 0));
  y1.rows.push_back(make_row("s2", "a2", "k1", t + 2, 1));
  y2.rows.push_back(make_row("s3", "a3", "k1", t + 3, 1));
  auto counts = data::count_problem_set_assignments({&y1, &y2});
  CHECK(counts.at("ps_k1") == 3);
}

TEST_CASE("sampling: disjoint, exact size, deterministic") {
  data::LogStore store;
  store.year_label = "y";
  UtcSeconds t = days_from_civil(2020, 10, 1) * 86400;
  Rng rng(17);
  for (int i = 0; i < 60; ++i) {
    std::string log = "log" + std::to_string(i);
    for (int j = 0; j < 3; ++j)
      store.rows.push_back(
          make_row("s" + std::to_string(i % 20), log, "k1", t + i * 100 + j, rng.bernoulli(0.5)));
  }

  auto samples = data::sample_assignment_logs(store, 4, 12, 99);
  REQUIRE(samples.size() == 4);
  std::set<std::string> seen;
  for (const auto& s : samples) {
    CHECK(s.assignment_log_ids.size() == 12);
    CHECK(s.rows.size() == 36);  // 3 rows per log
    for (const auto& id : s.assignment_log_ids) {
      CHECK(seen.count(id) == 0);  // pairwise disjoint
      seen.insert(id);
    }
    for (const auto& r : s.rows) CHECK(s.assignment_log_ids.count(r.assignment_log_id) == 1);
  }

  auto again = data::sample_assignment_logs(store, 4, 12, 99);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(again[i].assignment_log_ids == samples[i].assignment_log_ids);

  auto other_seed = data::sample_assignment_logs(store, 4, 12, 100);
  bool any_diff = false;
  for (std::size_t i = 0; i < 4; ++i)
    if (other_seed[i].assignment_log_ids != samples[i].assignment_log_ids) any_diff = true;
  CHECK(any_diff);
}

TEST_CASE("sampling: insufficient logs raise a counting error") {
  data::LogStore store;
  store.year_label = "y";
  UtcSeconds t = days_from_civil(2020, 10, 1) * 86400;
  for (int i = 0; i < 5; ++i)
    store.rows.push_back(make_row("s1", "log" + std::to_string(i), "k1", t + i, 1));
  CHECK_THROWS_WITH_AS(data::sample_assignment_logs(store, 2, 3, 1),
                       doctest::Contains("need 6"), std::runtime_error);
}

TEST_CASE("sampling: manifest round trip and materialization") {
  data::LogStore store;
  store.year_label = "2021-2022";
  UtcSeconds t = days_from_civil(2021, 10, 1) * 86400;
  for (int i = 0; i < 20; ++i)
    store.rows.push_back(make_row("s" + std::to_string(i), "log" + std::to_string(i), "k1",
                                  t + i, i % 2));
  auto samples = data::sample_assignment_logs(store, 2, 5, 7);
  std::string path = temp_file("kt_manifest.json");
  data::write_sample_manifest(samples[1], path);
  data::Sample back = data::read_sample_manifest(path);
  CHECK(back.sample_id == samples[1].sample_id);
  CHECK(back.year_label == samples[1].year_label);
  CHECK(back.seed == samples[1].seed);
  CHECK(back.assignment_log_ids == samples[1].assignment_log_ids);
  CHECK(back.rows.empty());
  data::materialize_sample(back, store);
  REQUIRE(back.rows.size() == samples[1].rows.size());
  for (std::size_t i = 0; i < back.rows.size(); ++i)
    CHECK(back.rows[i].assignment_log_id == samples[1].rows[i].assignment_log_id);
  fs::remove(path);
}

TEST_CASE("vocabulary: dense ids with a distinct OOV slot") {
  data::Sample sample;
  sample.rows.push_back(make_row("s1", "a1", "k1", 100, 1));
  sample.rows.push_back(make_row("s1", "a1", "k2", 200, 0));
  sample.rows.push_back(make_row("s1", "a1", "k1", 300, 1));
  data::Vocabulary vocab = data::build_vocabulary(sample);
  CHECK(vocab.kc_count() == 3);  // k1, k2, OOV
  CHECK(vocab.kc_index("k1") != vocab.kc_index("k2"));
  CHECK(vocab.kc_index("k1") < 2);
  CHECK(vocab.kc_index("k2") < 2);
  CHECK(vocab.oov_kc() == 2);
  CHECK(vocab.kc_index("never-seen") == vocab.oov_kc());
  CHECK(vocab.exercise_count() == 3);  // e_k1, e_k2, OOV
  CHECK(vocab.exercise_index("e_k9") == vocab.oov_exercise());
  CHECK(vocab.kc_known("k1"));
  CHECK(!vocab.kc_known("never-seen"));
}

TEST_CASE("sequences: sorted by time, one per student, shuffle-invariant") {
  data::Sample sample;
  sample.year_label = "y";
  sample.rows.push_back(make_row("s1", "a1", "k1", 1000, 1));
  sample.rows.push_back(make_row("s1", "a1", "k1", 500, 0));  // earlier, listed later
  sample.rows.push_back(make_row("s2", "a2", "k2", 700, 1));
  data::Vocabulary vocab = data::build_vocabulary(sample);
  auto seqs = data::build_sequences(sample, vocab);
  REQUIRE(seqs.size() == 2);
  CHECK(seqs[0].student_id == "s1");
  REQUIRE(seqs[0].steps.size() == 2);
  CHECK(seqs[0].steps[0].timestamp == 500);
  CHECK(seqs[0].steps[1].timestamp == 1000);
  CHECK(seqs[0].steps[0].correct == 0);

  data::Sample shuffled = sample;
  std::reverse(shuffled.rows.begin(), shuffled.rows.end());
  auto seqs2 = data::build_sequences(shuffled, vocab);
  REQUIRE(seqs2.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(seqs2[i].student_id == seqs[i].student_id);
    REQUIRE(seqs2[i].steps.size() == seqs[i].steps.size());
    for (std::size_t k = 0; k < seqs[i].steps.size(); ++k) {
      CHECK(seqs2[i].steps[k].timestamp == seqs[i].steps[k].timestamp);
      CHECK(seqs2[i].steps[k].correct == seqs[i].steps[k].correct);
    }
  }
}

TEST_CASE("sequences: tie-break on assignment log then input order") {
  data::Sample sample;
  auto r1 = make_row("s1", "b", "k1", 100, 1);
  auto r2 = make_row("s1", "a", "k1", 100, 0);  // same time, earlier log id
  sample.rows = {r1, r2};
  data::Vocabulary vocab = data::build_vocabulary(sample);
  auto seqs = data::build_sequences(sample, vocab);
  REQUIRE(seqs.size() == 1);
  CHECK(seqs[0].steps[0].correct == 0);  // log "a" first
  CHECK(seqs[0].steps[1].correct == 1);
}

TEST_CASE("sequences: unseen ids map to OOV indices") {
  data::Sample train;
  train.rows.push_back(make_row("s1", "a1", "k1", 100, 1));
  data::Vocabulary vocab = data::build_vocabulary(train);

  data::Sample eval;
  eval.rows.push_back(make_row("s9", "a9", "k_new", 100, 1));
  auto seqs = data::build_sequences(eval, vocab);
  REQUIRE(seqs.size() == 1);
  CHECK(seqs[0].steps[0].kc == vocab.oov_kc());
  CHECK(seqs[0].steps[0].exercise == vocab.oov_exercise());
  CHECK(seqs[0].steps[0].kc_id == "k_new");  // raw id kept for classical models
}

TEST_CASE("timeutil: strict ISO-8601 parsing") {
  CHECK(parse_iso8601("2019-10-05T10:00:00Z").has_value());
  CHECK(!parse_iso8601("2019-10-05 10:00:00").has_value());
  CHECK(!parse_iso8601("2019-13-05T10:00:00Z").has_value());
  UtcSeconds t = *parse_iso8601("2020-07-04T12:30:45Z");
  CHECK(format_iso8601(t) == "2020-07-04T12:30:45Z");
  CHECK(utc_month(t) == 7);
}
