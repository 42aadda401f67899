#include "kt/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "kt/models/model.hpp"

namespace kt::harness {

namespace {

double pick_metric(const EvalRecord& r, const std::string& metric) {
  if (metric == "auc") return r.auc;
  if (metric == "log_loss") return r.log_loss;
  if (metric == "f1") return r.f1;
  throw std::invalid_argument("unknown metric: " + metric);
}

std::vector<std::string> families_present(const std::vector<EvalRecord>& records) {
  std::set<std::string> seen;
  for (const auto& r : records) seen.insert(r.family);
  std::vector<std::string> ordered;
  for (models::Family f : models::kAllFamilies) {
    std::string name = models::family_name(f);
    if (seen.count(name)) {
      ordered.push_back(name);
      seen.erase(name);
    }
  }
  ordered.insert(ordered.end(), seen.begin(), seen.end());
  return ordered;
}

const std::vector<std::string> kMethodologyNotes = {
    "hyperparameter search is quasi-random (low-discrepancy), not Bayesian",
    "cross-year rows reuse the model fitted for the within-year protocol",
    "metrics pool interactions per record (micro average), not per student",
};

}  // namespace

metrics::RegressionResult ols_fixed_effects(const std::vector<EvalRecord>& records,
                                            const std::string& metric) {
  if (records.empty()) throw std::invalid_argument("ols_fixed_effects: no records");
  std::vector<std::string> families = families_present(records);
  // BKT anchors the years-between slope when present.
  std::string reference = families.front();
  for (const auto& f : families) {
    if (f == models::family_name(models::Family::Bkt)) reference = f;
  }

  std::size_t n = records.size();
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  for (const auto& fam : families) {
    names.push_back(fam);
    std::vector<double> col(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) col[i] = records[i].family == fam ? 1.0 : 0.0;
    columns.push_back(std::move(col));
  }
  {
    names.push_back("YB");
    std::vector<double> col(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) col[i] = double(records[i].years_between);
    columns.push_back(std::move(col));
  }
  for (const auto& fam : families) {
    if (fam == reference || families.size() < 2) continue;
    names.push_back("YB:" + fam);
    std::vector<double> col(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      col[i] = records[i].family == fam ? double(records[i].years_between) : 0.0;
    }
    columns.push_back(std::move(col));
  }

  std::vector<double> y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) y[i] = pick_metric(records[i], metric);
  return metrics::ols(names, columns, y);
}

ReportBundle aggregate_report(const std::vector<EvalRecord>& records) {
  if (records.empty()) throw std::invalid_argument("aggregate_report: no records");
  ReportBundle report;
  report.notes = kMethodologyNotes;

  std::vector<std::string> families = families_present(records);
  std::map<std::pair<std::string, int>, std::vector<const EvalRecord*>> groups;
  std::map<std::string, std::vector<const EvalRecord*>> by_family;
  for (const auto& r : records) {
    groups[{r.family, r.years_between}].push_back(&r);
    by_family[r.family].push_back(&r);
  }

  for (const auto& fam : families) {
    std::set<int> ybs;
    for (const auto& [key, rows] : groups) {
      if (key.first == fam) ybs.insert(key.second);
    }
    for (int yb : ybs) {
      const auto& rows = groups.at({fam, yb});
      GroupStat g;
      g.family = fam;
      g.years_between = yb;
      g.n = rows.size();
      auto ci_of = [&](const std::string& metric) {
        std::vector<double> values;
        values.reserve(rows.size());
        for (const EvalRecord* r : rows) values.push_back(pick_metric(*r, metric));
        if (values.size() < 2) {
          metrics::MeanCi point;
          point.mean = point.lower = point.upper = values.front();
          return point;
        }
        return metrics::mean_ci(values);
      };
      g.auc = ci_of("auc");
      g.log_loss = ci_of("log_loss");
      g.f1 = ci_of("f1");
      if (g.n < 2) {
        report.warnings.push_back("group " + fam + "/YB=" + std::to_string(yb) +
                                  " has a single record; interval collapsed to the point");
      }
      report.groups.push_back(std::move(g));
    }
  }

  for (const auto& fam : families) {
    const auto& rows = by_family.at(fam);
    FamilyTrend trend;
    trend.family = fam;
    trend.n = rows.size();
    std::vector<double> yb;
    yb.reserve(rows.size());
    for (const EvalRecord* r : rows) yb.push_back(double(r->years_between));
    auto rho_of = [&](const std::string& metric) {
      std::vector<double> values;
      values.reserve(rows.size());
      for (const EvalRecord* r : rows) values.push_back(pick_metric(*r, metric));
      return metrics::spearman(yb, values);
    };
    try {
      trend.auc = rho_of("auc");
      trend.log_loss = rho_of("log_loss");
      trend.f1 = rho_of("f1");
      report.trends.push_back(std::move(trend));
    } catch (const std::exception& e) {
      report.warnings.push_back("trend skipped for " + fam + ": " + e.what());
    }
  }

  for (const std::string& metric : {"auc", "log_loss", "f1"}) {
    try {
      report.regressions[metric] = ols_fixed_effects(records, metric);
    } catch (const std::exception& e) {
      report.warnings.push_back(std::string("regression skipped for ") + metric + ": " + e.what());
    }
  }
  return report;
}

namespace {

nlohmann::json ci_json(const metrics::MeanCi& ci) {
  return {{"mean", ci.mean}, {"lower", ci.lower}, {"upper", ci.upper}};
}

nlohmann::json spearman_json(const metrics::SpearmanResult& s) {
  return {{"rho", s.rho}, {"p_value", s.p_value}};
}

nlohmann::json regression_json(const metrics::RegressionResult& reg) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : reg.terms) {
    terms.push_back(
        {{"name", t.name}, {"coef", t.coef}, {"se", t.se}, {"t", t.t}, {"p_value", t.p_value}});
  }
  return {{"terms", terms},
          {"r_squared", reg.r_squared},
          {"adj_r_squared", reg.adj_r_squared},
          {"n", reg.n},
          {"p", reg.p}};
}

}  // namespace

void write_report_json(const std::string& path, const ReportBundle& report) {
  nlohmann::json j;
  j["notes"] = report.notes;
  j["warnings"] = report.warnings;
  j["groups"] = nlohmann::json::array();
  for (const auto& g : report.groups) {
    j["groups"].push_back({{"family", g.family},
                           {"years_between", g.years_between},
                           {"n", g.n},
                           {"auc", ci_json(g.auc)},
                           {"log_loss", ci_json(g.log_loss)},
                           {"f1", ci_json(g.f1)}});
  }
  j["trends"] = nlohmann::json::array();
  for (const auto& t : report.trends) {
    j["trends"].push_back({{"family", t.family},
                           {"n", t.n},
                           {"auc", spearman_json(t.auc)},
                           {"log_loss", spearman_json(t.log_loss)},
                           {"f1", spearman_json(t.f1)}});
  }
  j["regressions"] = nlohmann::json::object();
  for (const auto& [metric, reg] : report.regressions) j["regressions"][metric] = regression_json(reg);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_report_text(const std::string& path, const ReportBundle& report) {
  std::ostringstream out;
  out << "# Degradation report\n";
  for (const auto& note : report.notes) out << "# note: " << note << "\n";
  for (const auto& warning : report.warnings) out << "# warning: " << warning << "\n";

  out << "\n== Group means (95% CI) ==\n";
  out << std::left << std::setw(10) << "family" << std::right << std::setw(4) << "YB"
      << std::setw(6) << "n";
  for (const char* m : {"auc", "log_loss", "f1"}) {
    out << std::setw(10) << m << std::setw(20) << "[lower, upper]";
  }
  out << "\n";
  out << std::fixed << std::setprecision(4);
  for (const auto& g : report.groups) {
    out << std::left << std::setw(10) << g.family << std::right << std::setw(4) << g.years_between
        << std::setw(6) << g.n;
    for (const metrics::MeanCi* ci : {&g.auc, &g.log_loss, &g.f1}) {
      std::ostringstream interval;
      interval << std::fixed << std::setprecision(4) << "[" << ci->lower << ", " << ci->upper
               << "]";
      out << std::setw(10) << ci->mean << std::setw(20) << interval.str();
    }
    out << "\n";
  }

  out << "\n== Spearman trends vs years between ==\n";
  out << std::left << std::setw(10) << "family" << std::right << std::setw(6) << "n";
  for (const char* m : {"auc", "log_loss", "f1"}) out << std::setw(10) << m << std::setw(12) << "p";
  out << "\n";
  for (const auto& t : report.trends) {
    out << std::left << std::setw(10) << t.family << std::right << std::setw(6) << t.n;
    for (const metrics::SpearmanResult* s : {&t.auc, &t.log_loss, &t.f1}) {
      out << std::setw(10) << s->rho << std::setw(12) << std::scientific << std::setprecision(2)
          << s->p_value << std::fixed << std::setprecision(4);
    }
    out << "\n";
  }

  for (const auto& [metric, reg] : report.regressions) {
    out << "\n== Regression: " << metric << " ==\n";
    out << std::left << std::setw(14) << "coefficient" << std::right << std::setw(12) << "estimate"
        << std::setw(12) << "std err" << std::setw(12) << "p-value" << "\n";
    for (const auto& term : reg.terms) {
      out << std::left << std::setw(14) << term.name << std::right << std::setw(12) << std::fixed
          << std::setprecision(5) << term.coef << std::setw(12) << term.se << std::setw(12)
          << std::scientific << std::setprecision(2) << term.p_value << std::fixed
          << std::setprecision(5) << "\n";
    }
    out << "adjusted R^2 = " << std::setprecision(4) << reg.adj_r_squared << " (n = " << reg.n
        << ")\n";
  }

  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open for writing: " + path);
  file << out.str();
  if (!file) throw std::runtime_error("write failed: " + path);
}

}  // namespace kt::harness
