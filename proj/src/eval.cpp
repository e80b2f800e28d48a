#include "pcd/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "pcd/error.hpp"

namespace pcd {

int fault_rank(const RankedList& ranking, StmtIndex stmt, TiePolicy policy) {
  if (stmt < 1 || static_cast<std::size_t>(stmt) > ranking.rank_of.size())
    throw MissingFaults("S" + std::to_string(stmt) + " is not in the ranking");
  if (policy == TiePolicy::Ordinal) return ranking.rank(stmt);
  const double s = ranking.scores(stmt - 1);
  return 1 + static_cast<int>((ranking.scores.array() > s).count());
}

namespace {

void require_faults(const VersionResult& v) {
  if (v.faulty.empty()) throw MissingFaults("version '" + v.version + "' has no faulty statements");
}

}  // namespace

int first_fault_rank(const VersionResult& v, TiePolicy policy) {
  require_faults(v);
  int best = std::numeric_limits<int>::max();
  for (StmtIndex s : v.faulty) best = std::min(best, fault_rank(v.ranking, s, policy));
  return best;
}

double average_fault_rank(const VersionResult& v, TiePolicy policy) {
  require_faults(v);
  double sum = 0.0;
  for (StmtIndex s : v.faulty) sum += fault_rank(v.ranking, s, policy);
  return sum / static_cast<double>(v.faulty.size());
}

int topk(const std::vector<VersionResult>& results, int k, TiePolicy policy) {
  if (k < 1) throw InvalidRange("K must be at least 1");
  return static_cast<int>(std::count_if(results.begin(), results.end(),
                                        [&](const VersionResult& v) { return first_fault_rank(v, policy) <= k; }));
}

RankMetrics rank_metrics(const std::vector<VersionResult>& results, TiePolicy policy) {
  if (results.empty()) throw MissingFaults("no versions to aggregate");
  RankMetrics m;
  for (const auto& v : results) {
    m.mfr += first_fault_rank(v, policy);
    m.mar += average_fault_rank(v, policy);
  }
  m.mfr /= static_cast<double>(results.size());
  m.mar /= static_cast<double>(results.size());
  return m;
}

double rimp(double ours, double baseline) {
  if (baseline == 0.0) throw ZeroBaseline("baseline metric is zero");
  return 100.0 * ours / baseline;
}

MetricsRow summarize(const std::string& scenario, const std::string& method, const std::string& space,
                     const std::vector<VersionResult>& results, TiePolicy policy) {
  MetricsRow row;
  row.scenario = scenario;
  row.method = method;
  row.space = space;
  row.versions = static_cast<int>(results.size());
  if (results.empty()) return row;
  row.top1 = topk(results, 1, policy);
  row.top3 = topk(results, 3, policy);
  row.top5 = topk(results, 5, policy);
  for (const auto& v : results) {
    row.sum_first += first_fault_rank(v, policy);
    row.sum_average += average_fault_rank(v, policy);
  }
  row.mfr = row.sum_first / row.versions;
  row.mar = row.sum_average / row.versions;
  return row;
}

void attach_rimp(MetricsReport& report) {
  std::map<std::tuple<std::string, std::string>, const MetricsRow*> base;
  for (const auto& r : report.rows)
    if (r.scenario == report.baseline) base[{r.method, r.space}] = &r;
  for (auto& r : report.rows) {
    r.rimp_mfr = r.rimp_mar = -1.0;
    const auto it = base.find({r.method, r.space});
    if (it == base.end() || r.versions == 0 || it->second->versions != r.versions) continue;
    if (it->second->sum_first > 0) r.rimp_mfr = rimp(r.sum_first, it->second->sum_first);
    if (it->second->sum_average > 0) r.rimp_mar = rimp(r.sum_average, it->second->sum_average);
  }
}

std::string report_json(const MetricsReport& report) {
  nlohmann::ordered_json doc;
  doc["baseline"] = report.baseline;
  doc["tie_policy"] = report.policy == TiePolicy::Ordinal ? "ordinal" : "best-case";
  doc["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    nlohmann::ordered_json j;
    j["scenario"] = r.scenario;
    j["method"] = r.method;
    j["space"] = r.space;
    j["versions"] = r.versions;
    j["top1"] = r.top1;
    j["top3"] = r.top3;
    j["top5"] = r.top5;
    j["mfr"] = r.mfr;
    j["mar"] = r.mar;
    j["rimp_mfr"] = r.rimp_mfr < 0 ? nlohmann::ordered_json() : nlohmann::ordered_json(r.rimp_mfr);
    j["rimp_mar"] = r.rimp_mar < 0 ? nlohmann::ordered_json() : nlohmann::ordered_json(r.rimp_mar);
    doc["rows"].push_back(j);
  }
  doc["errors"] = report.errors;
  return doc.dump(2) + "\n";
}

MetricsReport report_from_json(const std::string& text) {
  MetricsReport report;
  try {
    const auto doc = nlohmann::json::parse(text);
    report.baseline = doc.value("baseline", "origin");
    report.policy = doc.value("tie_policy", "ordinal") == "best-case" ? TiePolicy::BestCase : TiePolicy::Ordinal;
    for (const auto& j : doc.at("rows")) {
      MetricsRow r;
      r.scenario = j.at("scenario").get<std::string>();
      r.method = j.at("method").get<std::string>();
      r.space = j.value("space", "full");
      r.versions = j.at("versions").get<int>();
      r.top1 = j.at("top1").get<int>();
      r.top3 = j.at("top3").get<int>();
      r.top5 = j.at("top5").get<int>();
      r.mfr = j.at("mfr").get<double>();
      r.mar = j.at("mar").get<double>();
      r.sum_first = r.mfr * r.versions;
      r.sum_average = r.mar * r.versions;
      r.rimp_mfr = j.at("rimp_mfr").is_null() ? -1.0 : j.at("rimp_mfr").get<double>();
      r.rimp_mar = j.at("rimp_mar").is_null() ? -1.0 : j.at("rimp_mar").get<double>();
      report.rows.push_back(r);
    }
    if (doc.contains("errors")) report.errors = doc.at("errors").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw DatasetFormatError(std::string("report: ") + e.what());
  }
  return report;
}

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

std::string report_table(const MetricsReport& report) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-12s %-8s %-8s %6s %6s %6s %9s %9s %9s %9s\n", "scenario", "method",
                "space", "Top-1", "Top-3", "Top-5", "MFR", "MAR", "RImp-MFR", "RImp-MAR");
  os << line;
  for (const auto& r : report.rows) {
    const std::string a = r.rimp_mfr < 0 ? "-" : fmt("%.2f%%", r.rimp_mfr);
    const std::string b = r.rimp_mar < 0 ? "-" : fmt("%.2f%%", r.rimp_mar);
    std::snprintf(line, sizeof line, "%-12s %-8s %-8s %6d %6d %6d %9.2f %9.2f %9s %9s\n", r.scenario.c_str(),
                  r.method.c_str(), r.space.c_str(), r.top1, r.top3, r.top5, r.mfr, r.mar, a.c_str(), b.c_str());
    os << line;
  }
  return os.str();
}

std::string rimp_csv(const MetricsReport& report) {
  std::ostringstream os;
  os << "scenario,method,space,rimp_mfr,rimp_mar\n";
  for (const auto& r : report.rows) {
    if (r.rimp_mfr < 0 && r.rimp_mar < 0) continue;
    os << r.scenario << ',' << r.method << ',' << r.space << ',' << (r.rimp_mfr < 0 ? "" : fmt("%.4f", r.rimp_mfr))
       << ',' << (r.rimp_mar < 0 ? "" : fmt("%.4f", r.rimp_mar)) << '\n';
  }
  return os.str();
}

}  // namespace pcd
