#pragma once

#include <string>
#include <vector>

#include "pcd/spectra.hpp"

namespace pcd {

enum class TiePolicy {
  Ordinal,  // position in the tie-broken ranking
  BestCase  // 1 + number of statements scoring strictly higher
};

struct VersionResult {
  std::string version;
  RankedList ranking;
  std::vector<StmtIndex> faulty;
};

int fault_rank(const RankedList& ranking, StmtIndex stmt, TiePolicy policy = TiePolicy::Ordinal);

/// Smallest rank among the version's faulty statements.
int first_fault_rank(const VersionResult& v, TiePolicy policy = TiePolicy::Ordinal);
double average_fault_rank(const VersionResult& v, TiePolicy policy = TiePolicy::Ordinal);

/// Versions with a fault ranked within the top k.
int topk(const std::vector<VersionResult>& results, int k, TiePolicy policy = TiePolicy::Ordinal);

struct RankMetrics {
  double mfr = 0.0;
  double mar = 0.0;
};

/// Means over versions of the first and of the average fault rank.
RankMetrics rank_metrics(const std::vector<VersionResult>& results, TiePolicy policy = TiePolicy::Ordinal);

/// 100 * ours / baseline.
double rimp(double ours, double baseline);

struct MetricsRow {
  std::string scenario;
  std::string method;
  std::string space;  // "full" or "context"
  int versions = 0;
  int top1 = 0, top3 = 0, top5 = 0;
  double mfr = 0.0, mar = 0.0;
  double sum_first = 0.0, sum_average = 0.0;  // summed over versions
  double rimp_mfr = -1.0, rimp_mar = -1.0;    // vs the baseline scenario; -1 when undefined
};

struct MetricsReport {
  std::string baseline = "origin";
  TiePolicy policy = TiePolicy::Ordinal;
  std::vector<MetricsRow> rows;
  std::vector<std::string> errors;  // "<version>: <message>"
};

MetricsRow summarize(const std::string& scenario, const std::string& method, const std::string& space,
                     const std::vector<VersionResult>& results, TiePolicy policy = TiePolicy::Ordinal);

/// Fills rimp_* of every row from the row of the baseline scenario with the
/// same method and space.
void attach_rimp(MetricsReport& report);

std::string report_json(const MetricsReport& report);
/// Inverse of report_json (extra keys are ignored).
MetricsReport report_from_json(const std::string& text);
/// Fixed-width table: scenario, method, space, Top-1, Top-3, Top-5, MFR, MAR, RImp.
std::string report_table(const MetricsReport& report);
/// scenario,method,space,rimp_mfr,rimp_mar for rows with a defined RImp.
std::string rimp_csv(const MetricsReport& report);

}  // namespace pcd
