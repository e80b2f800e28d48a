#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pcd/minilang.hpp"

namespace pcd {

struct CoverageDataset;

/// (outputStm, outputVar, inputTest). `occurrence` pins a particular
/// execution of outputStm; when absent its last occurrence is used.
struct SliceCriterion {
  StmtIndex output_stm = 0;
  std::vector<std::string> output_vars;
  std::string input_test;
  std::optional<std::size_t> occurrence;
};

struct FaultSemanticContext {
  std::vector<StmtIndex> stm_sc;  // ascending, duplicate-free
  Eigen::MatrixXi context_matrix;  // M x K'
};

/// Criterion for a failing run: its first wrong output statement and the
/// variables it emitted; for runs that crashed before any wrong output, the
/// faulting occurrence and the variables it read; otherwise the last output
/// (or last executed) occurrence.
SliceCriterion default_criterion(const ExecutionRecord& record);

/// Statements whose occurrences reach the criterion occurrence through the
/// transitive closure of data and control dependence edges. At the criterion
/// occurrence itself only data edges for `output_vars` are followed.
std::vector<StmtIndex> dynamic_slice(const ExecutionRecord& record,
                                     const SliceCriterion& criterion);

/// Union of the per-test slices, projected onto the full dataset's rows.
FaultSemanticContext fault_context(const CoverageDataset& dataset,
                                   const std::vector<ExecutionRecord>& failing,
                                   const std::vector<SliceCriterion>& criteria);

/// Convenience: picks the failing records (optionally at most `max_failing`
/// of them, in suite order) and their default criteria.
FaultSemanticContext fault_context(const CoverageDataset& dataset,
                                   const std::vector<ExecutionRecord>& records,
                                   std::optional<std::size_t> max_failing = std::nullopt);

}  // namespace pcd
