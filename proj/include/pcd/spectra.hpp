#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "pcd/minilang.hpp"

namespace pcd {

enum class Provenance { Real, Synthetic };

/// M x N binary coverage with the length-M error vector (1 = failing test).
struct CoverageDataset {
  Eigen::MatrixXi matrix;
  Eigen::VectorXi errors;
  std::vector<std::string> stmt_ids;
  std::vector<std::string> test_ids;
  std::vector<Provenance> provenance;

  Eigen::Index tests() const noexcept { return matrix.rows(); }
  Eigen::Index statements() const noexcept { return matrix.cols(); }
  Eigen::Index failing() const { return errors.sum(); }
  Eigen::Index passing() const { return tests() - failing(); }
};

struct SpectrumTally {
  Eigen::VectorXi a_ef, a_ep, a_nf, a_np;
};

enum class Formula { Dstar, Ochiai, Barinel, Gp02 };

/// Statements ordered by non-increasing score; ties by ascending index.
struct RankedList {
  std::vector<StmtIndex> order;   // order[r] is the statement at rank r+1
  Eigen::VectorXd scores;         // per statement, column order
  std::vector<int> rank_of;       // rank_of[j] is the rank of statement j+1

  int rank(StmtIndex s) const { return rank_of.at(static_cast<std::size_t>(s) - 1); }
};

CoverageDataset build_spectra(const std::vector<ExecutionRecord>& records);

SpectrumTally tally(const CoverageDataset& dataset);

Eigen::VectorXd score(Formula formula, const SpectrumTally& tallies);

RankedList rank(const Eigen::VectorXd& scores);

/// Columns of `matrix` at 1-based statement indices, in the given order.
Eigen::MatrixXi select_columns(const Eigen::MatrixXi& matrix, const std::vector<StmtIndex>& stmts);

std::string to_string(Formula formula);
Formula formula_from_string(std::string_view text);

/// CSV layout: header `test,<stmt ids...>,result[,provenance]`, one row per
/// test, 0/1 cells.
std::string to_csv(const CoverageDataset& dataset, bool with_provenance = false);
CoverageDataset from_csv(std::string_view text);

}  // namespace pcd
