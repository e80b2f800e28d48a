#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pcd/context.hpp"
#include "pcd/diffusion.hpp"
#include "pcd/spectra.hpp"

namespace pcd {

enum class Scenario { Origin, Pcd, Undersample, Resample };

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& text);

/// A scenario's dataset. `data` holds every row that takes part in
/// localization (real rows first, in their original order, then synthetic
/// ones); `source_row[i]` is the original row behind data row i, or -1 for a
/// generated row.
struct AugmentedDataset {
  Scenario scenario = Scenario::Origin;
  CoverageDataset data;
  std::vector<Eigen::Index> source_row;

  Eigen::Index synthetic_count() const;
  /// The rows flagged synthetic, in order (count x N).
  Eigen::MatrixXi synthetic_rows() const;
};

/// 1 iff value > 0.
Eigen::VectorXi binarize(const Eigen::VectorXd& sample);

/// Length-N row with `bits` at the (1-based) context columns, 0 elsewhere.
Eigen::VectorXi embed_row(const Eigen::VectorXi& bits, const std::vector<StmtIndex>& columns, Eigen::Index n);

struct AugmentConfig {
  double gamma = 2.0;
  DpmOptions solver;          // steps / order / spacing
  bool reject_empty = false;  // redraw rows that binarize to all zeros
  int max_redraws = 16;       // rounds of redraws before keeping what is left
  std::uint64_t seed = 0;
};

/// Adds (#pass - #fail) failing rows drawn from `model` conditioned on Fail,
/// decoded by sign and zero-filled outside ctx.stm_fusion. A dataset that is
/// not fail-minority is returned unchanged.
AugmentedDataset generate_until_balanced(NoiseModel& model, const NoiseSchedule& sched,
                                         const CoverageDataset& dataset, const FusedContext& ctx,
                                         const AugmentConfig& cfg);

AugmentedDataset origin(const CoverageDataset& dataset);

/// Drops passing rows uniformly without replacement until #pass = #fail.
AugmentedDataset undersample(const CoverageDataset& dataset, std::mt19937_64& rng);

/// Duplicates failing rows uniformly with replacement until #fail = #pass.
AugmentedDataset resample(const CoverageDataset& dataset, std::mt19937_64& rng);

}  // namespace pcd
