#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include <Eigen/Core>

#include "pcd/neuralcore.hpp"
#include "pcd/spectra.hpp"

namespace pcd {

struct MlpFlConfig {
  int hidden = 64;
  int steps = 2000;  // full-batch optimizer steps
  AdamWConfig optimizer{1e-2, 0.9, 0.999, 1e-8, 0.0};
  std::uint64_t seed = 0;
};

/// N -> hidden -> hidden -> 1 with sigmoid activations; the output is the
/// predicted failure probability of a coverage vector.
class MlpFl {
 public:
  MlpFl(Eigen::Index inputs, const MlpFlConfig& cfg);

  /// One probability per row of `x` (rows are coverage vectors).
  Eigen::VectorXd predict(const Eigen::MatrixXd& x);
  /// Binary cross-entropy of the current parameters on (x, y).
  double loss(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);
  /// One full-batch AdamW step; returns the loss before the update.
  double step(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

  Eigen::Index inputs() const { return inputs_; }
  ParamList<double> parameters();

 private:
  Eigen::MatrixXd logits(const Eigen::MatrixXd& x);

  Eigen::Index inputs_;
  Dense<double> l1_, l2_, l3_;
  AdamW<double> opt_;
  Eigen::MatrixXd h1_, h2_;
};

struct MlpFlResult {
  std::unique_ptr<MlpFl> model;
  double final_loss = 0.0;
};

/// Trains on every row of `dataset` (label = errors). Throws
/// SingleClassDataset unless both classes are present.
MlpFlResult train_mlpfl(const CoverageDataset& dataset, const MlpFlConfig& cfg = {});

/// Model output on the one-hot virtual test of each statement.
Eigen::VectorXd virtual_suspiciousness(MlpFl& model);

}  // namespace pcd
