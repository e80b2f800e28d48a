#include "pcd/dlfl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pcd/error.hpp"
#include "pcd/rng.hpp"

namespace pcd {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd sigmoid(const MatrixXd& z) { return (1.0 / (1.0 + (-z.array()).exp())).matrix(); }

// log(1 + e^z) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

MlpFl::MlpFl(Eigen::Index inputs, const MlpFlConfig& cfg) : inputs_(inputs), opt_(cfg.optimizer) {
  auto rng = substream(cfg.seed, "mlpfl-init");
  l1_ = Dense<double>(static_cast<int>(inputs), cfg.hidden, rng);
  l2_ = Dense<double>(cfg.hidden, cfg.hidden, rng);
  l3_ = Dense<double>(cfg.hidden, 1, rng);
}

ParamList<double> MlpFl::parameters() {
  ParamList<double> out;
  l1_.collect(out, "fc1.");
  l2_.collect(out, "fc2.");
  l3_.collect(out, "fc3.");
  return out;
}

MatrixXd MlpFl::logits(const MatrixXd& x) {
  if (x.cols() != inputs_) throw ShapeMismatch("MLP-FL expects " + std::to_string(inputs_) + " columns");
  h1_ = sigmoid(l1_.forward(x.transpose()));
  h2_ = sigmoid(l2_.forward(h1_));
  return l3_.forward(h2_);  // 1 x M
}

VectorXd MlpFl::predict(const MatrixXd& x) {
  const MatrixXd z = logits(x);
  VectorXd p(z.cols());
  constexpr double lo = std::numeric_limits<double>::min(), hi = 1.0 - std::numeric_limits<double>::epsilon() / 2;
  for (Eigen::Index i = 0; i < z.cols(); ++i) p(i) = std::clamp(1.0 / (1.0 + std::exp(-z(0, i))), lo, hi);
  return p;
}

double MlpFl::loss(const MatrixXd& x, const VectorXd& y) {
  const MatrixXd z = logits(x);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < z.cols(); ++i) sum += softplus(z(0, i)) - y(i) * z(0, i);
  return sum / static_cast<double>(z.cols());
}

double MlpFl::step(const MatrixXd& x, const VectorXd& y) {
  for (auto* p : parameters()) p->zero_grad();
  const MatrixXd z = logits(x);
  const auto m = static_cast<double>(z.cols());
  double sum = 0.0;
  MatrixXd dz(1, z.cols());
  for (Eigen::Index i = 0; i < z.cols(); ++i) {
    sum += softplus(z(0, i)) - y(i) * z(0, i);
    dz(0, i) = (1.0 / (1.0 + std::exp(-z(0, i))) - y(i)) / m;
  }
  const MatrixXd dh2 = l3_.backward(dz);
  const MatrixXd da2 = (dh2.array() * h2_.array() * (1.0 - h2_.array())).matrix();
  const MatrixXd dh1 = l2_.backward(da2);
  const MatrixXd da1 = (dh1.array() * h1_.array() * (1.0 - h1_.array())).matrix();
  l1_.backward(da1);
  opt_.step(parameters());
  return sum / m;
}

MlpFlResult train_mlpfl(const CoverageDataset& dataset, const MlpFlConfig& cfg) {
  const auto fails = dataset.failing();
  if (dataset.tests() == 0 || fails == 0 || fails == dataset.tests())
    throw SingleClassDataset("MLP-FL needs both passing and failing rows");
  const MatrixXd x = dataset.matrix.cast<double>();
  const VectorXd y = dataset.errors.cast<double>();
  MlpFlResult res;
  res.model = std::make_unique<MlpFl>(dataset.statements(), cfg);
  for (int s = 0; s < cfg.steps; ++s) res.model->step(x, y);
  res.final_loss = res.model->loss(x, y);
  return res;
}

VectorXd virtual_suspiciousness(MlpFl& model) {
  return model.predict(MatrixXd::Identity(model.inputs(), model.inputs()));
}

}  // namespace pcd
