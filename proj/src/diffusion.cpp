#include "pcd/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pcd/error.hpp"
#include "pcd/rng.hpp"

namespace pcd {

using Eigen::Index;
using Eigen::MatrixXd;

NoiseSchedule make_schedule(int T, double beta1, double betaT) {
  if (T < 2) throw InvalidRange("T must be at least 2");
  if (!(beta1 > 0.0) || !(beta1 <= betaT) || !(betaT < 1.0))
    throw InvalidRange("need 0 < beta1 <= betaT < 1");
  NoiseSchedule s;
  s.T = T;
  s.beta.resize(T + 1);
  s.alpha.resize(T + 1);
  s.alpha_bar.resize(T + 1);
  s.sigma2.resize(T + 1);
  s.beta(0) = 0.0;
  s.alpha(0) = 1.0;
  s.alpha_bar(0) = 1.0;
  s.sigma2(0) = 0.0;
  for (int t = 1; t <= T; ++t) {
    s.beta(t) = beta1 + (betaT - beta1) * static_cast<double>(t - 1) / static_cast<double>(T - 1);
    s.alpha(t) = 1.0 - s.beta(t);
    s.alpha_bar(t) = s.alpha_bar(t - 1) * s.alpha(t);
    s.sigma2(t) = (1.0 - s.alpha_bar(t - 1)) / (1.0 - s.alpha_bar(t)) * s.beta(t);
  }
  return s;
}

double NoiseSchedule::alpha_bar_at(double t) const {
  if (!(t >= 0.0 && t <= T)) throw TimestepOutOfRange("t = " + std::to_string(t));
  const int i = std::min(static_cast<int>(std::floor(t)), T - 1);
  const double f = t - i;
  if (f == 0.0) return alpha_bar(i);
  return std::exp((1.0 - f) * std::log(alpha_bar(i)) + f * std::log(alpha_bar(i + 1)));
}

double NoiseSchedule::lambda(double t) const {
  const double ab = alpha_bar_at(t);
  if (ab >= 1.0) return std::numeric_limits<double>::infinity();
  return 0.5 * (std::log(ab) - std::log1p(-ab));
}

double NoiseSchedule::t_of_lambda(double lam) const {
  // alpha_bar = sigmoid(2 lambda)
  const double target = -std::log1p(std::exp(-2.0 * lam));
  if (target >= 0.0) return 0.0;
  if (target <= std::log(alpha_bar(T))) return T;
  int lo = 0, hi = T;  // log abar(lo) >= target > log abar(hi)
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    if (std::log(alpha_bar(mid)) >= target)
      lo = mid;
    else
      hi = mid;
  }
  const double a = std::log(alpha_bar(lo)), b = std::log(alpha_bar(hi));
  return lo + (a - target) / (a - b);
}

namespace {

void check_t(int t, const NoiseSchedule& sched) {
  if (t < 1 || t > sched.T)
    throw TimestepOutOfRange("t = " + std::to_string(t) + " outside [1, " + std::to_string(sched.T) + "]");
}

}  // namespace

MatrixXd q_sample(const MatrixXd& x0, int t, const MatrixXd& eps, const NoiseSchedule& sched) {
  check_t(t, sched);
  if (x0.rows() != eps.rows() || x0.cols() != eps.cols()) throw ShapeMismatch("x0 and eps differ in shape");
  return std::sqrt(sched.alpha_bar(t)) * x0 + std::sqrt(1.0 - sched.alpha_bar(t)) * eps;
}

MatrixXd q_step(const MatrixXd& x_prev, int t, const MatrixXd& z, const NoiseSchedule& sched) {
  check_t(t, sched);
  return std::sqrt(sched.alpha(t)) * x_prev + std::sqrt(sched.beta(t)) * z;
}

// ---------------------------------------------------------------- model adapter

DenoiserModel::DenoiserModel(const DenoiserConfig& cfg, std::uint64_t seed, AdamWConfig opt)
    : net_(cfg, seed), opt_(opt) {}

MatrixXd DenoiserModel::predict(const MatrixXd& x, const std::vector<double>& t,
                                const std::vector<ClassLabel>& labels) {
  const Mat<float> in = Eigen::Map<const MatrixXd>(x.data(), 1, x.size()).cast<float>();
  const Mat<float> out = net_.forward(in, t, labels);
  return Eigen::Map<const Mat<float>>(out.data(), x.rows(), x.cols()).cast<double>();
}

MatrixXd DenoiserModel::forward_train(const MatrixXd& x, const std::vector<double>& t,
                                      const std::vector<ClassLabel>& labels) {
  net_.zero_grad();
  rows_ = x.rows();
  return predict(x, t, labels);
}

void DenoiserModel::backward(const MatrixXd& dpred) {
  const Mat<float> dy = Eigen::Map<const MatrixXd>(dpred.data(), 1, dpred.size()).cast<float>();
  net_.backward(dy);
}

void DenoiserModel::apply_update() { opt_.step(net_.parameters()); }

// ---------------------------------------------------------------- training

TrainStepResult train_step(TrainableNoiseModel& model, const MatrixXd& x0,
                           const std::vector<ClassLabel>& labels, const TrainConfig& cfg,
                           const NoiseSchedule& sched, std::mt19937_64& rng) {
  const Index b = x0.cols();
  if (b == 0 || x0.rows() == 0) throw EmptyBatch("training batch is empty");
  if (static_cast<Index>(labels.size()) != b) throw ShapeMismatch("one label per column required");

  std::uniform_int_distribution<int> pick_t(1, sched.T);
  std::normal_distribution<double> normal;
  std::bernoulli_distribution drop(cfg.p_uncond);

  TrainStepResult res;
  std::vector<double> t(static_cast<std::size_t>(b));
  std::vector<ClassLabel> c(labels);
  MatrixXd eps(x0.rows(), b), xt(x0.rows(), b);
  for (Index j = 0; j < b; ++j) {
    const int tj = pick_t(rng);
    t[static_cast<std::size_t>(j)] = tj;
    for (Index i = 0; i < x0.rows(); ++i) eps(i, j) = normal(rng);
    if (drop(rng)) {
      c[static_cast<std::size_t>(j)] = ClassLabel::Null;
      ++res.unconditional;
    }
    xt.col(j) = std::sqrt(sched.alpha_bar(tj)) * x0.col(j) + std::sqrt(1.0 - sched.alpha_bar(tj)) * eps.col(j);
  }

  const MatrixXd diff = model.forward_train(xt, t, c) - eps;
  res.loss = diff.squaredNorm() / static_cast<double>(b);
  model.backward(2.0 * diff / static_cast<double>(b));
  model.apply_update();
  return res;
}

TrainReport train(TrainableNoiseModel& model, const MatrixXd& x0, const std::vector<ClassLabel>& labels,
                  const TrainConfig& cfg, const NoiseSchedule& sched) {
  if (x0.cols() == 0) throw EmptyBatch("no training rows");
  auto rng = substream(cfg.seed, "training");
  std::vector<Index> order(static_cast<std::size_t>(x0.cols()));
  std::iota(order.begin(), order.end(), Index{0});
  const auto bs = static_cast<std::size_t>(std::max(1, cfg.batch_size));

  TrainReport rep;
  double best = std::numeric_limits<double>::infinity();
  int since = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      MatrixXd batch(x0.rows(), static_cast<Index>(end - start));
      std::vector<ClassLabel> bl;
      for (std::size_t k = start; k < end; ++k) {
        batch.col(static_cast<Index>(k - start)) = x0.col(order[k]);
        bl.push_back(labels[static_cast<std::size_t>(order[k])]);
      }
      const auto r = train_step(model, batch, bl, cfg, sched, rng);
      rep.step_losses.push_back(r.loss);
      sum += r.loss;
      ++batches;
    }
    const double epoch_loss = sum / batches;
    rep.epoch_losses.push_back(epoch_loss);
    rep.epochs_run = epoch + 1;
    if (epoch_loss < best * (1.0 - cfg.min_delta)) {
      best = epoch_loss;
      since = 0;
    } else if (++since >= cfg.patience) {
      rep.stopped_early = true;
      break;
    }
  }
  return rep;
}

// ---------------------------------------------------------------- sampling

MatrixXd guided_eps(NoiseModel& model, const MatrixXd& x, const std::vector<double>& t, ClassLabel label,
                    double gamma) {
  const Index n = x.cols();
  if (gamma == 0.0) return model.predict(x, t, std::vector<ClassLabel>(static_cast<std::size_t>(n), label));
  MatrixXd both(x.rows(), 2 * n);
  both << x, x;
  std::vector<double> tt(t);
  tt.insert(tt.end(), t.begin(), t.end());
  std::vector<ClassLabel> c(static_cast<std::size_t>(n), label);
  c.resize(static_cast<std::size_t>(2 * n), ClassLabel::Null);
  const MatrixXd e = model.predict(both, tt, c);
  return (1.0 + gamma) * e.leftCols(n) - gamma * e.rightCols(n);
}

MatrixXd initial_noise(Index width, Index n, std::uint64_t seed) {
  MatrixXd x(width, n);
  for (Index j = 0; j < n; ++j) {
    auto rng = substream(seed, "sample", static_cast<std::uint64_t>(j));
    std::normal_distribution<double> normal;
    for (Index i = 0; i < width; ++i) x(i, j) = normal(rng);
  }
  return x;
}

MatrixXd ancestral_sample(NoiseModel& model, const NoiseSchedule& sched, Index width, Index n,
                          ClassLabel label, double gamma, std::uint64_t seed, const AncestralOptions& opts) {
  std::vector<std::mt19937_64> streams;
  for (Index j = 0; j < n; ++j) streams.push_back(substream(seed, "sample", static_cast<std::uint64_t>(j)));
  std::normal_distribution<double> normal;

  MatrixXd x(width, n);
  if (opts.x_T) {
    if (opts.x_T->rows() != width || opts.x_T->cols() != n) throw ShapeMismatch("x_T has the wrong shape");
    x = *opts.x_T;
  } else {
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < width; ++i) x(i, j) = normal(streams[static_cast<std::size_t>(j)]);
  }

  for (int t = sched.T; t >= 1; --t) {
    const std::vector<double> tv(static_cast<std::size_t>(n), static_cast<double>(t));
    const MatrixXd eps = guided_eps(model, x, tv, label, gamma);
    const double ab = sched.alpha_bar(t), ab_prev = sched.alpha_bar(t - 1);
    const double sigma = opts.eta * std::sqrt(sched.sigma2(t));
    const double dir = std::sqrt(std::max(0.0, 1.0 - ab_prev - sigma * sigma));
    const MatrixXd x0_hat = (x - std::sqrt(1.0 - ab) * eps) / std::sqrt(ab);
    x = std::sqrt(ab_prev) * x0_hat + dir * eps;
    if (t > 1 && sigma > 0.0)
      for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < width; ++i) x(i, j) += sigma * normal(streams[static_cast<std::size_t>(j)]);
  }
  return x;
}

std::vector<double> dpm_timesteps(const NoiseSchedule& sched, int steps, TimeSpacing spacing) {
  if (steps < 1) throw InvalidRange("steps must be at least 1");
  std::vector<double> ts(static_cast<std::size_t>(steps) + 1);
  if (spacing == TimeSpacing::Discrete) {
    for (int i = 0; i <= steps; ++i) ts[static_cast<std::size_t>(i)] = sched.T * (1.0 - static_cast<double>(i) / steps);
  } else {
    const double lo = sched.lambda(sched.T), hi = sched.lambda(1.0);
    for (int i = 0; i <= steps; ++i)
      ts[static_cast<std::size_t>(i)] = sched.t_of_lambda(lo + (hi - lo) * static_cast<double>(i) / steps);
    ts.front() = sched.T;
    ts.back() = 1.0;
  }
  return ts;
}

MatrixXd dpm_solve(NoiseModel& model, const NoiseSchedule& sched, Index width, Index n, ClassLabel label,
                   double gamma, std::uint64_t seed, const DpmOptions& opts) {
  if (opts.order != 1 && opts.order != 2) throw InvalidOrder("order must be 1 or 2, got " + std::to_string(opts.order));
  const auto ts = dpm_timesteps(sched, opts.steps, opts.spacing);

  MatrixXd x;
  if (opts.x_T) {
    if (opts.x_T->rows() != width || opts.x_T->cols() != n) throw ShapeMismatch("x_T has the wrong shape");
    x = *opts.x_T;
  } else {
    x = initial_noise(width, n, seed);
  }

  auto alpha = [&](double t) { return std::sqrt(sched.alpha_bar_at(t)); };
  auto sigma = [&](double t) { return std::sqrt(1.0 - sched.alpha_bar_at(t)); };
  auto eps_at = [&](const MatrixXd& xx, double t) {
    return guided_eps(model, xx, std::vector<double>(static_cast<std::size_t>(n), t), label, gamma);
  };

  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    const double s = ts[i], t = ts[i + 1];
    const MatrixXd eps_s = eps_at(x, s);
    if (opts.order == 2 && t > 0.0) {
      const double lam_s = sched.lambda(s), h = sched.lambda(t) - lam_s;
      const double m = sched.t_of_lambda(lam_s + 0.5 * h);
      const MatrixXd u = (alpha(m) / alpha(s)) * x - sigma(m) * std::expm1(0.5 * h) * eps_s;
      const MatrixXd eps_m = eps_at(u, m);
      x = (alpha(t) / alpha(s)) * x - sigma(t) * std::expm1(h) * eps_m;
    } else {
      // sigma_t (e^h - 1) rewritten so that t = 0 (lambda = inf) stays finite.
      const double a_s = alpha(s), a_t = alpha(t);
      x = (a_t / a_s) * x - (a_t * sigma(s) / a_s - sigma(t)) * eps_s;
    }
  }
  return x;
}

}  // namespace pcd
