#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "pcd/neuralcore.hpp"

namespace pcd {

/// Linear beta schedule. Arrays have T+1 entries; entry 0 is the clean
/// state (beta 0, alpha_bar 1, sigma2 0).
struct NoiseSchedule {
  int T = 0;
  Eigen::VectorXd beta, alpha, alpha_bar, sigma2;

  /// alpha_bar at fractional t in [0, T]; log(alpha_bar) is interpolated
  /// linearly between integer knots.
  double alpha_bar_at(double t) const;
  /// log(sqrt(abar) / sqrt(1 - abar)); +inf at t = 0.
  double lambda(double t) const;
  /// Inverse of lambda on [0, T].
  double t_of_lambda(double lambda) const;
};

NoiseSchedule make_schedule(int T = 1000, double beta1 = 1e-4, double betaT = 0.02);

/// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps. Works column-wise on K x B.
Eigen::MatrixXd q_sample(const Eigen::MatrixXd& x0, int t, const Eigen::MatrixXd& eps,
                         const NoiseSchedule& sched);

/// One step of the forward Markov chain: x_t = sqrt(alpha_t) x_{t-1} + sqrt(beta_t) z.
Eigen::MatrixXd q_step(const Eigen::MatrixXd& x_prev, int t, const Eigen::MatrixXd& z,
                       const NoiseSchedule& sched);

/// Noise predictor over K x B batches (one column per sample).
class NoiseModel {
 public:
  virtual ~NoiseModel() = default;
  virtual Eigen::MatrixXd predict(const Eigen::MatrixXd& x, const std::vector<double>& t,
                                  const std::vector<ClassLabel>& labels) = 0;
};

class TrainableNoiseModel : public NoiseModel {
 public:
  /// Prediction whose intermediates are kept for backward().
  virtual Eigen::MatrixXd forward_train(const Eigen::MatrixXd& x, const std::vector<double>& t,
                                        const std::vector<ClassLabel>& labels) = 0;
  /// dL/d(prediction) of the last forward_train.
  virtual void backward(const Eigen::MatrixXd& dpred) = 0;
  virtual void apply_update() = 0;
};

/// Denoiser<float> behind the model interfaces, with its AdamW state.
class DenoiserModel : public TrainableNoiseModel {
 public:
  DenoiserModel(const DenoiserConfig& cfg, std::uint64_t seed, AdamWConfig opt = {});

  Eigen::MatrixXd predict(const Eigen::MatrixXd& x, const std::vector<double>& t,
                          const std::vector<ClassLabel>& labels) override;
  Eigen::MatrixXd forward_train(const Eigen::MatrixXd& x, const std::vector<double>& t,
                                const std::vector<ClassLabel>& labels) override;
  void backward(const Eigen::MatrixXd& dpred) override;
  void apply_update() override;

  Denoiser<float>& net() { return net_; }

 private:
  Denoiser<float> net_;
  AdamW<float> opt_;
  Eigen::Index rows_ = 0;
};

struct TrainConfig {
  int T = 1000;
  double lr = 3e-4;
  double beta1 = 1e-4;
  double betaT = 0.02;
  double gamma = 2.0;
  double p_uncond = 0.1;
  int batch_size = 16;
  int epochs = 400;
  int patience = 50;
  double min_delta = 1e-4;  // relative improvement that resets patience
  std::uint64_t seed = 0;
};

struct TrainStepResult {
  double loss = 0.0;
  int unconditional = 0;  // rows whose label was dropped to Null
};

/// One classifier-free training step on the K x B batch `x0` (entries in
/// {-1,+1}): draws t and eps per column, drops labels to Null with
/// probability p_uncond, computes mean ||eps - eps_hat||^2, backpropagates
/// and applies one optimizer update.
TrainStepResult train_step(TrainableNoiseModel& model, const Eigen::MatrixXd& x0,
                           const std::vector<ClassLabel>& labels, const TrainConfig& cfg,
                           const NoiseSchedule& sched, std::mt19937_64& rng);

struct TrainReport {
  std::vector<double> step_losses;
  std::vector<double> epoch_losses;
  int epochs_run = 0;
  bool stopped_early = false;
};

/// Shuffled mini-batch epochs with early stopping once the epoch loss has
/// not improved for `patience` epochs.
TrainReport train(TrainableNoiseModel& model, const Eigen::MatrixXd& x0,
                  const std::vector<ClassLabel>& labels, const TrainConfig& cfg,
                  const NoiseSchedule& sched);

/// (1 + gamma) eps(x, t, c) - gamma eps(x, t, null).
Eigen::MatrixXd guided_eps(NoiseModel& model, const Eigen::MatrixXd& x, const std::vector<double>& t,
                           ClassLabel label, double gamma);

struct AncestralOptions {
  /// Scale of the injected noise relative to the posterior std: 1 gives the
  /// DDPM chain, 0 the deterministic one.
  double eta = 1.0;
  std::optional<Eigen::MatrixXd> x_T;  // K x n start; drawn when absent
};

/// `n` samples of width K from x_T ~ N(0, I), t = T..1. Sample i draws all of
/// its noise from substream ("sample", i) of `seed`.
Eigen::MatrixXd ancestral_sample(NoiseModel& model, const NoiseSchedule& sched, Eigen::Index width,
                                 Eigen::Index n, ClassLabel label, double gamma, std::uint64_t seed,
                                 const AncestralOptions& opts = {});

enum class TimeSpacing {
  LogSnr,   // uniform in lambda from t = T to t = 1
  Discrete  // t_i = T (1 - i / steps), ending at t = 0
};

struct DpmOptions {
  int steps = 25;
  int order = 2;
  TimeSpacing spacing = TimeSpacing::LogSnr;
  std::optional<Eigen::MatrixXd> x_T;
};

/// Time grid used by dpm_solve, from T downwards.
std::vector<double> dpm_timesteps(const NoiseSchedule& sched, int steps, TimeSpacing spacing);

/// DPM-Solver on the probability-flow ODE with the guided noise prediction.
/// Order 2 is the single-step midpoint variant; a step ending at t = 0 falls
/// back to order 1.
Eigen::MatrixXd dpm_solve(NoiseModel& model, const NoiseSchedule& sched, Eigen::Index width,
                          Eigen::Index n, ClassLabel label, double gamma, std::uint64_t seed,
                          const DpmOptions& opts = {});

/// K x n standard normal start, column i from substream ("sample", i).
Eigen::MatrixXd initial_noise(Eigen::Index width, Eigen::Index n, std::uint64_t seed);

}  // namespace pcd
