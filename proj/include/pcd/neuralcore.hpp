#pragma once

// Layers with hand-written backward passes, assembled into a small 1-D U-Net
// style noise predictor. Activations are C x (B*W) matrices: column b*W + w
// holds position w of sample b.

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pcd/error.hpp"

namespace pcd {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

template <typename S>
struct Param {
  std::string name;
  Mat<S> value;
  Mat<S> grad;

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

template <typename S>
using ParamList = std::vector<Param<S>*>;

/// Batch of 1-D signals; value and grad are channels x (batch*width).
template <typename S>
struct Tensor1D {
  Eigen::Index batch = 0, channels = 0, width = 0;
  Mat<S> value;
  Mat<S> grad;

  Tensor1D() = default;
  Tensor1D(Eigen::Index b, Eigen::Index c, Eigen::Index w)
      : batch(b), channels(c), width(w), value(Mat<S>::Zero(c, b * w)), grad(Mat<S>::Zero(c, b * w)) {}
};

enum class ClassLabel : int { Pass = 0, Fail = 1, Null = 2 };

template <typename S>
class Dense {
 public:
  Dense() = default;
  Dense(int in, int out, std::mt19937_64& rng, bool zero_init = false);

  Mat<S> forward(const Mat<S>& x);
  Mat<S> backward(const Mat<S>& dy);
  void collect(ParamList<S>& out, const std::string& prefix);

  Param<S> w, b;

 private:
  Mat<S> x_;
};

template <typename S>
class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(int in, int out, int kernel, int stride, std::mt19937_64& rng, bool zero_init = false);

  Mat<S> forward(const Mat<S>& x, Eigen::Index batch);
  Mat<S> backward(const Mat<S>& dy);
  void collect(ParamList<S>& out, const std::string& prefix);
  Eigen::Index out_width(Eigen::Index in_width) const;

  Param<S> w, b;  // w is out x (in*kernel)

 private:
  int in_ = 0, kernel_ = 1, stride_ = 1, pad_ = 0;
  Eigen::Index batch_ = 0, win_ = 0, wout_ = 0;
  Mat<S> col_;
};

template <typename S>
class GroupNorm {
 public:
  GroupNorm() = default;
  GroupNorm(int channels, int groups, double eps = 1e-5);

  Mat<S> forward(const Mat<S>& x, Eigen::Index batch);
  Mat<S> backward(const Mat<S>& dy);
  void collect(ParamList<S>& out, const std::string& prefix);

  Param<S> gamma, beta;

 private:
  int groups_ = 1;
  double eps_ = 1e-5;
  Eigen::Index batch_ = 0;
  Mat<S> xhat_;
  std::vector<S> inv_std_;  // per (sample, group)
};

template <typename S>
class SiLU {
 public:
  Mat<S> forward(const Mat<S>& x);
  Mat<S> backward(const Mat<S>& dy) const;

 private:
  Mat<S> x_;
};

/// Nearest-neighbour x2 along the width.
template <typename S>
Mat<S> upsample2(const Mat<S>& x, Eigen::Index batch);
template <typename S>
Mat<S> upsample2_backward(const Mat<S>& dy, Eigen::Index batch);

/// GroupNorm, single-head dot-product attention across positions, residual.
template <typename S>
class Attention {
 public:
  Attention() = default;
  Attention(int channels, int groups, std::mt19937_64& rng);

  Mat<S> forward(const Mat<S>& x, Eigen::Index batch);
  Mat<S> backward(const Mat<S>& dy);
  void collect(ParamList<S>& out, const std::string& prefix);

  /// Row-stochastic W x W weights of the last forward, one per sample.
  const std::vector<Mat<S>>& weights() const { return attn_; }

 private:
  GroupNorm<S> norm_;
  Dense<S> q_, k_, v_, o_;
  Eigen::Index batch_ = 0;
  S scale_ = 1;
  Mat<S> qm_, km_, vm_;
  std::vector<Mat<S>> attn_;
};

/// GN-SiLU-Conv, + projected time embedding, GN-SiLU-Conv, + skip.
template <typename S>
class ResBlock {
 public:
  ResBlock() = default;
  ResBlock(int in, int out, int temb_dim, int groups, std::mt19937_64& rng);

  /// `temb` is the already activated embedding, temb_dim x batch.
  Mat<S> forward(const Mat<S>& x, const Mat<S>& temb, Eigen::Index batch);
  /// Returns dx; adds the embedding gradient into `dtemb`.
  Mat<S> backward(const Mat<S>& dy, Mat<S>& dtemb);
  void collect(ParamList<S>& out, const std::string& prefix);

 private:
  GroupNorm<S> gn1_, gn2_;
  SiLU<S> act1_, act2_;
  Conv1d<S> conv1_, conv2_, skip_;
  Dense<S> temb_proj_;
  bool has_skip_ = false;
  Eigen::Index batch_ = 0, width_ = 0;
};

/// Sinusoidal embedding of (possibly fractional) timesteps, dim x batch.
template <typename S>
Mat<S> timestep_embedding(const std::vector<double>& t, int dim);

struct DenoiserConfig {
  int base_channels = 32;
  int bottleneck_channels = 64;
  int groups = 8;
  int temb_dim = 32;
  bool zero_output = true;
};

/// conv_in -> res1 -> attn1 -> down -> res2 -> attn2 -> up -> concat(skip)
/// -> res3 -> attn3 -> GN-SiLU-conv_out.
template <typename S>
class Denoiser {
 public:
  Denoiser(const DenoiserConfig& cfg, std::uint64_t seed);

  /// x is 1 x (batch*width); width must be even and at least 4.
  Mat<S> forward(const Mat<S>& x, const std::vector<double>& t,
                 const std::vector<ClassLabel>& labels);
  Tensor1D<S> forward(const Tensor1D<S>& x, const std::vector<double>& t,
                      const std::vector<ClassLabel>& labels);
  /// Accumulates parameter gradients for the last forward; returns dL/dx.
  Mat<S> backward(const Mat<S>& dy);

  ParamList<S> parameters();
  void zero_grad();
  std::size_t parameter_count();
  const DenoiserConfig& config() const { return cfg_; }

 private:
  DenoiserConfig cfg_;
  Conv1d<S> conv_in_, down_, up_, skip_proj_, conv_out_;
  ResBlock<S> res1_, res2_, res3_;
  Attention<S> attn1_, attn2_, attn3_;
  GroupNorm<S> gn_out_;
  SiLU<S> act_out_, act_mlp_, act_temb_;
  Dense<S> temb1_, temb2_;
  Param<S> class_table_;  // temb_dim x 3

  Eigen::Index batch_ = 0;
  std::vector<ClassLabel> labels_;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // "<param>[index]"
  std::size_t checked = 0;
};

/// Central-difference check of every entry of `params`. `loss` evaluates the
/// scalar loss; `backward` recomputes the analytic gradients (after a forward)
/// into Param::grad. Relative error is |a-n| / max(|a|, |n|, floor).
GradCheckResult check_gradients(const ParamList<double>& params, const std::function<double()>& loss,
                                const std::function<void()>& backward, double h = 1e-5,
                                double floor = 1e-6);

/// Denoiser check with loss = sum(w .* out), w drawn from `seed`.
GradCheckResult grad_check(Denoiser<double>& net, const Mat<double>& x, const std::vector<double>& t,
                           const std::vector<ClassLabel>& labels, std::uint64_t seed = 7);

struct AdamWConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

template <typename S>
class AdamW {
 public:
  explicit AdamW(AdamWConfig cfg = {}) : cfg_(cfg) {}

  /// Decoupled decay then the bias-corrected Adam step. Throws
  /// NonFiniteGradient before touching any parameter.
  void step(const ParamList<S>& params);
  long steps() const { return step_; }
  const AdamWConfig& config() const { return cfg_; }

 private:
  AdamWConfig cfg_;
  long step_ = 0;
  std::vector<Mat<S>> m_, v_;
};

template <typename S>
std::string checkpoint_to_string(const ParamList<S>& params);
template <typename S>
void checkpoint_from_string(const ParamList<S>& params, const std::string& text);
template <typename S>
void save_checkpoint(const ParamList<S>& params, const std::string& path);
template <typename S>
void load_checkpoint(const ParamList<S>& params, const std::string& path);

}  // namespace pcd
