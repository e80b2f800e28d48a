#include "pcd/neuralcore.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace pcd {

using Eigen::Index;

namespace {

template <typename S>
void init_uniform(Mat<S>& m, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i) m(i, j) = static_cast<S>(u(rng));
}

template <typename S>
void make_param(Param<S>& p, Index rows, Index cols) {
  p.value = Mat<S>::Zero(rows, cols);
  p.grad = Mat<S>::Zero(rows, cols);
}

template <typename S>
void add_param(ParamList<S>& out, Param<S>& p, const std::string& prefix, const char* name) {
  p.name = prefix + name;
  out.push_back(&p);
}

}  // namespace

// ---------------------------------------------------------------- Dense

template <typename S>
Dense<S>::Dense(int in, int out, std::mt19937_64& rng, bool zero_init) {
  make_param(w, out, in);
  make_param(b, out, 1);
  if (!zero_init) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    init_uniform(w.value, bound, rng);
    init_uniform(b.value, bound, rng);
  }
}

template <typename S>
Mat<S> Dense<S>::forward(const Mat<S>& x) {
  if (x.rows() != w.value.cols())
    throw ShapeMismatch("dense expects " + std::to_string(w.value.cols()) + " inputs, got " +
                        std::to_string(x.rows()));
  x_ = x;
  Mat<S> y(w.value.rows(), x.cols());
  y.noalias() = w.value * x;
  y.colwise() += b.value.col(0);
  return y;
}

template <typename S>
Mat<S> Dense<S>::backward(const Mat<S>& dy) {
  w.grad.noalias() += dy * x_.transpose();
  b.grad.col(0) += dy.rowwise().sum().transpose();
  Mat<S> dx(w.value.cols(), dy.cols());
  dx.noalias() = w.value.transpose() * dy;
  return dx;
}

template <typename S>
void Dense<S>::collect(ParamList<S>& out, const std::string& prefix) {
  add_param(out, w, prefix, "weight");
  add_param(out, b, prefix, "bias");
}

// ---------------------------------------------------------------- Conv1d

template <typename S>
Conv1d<S>::Conv1d(int in, int out, int kernel, int stride, std::mt19937_64& rng, bool zero_init)
    : in_(in), kernel_(kernel), stride_(stride), pad_(kernel / 2) {
  make_param(w, out, static_cast<Index>(in) * kernel);
  make_param(b, out, 1);
  if (!zero_init) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in * kernel));
    init_uniform(w.value, bound, rng);
    init_uniform(b.value, bound, rng);
  }
}

template <typename S>
Index Conv1d<S>::out_width(Index in_width) const {
  return (in_width + 2 * pad_ - kernel_) / stride_ + 1;
}

template <typename S>
Mat<S> Conv1d<S>::forward(const Mat<S>& x, Index batch) {
  if (x.rows() != in_ || batch < 1 || x.cols() % batch)
    throw ShapeMismatch("conv1d input is " + std::to_string(x.rows()) + "x" +
                        std::to_string(x.cols()) + ", expected " + std::to_string(in_) + " channels");
  batch_ = batch;
  win_ = x.cols() / batch;
  wout_ = out_width(win_);
  if (wout_ < 1) throw ShapeMismatch("conv1d input too narrow");

  col_.setZero(static_cast<Index>(in_) * kernel_, batch * wout_);
  for (Index bi = 0; bi < batch; ++bi)
    for (Index wo = 0; wo < wout_; ++wo)
      for (int j = 0; j < kernel_; ++j) {
        const Index src = wo * stride_ + j - pad_;
        if (src < 0 || src >= win_) continue;
        for (int ci = 0; ci < in_; ++ci)
          col_(static_cast<Index>(ci) * kernel_ + j, bi * wout_ + wo) = x(ci, bi * win_ + src);
      }
  Mat<S> y(w.value.rows(), col_.cols());
  y.noalias() = w.value * col_;
  y.colwise() += b.value.col(0);
  return y;
}

template <typename S>
Mat<S> Conv1d<S>::backward(const Mat<S>& dy) {
  w.grad.noalias() += dy * col_.transpose();
  b.grad.col(0) += dy.rowwise().sum().transpose();
  Mat<S> dcol(col_.rows(), col_.cols());
  dcol.noalias() = w.value.transpose() * dy;
  Mat<S> dx = Mat<S>::Zero(in_, batch_ * win_);
  for (Index bi = 0; bi < batch_; ++bi)
    for (Index wo = 0; wo < wout_; ++wo)
      for (int j = 0; j < kernel_; ++j) {
        const Index src = wo * stride_ + j - pad_;
        if (src < 0 || src >= win_) continue;
        for (int ci = 0; ci < in_; ++ci)
          dx(ci, bi * win_ + src) += dcol(static_cast<Index>(ci) * kernel_ + j, bi * wout_ + wo);
      }
  return dx;
}

template <typename S>
void Conv1d<S>::collect(ParamList<S>& out, const std::string& prefix) {
  add_param(out, w, prefix, "weight");
  add_param(out, b, prefix, "bias");
}

// ---------------------------------------------------------------- GroupNorm

template <typename S>
GroupNorm<S>::GroupNorm(int channels, int groups, double eps) : groups_(groups), eps_(eps) {
  if (groups < 1 || channels % groups)
    throw ShapeMismatch(std::to_string(channels) + " channels do not split into " +
                        std::to_string(groups) + " groups");
  make_param(gamma, channels, 1);
  make_param(beta, channels, 1);
  gamma.value.setOnes();
}

template <typename S>
Mat<S> GroupNorm<S>::forward(const Mat<S>& x, Index batch) {
  if (x.rows() != gamma.value.rows() || batch < 1 || x.cols() % batch)
    throw ShapeMismatch("groupnorm input has " + std::to_string(x.rows()) + " channels");
  batch_ = batch;
  const Index width = x.cols() / batch;
  const Index cg = x.rows() / groups_;
  const S n = static_cast<S>(cg * width);
  xhat_.resize(x.rows(), x.cols());
  inv_std_.assign(static_cast<std::size_t>(batch * groups_), S(0));
  Mat<S> y(x.rows(), x.cols());
  for (Index bi = 0; bi < batch; ++bi)
    for (int g = 0; g < groups_; ++g) {
      const auto blk = x.block(g * cg, bi * width, cg, width);
      const S mean = blk.sum() / n;
      const S var = (blk.array() - mean).square().sum() / n;
      const S inv = S(1) / std::sqrt(var + static_cast<S>(eps_));
      inv_std_[static_cast<std::size_t>(bi * groups_ + g)] = inv;
      auto xh = xhat_.block(g * cg, bi * width, cg, width);
      xh = (blk.array() - mean) * inv;
      y.block(g * cg, bi * width, cg, width) =
          (xh.array().colwise() * gamma.value.col(0).segment(g * cg, cg).array()).colwise() +
          beta.value.col(0).segment(g * cg, cg).array();
    }
  return y;
}

template <typename S>
Mat<S> GroupNorm<S>::backward(const Mat<S>& dy) {
  const Index width = dy.cols() / batch_;
  const Index cg = dy.rows() / groups_;
  const S n = static_cast<S>(cg * width);
  gamma.grad.col(0) += (dy.array() * xhat_.array()).rowwise().sum().matrix();
  beta.grad.col(0) += dy.rowwise().sum();
  Mat<S> dx(dy.rows(), dy.cols());
  for (Index bi = 0; bi < batch_; ++bi)
    for (int g = 0; g < groups_; ++g) {
      const auto xh = xhat_.block(g * cg, bi * width, cg, width).array();
      const Eigen::Array<S, Eigen::Dynamic, Eigen::Dynamic> dxh =
          dy.block(g * cg, bi * width, cg, width).array().colwise() *
          gamma.value.col(0).segment(g * cg, cg).array();
      const S inv = inv_std_[static_cast<std::size_t>(bi * groups_ + g)];
      const S sum_d = dxh.sum();
      const S sum_dx = (dxh * xh).sum();
      dx.block(g * cg, bi * width, cg, width) = ((n * dxh - sum_d - xh * sum_dx) * (inv / n)).matrix();
    }
  return dx;
}

template <typename S>
void GroupNorm<S>::collect(ParamList<S>& out, const std::string& prefix) {
  add_param(out, gamma, prefix, "weight");
  add_param(out, beta, prefix, "bias");
}

// ---------------------------------------------------------------- SiLU

template <typename S>
Mat<S> SiLU<S>::forward(const Mat<S>& x) {
  x_ = x;
  return (x.array() / (S(1) + (-x.array()).exp())).matrix();
}

template <typename S>
Mat<S> SiLU<S>::backward(const Mat<S>& dy) const {
  const auto s = (S(1) / (S(1) + (-x_.array()).exp())).eval();
  return (dy.array() * (s + x_.array() * s * (S(1) - s))).matrix();
}

// ---------------------------------------------------------------- upsample

template <typename S>
Mat<S> upsample2(const Mat<S>& x, Index batch) {
  const Index w = x.cols() / batch;
  Mat<S> y(x.rows(), 2 * x.cols());
  for (Index bi = 0; bi < batch; ++bi)
    for (Index i = 0; i < w; ++i) {
      y.col(bi * 2 * w + 2 * i) = x.col(bi * w + i);
      y.col(bi * 2 * w + 2 * i + 1) = x.col(bi * w + i);
    }
  return y;
}

template <typename S>
Mat<S> upsample2_backward(const Mat<S>& dy, Index batch) {
  const Index w = dy.cols() / batch / 2;
  Mat<S> dx(dy.rows(), dy.cols() / 2);
  for (Index bi = 0; bi < batch; ++bi)
    for (Index i = 0; i < w; ++i)
      dx.col(bi * w + i) = dy.col(bi * 2 * w + 2 * i) + dy.col(bi * 2 * w + 2 * i + 1);
  return dx;
}

// ---------------------------------------------------------------- Attention

template <typename S>
Attention<S>::Attention(int channels, int groups, std::mt19937_64& rng)
    : norm_(channels, groups),
      q_(channels, channels, rng),
      k_(channels, channels, rng),
      v_(channels, channels, rng),
      o_(channels, channels, rng),
      scale_(static_cast<S>(1.0 / std::sqrt(static_cast<double>(channels)))) {}

template <typename S>
Mat<S> Attention<S>::forward(const Mat<S>& x, Index batch) {
  batch_ = batch;
  const Index width = x.cols() / batch;
  const Mat<S> h = norm_.forward(x, batch);
  qm_ = q_.forward(h);
  km_ = k_.forward(h);
  vm_ = v_.forward(h);
  attn_.resize(static_cast<std::size_t>(batch));
  Mat<S> mixed(x.rows(), x.cols());
  for (Index bi = 0; bi < batch; ++bi) {
    Mat<S> s = (qm_.middleCols(bi * width, width).transpose() * km_.middleCols(bi * width, width)) * scale_;
    s.colwise() -= s.rowwise().maxCoeff();
    s = s.array().exp().matrix();
    s.array().colwise() /= s.rowwise().sum().array();
    mixed.middleCols(bi * width, width).noalias() = vm_.middleCols(bi * width, width) * s.transpose();
    attn_[static_cast<std::size_t>(bi)] = std::move(s);
  }
  return x + o_.forward(mixed);
}

template <typename S>
Mat<S> Attention<S>::backward(const Mat<S>& dy) {
  const Index width = dy.cols() / batch_;
  const Mat<S> dmixed = o_.backward(dy);
  Mat<S> dq(qm_.rows(), qm_.cols()), dk(km_.rows(), km_.cols()), dv(vm_.rows(), vm_.cols());
  for (Index bi = 0; bi < batch_; ++bi) {
    const Mat<S>& a = attn_[static_cast<std::size_t>(bi)];
    const auto dm = dmixed.middleCols(bi * width, width);
    dv.middleCols(bi * width, width).noalias() = dm * a;
    const Mat<S> da = dm.transpose() * vm_.middleCols(bi * width, width);
    Mat<S> ds = (a.array() * (da.array().colwise() - (da.array() * a.array()).rowwise().sum())).matrix();
    ds *= scale_;
    dq.middleCols(bi * width, width).noalias() = km_.middleCols(bi * width, width) * ds.transpose();
    dk.middleCols(bi * width, width).noalias() = qm_.middleCols(bi * width, width) * ds;
  }
  Mat<S> dh = q_.backward(dq);
  dh += k_.backward(dk);
  dh += v_.backward(dv);
  return dy + norm_.backward(dh);
}

template <typename S>
void Attention<S>::collect(ParamList<S>& out, const std::string& prefix) {
  norm_.collect(out, prefix + "norm.");
  q_.collect(out, prefix + "q.");
  k_.collect(out, prefix + "k.");
  v_.collect(out, prefix + "v.");
  o_.collect(out, prefix + "o.");
}

// ---------------------------------------------------------------- ResBlock

template <typename S>
ResBlock<S>::ResBlock(int in, int out, int temb_dim, int groups, std::mt19937_64& rng)
    : gn1_(in, groups),
      gn2_(out, groups),
      conv1_(in, out, 3, 1, rng),
      conv2_(out, out, 3, 1, rng),
      temb_proj_(temb_dim, out, rng),
      has_skip_(in != out) {
  if (has_skip_) skip_ = Conv1d<S>(in, out, 1, 1, rng);
}

template <typename S>
Mat<S> ResBlock<S>::forward(const Mat<S>& x, const Mat<S>& temb, Index batch) {
  batch_ = batch;
  width_ = x.cols() / batch;
  Mat<S> h = conv1_.forward(act1_.forward(gn1_.forward(x, batch)), batch);
  const Mat<S> tp = temb_proj_.forward(temb);
  for (Index bi = 0; bi < batch; ++bi) h.middleCols(bi * width_, width_).colwise() += tp.col(bi);
  Mat<S> y = conv2_.forward(act2_.forward(gn2_.forward(h, batch)), batch);
  if (has_skip_)
    y += skip_.forward(x, batch);
  else
    y += x;
  return y;
}

template <typename S>
Mat<S> ResBlock<S>::backward(const Mat<S>& dy, Mat<S>& dtemb) {
  const Mat<S> dh = gn2_.backward(act2_.backward(conv2_.backward(dy)));
  Mat<S> dtp(dh.rows(), batch_);
  for (Index bi = 0; bi < batch_; ++bi) dtp.col(bi) = dh.middleCols(bi * width_, width_).rowwise().sum();
  dtemb += temb_proj_.backward(dtp);
  Mat<S> dx = gn1_.backward(act1_.backward(conv1_.backward(dh)));
  if (has_skip_)
    dx += skip_.backward(dy);
  else
    dx += dy;
  return dx;
}

template <typename S>
void ResBlock<S>::collect(ParamList<S>& out, const std::string& prefix) {
  gn1_.collect(out, prefix + "norm1.");
  conv1_.collect(out, prefix + "conv1.");
  temb_proj_.collect(out, prefix + "temb.");
  gn2_.collect(out, prefix + "norm2.");
  conv2_.collect(out, prefix + "conv2.");
  if (has_skip_) skip_.collect(out, prefix + "skip.");
}

// ---------------------------------------------------------------- Denoiser

template <typename S>
Mat<S> timestep_embedding(const std::vector<double>& t, int dim) {
  const int half = dim / 2;
  Mat<S> e = Mat<S>::Zero(dim, static_cast<Index>(t.size()));
  for (std::size_t bi = 0; bi < t.size(); ++bi)
    for (int k = 0; k < half; ++k) {
      const double freq = std::exp(-std::log(10000.0) * k / half);
      e(k, static_cast<Index>(bi)) = static_cast<S>(std::sin(t[bi] * freq));
      e(half + k, static_cast<Index>(bi)) = static_cast<S>(std::cos(t[bi] * freq));
    }
  return e;
}

template <typename S>
Denoiser<S>::Denoiser(const DenoiserConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  std::mt19937_64 rng(seed);
  const int c = cfg.base_channels, bc = cfg.bottleneck_channels, g = cfg.groups, e = cfg.temb_dim;
  if (c < 1 || bc < 1 || e < 2 || e % 2) throw ShapeMismatch("invalid denoiser configuration");

  make_param(class_table_, e, 3);
  {
    std::normal_distribution<double> nd(0.0, 1.0);
    for (Index j = 0; j < 3; ++j)
      for (Index i = 0; i < e; ++i) class_table_.value(i, j) = static_cast<S>(nd(rng));
  }
  temb1_ = Dense<S>(e, e, rng);
  temb2_ = Dense<S>(e, e, rng);
  conv_in_ = Conv1d<S>(1, c, 3, 1, rng);
  res1_ = ResBlock<S>(c, c, e, g, rng);
  attn1_ = Attention<S>(c, g, rng);
  down_ = Conv1d<S>(c, c, 3, 2, rng);
  res2_ = ResBlock<S>(c, bc, e, g, rng);
  attn2_ = Attention<S>(bc, g, rng);
  up_ = Conv1d<S>(bc, c, 3, 1, rng);
  skip_proj_ = Conv1d<S>(c, c, 1, 1, rng);
  res3_ = ResBlock<S>(2 * c, c, e, g, rng);
  attn3_ = Attention<S>(c, g, rng);
  gn_out_ = GroupNorm<S>(c, g);
  conv_out_ = Conv1d<S>(c, 1, 3, 1, rng, cfg.zero_output);
}

template <typename S>
Mat<S> Denoiser<S>::forward(const Mat<S>& x, const std::vector<double>& t,
                            const std::vector<ClassLabel>& labels) {
  const auto batch = static_cast<Index>(t.size());
  if (batch < 1 || labels.size() != t.size()) throw ShapeMismatch("need one timestep and label per sample");
  if (x.rows() != 1 || x.cols() % batch) throw ShapeMismatch("input must be 1 x (batch*width)");
  const Index width = x.cols() / batch;
  if (width < 4 || width % 2)
    throw ShapeMismatch("width " + std::to_string(width) + " must be even and at least 4");
  batch_ = batch;
  labels_ = labels;

  Mat<S> e0 = timestep_embedding<S>(t, cfg_.temb_dim);
  for (Index bi = 0; bi < batch; ++bi)
    e0.col(bi) += class_table_.value.col(static_cast<int>(labels[static_cast<std::size_t>(bi)]));
  const Mat<S> temb = act_temb_.forward(temb2_.forward(act_mlp_.forward(temb1_.forward(e0))));

  const Mat<S> h0 = conv_in_.forward(x, batch);
  const Mat<S> a1 = attn1_.forward(res1_.forward(h0, temb, batch), batch);
  const Mat<S> d = down_.forward(a1, batch);
  const Mat<S> a2 = attn2_.forward(res2_.forward(d, temb, batch), batch);
  const Mat<S> u = up_.forward(upsample2(a2, batch), batch);
  Mat<S> cat(2 * u.rows(), u.cols());
  cat.topRows(u.rows()) = u;
  cat.bottomRows(u.rows()) = skip_proj_.forward(a1, batch);
  const Mat<S> a3 = attn3_.forward(res3_.forward(cat, temb, batch), batch);
  return conv_out_.forward(act_out_.forward(gn_out_.forward(a3, batch)), batch);
}

template <typename S>
Tensor1D<S> Denoiser<S>::forward(const Tensor1D<S>& x, const std::vector<double>& t,
                                 const std::vector<ClassLabel>& labels) {
  if (x.channels != 1) throw ShapeMismatch("denoiser input must have one channel");
  Tensor1D<S> out(x.batch, 1, x.width);
  out.value = forward(x.value, t, labels);
  return out;
}

template <typename S>
Mat<S> Denoiser<S>::backward(const Mat<S>& dy) {
  const Index batch = batch_;
  Mat<S> dtemb = Mat<S>::Zero(cfg_.temb_dim, batch);

  const Mat<S> da3 = gn_out_.backward(act_out_.backward(conv_out_.backward(dy)));
  const Mat<S> dcat = res3_.backward(attn3_.backward(da3), dtemb);
  const Index c = cfg_.base_channels;
  Mat<S> da1 = skip_proj_.backward(dcat.bottomRows(c));
  const Mat<S> da2 = upsample2_backward(up_.backward(dcat.topRows(c)), batch);
  const Mat<S> dd = res2_.backward(attn2_.backward(da2), dtemb);
  da1 += down_.backward(dd);
  const Mat<S> dh0 = res1_.backward(attn1_.backward(da1), dtemb);
  Mat<S> dx = conv_in_.backward(dh0);

  const Mat<S> de0 = temb1_.backward(act_mlp_.backward(temb2_.backward(act_temb_.backward(dtemb))));
  for (Index bi = 0; bi < batch; ++bi)
    class_table_.grad.col(static_cast<int>(labels_[static_cast<std::size_t>(bi)])) += de0.col(bi);
  return dx;
}

template <typename S>
ParamList<S> Denoiser<S>::parameters() {
  ParamList<S> out;
  add_param(out, class_table_, "", "class_embedding");
  temb1_.collect(out, "temb.fc1.");
  temb2_.collect(out, "temb.fc2.");
  conv_in_.collect(out, "conv_in.");
  res1_.collect(out, "res1.");
  attn1_.collect(out, "attn1.");
  down_.collect(out, "down.");
  res2_.collect(out, "res2.");
  attn2_.collect(out, "attn2.");
  up_.collect(out, "up.");
  skip_proj_.collect(out, "skip_proj.");
  res3_.collect(out, "res3.");
  attn3_.collect(out, "attn3.");
  gn_out_.collect(out, "norm_out.");
  conv_out_.collect(out, "conv_out.");
  return out;
}

template <typename S>
void Denoiser<S>::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

template <typename S>
std::size_t Denoiser<S>::parameter_count() {
  std::size_t n = 0;
  for (auto* p : parameters()) n += static_cast<std::size_t>(p->value.size());
  return n;
}

// ---------------------------------------------------------------- checks

GradCheckResult check_gradients(const ParamList<double>& params, const std::function<double()>& loss,
                                const std::function<void()>& backward, double h, double floor) {
  for (auto* p : params) p->zero_grad();
  backward();
  std::vector<Mat<double>> analytic;
  for (auto* p : params) analytic.push_back(p->grad);

  GradCheckResult res;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Mat<double>& v = params[k]->value;
    for (Index i = 0; i < v.size(); ++i) {
      const double saved = v.data()[i];
      v.data()[i] = saved + h;
      const double up = loss();
      v.data()[i] = saved - h;
      const double down = loss();
      v.data()[i] = saved;
      const double num = (up - down) / (2 * h);
      const double ana = analytic[k].data()[i];
      const double err = std::abs(ana - num) / std::max({std::abs(ana), std::abs(num), floor});
      ++res.checked;
      if (err > res.max_rel_error) {
        res.max_rel_error = err;
        res.worst = params[k]->name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return res;
}

GradCheckResult grad_check(Denoiser<double>& net, const Mat<double>& x, const std::vector<double>& t,
                           const std::vector<ClassLabel>& labels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Mat<double> w(x.rows(), x.cols());
  for (Index i = 0; i < w.size(); ++i) w.data()[i] = nd(rng);
  auto loss = [&] { return (net.forward(x, t, labels).array() * w.array()).sum(); };
  auto backward = [&] {
    net.forward(x, t, labels);
    net.backward(w);
  };
  return check_gradients(net.parameters(), loss, backward);
}

// ---------------------------------------------------------------- AdamW

template <typename S>
void AdamW<S>::step(const ParamList<S>& params) {
  for (auto* p : params)
    if (!p->grad.allFinite()) throw NonFiniteGradient("non-finite gradient in " + p->name);
  if (m_.size() != params.size()) {
    m_.clear();
    v_.clear();
    for (auto* p : params) {
      m_.push_back(Mat<S>::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Mat<S>::Zero(p->value.rows(), p->value.cols()));
    }
  }
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  const S b1 = static_cast<S>(cfg_.beta1), b2 = static_cast<S>(cfg_.beta2);
  const S step_size = static_cast<S>(cfg_.lr / bc1);
  const S decay = static_cast<S>(1.0 - cfg_.lr * cfg_.weight_decay);
  const S root_bc2 = static_cast<S>(std::sqrt(bc2));
  const S eps = static_cast<S>(cfg_.eps);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = *params[k];
    p.value *= decay;
    m_[k] = b1 * m_[k] + (S(1) - b1) * p.grad;
    v_[k] = b2 * v_[k] + (S(1) - b2) * p.grad.cwiseAbs2();
    p.value.array() -= step_size * m_[k].array() / (v_[k].array().sqrt() / root_bc2 + eps);
  }
}

// ---------------------------------------------------------------- checkpoints

template <typename S>
std::string checkpoint_to_string(const ParamList<S>& params) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto* p : params) {
    std::vector<double> data(p->value.data(), p->value.data() + p->value.size());
    arr.push_back({{"name", p->name}, {"shape", {p->value.rows(), p->value.cols()}}, {"data", data}});
  }
  nlohmann::json doc = {{"format", "pcd-checkpoint"}, {"version", 1}, {"params", arr}};
  return doc.dump();
}

template <typename S>
void checkpoint_from_string(const ParamList<S>& params, const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("unreadable checkpoint: ") + e.what());
  }
  if (doc.value("format", "") != "pcd-checkpoint" || doc.value("version", 0) != 1)
    throw CheckpointError("not a version-1 checkpoint");
  const auto& arr = doc.at("params");
  if (arr.size() != params.size())
    throw CheckpointError("checkpoint has " + std::to_string(arr.size()) + " arrays, model has " +
                          std::to_string(params.size()));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = *params[k];
    const auto& item = arr[k];
    const auto rows = item.at("shape")[0].get<Index>(), cols = item.at("shape")[1].get<Index>();
    if (item.at("name").get<std::string>() != p.name || rows != p.value.rows() || cols != p.value.cols())
      throw CheckpointError("array " + std::to_string(k) + " does not match " + p.name);
    const auto data = item.at("data").get<std::vector<double>>();
    if (static_cast<Index>(data.size()) != rows * cols) throw CheckpointError("truncated array " + p.name);
    for (Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = static_cast<S>(data[static_cast<std::size_t>(i)]);
  }
}

template <typename S>
void save_checkpoint(const ParamList<S>& params, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path);
  os << checkpoint_to_string(params);
}

template <typename S>
void load_checkpoint(const ParamList<S>& params, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw CheckpointError("cannot read " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  checkpoint_from_string(params, ss.str());
}

#define PCD_INSTANTIATE(S)                                                      \
  template class Dense<S>;                                                      \
  template class Conv1d<S>;                                                     \
  template class GroupNorm<S>;                                                  \
  template class SiLU<S>;                                                       \
  template class Attention<S>;                                                  \
  template class ResBlock<S>;                                                   \
  template class Denoiser<S>;                                                   \
  template class AdamW<S>;                                                      \
  template Mat<S> upsample2<S>(const Mat<S>&, Index);                           \
  template Mat<S> upsample2_backward<S>(const Mat<S>&, Index);                  \
  template Mat<S> timestep_embedding<S>(const std::vector<double>&, int);       \
  template std::string checkpoint_to_string<S>(const ParamList<S>&);            \
  template void checkpoint_from_string<S>(const ParamList<S>&, const std::string&); \
  template void save_checkpoint<S>(const ParamList<S>&, const std::string&);    \
  template void load_checkpoint<S>(const ParamList<S>&, const std::string&);

PCD_INSTANTIATE(float)
PCD_INSTANTIATE(double)

#undef PCD_INSTANTIATE

}  // namespace pcd
