#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "pcd/error.hpp"
#include "pcd/neuralcore.hpp"
#include "oracles.hpp"

using namespace pcd;
using namespace oracles;
using Md = Mat<double>;

TEST_CASE("dense gradients") {
  std::mt19937_64 rng(1);
  Dense<double> d(5, 3, rng);
  auto x = make_input(randn(5, 4, rng));
  const Md w = randn(3, 4, rng);
  ParamList<double> ps;
  d.collect(ps, "d");
  const auto r = check_layer(ps, x, w, [&](const Md& in) { return d.forward(in); },
                             [&](const Md& dy) { return d.backward(dy); });
  CHECK(r.max_rel_error < 1e-4);
  // a linear map: differences are exact up to rounding
  CHECK(r.max_rel_error < 1e-7);
  CHECK_THROWS_AS(d.forward(randn(4, 2, rng)), ShapeMismatch);
}

TEST_CASE("conv1d gradients, stride 1 and 2") {
  std::mt19937_64 rng(2);
  for (int stride : {1, 2}) {
    Conv1d<double> c(3, 4, 3, stride, rng);
    const Eigen::Index batch = 2, width = 6;
    auto x = make_input(randn(3, batch * width, rng));
    const Md w = randn(4, batch * c.out_width(width), rng);
    ParamList<double> ps;
    c.collect(ps, "c");
    const auto r = check_layer(ps, x, w, [&](const Md& in) { return c.forward(in, batch); },
                               [&](const Md& dy) { return c.backward(dy); });
    CHECK(r.max_rel_error < 1e-4);
  }
  Conv1d<double> one(2, 2, 1, 1, rng);
  CHECK(one.out_width(7) == 7);
}

TEST_CASE("groupnorm gradients and identity case") {
  std::mt19937_64 rng(3);
  GroupNorm<double> g(4, 2);
  g.gamma.value = randn(4, 1, rng);
  g.beta.value = randn(4, 1, rng);
  const Eigen::Index batch = 3;
  auto x = make_input(randn(4, batch * 5, rng, 2.0));
  const Md w = randn(4, batch * 5, rng);
  ParamList<double> ps;
  g.collect(ps, "g");
  const auto r = check_layer(ps, x, w, [&](const Md& in) { return g.forward(in, batch); },
                             [&](const Md& dy) { return g.backward(dy); });
  CHECK(r.max_rel_error < 1e-4);

  // unit scale, zero shift, input already zero-mean unit-variance per group
  GroupNorm<double> id(2, 1, 0.0);
  Md z(2, 2);
  z << 1, -1, -1, 1;
  CHECK((id.forward(z, 1) - z).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(GroupNorm<double>(6, 4), ShapeMismatch);
}

TEST_CASE("silu and upsample gradients") {
  std::mt19937_64 rng(4);
  SiLU<double> s;
  auto x = make_input(randn(3, 8, rng));
  const Md w = randn(3, 8, rng);
  auto r = check_layer({}, x, w, [&](const Md& in) { return s.forward(in); },
                       [&](const Md& dy) { return s.backward(dy); });
  CHECK(r.max_rel_error < 1e-4);

  auto u = make_input(randn(2, 2 * 4, rng));
  const Md wu = randn(2, 2 * 8, rng);
  r = check_layer({}, u, wu, [&](const Md& in) { return upsample2(in, Eigen::Index{2}); },
                  [&](const Md& dy) { return upsample2_backward(dy, Eigen::Index{2}); });
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("attention gradients and convex rows") {
  std::mt19937_64 rng(5);
  Attention<double> a(4, 2, rng);
  const Eigen::Index batch = 2;
  auto x = make_input(randn(4, batch * 6, rng));
  const Md w = randn(4, batch * 6, rng);
  ParamList<double> ps;
  a.collect(ps, "a");
  const auto r = check_layer(ps, x, w, [&](const Md& in) { return a.forward(in, batch); },
                             [&](const Md& dy) { return a.backward(dy); });
  CHECK(r.max_rel_error < 1e-4);
  a.forward(x.value, batch);
  REQUIRE(a.weights().size() == 2);
  for (const auto& m : a.weights()) {
    CHECK(m.minCoeff() >= 0.0);
    CHECK((m.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("resblock gradients including the time embedding") {
  std::mt19937_64 rng(6);
  for (auto [in, out] : {std::pair{4, 4}, std::pair{4, 6}}) {
    ResBlock<double> rb(in, out, 5, 2, rng);
    const Eigen::Index batch = 2, width = 4;
    auto x = make_input(randn(in, batch * width, rng));
    auto temb = make_input(randn(5, batch, rng));
    const Md w = randn(out, batch * width, rng);
    ParamList<double> ps;
    rb.collect(ps, "r");
    ps.push_back(&x);
    ps.push_back(&temb);
    auto loss = [&] { return (rb.forward(x.value, temb.value, batch).array() * w.array()).sum(); };
    auto backward = [&] {
      rb.forward(x.value, temb.value, batch);
      Md dt = Md::Zero(5, batch);
      x.grad = rb.backward(w, dt);
      temb.grad = dt;
    };
    CHECK(check_gradients(ps, loss, backward).max_rel_error < 1e-4);
  }
}

TEST_CASE("timestep embedding") {
  const Md e = timestep_embedding<double>({0.0, 10.0, 999.0}, 8);
  CHECK(e.rows() == 8);
  CHECK(e.cols() == 3);
  CHECK(std::abs(e(0, 0)) < 1e-12);        // sin(0)
  CHECK(std::abs(e(4, 0) - 1.0) < 1e-12);  // cos(0)
  CHECK((e.col(1) - e.col(2)).norm() > 1e-3);
}

TEST_CASE("composed denoiser gradient check") {
  DenoiserConfig cfg;
  cfg.base_channels = 4;
  cfg.bottleneck_channels = 8;
  cfg.groups = 2;
  cfg.temb_dim = 8;
  cfg.zero_output = false;
  Denoiser<double> net(cfg, 11);
  std::mt19937_64 rng(12);
  const Md x = randn(1, 2 * 8, rng);
  const auto r = grad_check(net, x, {17.0, 640.0}, {ClassLabel::Fail, ClassLabel::Null});
  INFO("worst " << r.worst);
  CHECK(r.max_rel_error < 1e-4);
  CHECK(r.checked == net.parameter_count());
}

TEST_CASE("denoiser shape, zero output and conditioning") {
  DenoiserConfig cfg;  // default plan
  Denoiser<float> net(cfg, 3);
  std::mt19937_64 rng(4);
  const Mat<float> x = randn(1, 3 * 8, rng).cast<float>();
  const auto y = net.forward(x, {5, 50, 500}, {ClassLabel::Pass, ClassLabel::Fail, ClassLabel::Null});
  CHECK(y.rows() == 1);
  CHECK(y.cols() == 24);
  CHECK(y.cwiseAbs().maxCoeff() == 0.0f);

  CHECK_THROWS_AS(net.forward(Mat<float>::Zero(1, 5), {1}, {ClassLabel::Fail}), ShapeMismatch);
  CHECK_THROWS_AS(net.forward(Mat<float>::Zero(1, 2), {1}, {ClassLabel::Fail}), ShapeMismatch);

  Tensor1D<float> t(2, 1, 6);
  CHECK(net.forward(t, {1, 2}, {ClassLabel::Fail, ClassLabel::Pass}).value.cols() == 12);

  // after one update the fail and null embeddings give different outputs
  Denoiser<float> trained(cfg, 3);
  AdamW<float> opt;
  const Mat<float> x1 = randn(1, 8, rng).cast<float>();
  trained.zero_grad();
  trained.forward(x1, {100}, {ClassLabel::Fail});
  trained.backward(randn(1, 8, rng).cast<float>());
  opt.step(trained.parameters());
  trained.zero_grad();
  trained.forward(x1, {100}, {ClassLabel::Fail});
  trained.backward(randn(1, 8, rng).cast<float>());
  opt.step(trained.parameters());
  const auto yf = trained.forward(x1, {100}, {ClassLabel::Fail});
  const auto yn = trained.forward(x1, {100}, {ClassLabel::Null});
  CHECK((yf - yn).cwiseAbs().maxCoeff() > 0.0f);
}

TEST_CASE("architecture block counts") {
  Denoiser<float> net(DenoiserConfig{}, 1);
  int conv = 0, gn = 0, attn = 0, res = 0;
  auto has = [](const std::string& n, const std::string& s) { return n.find(s) != std::string::npos; };
  for (auto* p : net.parameters()) {
    const auto& n = p->name;
    if (!has(n, "weight")) continue;
    if (has(n, "norm")) ++gn;
    else if (has(n, "attn")) attn += has(n, ".q.");
    else if (has(n, "conv") || has(n, "down.") || has(n, "up.") || has(n, "skip")) ++conv;
    if (has(n, "conv1.")) ++res;
  }
  CHECK(conv == 13);
  CHECK(gn == 10);
  CHECK(attn == 3);
  CHECK(res == 3);
}

TEST_CASE("seeded init is reproducible") {
  Denoiser<float> a(DenoiserConfig{}, 99), b(DenoiserConfig{}, 99), c(DenoiserConfig{}, 100);
  const auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
  REQUIRE(pa.size() == pb.size());
  bool differs = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i]->value == pb[i]->value);
    if (pa[i]->value != pc[i]->value) differs = true;
  }
  CHECK(differs);
}

TEST_CASE("adamw against hand arithmetic") {
  Param<double> p;
  p.name = "w";
  p.value = Md::Constant(1, 1, 1.0);
  p.grad = Md::Constant(1, 1, 1.0);
  AdamW<double> opt;  // lr 3e-4, wd 0.01, betas (0.9, 0.999), eps 1e-8
  opt.step({&p});
  // decay: 1 - 3e-4*0.01; m = 0.1, v = 0.001; m_hat = 1, v_hat = 1
  const double expect = (1.0 - 3e-4 * 0.01) - 3e-4 * 1.0 / (1.0 + 1e-8);
  CHECK(std::abs(p.value(0, 0) - expect) < 1e-15);
  CHECK(opt.steps() == 1);

  // second step with grad 0.5
  p.grad(0, 0) = 0.5;
  const double w1 = p.value(0, 0);
  opt.step({&p});
  const double m = 0.9 * 0.1 + 0.1 * 0.5, v = 0.999 * 0.001 + 0.001 * 0.25;
  const double mh = m / (1 - 0.81), vh = v / (1 - 0.999 * 0.999);
  const double expect2 = w1 * (1 - 3e-6) - 3e-4 * mh / (std::sqrt(vh) + 1e-8);
  CHECK(std::abs(p.value(0, 0) - expect2) < 1e-12);
}

TEST_CASE("adamw zero gradient and non-finite gradient") {
  Param<double> p;
  p.name = "w";
  p.value = Md::Constant(2, 2, 0.7);
  p.grad = Md::Zero(2, 2);
  AdamWConfig cfg;
  cfg.weight_decay = 0.0;
  AdamW<double> opt(cfg);
  opt.step({&p});
  CHECK(p.value == Md::Constant(2, 2, 0.7));

  p.grad(1, 0) = std::nan("");
  CHECK_THROWS_AS(opt.step({&p}), NonFiniteGradient);
  CHECK(p.value == Md::Constant(2, 2, 0.7));
}

TEST_CASE("checkpoint round trip is bit exact") {
  Denoiser<float> a(DenoiserConfig{}, 5), b(DenoiserConfig{}, 6);
  const auto path = (std::filesystem::temp_directory_path() / "pcd_ckpt_test.json").string();
  save_checkpoint(a.parameters(), path);
  load_checkpoint(b.parameters(), path);
  const auto pa = a.parameters(), pb = b.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->value == pb[i]->value);
  std::filesystem::remove(path);

  Denoiser<double> d(DenoiserConfig{}, 5);
  const auto text = checkpoint_to_string(d.parameters());
  Denoiser<double> e(DenoiserConfig{}, 8);
  checkpoint_from_string(e.parameters(), text);
  const auto pd = d.parameters(), pe = e.parameters();
  for (std::size_t i = 0; i < pd.size(); ++i) CHECK(pd[i]->value == pe[i]->value);

  DenoiserConfig small;
  small.base_channels = 8;
  Denoiser<double> wrong(small, 1);
  CHECK_THROWS_AS(checkpoint_from_string(wrong.parameters(), text), CheckpointError);
  CHECK_THROWS_AS(checkpoint_from_string(e.parameters(), "{not json"), CheckpointError);
  CHECK_THROWS_AS(load_checkpoint(e.parameters(), "/nonexistent/dir/x.json"), CheckpointError);
}
