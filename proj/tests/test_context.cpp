#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "pcd/context.hpp"
#include "pcd/corpus.hpp"
#include "pcd/error.hpp"
#include "pcd/slicing.hpp"
#include "pcd/spectra.hpp"
#include "oracles.hpp"

using namespace pcd;
using namespace oracles;

TEST_CASE("eigen_sym small cases") {
  Eigen::Matrix2d d;
  d << 2, 0, 0, 1;
  auto e = eigen_sym(d);
  CHECK(e.values(0) == doctest::Approx(2.0));
  CHECK(e.values(1) == doctest::Approx(1.0));
  CHECK(std::abs(e.vectors(0, 0) - 1.0) < 1e-12);
  CHECK(std::abs(e.vectors(1, 1) - 1.0) < 1e-12);

  Eigen::Matrix2d a;
  a << 2, 1, 1, 2;
  e = eigen_sym(a);
  CHECK(std::abs(e.values(0) - 3.0) < 1e-8);
  CHECK(std::abs(e.values(1) - 1.0) < 1e-8);

  Eigen::Matrix2d ns;
  ns << 1, 2, 0, 1;
  CHECK_THROWS_AS(eigen_sym(ns), NotSymmetric);
  CHECK_THROWS_AS(eigen_sym(Eigen::MatrixXd::Zero(2, 3)), NotSymmetric);
}

TEST_CASE("2x2 against the quadratic formula") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int trial = 0; trial < 200; ++trial) {
    const double p = u(rng), q = u(rng), r = u(rng);
    Eigen::Matrix2d a;
    a << p, q, q, r;
    const double mid = (p + r) / 2, rad = std::sqrt((p - r) * (p - r) / 4 + q * q);
    const auto e = eigen_sym(a);
    CHECK(std::abs(e.values(0) - (mid + rad)) < 1e-8);
    CHECK(std::abs(e.values(1) - (mid - rad)) < 1e-8);
  }
}

TEST_CASE("3x3 against the characteristic cubic") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::Matrix3d a;
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) a(i, j) = a(j, i) = u(rng);
    const auto roots = cubic_roots(a);
    const auto e = eigen_sym(a);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(e.values(k) - roots[static_cast<std::size_t>(k)]) < 1e-8);
    // residual, orthonormality and sign convention
    for (int k = 0; k < 3; ++k) {
      CHECK((a * e.vectors.col(k) - e.values(k) * e.vectors.col(k)).norm() < 1e-8);
      Eigen::Index arg;
      e.vectors.col(k).cwiseAbs().maxCoeff(&arg);
      CHECK(e.vectors(arg, k) > 0);
    }
    CHECK((e.vectors.transpose() * e.vectors - Eigen::Matrix3d::Identity()).norm() < 1e-8);
  }
}

TEST_CASE("sweep cap surfaces NoConvergence") {
  Eigen::Matrix3d a;
  a << 4, 1, 2, 1, 3, 0.5, 2, 0.5, 1;
  JacobiOptions o;
  o.max_sweeps = 1;
  CHECK_THROWS_AS(eigen_sym(a, o), NoConvergence);
}

TEST_CASE("covariance is PSD with orthonormal eigenvectors") {
  std::mt19937_64 rng(4);
  std::bernoulli_distribution b(0.5);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd x(8, 7);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = b(rng);
    const auto e = eigen_sym(covariance(x));
    CHECK(e.values.minCoeff() > -1e-10);
    CHECK((e.vectors.transpose() * e.vectors - Eigen::MatrixXd::Identity(7, 7)).norm() < 1e-8);
  }
  CHECK_THROWS_AS(covariance(Eigen::MatrixXd::Ones(1, 3)), DegenerateData);
}

TEST_CASE("components_for_variance") {
  Eigen::VectorXd v(4);
  v << 5, 3, 1.5, 0.5;  // total 10
  CHECK(components_for_variance(v) == 3);  // 9.5 of 10
  CHECK(components_for_variance(v, 0.96) == 4);
  CHECK(components_for_variance(v, 0.8) == 2);
  CHECK(components_for_variance(v, 0.5) == 1);
  CHECK(components_for_variance(Eigen::VectorXd::Zero(3)) == 1);
}

TEST_CASE("contribution ranking matches an independent eigendecomposition") {
  std::mt19937_64 rng(2024);
  std::bernoulli_distribution b(0.5);
  int accepted = 0, draws = 0;
  while (accepted < 100) {
    ++draws;
    REQUIRE(draws < 1000);
    Eigen::MatrixXi x(6, 5);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = b(rng);
    bool well_posed = false;
    const auto expect = oracle_order(x, 2, well_posed);
    if (!well_posed) continue;  // repeated eigenvalue: loadings are not unique
    const auto got = contribution_select(x, 2, 5);
    CHECK(got.stm_pca == expect);
    CHECK(got.m == 2);
    CHECK(got.x_pca.cols() == 5);
    CHECK(got.contributions.minCoeff() >= 0.0);
    ++accepted;
  }
}

TEST_CASE("constant and duplicate columns") {
  Eigen::MatrixXi x(5, 4);
  x << 1, 0, 1, 1,
       0, 1, 0, 1,
       1, 1, 1, 1,
       0, 0, 0, 1,
       1, 0, 1, 1;
  const auto s = contribution_select(x);
  CHECK(s.stm_pca.back() == 4);  // constant column
  CHECK(s.contributions(3) < 1e-12);
  // columns 1 and 3 are identical
  CHECK(std::abs(s.contributions(0) - s.contributions(2)) < 1e-9);
  const auto p1 = std::find(s.stm_pca.begin(), s.stm_pca.end(), 1);
  const auto p3 = std::find(s.stm_pca.begin(), s.stm_pca.end(), 3);
  CHECK(p1 < p3);
  CHECK_THROWS_AS(contribution_select(x.topRows(1)), DegenerateData);
  CHECK_THROWS_AS(contribution_select(x, 0), InvalidRange);
  CHECK_THROWS_AS(contribution_select(x, 2, 9), InvalidRange);
  CHECK(contribution_select(x, 1, 2).stm_pca.size() == 2);
}

TEST_CASE("fuse on a fixed statistical ordering") {
  const std::vector<StmtIndex> sc{1, 3, 7, 8, 14, 15};
  const std::vector<StmtIndex> pca{14, 15, 10, 11, 6, 1, 2, 3, 13, 4, 5, 16, 8, 7, 9, 12};
  Eigen::MatrixXi x = Eigen::MatrixXi::Zero(6, 16);
  for (int j = 0; j < 16; ++j) x(j % 6, j) = 1;
  const auto f = fuse(x, sc, pca, 1.0, 4);
  CHECK(f.stm_fusion == std::vector<StmtIndex>{1, 3, 14, 15});
  CHECK(f.k_f == 6);
  CHECK(f.target_dim == 4);
  for (std::size_t k = 0; k < 4; ++k) CHECK(f.x_fusion.col(static_cast<Eigen::Index>(k)) == x.col(f.stm_fusion[k] - 1));
  // default width gives the same answer here
  CHECK(fuse(x, sc, pca, 1.0).stm_fusion == std::vector<StmtIndex>{1, 3, 14, 15});

  // alpha = 0: empty start, first two StmSC members in StmPCA order
  const auto z = fuse(x, sc, pca, 0.0, 2);
  CHECK(z.k_f == 0);
  CHECK(z.stm_fusion == std::vector<StmtIndex>{14, 15});

  // StmPCA prefix covers StmSC and K = |StmSC|
  const std::vector<StmtIndex> pca2{3, 15, 1, 8, 14, 7, 2, 4, 5, 6, 9, 10, 11, 12, 13, 16};
  CHECK(fuse(x, sc, pca2, 1.0, 6).stm_fusion == sc);
}

TEST_CASE("fuse width rule and errors") {
  CHECK(default_target_dim(0, 6) == 4);
  CHECK(default_target_dim(5, 6) == 6);
  CHECK(default_target_dim(5, 9) == 6);
  CHECK(default_target_dim(7, 9) == 8);
  Eigen::MatrixXi x = Eigen::MatrixXi::Ones(4, 8);
  CHECK_THROWS_AS(fuse(x, {1, 2, 3}, {1, 2, 3, 4, 5, 6, 7, 8}, 1.0), InsufficientContext);
  // odd StmSC trims to an even width
  CHECK(fuse(x, {1, 2, 3, 4, 5}, {5, 4, 3, 2, 1, 6, 7, 8}, 1.0).stm_fusion.size() == 4);
}

TEST_CASE("fusion is a subset of StmSC on random inputs") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<StmtIndex> all(12);
    for (int j = 0; j < 12; ++j) all[j] = j + 1;
    std::shuffle(all.begin(), all.end(), rng);
    const int sc_size = 4 + static_cast<int>(rng() % 8);
    std::vector<StmtIndex> sc(all.begin(), all.begin() + sc_size);
    std::sort(sc.begin(), sc.end());
    std::shuffle(all.begin(), all.end(), rng);
    const double alpha = static_cast<double>(rng() % 5) / 4.0;
    const Eigen::MatrixXi x = Eigen::MatrixXi::Ones(3, 12);
    const auto f = fuse(x, sc, all, alpha);
    CHECK(f.stm_fusion.size() % 2 == 0);
    CHECK(f.stm_fusion.size() >= 4);
    CHECK(std::is_sorted(f.stm_fusion.begin(), f.stm_fusion.end()));
    CHECK(std::includes(sc.begin(), sc.end(), f.stm_fusion.begin(), f.stm_fusion.end()));
    CHECK(f.stm_fusion == fuse(x, sc, all, alpha).stm_fusion);
  }
}

TEST_CASE("computed analog contexts") {
  const auto g = golden_version();
  const auto records = run_suite(g);
  const auto ds = build_spectra(records);
  const auto sc = fault_context(ds, records).stm_sc;
  const auto stat = contribution_select(ds.matrix);
  CHECK(stat.stm_pca.size() == 16);
  const auto f = fuse(ds.matrix, sc, stat.stm_pca, 1.0);
  CHECK(f.stm_fusion.size() == 4);
  CHECK(std::includes(sc.begin(), sc.end(), f.stm_fusion.begin(), f.stm_fusion.end()));
}
