#include <doctest.h>

#include <cmath>
#include <random>

#include "pcd/corpus.hpp"
#include "pcd/error.hpp"
#include "pcd/spectra.hpp"

using namespace pcd;

namespace {

SpectrumTally one(int ef, int ep, int nf, int np) {
  SpectrumTally t;
  t.a_ef = Eigen::VectorXi::Constant(1, ef);
  t.a_ep = Eigen::VectorXi::Constant(1, ep);
  t.a_nf = Eigen::VectorXi::Constant(1, nf);
  t.a_np = Eigen::VectorXi::Constant(1, np);
  return t;
}

double s1(Formula f, int ef, int ep, int nf, int np) { return score(f, one(ef, ep, nf, np))(0); }

CoverageDataset fixture() {
  // 6 tests, rows 3 and 6 failing
  CoverageDataset ds;
  ds.matrix.resize(6, 3);
  ds.matrix << 1, 0, 1,
               0, 0, 1,
               1, 1, 1,
               0, 0, 1,
               0, 0, 1,
               1, 1, 1;
  ds.errors.resize(6);
  ds.errors << 0, 0, 1, 0, 0, 1;
  ds.stmt_ids = {"S1", "S2", "S3"};
  ds.test_ids = {"t1", "t2", "t3", "t4", "t5", "t6"};
  ds.provenance.assign(6, Provenance::Real);
  return ds;
}

}  // namespace

TEST_CASE("hand-computed formula values") {
  CHECK(std::abs(s1(Formula::Ochiai, 2, 1, 0, 3) - 2.0 / std::sqrt(6.0)) < 1e-12);
  CHECK(std::abs(s1(Formula::Ochiai, 2, 1, 0, 3) - 0.81650) < 1e-5);
  CHECK(std::abs(s1(Formula::Dstar, 2, 1, 0, 3) - 4.0) < 1e-12);
  CHECK(std::abs(s1(Formula::Barinel, 2, 1, 0, 3) - 2.0 / 3.0) < 1e-12);
  CHECK(std::abs(s1(Formula::Gp02, 2, 1, 0, 3) - (2 * (2 + std::sqrt(3.0)) + 1)) < 1e-12);
  CHECK(std::abs(s1(Formula::Gp02, 2, 1, 0, 3) - 8.46410) < 1e-5);
  CHECK(std::abs(s1(Formula::Dstar, 1, 2, 1, 2) - 1.0 / 3.0) < 1e-12);
  CHECK(std::abs(s1(Formula::Ochiai, 1, 2, 1, 2) - 1.0 / std::sqrt(6.0)) < 1e-12);
}

TEST_CASE("degenerate tallies score 0") {
  for (Formula f : {Formula::Dstar, Formula::Ochiai, Formula::Barinel, Formula::Gp02})
    CHECK(s1(f, 0, 0, 2, 4) == 0.0);
  CHECK(s1(Formula::Ochiai, 0, 3, 0, 0) == 0.0);  // no failing tests at all
}

TEST_CASE("tally counts and identity") {
  const auto t = tally(fixture());
  CHECK(t.a_ef(1) == 2);
  CHECK(t.a_ep(1) == 0);
  CHECK(t.a_ef(0) == 2);
  CHECK(t.a_ep(0) == 1);
  CHECK(t.a_nf(0) == 0);
  CHECK(t.a_np(0) == 3);
  CHECK(t.a_ef(2) == 2);
  CHECK(t.a_ep(2) == 4);
  for (int j = 0; j < 3; ++j) {
    CHECK(t.a_ef(j) + t.a_ep(j) + t.a_nf(j) + t.a_np(j) == 6);
    CHECK(t.a_ef(j) + t.a_nf(j) == 2);
  }
}

TEST_CASE("rank tie-break and errors") {
  Eigen::VectorXd s(3);
  s << 0.5, 0.9, 0.5;
  const auto r = rank(s);
  CHECK(r.order == std::vector<StmtIndex>{2, 1, 3});
  CHECK(r.rank_of == std::vector<int>{2, 1, 3});
  CHECK(rank(Eigen::VectorXd::Constant(4, 1.0)).order == std::vector<StmtIndex>{1, 2, 3, 4});
  s(1) = std::nan("");
  CHECK_THROWS_AS(rank(s), NonFiniteScore);
}

TEST_CASE("rank is invariant under positive affine maps") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> d(0, 5);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd s(12);
    for (int j = 0; j < 12; ++j) s(j) = d(rng) * 0.25;  // plenty of ties
    const auto a = rank(s);
    const auto b = rank((3.0 * s.array() + 7.0).matrix());
    CHECK(a.order == b.order);
    std::vector<int> seen(12, 0);
    for (StmtIndex k : a.order) ++seen[k - 1];
    CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
  }
}

TEST_CASE("score ranges on random tallies") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<int> d(0, 6);
    const int ef = d(rng), ep = d(rng), nf = d(rng), np = d(rng);
    const double o = s1(Formula::Ochiai, ef, ep, nf, np);
    const double b = s1(Formula::Barinel, ef, ep, nf, np);
    CHECK(o >= 0.0);
    CHECK(o <= 1.0 + 1e-12);
    CHECK(b >= 0.0);
    CHECK(b <= 1.0);
    CHECK(s1(Formula::Dstar, ef, ep, nf, np) >= 0.0);
  }
}

TEST_CASE("build_spectra on the analog suite") {
  const auto g = golden_version();
  const auto ds = build_spectra(run_suite(g));
  CHECK(ds.matrix.rows() == 6);
  CHECK(ds.matrix.cols() == 16);
  Eigen::VectorXi expect(6);
  expect << 0, 0, 1, 0, 0, 1;
  CHECK(ds.errors == expect);
  CHECK_THROWS_AS(build_spectra({}), EmptySuite);

  ExecutionRecord r;
  r.coverage = {1, 0, 1};
  const auto single = build_spectra({r});
  CHECK(single.matrix.rows() == 1);
  CHECK(single.errors(0) == 0);
}

TEST_CASE("csv round trip") {
  auto ds = fixture();
  ds.provenance[5] = Provenance::Synthetic;
  const auto back = from_csv(to_csv(ds, true));
  CHECK(back.matrix == ds.matrix);
  CHECK(back.errors == ds.errors);
  CHECK(back.stmt_ids == ds.stmt_ids);
  CHECK(back.test_ids == ds.test_ids);
  CHECK(back.provenance == ds.provenance);
  const auto plain = from_csv(to_csv(ds));
  CHECK(plain.matrix == ds.matrix);
  CHECK_THROWS_AS(from_csv("test,S1,result\nt1,2,0\n"), DatasetFormatError);
  CHECK_THROWS_AS(from_csv("test,S1,result\nt1,1\n"), DatasetFormatError);
}

TEST_CASE("select_columns keeps the given order") {
  const auto ds = fixture();
  const auto m = select_columns(ds.matrix, {3, 1});
  CHECK(m.col(0) == ds.matrix.col(2));
  CHECK(m.col(1) == ds.matrix.col(0));
}
