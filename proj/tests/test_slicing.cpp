#include <doctest.h>

#include <random>
#include <set>
#include <sstream>

#include "pcd/corpus.hpp"
#include "pcd/error.hpp"
#include "pcd/slicing.hpp"
#include "pcd/spectra.hpp"
#include "oracles.hpp"

using namespace pcd;
using namespace oracles;

TEST_CASE("analog slices for the two failing tests") {
  const auto g = golden_version();
  const auto records = run_suite(g);
  REQUIRE(records[2].failed());
  REQUIRE(records[5].failed());

  SliceCriterion c3{14, {"d1"}, "t3", std::nullopt};
  CHECK(dynamic_slice(records[2], c3) == std::vector<StmtIndex>{1, 3, 7, 14});
  CHECK(default_criterion(records[2]).output_stm == 14);
  CHECK(default_criterion(records[5]).output_stm == 15);
  CHECK(dynamic_slice(records[5], default_criterion(records[5])) == std::vector<StmtIndex>{1, 3, 8, 15});

  const auto ds = build_spectra(records);
  const auto ctx = fault_context(ds, records);
  CHECK(ctx.stm_sc == std::vector<StmtIndex>{1, 3, 7, 8, 14, 15});
  REQUIRE(ctx.context_matrix.cols() == 6);
  for (Eigen::Index i = 0; i < ds.tests(); ++i)
    for (std::size_t k = 0; k < ctx.stm_sc.size(); ++k)
      CHECK(ctx.context_matrix(i, static_cast<Eigen::Index>(k)) == ds.matrix(i, ctx.stm_sc[k] - 1));
}

TEST_CASE("statement without dependencies slices to itself") {
  const Program p = parse("x = 5\ny = 2\noutput(y)\n");
  auto r = execute(p, {}, std::nullopt);
  r.test_id = "t";
  CHECK(dynamic_slice(r, {1, {"x"}, "t", std::nullopt}) == std::vector<StmtIndex>{1});
  CHECK(dynamic_slice(r, {3, {"y"}, "t", std::nullopt}) == std::vector<StmtIndex>{2, 3});
}

TEST_CASE("criterion not in trace") {
  const Program p = parse("input x\nif (x > 0) {\n  y = 1\n}\noutput(x)\n");
  auto r = execute(p, {{"x", -1}}, std::nullopt);
  CHECK_THROWS_AS(dynamic_slice(r, {2, {"y"}, "", std::nullopt}), CriterionNotExecuted);
}

TEST_CASE("fault_context union, dedup and errors") {
  const auto g = golden_version();
  const auto records = run_suite(g);
  const auto ds = build_spectra(records);
  const auto one = fault_context(ds, records, std::size_t{1});
  CHECK(one.stm_sc == std::vector<StmtIndex>{1, 3, 7, 14});
  // same failing trace twice
  const std::vector<ExecutionRecord> twice{records[2], records[2]};
  const auto c = default_criterion(records[2]);
  CHECK(fault_context(ds, twice, {c, c}).stm_sc == one.stm_sc);
  CHECK_THROWS_AS(fault_context(ds, std::vector<ExecutionRecord>{}, std::vector<SliceCriterion>{}), NoFailingTests);
  const std::vector<ExecutionRecord> passing{records[0], records[1]};
  CHECK_THROWS_AS(fault_context(ds, passing), NoFailingTests);
}

TEST_CASE("slices equal a brute-force closure on random programs") {
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    ProgramGen gen(seed);
    const Program p = parse(gen.make(50));
    REQUIRE(p.size() <= 50);
    std::mt19937_64 rng(seed * 7919);
    std::uniform_int_distribution<int> in(-4, 4);
    const Valuation input{{"a", in(rng)}, {"b", in(rng)}, {"c", in(rng)}};
    const auto r = execute(p, input, std::nullopt);
    REQUIRE(r.fault == Fault::None);
    REQUIRE(!r.trace.empty());
    std::uniform_int_distribution<std::size_t> occ_dist(0, r.trace.size() - 1);
    for (int k = 0; k < 3; ++k) {
      const std::size_t occ = occ_dist(rng);
      SliceCriterion c;
      c.output_stm = r.trace[occ].stmt;
      c.occurrence = occ;
      c.output_vars = r.trace[occ].uses;
      // nothing read: the slice is the statement plus its control ancestors
      if (c.output_vars.empty()) c.output_vars = {"__none__"};
      CHECK(dynamic_slice(r, c) == closure_oracle(r, occ, c.output_vars));
      ++checked;
    }
  }
  CHECK(checked == 300);
}

TEST_CASE("adding a failing test never shrinks the context") {
  for (const auto& v : generate_corpus(CorpusSpec{}, 5)) {
    const auto records = run_suite(v);
    const auto ds = build_spectra(records);
    std::vector<StmtIndex> prev;
    const auto fails = ds.failing();
    for (Eigen::Index k = 1; k <= fails; ++k) {
      const auto cur = fault_context(ds, records, static_cast<std::size_t>(k)).stm_sc;
      CHECK(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
      prev = cur;
    }
  }
}
