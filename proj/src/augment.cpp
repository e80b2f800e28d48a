#include "pcd/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pcd/error.hpp"
#include "pcd/rng.hpp"

namespace pcd {

using Eigen::Index;

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::Origin: return "origin";
    case Scenario::Pcd: return "pcd";
    case Scenario::Undersample: return "undersample";
    case Scenario::Resample: return "resample";
  }
  return "?";
}

Scenario scenario_from_string(const std::string& text) {
  for (Scenario s : {Scenario::Origin, Scenario::Pcd, Scenario::Undersample, Scenario::Resample})
    if (to_string(s) == text) return s;
  throw ConfigError("unknown scenario '" + text + "'");
}

Index AugmentedDataset::synthetic_count() const {
  return std::count(data.provenance.begin(), data.provenance.end(), Provenance::Synthetic);
}

Eigen::MatrixXi AugmentedDataset::synthetic_rows() const {
  Eigen::MatrixXi out(synthetic_count(), data.statements());
  Index r = 0;
  for (Index i = 0; i < data.tests(); ++i)
    if (data.provenance[static_cast<std::size_t>(i)] == Provenance::Synthetic) out.row(r++) = data.matrix.row(i);
  return out;
}

Eigen::VectorXi binarize(const Eigen::VectorXd& sample) {
  if (!sample.allFinite()) throw NonFinite("generated sample has non-finite entries");
  return (sample.array() > 0.0).cast<int>();
}

Eigen::VectorXi embed_row(const Eigen::VectorXi& bits, const std::vector<StmtIndex>& columns, Index n) {
  if (bits.size() != static_cast<Index>(columns.size())) throw ShapeMismatch("one bit per context column");
  Eigen::VectorXi row = Eigen::VectorXi::Zero(n);
  for (std::size_t k = 0; k < columns.size(); ++k) {
    if (columns[k] < 1 || columns[k] > n) throw InvalidTarget("context column S" + std::to_string(columns[k]));
    row(columns[k] - 1) = bits(static_cast<Index>(k));
  }
  return row;
}

namespace {

void require_failing(const CoverageDataset& ds) {
  if (ds.failing() == 0) throw NoFailingTests("dataset has no failing rows");
}

AugmentedDataset with_rows(Scenario scenario, const CoverageDataset& ds, const std::vector<Index>& keep) {
  AugmentedDataset out;
  out.scenario = scenario;
  out.data.stmt_ids = ds.stmt_ids;
  out.data.matrix.resize(static_cast<Index>(keep.size()), ds.statements());
  out.data.errors.resize(static_cast<Index>(keep.size()));
  for (std::size_t r = 0; r < keep.size(); ++r) {
    out.data.matrix.row(static_cast<Index>(r)) = ds.matrix.row(keep[r]);
    out.data.errors(static_cast<Index>(r)) = ds.errors(keep[r]);
    const auto src = static_cast<std::size_t>(keep[r]);
    out.data.test_ids.push_back(src < ds.test_ids.size() ? ds.test_ids[src] : "t" + std::to_string(src + 1));
    out.data.provenance.push_back(src < ds.provenance.size() ? ds.provenance[src] : Provenance::Real);
    out.source_row.push_back(keep[r]);
  }
  return out;
}

std::vector<Index> all_rows(const CoverageDataset& ds) {
  std::vector<Index> rows(static_cast<std::size_t>(ds.tests()));
  std::iota(rows.begin(), rows.end(), Index{0});
  return rows;
}

void append_row(AugmentedDataset& out, const Eigen::VectorXi& row, int error, const std::string& id,
                Index source) {
  const Index r = out.data.tests();
  out.data.matrix.conservativeResize(r + 1, Eigen::NoChange);
  out.data.matrix.row(r) = row.transpose();
  out.data.errors.conservativeResize(r + 1);
  out.data.errors(r) = error;
  out.data.test_ids.push_back(id);
  out.data.provenance.push_back(Provenance::Synthetic);
  out.source_row.push_back(source);
}

}  // namespace

AugmentedDataset origin(const CoverageDataset& dataset) {
  return with_rows(Scenario::Origin, dataset, all_rows(dataset));
}

AugmentedDataset generate_until_balanced(NoiseModel& model, const NoiseSchedule& sched,
                                         const CoverageDataset& dataset, const FusedContext& ctx,
                                         const AugmentConfig& cfg) {
  require_failing(dataset);
  AugmentedDataset out = with_rows(Scenario::Pcd, dataset, all_rows(dataset));
  const Index need = dataset.passing() - dataset.failing();
  if (need <= 0) return out;

  const auto width = static_cast<Index>(ctx.stm_fusion.size());
  std::vector<Eigen::VectorXi> bits(static_cast<std::size_t>(need));
  std::vector<std::size_t> pending(static_cast<std::size_t>(need));
  std::iota(pending.begin(), pending.end(), std::size_t{0});
  for (int round = 0; !pending.empty(); ++round) {
    const auto seed = derive_seed(cfg.seed, "generation", static_cast<std::uint64_t>(round));
    const Eigen::MatrixXd samples = dpm_solve(model, sched, width, static_cast<Index>(pending.size()),
                                              ClassLabel::Fail, cfg.gamma, seed, cfg.solver);
    std::vector<std::size_t> retry;
    for (std::size_t k = 0; k < pending.size(); ++k) {
      Eigen::VectorXi b = binarize(samples.col(static_cast<Index>(k)));
      const bool redraw = cfg.reject_empty && b.sum() == 0 && round + 1 < cfg.max_redraws;
      if (redraw)
        retry.push_back(pending[k]);
      else
        bits[pending[k]] = std::move(b);
    }
    pending = std::move(retry);
  }

  for (Index k = 0; k < need; ++k)
    append_row(out, embed_row(bits[static_cast<std::size_t>(k)], ctx.stm_fusion, dataset.statements()), 1,
               "gen" + std::to_string(k + 1), -1);
  return out;
}

AugmentedDataset undersample(const CoverageDataset& dataset, std::mt19937_64& rng) {
  require_failing(dataset);
  const Index fails = dataset.failing();
  std::vector<Index> passing;
  for (Index i = 0; i < dataset.tests(); ++i)
    if (dataset.errors(i) == 0) passing.push_back(i);
  if (static_cast<Index>(passing.size()) <= fails) return with_rows(Scenario::Undersample, dataset, all_rows(dataset));

  std::vector<Index> chosen;
  std::sample(passing.begin(), passing.end(), std::back_inserter(chosen), fails, rng);
  std::vector<char> keep_pass(static_cast<std::size_t>(dataset.tests()), 0);
  for (Index i : chosen) keep_pass[static_cast<std::size_t>(i)] = 1;
  std::vector<Index> keep;
  for (Index i = 0; i < dataset.tests(); ++i)
    if (dataset.errors(i) != 0 || keep_pass[static_cast<std::size_t>(i)]) keep.push_back(i);
  return with_rows(Scenario::Undersample, dataset, keep);
}

AugmentedDataset resample(const CoverageDataset& dataset, std::mt19937_64& rng) {
  require_failing(dataset);
  AugmentedDataset out = with_rows(Scenario::Resample, dataset, all_rows(dataset));
  std::vector<Index> failing;
  for (Index i = 0; i < dataset.tests(); ++i)
    if (dataset.errors(i) != 0) failing.push_back(i);
  const Index need = dataset.passing() - dataset.failing();
  std::uniform_int_distribution<std::size_t> pick(0, failing.size() - 1);
  for (Index k = 0; k < need; ++k) {
    const Index src = failing[pick(rng)];
    const auto s = static_cast<std::size_t>(src);
    const std::string base = s < dataset.test_ids.size() ? dataset.test_ids[s] : "t" + std::to_string(s + 1);
    append_row(out, dataset.matrix.row(src).transpose(), 1, base + "#dup" + std::to_string(k + 1), src);
  }
  return out;
}

}  // namespace pcd
