#include "pcd/context.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "pcd/spectra.hpp"

namespace pcd {

Eigen::MatrixXd covariance(const Eigen::MatrixXd& x) {
  if (x.rows() < 2) throw DegenerateData("covariance needs at least two rows");
  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  return (centered.transpose() * centered) / static_cast<double>(x.rows() - 1);
}

int components_for_variance(const Eigen::VectorXd& values, double fraction) {
  const double total = values.cwiseMax(0.0).sum();
  if (total <= 0.0) return 1;
  double acc = 0.0;
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    acc += std::max(values(k), 0.0);
    if (acc >= fraction * total - 1e-12) return static_cast<int>(k) + 1;
  }
  return static_cast<int>(values.size());
}

StatisticalContext contribution_select(const Eigen::MatrixXi& x, std::optional<int> m,
                                       std::optional<int> k2) {
  if (x.rows() < 2) throw DegenerateData("contribution_select needs at least two tests");
  const int n = static_cast<int>(x.cols());
  if (n < 1) throw DegenerateData("coverage matrix has no columns");

  const auto eig = eigen_sym(covariance(x.cast<double>()));
  const int used = m.value_or(components_for_variance(eig.values));
  const int keep = k2.value_or(n);
  if (used < 1 || used > n) throw InvalidRange("m must lie in [1, N]");
  if (keep < 1 || keep > n) throw InvalidRange("K'' must lie in [1, N]");

  StatisticalContext ctx;
  ctx.m = used;
  ctx.contributions = eig.vectors.leftCols(used).cwiseAbs().rowwise().sum();

  // Quantize before comparing so round-off cannot split exact ties.
  auto key = [&](int j) { return std::round(ctx.contributions(j) * 1e9); };
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return key(a) > key(b); });

  for (int r = 0; r < keep; ++r) ctx.stm_pca.push_back(idx[static_cast<std::size_t>(r)] + 1);
  ctx.x_pca = select_columns(x, ctx.stm_pca);
  return ctx;
}

int default_target_dim(int initial_size, int stm_sc_size) {
  int k = std::max(4, initial_size);
  if (k % 2) ++k;
  const int cap = stm_sc_size - stm_sc_size % 2;
  return std::min(k, cap);
}

FusedContext fuse(const Eigen::MatrixXi& x, const std::vector<StmtIndex>& stm_sc,
                  const std::vector<StmtIndex>& stm_pca, double alpha,
                  std::optional<int> target_dim) {
  if (!(alpha >= 0.0)) throw InvalidRange("alpha must be non-negative");
  const std::set<StmtIndex> sc(stm_sc.begin(), stm_sc.end());

  FusedContext out;
  out.alpha = alpha;
  out.k_f = static_cast<int>(std::lround(alpha * static_cast<double>(sc.size())));
  const std::size_t prefix = std::min<std::size_t>(static_cast<std::size_t>(out.k_f), stm_pca.size());

  // Membership kept in StmPCA order so truncation, when needed, favours the
  // statements with the largest contributions.
  std::vector<StmtIndex> fusion;
  std::set<StmtIndex> taken;
  for (std::size_t i = 0; i < prefix; ++i)
    if (sc.count(stm_pca[i]) && taken.insert(stm_pca[i]).second) fusion.push_back(stm_pca[i]);

  if (!target_dim && sc.size() < 4)
    throw InsufficientContext("semantic context has " + std::to_string(sc.size()) + " statements, need at least 4");
  const int k = target_dim.value_or(default_target_dim(static_cast<int>(fusion.size()),
                                                       static_cast<int>(sc.size())));
  if (k < 1) throw InsufficientContext("target dimension must be positive");
  if (static_cast<int>(fusion.size()) > k) fusion.resize(static_cast<std::size_t>(k));

  for (std::size_t i = 0; i < stm_pca.size() && static_cast<int>(fusion.size()) < k; ++i)
    if (sc.count(stm_pca[i]) && taken.insert(stm_pca[i]).second) fusion.push_back(stm_pca[i]);

  if (static_cast<int>(fusion.size()) < k) {
    if (fusion.size() < 4)
      throw InsufficientContext("only " + std::to_string(fusion.size()) +
                                " context statements available, need at least 4");
    fusion.resize(fusion.size() - fusion.size() % 2);
  }

  std::sort(fusion.begin(), fusion.end());
  out.stm_fusion = fusion;
  out.target_dim = static_cast<int>(fusion.size());
  out.x_fusion = select_columns(x, out.stm_fusion);
  return out;
}

}  // namespace pcd
