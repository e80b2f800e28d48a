#pragma once

// Statistical context (contribution-based PCA feature selection) and its
// fusion with the slicing-derived semantic context.

#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "pcd/error.hpp"
#include "pcd/minilang.hpp"

namespace pcd {

template <typename Scalar>
struct SymmetricEigen {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values;               // descending
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> vectors;  // column k pairs values(k)
  int sweeps = 0;
};

struct JacobiOptions {
  double symmetry_tol = 1e-9;
  double off_diagonal_tol = 1e-10;
  int max_sweeps = 100;
};

/// Cyclic Jacobi eigensolver for real symmetric matrices. Eigenvalues come
/// out descending; each eigenvector's largest-magnitude component is positive.
template <typename Derived>
SymmetricEigen<typename Derived::Scalar> eigen_sym(const Eigen::MatrixBase<Derived>& input,
                                                   const JacobiOptions& opts = {}) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (input.rows() != input.cols()) throw NotSymmetric("matrix is not square");
  const Eigen::Index n = input.rows();
  Mat a = input;
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > opts.symmetry_tol * std::max<Scalar>(1, a.cwiseAbs().maxCoeff()))
    throw NotSymmetric("asymmetry exceeds tolerance");
  a = (a + a.transpose()) / Scalar(2);

  Mat v = Mat::Identity(n, n);
  auto off_norm = [&] {
    Scalar s = 0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) s += 2 * a(p, q) * a(p, q);
    return std::sqrt(s);
  };

  int sweep = 0;
  while (off_norm() >= Scalar(opts.off_diagonal_tol)) {
    if (sweep == opts.max_sweeps)
      throw NoConvergence("Jacobi did not converge in " + std::to_string(opts.max_sweeps) + " sweeps");
    ++sweep;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Scalar apq = a(p, q);
        if (apq == Scalar(0)) continue;
        // Rotation angle that zeroes a(p, q); t is the smaller root of
        // t^2 + 2 theta t - 1 = 0.
        const Scalar theta = (a(q, q) - a(p, p)) / (2 * apq);
        const Scalar t = (theta >= 0 ? Scalar(1) : Scalar(-1)) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1));
        const Scalar c = 1 / std::sqrt(t * t + 1);
        const Scalar s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return a(x, x) > a(y, y); });

  SymmetricEigen<Scalar> out;
  out.sweeps = sweep;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    out.values(k) = a(src, src);
    auto col = v.col(src);
    Eigen::Index arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    out.vectors.col(k) = col(arg) < 0 ? Eigen::Matrix<Scalar, Eigen::Dynamic, 1>(-col)
                                      : Eigen::Matrix<Scalar, Eigen::Dynamic, 1>(col);
  }
  return out;
}

/// Sample covariance of the columns of `x` (rows are observations, M-1 divisor).
Eigen::MatrixXd covariance(const Eigen::MatrixXd& x);

/// Smallest m whose leading eigenvalues cover `fraction` of the total variance (min 1).
int components_for_variance(const Eigen::VectorXd& descending_eigenvalues, double fraction = 0.95);

struct StatisticalContext {
  std::vector<StmtIndex> stm_pca;  // by (-contribution, +index)
  Eigen::MatrixXi x_pca;           // M x K''
  Eigen::VectorXd contributions;   // per statement, column order
  int m = 0;
};

/// Contributions c_i = sum over the top-m eigenvectors of |V_pi|; keeps the
/// K'' statements with the largest c_i. Contributions equal to within 1e-9
/// count as ties and fall back to ascending index. `m` defaults to the 95%
/// variance rule, `k2` to N.
StatisticalContext contribution_select(const Eigen::MatrixXi& x, std::optional<int> m = std::nullopt,
                                       std::optional<int> k2 = std::nullopt);

struct FusedContext {
  std::vector<StmtIndex> stm_fusion;  // ascending
  Eigen::MatrixXi x_fusion;           // M x K
  double alpha = 1.0;
  int k_f = 0;
  int target_dim = 0;
};

/// Even width >= max(4, initial) and <= the largest even number <= |StmSC|.
int default_target_dim(int initial_size, int stm_sc_size);

/// StmFusion starts as StmSC ∩ StmPCA[:K^f] with K^f = round(alpha |StmSC|),
/// then grows with StmSC members in StmPCA order until it holds `target_dim`
/// statements (default: default_target_dim).
FusedContext fuse(const Eigen::MatrixXi& x, const std::vector<StmtIndex>& stm_sc,
                  const std::vector<StmtIndex>& stm_pca, double alpha,
                  std::optional<int> target_dim = std::nullopt);

}  // namespace pcd
