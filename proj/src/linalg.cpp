// SPDX-License-Identifier: Apache-2.0
#include "sdcons/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "sdcons/error.hpp"

namespace sdcons {
namespace {

double off_diagonal_norm(const Eigen::MatrixXd& a) {
  double sum = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (i != j) sum += a(i, j) * a(i, j);
  return std::sqrt(sum);
}

void normalize_sign(Eigen::Ref<Eigen::VectorXd> v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 1e-12) {
      if (v(i) < 0) v = -v;
      return;
    }
  }
}

}  // namespace

SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& input, double tolerance,
                            int max_sweeps) {
  if (input.rows() != input.cols())
    throw InvalidArgument("jacobi_eigen: matrix must be square");
  const Eigen::Index n = input.rows();
  Eigen::MatrixXd a = 0.5 * (input + input.transpose());
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  const double scale = a.norm();
  const double threshold = tolerance * scale;

  int sweep = 0;
  for (; off_diagonal_norm(a) > threshold; ++sweep) {
    if (sweep >= max_sweeps)
      throw NumericalError("jacobi_eigen: no convergence after " +
                               std::to_string(max_sweeps) + " sweeps",
                           off_diagonal_norm(a));
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  for (Eigen::Index j = 0; j < n; ++j) normalize_sign(v.col(j));

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    if (a(i, i) != a(j, j)) return a(i, i) > a(j, j);
    return std::lexicographical_compare(v.col(i).begin(), v.col(i).end(),
                                        v.col(j).begin(), v.col(j).end());
  });

  SymmetricEigen out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  out.sweeps = sweep;
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = a(order[k], order[k]);
    out.vectors.col(k) = v.col(order[k]);
  }
  return out;
}

namespace {

void check_small_symmetric(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols())
    throw InvalidArgument("max_eig_sym: matrix must be square");
  if (a.rows() == 0 || a.rows() > 16)
    throw InvalidArgument("max_eig_sym: dimension must be in [1, 16]");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= 1e-12 * scale))
    throw InvalidArgument("max_eig_sym: matrix is not symmetric (|A - A^T| = " +
                          std::to_string(asym) + ")");
}

}  // namespace

LeadingEigenpair max_eig_sym(const Eigen::MatrixXd& a) {
  check_small_symmetric(a);
  if (a.rows() == 1) return {a(0, 0), Eigen::VectorXd::Ones(1)};
  auto eig = jacobi_eigen(a);
  return {eig.values(0), eig.vectors.col(0)};
}

double max_eigenvalue(const Eigen::MatrixXd& a) { return max_eig_sym(a).value; }

}  // namespace sdcons
