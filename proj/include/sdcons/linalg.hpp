// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

namespace sdcons {

/// Eigen-decomposition of a real symmetric matrix, eigenvalues descending.
/// Column i of `vectors` is a unit eigenvector for `values(i)`; its first
/// entry of magnitude above 1e-12 is positive.
struct SymmetricEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  int sweeps = 0;
};

inline constexpr double kJacobiTolerance = 1e-12;
inline constexpr int kJacobiMaxSweeps = 100;

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops
/// below `tolerance * ||A||_F`. Throws NumericalError past `max_sweeps`.
/// Ties in the sorted order are broken by ascending lexicographic order of
/// the (sign-normalized) eigenvectors.
SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& a,
                            double tolerance = kJacobiTolerance,
                            int max_sweeps = kJacobiMaxSweeps);

struct LeadingEigenpair {
  double value;
  Eigen::VectorXd vector;
};

/// Largest eigenvalue with a unit eigenvector. Requires m <= 16 and symmetry
/// within 1e-12 (scaled by max(1, max|a_ij|)).
LeadingEigenpair max_eig_sym(const Eigen::MatrixXd& a);

/// Largest eigenvalue only; same preconditions as max_eig_sym.
double max_eigenvalue(const Eigen::MatrixXd& a);

}  // namespace sdcons
