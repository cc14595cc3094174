#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace chaoskit::linalg {

/// Symmetric positive definite matrix of size dN with an N x N block
/// structure of d x d blocks.
struct BlockMatrix {
  Eigen::MatrixXd entries;
  int block_dim = 1;  // d
  int n_blocks = 1;   // N

  int size() const { return block_dim * n_blocks; }
  Eigen::MatrixXd diagonal_block(int i) const {
    return entries.block(i * block_dim, i * block_dim, block_dim, block_dim);
  }
  /// Throws InvalidInput on shape mismatch or asymmetry beyond 1e-12.
  void validate() const;
};

BlockMatrix make_block_matrix(Eigen::MatrixXd entries, int block_dim,
                              int n_blocks);

/// Tr[S^-1] through a Cholesky factorization; throws NotPositiveDefinite.
double trace_inverse(const BlockMatrix& s);

/// sum_i Tr[(S_ii)^-1] over the diagonal blocks.
double block_trace_sum(const BlockMatrix& s);

/// Wishart-style draw M^T M + 1e-6 I with standard normal M.
Eigen::MatrixXd random_spd(int size, std::uint64_t seed,
                           std::uint64_t stream);

struct AuditRow {
  int trial = 0;
  int d = 0;
  int n = 0;
  double lhs = 0.0;     // Tr[S^-1]
  double rhs = 0.0;     // sum of diagonal-block inverse traces
  double margin = 0.0;  // lhs - rhs
  double condition_number = 0.0;
};

struct AuditReport {
  std::vector<AuditRow> rows;
  int violations = 0;
  std::string counterexample;  // dump of the first violating matrix
};

// Random sweep of the superadditivity inequality lhs >= rhs (tolerance
// 1e-9 relative to lhs), including a replay of the Schur-complement
// recursion: for every leading block partition the trace identity
//   Tr[S_k^-1] = Tr[S_{k-1}^-1] + Tr[S_{k-1}^-1 d Zt d^T S_{k-1}^-1]
//               + Tr[Zt]
// must hold and each increment must dominate the diagonal-block increment.
AuditReport superadditivity_audit(std::uint64_t seed, int trials, int d_max,
                                  int n_max);

}  // namespace chaoskit::linalg
