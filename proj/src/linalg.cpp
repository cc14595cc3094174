#include "chaoskit/linalg.hpp"

#include <cmath>
#include <sstream>

#include "chaoskit/errors.hpp"
#include "chaoskit/rng.hpp"
#include "chaoskit/threads.hpp"

namespace chaoskit::linalg {

void BlockMatrix::validate() const {
  const int n = size();
  if (block_dim < 1 || n_blocks < 1) {
    throw InvalidInput("BlockMatrix: block_dim and n_blocks must be >= 1");
  }
  if (entries.rows() != n || entries.cols() != n) {
    throw InvalidInput("BlockMatrix: entries must be (dN) x (dN)");
  }
  const double scale = std::max(1.0, entries.cwiseAbs().maxCoeff());
  if ((entries - entries.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * scale) {
    throw InvalidInput("BlockMatrix: not symmetric within 1e-12");
  }
}

BlockMatrix make_block_matrix(Eigen::MatrixXd entries, int block_dim,
                              int n_blocks) {
  BlockMatrix s;
  s.entries = std::move(entries);
  s.block_dim = block_dim;
  s.n_blocks = n_blocks;
  s.validate();
  return s;
}

namespace {

double trace_inverse_dense(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("trace_inverse: Cholesky factorization failed");
  }
  // Tr[M^-1] = |L^-1|_F^2 from M = L L^T.
  const Eigen::MatrixXd inv_l =
      llt.matrixL().solve(Eigen::MatrixXd::Identity(m.rows(), m.rows()));
  return inv_l.squaredNorm();
}

}  // namespace

double trace_inverse(const BlockMatrix& s) {
  s.validate();
  return trace_inverse_dense(s.entries);
}

double block_trace_sum(const BlockMatrix& s) {
  s.validate();
  double total = 0.0;
  for (int i = 0; i < s.n_blocks; ++i) {
    total += trace_inverse_dense(s.diagonal_block(i));
  }
  return total;
}

Eigen::MatrixXd random_spd(int size, std::uint64_t seed,
                           std::uint64_t stream) {
  Eigen::MatrixXd m(size, size);
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      m(i, j) = rng::normal_at(seed, stream, 0, i, j);
    }
  }
  Eigen::MatrixXd a = m.transpose() * m;
  a += 1e-6 * Eigen::MatrixXd::Identity(size, size);
  // Symmetrize away the rounding of the product.
  return 0.5 * (a + a.transpose());
}

AuditReport superadditivity_audit(std::uint64_t seed, int trials, int d_max,
                                  int n_max) {
  if (trials < 1) throw InvalidInput("superadditivity_audit: trials < 1");
  if (d_max < 1 || n_max < 2) {
    throw InvalidInput("superadditivity_audit: need d_max >= 1, n_max >= 2");
  }
  AuditReport report;
  report.rows.resize(trials);
  std::vector<std::string> failures(trials);

  parallel_for(trials, [&](int t) {
    const std::uint64_t k1 = rng::stream_key(seed, t, 1, 0, 0);
    const std::uint64_t k2 = rng::stream_key(seed, t, 2, 0, 0);
    const int d = 1 + static_cast<int>(k1 % d_max);
    const int n = 2 + static_cast<int>(k2 % (n_max - 1));
    const BlockMatrix s =
        make_block_matrix(random_spd(d * n, seed, 1000 + t), d, n);

    AuditRow row;
    row.trial = t;
    row.d = d;
    row.n = n;
    row.lhs = trace_inverse(s);
    row.rhs = block_trace_sum(s);
    row.margin = row.lhs - row.rhs;
    {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.entries);
      const auto& ev = es.eigenvalues();
      row.condition_number = ev(ev.size() - 1) / ev(0);
    }
    const double tol = 1e-9 * std::max(1.0, row.lhs);
    bool bad = row.margin < -tol;

    // Schur recursion over leading principal block partitions.
    for (int k = 2; k <= n && !bad; ++k) {
      const int big = k * d;
      const int small = (k - 1) * d;
      const Eigen::MatrixXd sk = s.entries.topLeftCorner(big, big);
      const Eigen::MatrixXd a = s.entries.topLeftCorner(small, small);
      const Eigen::MatrixXd delta = s.entries.block(0, small, small, d);
      const Eigen::MatrixXd z = s.entries.block(small, small, d, d);
      const Eigen::MatrixXd a_inv_delta = a.llt().solve(delta);
      const Eigen::MatrixXd schur = z - delta.transpose() * a_inv_delta;
      const Eigen::MatrixXd zt = schur.llt().solve(
          Eigen::MatrixXd::Identity(d, d));
      const double tr_big = trace_inverse_dense(sk);
      const double tr_small = trace_inverse_dense(a);
      const double middle = (a_inv_delta * zt).cwiseProduct(a_inv_delta)
                                .sum();  // Tr[A^-1 d Zt d^T A^-1]
      const double identity_gap =
          tr_big - (tr_small + middle + zt.trace());
      if (std::abs(identity_gap) > 1e-9 * std::max(1.0, tr_big)) {
        bad = true;
        break;
      }
      // Increment domination: middle >= 0 and Tr[Zt] >= Tr[Z^-1].
      const double increment = tr_big - tr_small;
      const double diag_increment = trace_inverse_dense(z);
      if (increment < diag_increment - 1e-9 * std::max(1.0, tr_big)) {
        bad = true;
        break;
      }
    }

    if (bad) {
      std::ostringstream os;
      os << "trial " << t << " d=" << d << " N=" << n << " lhs=" << row.lhs
         << " rhs=" << row.rhs << "\n"
         << s.entries << "\n";
      failures[t] = os.str();
    }
    report.rows[t] = row;
  });

  for (int t = 0; t < trials; ++t) {
    if (!failures[t].empty()) {
      ++report.violations;
      if (report.counterexample.empty()) report.counterexample = failures[t];
    }
  }
  return report;
}

}  // namespace chaoskit::linalg
