#ifndef TMOMENT_HILBERT_SPACE_HPP
#define TMOMENT_HILBERT_SPACE_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include <tmoment/gram_system.hpp>

namespace tmoment {

/// Orthonormal basis of (a subspace of) the space spanned by the abstract
/// generators g_0, ..., g_rho, whose inner products are the Gram entries
/// (g_j, g_m) = Gamma(m, j).  The generators themselves are never
/// materialized; every vector is a coefficient row over them.
///
///   f_i = sum_k C(i, k) g_k          (rows of C, supported on `kept`)
///   g_j = sum_i D(j, i) f_i + r_j    (D = Gamma C^T; r_j = 0 for every j
///                                     whose generator lies in the span)
struct OrthonormalBasis {
  std::vector<int> ordinals;  // generator ordinals processed, in order
  std::vector<int> kept;      // ordinals kept as independent directions
  Eigen::MatrixXd C;          // dim x (rho+1)
  Eigen::MatrixXd D;          // (rho+1) x dim
  int dim = 0;
};

/// Modified Gram-Schmidt in the Gamma metric over the given generator
/// ordinals, with one re-orthogonalization pass.  A generator is dropped as
/// dependent when its squared residual falls below
/// tau_rank * max(1, Gamma(j,j)); a squared residual below the negative of
/// that bound means the Gram data is not positive semidefinite.
inline OrthonormalBasis gram_schmidt(const GramSystem& G, const std::vector<int>& ordinals,
                                     double tau_rank) {
  const int N = static_cast<int>(G.gamma.rows());
  if (G.gamma(0, 0) <= 0.0)
    throw std::invalid_argument("basis construction requires s_0 > 0");
  for (int j : ordinals)
    if (j < 0 || j >= N) throw std::invalid_argument("generator ordinal out of range");

  OrthonormalBasis B;
  B.ordinals = ordinals;
  std::vector<Eigen::VectorXd> rows;

  for (int j : ordinals) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(N);
    v(j) = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& c : rows) {
        const double coef = c.dot(G.gamma * v);
        v -= coef * c;
      }
    }
    const double nrm2 = v.dot(G.gamma * v);
    const double scale = std::max(1.0, G.gamma(j, j));
    if (nrm2 < -tau_rank * scale)
      throw std::runtime_error("generator " + std::to_string(j) +
                               " has negative squared residual; Gram data is not PSD");
    if (nrm2 <= tau_rank * scale) continue;  // dependent
    rows.push_back(v / std::sqrt(nrm2));
    B.kept.push_back(j);
  }

  B.dim = static_cast<int>(rows.size());
  B.C.resize(B.dim, N);
  for (int i = 0; i < B.dim; ++i) B.C.row(i) = rows[i].transpose();
  B.D = G.gamma * B.C.transpose();
  return B;
}

/// Squared distance of g_j from the span of B, clamped at zero when the
/// (numerically) slightly negative value is within tau * max(1, Gamma(j,j)).
inline double residual_norm_sq(const GramSystem& G, const OrthonormalBasis& B, int j,
                               double tau = 1e-9) {
  const double val = G.gamma(j, j) - B.D.row(j).squaredNorm();
  const double scale = std::max(1.0, G.gamma(j, j));
  if (val < -tau * scale)
    throw std::runtime_error("negative residual for generator " + std::to_string(j) +
                             "; basis and Gram data are inconsistent");
  return std::max(val, 0.0);
}

/// Dimensional stability: H_0 = span{ g_j : j in omega0 } must already carry
/// the whole space spanned by all generators.
struct StabilityReport {
  bool stable = false;
  OrthonormalBasis basis0;          // orthonormal basis of H_0
  std::map<int, double> residuals;  // squared residuals of g_j, j not in omega0
  int dim_H0 = 0;
};

inline StabilityReport check_dimensional_stability(const GramSystem& G, double tau_rank) {
  StabilityReport rep;
  rep.basis0 = gram_schmidt(G, G.omega.omega0, tau_rank);
  rep.dim_H0 = rep.basis0.dim;
  rep.stable = true;
  const std::set<int> inside(G.omega.omega0.begin(), G.omega.omega0.end());
  for (int j = 0; j < G.gamma.rows(); ++j) {
    if (inside.count(j)) continue;
    const double r = residual_norm_sq(G, rep.basis0, j, tau_rank);
    rep.residuals[j] = r;
    if (r > tau_rank * std::max(1.0, G.gamma(j, j))) rep.stable = false;
  }
  return rep;
}

}  // namespace tmoment

#endif  // TMOMENT_HILBERT_SPACE_HPP
