#ifndef TMOMENT_SPECTRAL_HPP
#define TMOMENT_SPECTRAL_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <tmoment/measure.hpp>
#include <tmoment/operator_builder.hpp>

namespace tmoment {

/// One joint eigenvalue tuple of a commuting Hermitian family, together with
/// an orthonormal basis of its joint eigenspace.
struct JointEigenpair {
  Eigen::VectorXd value;      // one eigenvalue per axis
  Eigen::MatrixXcd vectors;   // dim x multiplicity, orthonormal columns
};

/// Simultaneously diagonalizes a family of commuting Hermitian matrices.
///
/// Axis by axis, every current invariant block is compressed, solved with a
/// Hermitian eigensolver, and split into sub-blocks by clustering eigenvalues
/// whose gaps stay within tau_cluster (relative to the matrix norm).  Each
/// surviving block accumulates one eigenvalue per axis; after the last axis
/// the blocks are exactly the joint eigenspaces.
inline std::vector<JointEigenpair> joint_diagonalize(const std::vector<Eigen::MatrixXcd>& ms,
                                                     double tau_cluster) {
  if (ms.empty()) throw std::invalid_argument("no matrices to diagonalize");
  const int dim = static_cast<int>(ms[0].rows());

  struct Block {
    Eigen::MatrixXcd basis;
    std::vector<double> values;
  };
  std::vector<Block> blocks{{Eigen::MatrixXcd::Identity(dim, dim), {}}};

  for (const auto& m : ms) {
    if (m.rows() != dim || m.cols() != dim)
      throw std::invalid_argument("matrices must share one square size");
    const double gap = tau_cluster * std::max(1.0, detail::spectral_norm(m));
    std::vector<Block> next;
    for (const auto& blk : blocks) {
      Eigen::MatrixXcd S = blk.basis.adjoint() * m * blk.basis;
      S = 0.5 * (S + S.adjoint().eval());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(S);
      if (es.info() != Eigen::Success)
        throw std::runtime_error("eigendecomposition failed on an invariant block");
      const auto& vals = es.eigenvalues();
      const int k = static_cast<int>(vals.size());
      int start = 0;
      for (int i = 1; i <= k; ++i) {
        if (i < k && vals(i) - vals(i - 1) <= gap) continue;
        const int len = i - start;
        Block sub;
        sub.basis = blk.basis * es.eigenvectors().middleCols(start, len);
        sub.values = blk.values;
        sub.values.push_back(vals.segment(start, len).mean());
        next.push_back(std::move(sub));
        start = i;
      }
    }
    blocks = std::move(next);
  }

  std::vector<JointEigenpair> out;
  out.reserve(blocks.size());
  for (auto& blk : blocks) {
    JointEigenpair p;
    p.value = Eigen::Map<Eigen::VectorXd>(blk.values.data(), static_cast<int>(blk.values.size()));
    p.vectors = std::move(blk.basis);
    out.push_back(std::move(p));
  }
  return out;
}

/// Worst relative defect of the joint eigen equations M_l v = lambda_l v.
inline double joint_eigen_residual(const std::vector<Eigen::MatrixXcd>& ms,
                                   const std::vector<JointEigenpair>& pairs) {
  double worst = 0.0;
  for (size_t l = 0; l < ms.size(); ++l) {
    const double scale = std::max(1.0, detail::spectral_norm(ms[l]));
    for (const auto& p : pairs) {
      const Eigen::MatrixXcd defect = ms[l] * p.vectors - p.value(static_cast<int>(l)) * p.vectors;
      for (int c = 0; c < defect.cols(); ++c)
        worst = std::max(worst, defect.col(c).norm() / scale);
    }
  }
  return worst;
}

/// Joint spectral measure of the family, scalarized on the vector of the
/// constant generator.
struct ExtractionResult {
  AtomicMeasure measure;        // atoms sorted lexicographically by point
  double parseval_defect = 0.0; // |sum of raw weights - s0|
  double max_eigen_residual = 0.0;
  int pruned_atoms = 0;
  int merged_atoms = 0;
};

/// Turns the joint eigenstructure into an atomic measure: each joint
/// eigenvalue tuple becomes a support point and its weight is the squared
/// norm of the projection of g0 onto the joint eigenspace.  The raw weights
/// resolve the identity, so their sum must equal s0 (reported as the
/// Parseval defect).  Atoms below tau_atom * s0 are dropped; near-duplicate
/// points (within the cluster tolerance) are merged by weighted average.
inline ExtractionResult extract_measure(const std::vector<Eigen::MatrixXcd>& ms,
                                        const Eigen::VectorXd& g0_coords, double s0,
                                        double tau_cluster, double tau_atom) {
  ExtractionResult out;
  const auto pairs = joint_diagonalize(ms, tau_cluster);
  out.max_eigen_residual = joint_eigen_residual(ms, pairs);

  const Eigen::VectorXcd d0 = g0_coords.cast<Complex>();
  std::vector<Atom> atoms;
  CompensatedSum total;
  for (const auto& p : pairs) {
    const double w = (p.vectors.adjoint() * d0).squaredNorm();
    total.add(w);
    atoms.push_back({p.value, w});
  }
  out.parseval_defect = std::abs(total.value() - s0);

  // Prune negligible atoms.
  const double cut = tau_atom * s0;
  std::vector<Atom> kept;
  for (auto& a : atoms) {
    if (a.weight >= cut)
      kept.push_back(std::move(a));
    else
      ++out.pruned_atoms;
  }

  // Merge points that coincide up to the clustering resolution.
  std::sort(kept.begin(), kept.end(), [](const Atom& a, const Atom& b) {
    return std::lexicographical_compare(a.point.data(), a.point.data() + a.point.size(),
                                        b.point.data(), b.point.data() + b.point.size());
  });
  double coord_scale = 1.0;
  for (const auto& a : kept) coord_scale = std::max(coord_scale, a.point.cwiseAbs().maxCoeff());
  const double merge_tol = tau_cluster * coord_scale;
  for (auto& a : kept) {
    if (!out.measure.atoms.empty()) {
      Atom& last = out.measure.atoms.back();
      if ((last.point - a.point).cwiseAbs().maxCoeff() <= merge_tol) {
        const double w = last.weight + a.weight;
        last.point = (last.weight * last.point + a.weight * a.point) / w;
        last.weight = w;
        ++out.merged_atoms;
        continue;
      }
    }
    out.measure.atoms.push_back(std::move(a));
  }
  std::sort(out.measure.atoms.begin(), out.measure.atoms.end(), [](const Atom& a, const Atom& b) {
    return std::lexicographical_compare(a.point.data(), a.point.data() + a.point.size(),
                                        b.point.data(), b.point.data() + b.point.size());
  });
  return out;
}

}  // namespace tmoment

#endif  // TMOMENT_SPECTRAL_HPP
