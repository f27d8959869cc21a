#ifndef TMOMENT_GRAM_SYSTEM_HPP
#define TMOMENT_GRAM_SYSTEM_HPP

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <tmoment/multi_index.hpp>

namespace tmoment {

/// Real moment data s_k on exactly the index set K + K.
class MomentSequence {
 public:
  MomentSequence(AdmissibleIndexSet K, std::map<MultiIndex, double> values)
      : K_(std::move(K)), values_(std::move(values)) {
    const auto domain = sumset(K_);
    for (const auto& k : domain) {
      auto it = values_.find(k);
      if (it == values_.end())
        throw std::invalid_argument("moment for index " + to_string(k) + " is missing");
      if (!std::isfinite(it->second))
        throw std::invalid_argument("moment for index " + to_string(k) + " is not finite");
    }
    if (values_.size() != domain.size()) {
      // Same size and full coverage would mean equality; find the stray key.
      const std::set<MultiIndex> dom(domain.begin(), domain.end());
      for (const auto& [k, v] : values_)
        if (!dom.count(k))
          throw std::invalid_argument("moment index " + to_string(k) + " lies outside K+K");
    }
  }

  const AdmissibleIndexSet& truncation() const { return K_; }

  double at(const MultiIndex& k) const {
    auto it = values_.find(k);
    if (it == values_.end())
      throw std::out_of_range("no moment stored for index " + to_string(k));
    return it->second;
  }

  /// s_0, the total mass of any representing measure.
  double s0() const { return at(MultiIndex(std::vector<int>(K_.dimension(), 0))); }

  const std::map<MultiIndex, double>& values() const { return values_; }

 private:
  AdmissibleIndexSet K_;
  std::map<MultiIndex, double> values_;
};

/// The Gram matrix Gamma(m,j) = s_{k_j + k_m} of the abstract generators,
/// together with its per-axis principal submatrices Gamma_l on omega[l] and
/// the shifted matrices GammaHat_l = (s_{k_j + e_l + k_m + e_l}).
struct GramSystem {
  AdmissibleIndexSet K;
  OmegaSets omega;
  Eigen::MatrixXd gamma;
  std::vector<Eigen::MatrixXd> gamma_l;
  std::vector<Eigen::MatrixXd> gamma_hat_l;
};

inline GramSystem build_gram(const MomentSequence& S) {
  const AdmissibleIndexSet& K = S.truncation();
  const int N = K.size();
  const int n = K.dimension();

  GramSystem G{K, omega_sets(K), Eigen::MatrixXd(N, N), {}, {}};
  for (int m = 0; m < N; ++m)
    for (int j = 0; j < N; ++j) G.gamma(m, j) = S.at(K.member(j) + K.member(m));

  G.gamma_l.reserve(n);
  G.gamma_hat_l.reserve(n);
  for (int l = 0; l < n; ++l) {
    const auto& idx = G.omega.omega[l];
    const int sz = static_cast<int>(idx.size());
    Eigen::MatrixXd sub(sz, sz), hat(sz, sz);
    for (int a = 0; a < sz; ++a) {
      for (int b = 0; b < sz; ++b) {
        sub(a, b) = G.gamma(idx[a], idx[b]);
        hat(a, b) = S.at(shift(K.member(idx[b]), l) + shift(K.member(idx[a]), l));
      }
    }
    G.gamma_l.push_back(std::move(sub));
    G.gamma_hat_l.push_back(std::move(hat));
  }
  return G;
}

struct PositivityResult {
  bool ok = false;
  double min_eigenvalue = 0.0;
  double matrix_norm = 0.0;
  /// Unit vector with x^T Gamma x = min_eigenvalue; present only on failure.
  std::optional<Eigen::VectorXd> witness;
};

/// Necessary condition: Gamma >= 0, up to -tau_psd * max(1, ||Gamma||).
inline PositivityResult check_positivity(const Eigen::MatrixXd& gamma, double tau_psd) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gamma);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition of the Gram matrix failed");
  PositivityResult out;
  const auto& ev = es.eigenvalues();
  out.min_eigenvalue = ev(0);
  out.matrix_norm = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  out.ok = out.min_eigenvalue >= -tau_psd * std::max(1.0, out.matrix_norm);
  if (!out.ok) out.witness = es.eigenvectors().col(0);
  return out;
}

struct KernelInclusionResult {
  struct Witness {
    int axis = 0;  // 0-based
    Eigen::VectorXd x;
    double defect = 0.0;  // ||GammaHat_l x||
  };
  std::vector<bool> ok_per_axis;
  std::optional<Witness> witness;
  bool ok = true;
};

/// Necessary condition per axis: Ker Gamma_l is contained in Ker GammaHat_l.
/// Numerical kernel vectors are eigenvectors with |lambda| below
/// max(tau_ker * ||Gamma_l||, 1e-12); each must be annihilated by GammaHat_l
/// up to tau_ker * (||GammaHat_l|| + 1).
inline KernelInclusionResult check_kernel_inclusion(const GramSystem& G, double tau_ker) {
  KernelInclusionResult out;
  const int n = G.K.dimension();
  out.ok_per_axis.assign(n, true);
  for (int l = 0; l < n; ++l) {
    const Eigen::MatrixXd& sub = G.gamma_l[l];
    if (sub.rows() == 0) continue;  // no constraint on this axis
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub);
    if (es.info() != Eigen::Success)
      throw std::runtime_error("eigendecomposition of a Gram submatrix failed");
    const auto& ev = es.eigenvalues();
    const double norm_l = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
    const double kernel_cut = std::max(tau_ker * norm_l, 1e-12);
    const double hat_norm = G.gamma_hat_l[l].cwiseAbs().rowwise().sum().maxCoeff();
    const double defect_tol = tau_ker * (hat_norm + 1.0);
    for (int i = 0; i < ev.size(); ++i) {
      if (std::abs(ev(i)) > kernel_cut) continue;
      const Eigen::VectorXd x = es.eigenvectors().col(i);
      const double defect = (G.gamma_hat_l[l] * x).norm();
      if (defect > defect_tol) {
        out.ok_per_axis[l] = false;
        out.ok = false;
        if (!out.witness) out.witness = KernelInclusionResult::Witness{l, x, defect};
        break;
      }
    }
  }
  return out;
}

/// Both necessary conditions bundled for reporting.
struct ConditionReport {
  PositivityResult positivity;
  KernelInclusionResult kernel;
  bool all_ok() const { return positivity.ok && kernel.ok; }
};

inline ConditionReport check_conditions(const GramSystem& G, double tau_psd, double tau_ker) {
  return ConditionReport{check_positivity(G.gamma, tau_psd), check_kernel_inclusion(G, tau_ker)};
}

}  // namespace tmoment

#endif  // TMOMENT_GRAM_SYSTEM_HPP
