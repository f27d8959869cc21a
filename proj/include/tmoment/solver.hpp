#ifndef TMOMENT_SOLVER_HPP
#define TMOMENT_SOLVER_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <tmoment/gram_system.hpp>
#include <tmoment/hilbert_space.hpp>
#include <tmoment/measure.hpp>
#include <tmoment/multi_index.hpp>
#include <tmoment/operator_builder.hpp>
#include <tmoment/spectral.hpp>

namespace tmoment {

enum class SolverStatus {
  solved,
  zero_measure,
  rejected_positivity,
  rejected_kernel,
  rejected_ill_defined,
  commutativity_unresolved,
  stability_failed_and_extension_failed,
};

inline const char* to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::solved: return "solved";
    case SolverStatus::zero_measure: return "zero_measure";
    case SolverStatus::rejected_positivity: return "rejected_positivity";
    case SolverStatus::rejected_kernel: return "rejected_kernel";
    case SolverStatus::rejected_ill_defined: return "rejected_ill_defined";
    case SolverStatus::commutativity_unresolved: return "commutativity_unresolved";
    case SolverStatus::stability_failed_and_extension_failed:
      return "stability_failed_and_extension_failed";
  }
  return "unknown";
}

enum class Strategy { automatic, stable_only, extension_only };

inline const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::automatic: return "auto";
    case Strategy::stable_only: return "stable";
    case Strategy::extension_only: return "extension";
  }
  return "unknown";
}

inline Strategy parse_strategy(const std::string& text) {
  if (text == "auto") return Strategy::automatic;
  if (text == "stable") return Strategy::stable_only;
  if (text == "extension") return Strategy::extension_only;
  throw std::invalid_argument("unknown strategy '" + text +
                              "' (expected auto, stable, or extension)");
}

struct SolverConfig {
  double tau_psd = 1e-9;      // positivity slack for the Gram matrix
  double tau_ker = 1e-8;      // kernel-inclusion tolerance
  double tau_rank = 1e-9;     // linear-dependence threshold in the Gram metric
  double tau_herm = 1e-8;     // hermiticity feasibility tolerance
  double tau_comm = 1e-8;     // commutator acceptance tolerance
  double tau_eig = 1e-8;      // joint eigen-equation residual tolerance
  double tau_cluster = 1e-7;  // eigenvalue clustering resolution
  double tau_atom = 1e-10;    // weight pruning threshold (relative to s0)
  double tau_verify = 1e-7;   // re-integration tolerance (relative)
  int max_iters = 50;         // commutativity alternation sweep limit
  std::uint64_t seed = 0;     // seed for commutativity restarts
  Strategy strategy = Strategy::automatic;
  std::map<ParamId, double> param_values;  // user-pinned extension parameters
  bool verify = true;

  void validate() const {
    const double tols[] = {tau_psd,     tau_ker,  tau_rank,    tau_herm,  tau_comm,
                           tau_eig,     tau_cluster, tau_atom, tau_verify};
    for (double t : tols)
      if (!(t > 0.0)) throw std::invalid_argument("tolerances must be positive");
    if (max_iters < 1) throw std::invalid_argument("max_iters must be positive");
  }
};

struct StepRecord {
  int step = 0;
  std::string name;
  bool ok = true;
  std::string note;
};

struct SolverReport {
  SolverStatus status = SolverStatus::commutativity_unresolved;
  int stopped_at_step = 0;  // pipeline step (1..10) where solving terminated
  std::string route;        // "stable", "extension", or "none"
  int dimension_H = 0;
  int dimension_H0 = 0;
  bool stable = false;
  ConditionReport conditions;
  std::optional<AtomicMeasure> measure;
  std::vector<Eigen::MatrixXcd> matrices;  // final operator matrices
  std::map<std::string, double> parameter_values;  // resolved parameter values
  std::vector<std::string> free_parameters;        // ids left free by the constraints
  double hermiticity_residual = 0.0;   // worst relative self-adjointness defect
  double commutator_residual = 0.0;    // worst relative pairwise commutator
  double eigen_residual = 0.0;         // worst joint eigen-equation defect
  double parseval_defect = 0.0;        // |sum of weights - s0|
  std::optional<VerificationResult> verification;
  std::string detail;  // human-readable explanation of the terminal state
  std::vector<StepRecord> trace;
};

namespace detail {

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

/// Shared tail of the pipeline: spectral decomposition, measure extraction,
/// and re-integration.  Returns false when the joint eigenstructure is too
/// defective to trust, which can only happen if the accepted commutators
/// were at the edge of tolerance.
inline bool finish_with_spectrum(SolverReport& rep, const MomentSequence& S,
                                 const std::vector<Eigen::MatrixXcd>& ms,
                                 const Eigen::VectorXd& g0_coords, const SolverConfig& cfg) {
  auto ext = extract_measure(ms, g0_coords, S.s0(), cfg.tau_cluster, cfg.tau_atom);
  rep.eigen_residual = ext.max_eigen_residual;
  rep.parseval_defect = ext.parseval_defect;
  if (ext.max_eigen_residual > cfg.tau_eig) {
    rep.status = SolverStatus::commutativity_unresolved;
    rep.stopped_at_step = 9;
    rep.detail = "joint eigenstructure residual " + format_double(ext.max_eigen_residual) +
                 " exceeds tolerance; the accepted commutator residual " +
                 format_double(rep.commutator_residual) + " was too coarse";
    rep.trace.push_back({9, "joint eigendecomposition", false, rep.detail});
    return false;
  }
  rep.trace.push_back({9, "joint eigendecomposition", true,
                       std::to_string(ext.measure.atoms.size()) + " candidate atoms, " +
                           std::to_string(ext.pruned_atoms) + " pruned, eigen residual " +
                           format_double(ext.max_eigen_residual)});
  rep.measure = std::move(ext.measure);

  if (cfg.verify) {
    rep.verification = verify_solution(S, *rep.measure, cfg.tau_verify);
    if (!rep.verification->ok) {
      rep.status = SolverStatus::commutativity_unresolved;
      rep.stopped_at_step = 10;
      rep.detail = "extracted measure fails re-integration at index " +
                   to_string(rep.verification->worst_index) + " with error " +
                   format_double(rep.verification->max_abs_error) +
                   "; the operator family did not represent the moment data";
      rep.trace.push_back({10, "verification", false, rep.detail});
      rep.measure.reset();
      return false;
    }
    rep.trace.push_back({10, "verification", true,
                         "max re-integration error " +
                             format_double(rep.verification->max_abs_error) + " over " +
                             std::to_string(sumset(S.truncation()).size()) + " moments"});
  } else {
    rep.trace.push_back({10, "verification", true, "skipped on request"});
  }
  rep.status = SolverStatus::solved;
  rep.stopped_at_step = 10;
  rep.detail = std::to_string(rep.measure->atoms.size()) + "-atom measure found";
  return true;
}

}  // namespace detail

/// Runs the full pipeline on one moment sequence.
///
/// The trace mirrors the ten-step scheme the construction follows:
/// 1 indexation, 2 necessary conditions, 3 associated space, 4 degenerate
/// total mass, 5 orthonormal basis and dimensional stability, 6 defined
/// action and its extension, 7 hermiticity constraints, 8 commutativity,
/// 9 joint eigendecomposition, 10 measure extraction and verification.
/// Every failure is reported as a status, never an exception; exceptions
/// signal malformed inputs only.
inline SolverReport solve(const MomentSequence& S, const SolverConfig& cfg = {}) {
  cfg.validate();
  const AdmissibleIndexSet& K = S.truncation();
  const int n = K.dimension();
  const int rho = K.rho();

  SolverReport rep;
  rep.route = "none";

  // Step 1: indexation is fixed by the order of K itself.
  rep.trace.push_back({1, "indexation", true,
                       std::to_string(rho + 1) + " indices in " + std::to_string(n) +
                           " variables, " + std::to_string(sumset(K).size()) +
                           " prescribed moments"});

  // Step 2: necessary conditions on the Gram data.
  auto G = build_gram(S);
  rep.conditions = check_conditions(G, cfg.tau_psd, cfg.tau_ker);
  if (!rep.conditions.positivity.ok) {
    rep.status = SolverStatus::rejected_positivity;
    rep.stopped_at_step = 2;
    rep.detail = "Gram matrix is not positive semidefinite (min eigenvalue " +
                 detail::format_double(rep.conditions.positivity.min_eigenvalue) + ")";
    rep.trace.push_back({2, "necessary conditions", false, rep.detail});
    return rep;
  }
  if (!rep.conditions.kernel.ok) {
    rep.status = SolverStatus::rejected_kernel;
    rep.stopped_at_step = 2;
    const auto& w = rep.conditions.kernel.witness;
    rep.detail = "kernel inclusion fails on axis " + std::to_string(w->axis + 1) +
                 " (defect " + detail::format_double(w->defect) + ")";
    rep.trace.push_back({2, "necessary conditions", false, rep.detail});
    return rep;
  }
  rep.trace.push_back({2, "necessary conditions", true,
                       "Gram matrix PSD (min eigenvalue " +
                           detail::format_double(rep.conditions.positivity.min_eigenvalue) +
                           "), kernel inclusion holds on all axes"});

  // Step 3: the associated space exists once the Gram data is admissible.
  rep.trace.push_back({3, "associated space", true,
                       "inner-product space of generator classes fixed by the Gram matrix"});

  // Step 4: degenerate total mass short-circuits the construction.
  if (S.s0() <= 0.0) {
    bool all_zero = true;
    for (const auto& [k, v] : S.values()) all_zero = all_zero && v == 0.0;
    if (all_zero) {
      rep.status = SolverStatus::zero_measure;
      rep.stopped_at_step = 4;
      rep.measure = AtomicMeasure{};
      rep.verification = verify_solution(S, *rep.measure, cfg.tau_verify);
      rep.detail = "all moments vanish; the zero measure is the unique solution";
      rep.trace.push_back({4, "degenerate total mass", true, rep.detail});
      return rep;
    }
    rep.status = SolverStatus::rejected_ill_defined;
    rep.stopped_at_step = 4;
    rep.detail =
        "total mass s0 is zero but other moments are not; no measure can represent the data";
    rep.trace.push_back({4, "degenerate total mass", false, rep.detail});
    return rep;
  }
  rep.trace.push_back(
      {4, "degenerate total mass", true, "s0 = " + detail::format_double(S.s0()) + " > 0"});

  // Step 5: orthonormal basis of the space and of its inner subspace.
  OrthonormalBasis full;
  StabilityReport stab;
  try {
    std::vector<int> all(rho + 1);
    for (int j = 0; j <= rho; ++j) all[j] = j;
    full = gram_schmidt(G, all, cfg.tau_rank);
    stab = check_dimensional_stability(G, cfg.tau_rank);
  } catch (const std::runtime_error& e) {
    // Orthogonalization met a negative squared residual beyond tolerance:
    // the data is indefinite below the positivity slack.
    rep.status = SolverStatus::rejected_positivity;
    rep.stopped_at_step = 5;
    rep.detail = e.what();
    rep.trace.push_back({5, "orthonormal basis", false, rep.detail});
    return rep;
  }
  rep.dimension_H = full.dim;
  rep.dimension_H0 = stab.dim_H0;
  rep.stable = stab.stable;
  rep.trace.push_back({5, "orthonormal basis", true,
                       "dim H = " + std::to_string(full.dim) +
                           ", dim H0 = " + std::to_string(stab.dim_H0) +
                           (stab.stable ? "; dimensionally stable" : "; not stable")});

  // Route selection.  Pinned parameters only exist on the extension route,
  // so requesting them under the automatic strategy selects it.
  const bool extension_allowed = cfg.strategy != Strategy::stable_only;
  const bool stable_allowed = cfg.strategy != Strategy::extension_only &&
                              (cfg.strategy == Strategy::stable_only || cfg.param_values.empty());
  bool stable_tried = false;
  bool stable_rejected = false;

  if (stable_allowed && stab.stable) {
    stable_tried = true;
    auto real_ms = stable_matrices(G, stab.basis0);
    std::vector<Eigen::MatrixXcd> ms;
    ms.reserve(real_ms.size());
    for (const auto& m : real_ms) ms.push_back(m.cast<Complex>());

    double herm = 0.0;
    for (const auto& m : ms) herm = std::max(herm, detail::hermiticity_defect(m));
    double norm_scale = 1.0;
    for (const auto& m : ms) norm_scale = std::max(norm_scale, m.norm());
    const double comm_abs = commutator_frobenius(ms);
    const bool herm_ok = herm <= cfg.tau_herm;
    const bool comm_ok = comm_abs <= cfg.tau_comm * norm_scale * norm_scale;
    if (herm_ok && comm_ok) {
      rep.route = "stable";
      rep.matrices = ms;
      rep.hermiticity_residual = herm;
      rep.commutator_residual = commutator_residual(ms);
      rep.trace.push_back({6, "operator construction", true,
                           "stable fast path: operators total on H0, no parameters"});
      rep.trace.push_back({7, "hermiticity", true,
                           "worst self-adjointness defect " + detail::format_double(herm)});
      rep.trace.push_back({8, "commutativity", true,
                           "worst pairwise commutator " + detail::format_double(comm_abs)});
      if (detail::finish_with_spectrum(rep, S, ms, stab.basis0.D.row(0), cfg)) return rep;
      if (!extension_allowed) {
        rep.status = SolverStatus::stability_failed_and_extension_failed;
        rep.detail += "; extension path disabled by strategy";
        return rep;
      }
      // Fall through to the extension route with a clean sub-report tail.
      stable_rejected = true;
      rep.measure.reset();
      rep.verification.reset();
      rep.matrices.clear();
    } else {
      stable_rejected = true;
      std::string note = "stable-path operators rejected:";
      if (!herm_ok) note += " self-adjointness defect " + detail::format_double(herm);
      if (!comm_ok) note += " commutator " + detail::format_double(comm_abs);
      rep.trace.push_back({6, "operator construction", false, note});
      if (!extension_allowed) {
        rep.status = SolverStatus::stability_failed_and_extension_failed;
        rep.stopped_at_step = 6;
        rep.detail = note + "; extension path disabled by strategy";
        return rep;
      }
    }
  } else if (cfg.strategy == Strategy::stable_only) {
    rep.status = SolverStatus::stability_failed_and_extension_failed;
    rep.stopped_at_step = 5;
    rep.detail = "dimensional stability fails and the extension path is disabled by strategy";
    return rep;
  }

  // Extension route (Steps 6-8): parametrize, then constrain.
  rep.route = "extension";

  std::vector<ExtensionResult> exts;
  exts.reserve(n);
  std::set<ParamId> known_ids;
  int total_params = 0;
  for (int l = 0; l < n; ++l) {
    auto ext = parametrize_extension(G, full, l, cfg.tau_rank);
    if (!ext.well_defined) {
      rep.status = SolverStatus::rejected_ill_defined;
      rep.stopped_at_step = 6;
      rep.detail = "the prescribed action on axis " + std::to_string(l + 1) +
                   " is not a well-defined operator: generator " +
                   std::to_string(ext.conflicting_generator) +
                   " receives conflicting images (defect " +
                   detail::format_double(ext.conflict_defect) + ")";
      rep.trace.push_back({6, "operator extension", false, rep.detail});
      return rep;
    }
    known_ids.insert(ext.fresh_params.begin(), ext.fresh_params.end());
    total_params += static_cast<int>(ext.fresh_params.size());
    exts.push_back(std::move(ext));
  }
  for (const auto& [id, value] : cfg.param_values) {
    if (!known_ids.count(id))
      throw std::invalid_argument("pinned parameter '" + to_string(id) +
                                  "' does not occur in this problem");
    (void)value;
  }
  rep.trace.push_back({6, "operator extension", true,
                       std::to_string(total_params) + " free real parameters before constraints"});

  std::vector<HermiticityResult> herms(n);
  double worst_herm_lsq = 0.0;
  int remaining = 0;
  for (int l = 0; l < n; ++l) {
    auto pinned = pin_params(exts[l].matrix, cfg.param_values);
    herms[l] = solve_hermiticity(pinned, cfg.tau_herm);
    if (!herms[l].feasible) {
      rep.status = SolverStatus::commutativity_unresolved;
      rep.stopped_at_step = 7;
      rep.detail = "hermiticity constraints on axis " + std::to_string(l + 1) +
                   " are infeasible (residual " + detail::format_double(herms[l].residual) +
                   ")" +
                   (cfg.param_values.empty() ? "" : "; check the pinned parameter values");
      rep.trace.push_back({7, "hermiticity", false, rep.detail});
      if (stable_tried && stable_rejected)
        rep.status = SolverStatus::stability_failed_and_extension_failed;
      return rep;
    }
    worst_herm_lsq = std::max(worst_herm_lsq, herms[l].residual);
    remaining += herms[l].reduced.param_count();
  }
  rep.trace.push_back({7, "hermiticity", true,
                       std::to_string(remaining) + " parameters remain free (worst constraint " +
                           "residual " + detail::format_double(worst_herm_lsq) + ")"});

  std::vector<ParametricMatrix> reduced;
  reduced.reserve(n);
  for (auto& h : herms) reduced.push_back(h.reduced);
  auto comm = solve_commutativity(reduced, cfg.tau_comm, cfg.max_iters, cfg.seed);
  if (!comm.ok) {
    rep.status = (!stab.stable || stable_rejected)
                     ? SolverStatus::stability_failed_and_extension_failed
                     : SolverStatus::commutativity_unresolved;
    rep.stopped_at_step = 8;
    rep.detail = "no commuting choice of the free parameters was found (best commutator " +
                 detail::format_double(comm.residual) + " after " +
                 std::to_string(comm.sweeps) + " sweeps, " + std::to_string(comm.restarts) +
                 " restarts); this is not a certificate of unsolvability";
    rep.trace.push_back({8, "commutativity", false, rep.detail});
    return rep;
  }
  rep.matrices = comm.matrices;
  double herm_final = 0.0;
  for (const auto& m : comm.matrices)
    herm_final = std::max(herm_final, detail::hermiticity_defect(m));
  rep.hermiticity_residual = herm_final;
  rep.commutator_residual = commutator_residual(comm.matrices);
  rep.trace.push_back({8, "commutativity", true,
                       "commutator " + detail::format_double(comm.residual) + " after " +
                           std::to_string(comm.sweeps) + " sweeps, " +
                           std::to_string(comm.restarts) + " restarts"});

  // Record resolved parameter values: pinned ones, constrained ones, and the
  // values finally chosen for the free directions.
  for (const auto& [id, value] : cfg.param_values)
    rep.parameter_values[to_string(id)] = value;
  for (int l = 0; l < n; ++l) {
    const Eigen::VectorXd originals = herms[l].original_values(comm.q[l]);
    for (size_t i = 0; i < herms[l].original_ids.size(); ++i)
      rep.parameter_values[to_string(herms[l].original_ids[i])] =
          originals(static_cast<int>(i));
    for (int i = 0; i < herms[l].reduced.param_count(); ++i) {
      const ParamId& id = herms[l].reduced.coeffs[i].first;
      rep.free_parameters.push_back(to_string(id));
      rep.parameter_values[to_string(id)] = comm.q[l](i);
    }
  }

  if (detail::finish_with_spectrum(rep, S, comm.matrices, full.D.row(0), cfg)) return rep;
  if (stable_tried && stable_rejected)
    rep.status = SolverStatus::stability_failed_and_extension_failed;
  return rep;
}

inline SolverReport solve(const AdmissibleIndexSet& K, const MomentSequence& S,
                          const SolverConfig& cfg = {}) {
  if (!(K.members() == S.truncation().members()))
    throw std::invalid_argument("truncation set does not match the moment sequence");
  return solve(S, cfg);
}

}  // namespace tmoment

#endif  // TMOMENT_SOLVER_HPP
