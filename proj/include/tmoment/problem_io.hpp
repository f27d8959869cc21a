#ifndef TMOMENT_PROBLEM_IO_HPP
#define TMOMENT_PROBLEM_IO_HPP

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <tmoment/measure.hpp>
#include <tmoment/multi_index.hpp>
#include <tmoment/solver.hpp>

namespace tmoment {

using json = nlohmann::ordered_json;  // insertion-ordered keys for stable output

/// How the truncation set was described in a problem file.  Kept alongside
/// the expanded index set so that serialization round-trips byte for byte.
struct TruncationSpec {
  enum class Kind { rectangle, simplex, explicit_list };
  Kind kind = Kind::rectangle;
  std::vector<int> bounds;          // rectangle only
  int degree = 0;                   // simplex only
  std::vector<MultiIndex> members;  // explicit list only

  AdmissibleIndexSet build(int dimension) const {
    switch (kind) {
      case Kind::rectangle:
        if (static_cast<int>(bounds.size()) != dimension)
          throw std::invalid_argument("truncation: expected " + std::to_string(dimension) +
                                      " rectangle bounds, got " + std::to_string(bounds.size()));
        return AdmissibleIndexSet::rectangle(bounds);
      case Kind::simplex:
        return AdmissibleIndexSet::simplex(dimension, degree);
      case Kind::explicit_list:
        return AdmissibleIndexSet::from_members(members);
    }
    throw std::logic_error("unreachable");
  }
};

/// A parsed problem file: the moment data plus any solver configuration the
/// file carried.  Command-line flags are applied on top by the caller.
struct ProblemInput {
  TruncationSpec truncation;
  MomentSequence S;
  SolverConfig config;
};

namespace io_detail {

inline MultiIndex index_from_json(const json& j, int dimension, const std::string& where) {
  if (!j.is_array())
    throw std::invalid_argument(where + ": index must be an array of integers");
  std::vector<int> coords;
  coords.reserve(j.size());
  for (const auto& c : j) {
    if (!c.is_number_integer())
      throw std::invalid_argument(where + ": index entries must be integers");
    const long long v = c.get<long long>();
    if (v < 0) throw std::invalid_argument(where + ": index entries must be nonnegative");
    coords.push_back(static_cast<int>(v));
  }
  if (dimension >= 0 && static_cast<int>(coords.size()) != dimension)
    throw std::invalid_argument(where + ": index has " + std::to_string(coords.size()) +
                                " entries, expected " + std::to_string(dimension));
  return MultiIndex(std::move(coords));
}

inline json index_to_json(const MultiIndex& k) {
  json out = json::array();
  for (int i = 0; i < k.dimension(); ++i) out.push_back(k[i]);
  return out;
}

inline double number_from_json(const json& j, const std::string& where) {
  if (!j.is_number()) throw std::invalid_argument(where + ": expected a number");
  return j.get<double>();
}

}  // namespace io_detail

/// Applies a "config" JSON object onto cfg.  Unknown keys are an error so
/// misspelled settings cannot be silently ignored.
inline void apply_config_json(const json& j, SolverConfig& cfg) {
  if (!j.is_object()) throw std::invalid_argument("config: expected an object");
  for (const auto& [key, value] : j.items()) {
    const std::string where = "config." + key;
    if (key == "tol_psd") cfg.tau_psd = io_detail::number_from_json(value, where);
    else if (key == "tol_ker") cfg.tau_ker = io_detail::number_from_json(value, where);
    else if (key == "tol_rank") cfg.tau_rank = io_detail::number_from_json(value, where);
    else if (key == "tol_herm") cfg.tau_herm = io_detail::number_from_json(value, where);
    else if (key == "tol_comm") cfg.tau_comm = io_detail::number_from_json(value, where);
    else if (key == "tol_eig") cfg.tau_eig = io_detail::number_from_json(value, where);
    else if (key == "tol_cluster") cfg.tau_cluster = io_detail::number_from_json(value, where);
    else if (key == "tol_atom") cfg.tau_atom = io_detail::number_from_json(value, where);
    else if (key == "tol_verify") cfg.tau_verify = io_detail::number_from_json(value, where);
    else if (key == "max_iters") {
      if (!value.is_number_integer()) throw std::invalid_argument(where + ": expected an integer");
      cfg.max_iters = value.get<int>();
    } else if (key == "seed") {
      if (!value.is_number_integer() || value.get<long long>() < 0)
        throw std::invalid_argument(where + ": expected a nonnegative integer");
      cfg.seed = value.get<std::uint64_t>();
    } else if (key == "strategy") {
      if (!value.is_string()) throw std::invalid_argument(where + ": expected a string");
      cfg.strategy = parse_strategy(value.get<std::string>());
    } else if (key == "verify") {
      if (!value.is_boolean()) throw std::invalid_argument(where + ": expected a boolean");
      cfg.verify = value.get<bool>();
    } else if (key == "params") {
      if (!value.is_object()) throw std::invalid_argument(where + ": expected an object");
      for (const auto& [id_text, pv] : value.items())
        cfg.param_values[parse_param_id(id_text)] =
            io_detail::number_from_json(pv, where + "." + id_text);
    } else {
      throw std::invalid_argument("config: unknown key \"" + key + "\"");
    }
  }
}

inline ProblemInput problem_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("problem file: expected a JSON object");
  if (!j.contains("dimension") || !j.at("dimension").is_number_integer())
    throw std::invalid_argument("problem file: missing integer field \"dimension\"");
  const int dimension = j.at("dimension").get<int>();
  if (dimension < 1) throw std::invalid_argument("dimension: must be at least 1");

  if (!j.contains("truncation"))
    throw std::invalid_argument("problem file: missing field \"truncation\"");
  const json& jt = j.at("truncation");
  TruncationSpec spec;
  if (jt.is_array()) {
    spec.kind = TruncationSpec::Kind::explicit_list;
    for (size_t i = 0; i < jt.size(); ++i)
      spec.members.push_back(io_detail::index_from_json(
          jt[i], dimension, "truncation[" + std::to_string(i) + "]"));
  } else if (jt.is_object()) {
    if (!jt.contains("family") || !jt.at("family").is_string())
      throw std::invalid_argument("truncation: missing string field \"family\"");
    const std::string family = jt.at("family").get<std::string>();
    if (family == "rectangle") {
      spec.kind = TruncationSpec::Kind::rectangle;
      if (!jt.contains("bounds") || !jt.at("bounds").is_array())
        throw std::invalid_argument("truncation: rectangle family needs an array \"bounds\"");
      for (const auto& b : jt.at("bounds")) {
        if (!b.is_number_integer() || b.get<long long>() < 0)
          throw std::invalid_argument("truncation.bounds: entries must be nonnegative integers");
        spec.bounds.push_back(b.get<int>());
      }
    } else if (family == "simplex") {
      spec.kind = TruncationSpec::Kind::simplex;
      if (!jt.contains("degree") || !jt.at("degree").is_number_integer())
        throw std::invalid_argument("truncation: simplex family needs an integer \"degree\"");
      spec.degree = jt.at("degree").get<int>();
    } else if (family == "explicit") {
      spec.kind = TruncationSpec::Kind::explicit_list;
      if (!jt.contains("members") || !jt.at("members").is_array())
        throw std::invalid_argument("truncation: explicit family needs an array \"members\"");
      const json& jm = jt.at("members");
      for (size_t i = 0; i < jm.size(); ++i)
        spec.members.push_back(io_detail::index_from_json(
            jm[i], dimension, "truncation.members[" + std::to_string(i) + "]"));
    } else {
      throw std::invalid_argument("truncation: unknown family \"" + family + "\"");
    }
  } else {
    throw std::invalid_argument("truncation: expected an object or an index array");
  }
  AdmissibleIndexSet K = spec.build(dimension);

  if (!j.contains("moments") || !j.at("moments").is_array())
    throw std::invalid_argument("problem file: missing array field \"moments\"");
  std::map<MultiIndex, double> values;
  const json& jm = j.at("moments");
  for (size_t i = 0; i < jm.size(); ++i) {
    const std::string where = "moments[" + std::to_string(i) + "]";
    const json& entry = jm[i];
    if (!entry.is_object() || !entry.contains("index") || !entry.contains("value"))
      throw std::invalid_argument(where + ": expected an object with \"index\" and \"value\"");
    MultiIndex k = io_detail::index_from_json(entry.at("index"), dimension, where + ".index");
    const double v = io_detail::number_from_json(entry.at("value"), where + ".value");
    if (!values.emplace(std::move(k), v).second)
      throw std::invalid_argument(where + ": duplicate index " +
                                  to_string(io_detail::index_from_json(entry.at("index"),
                                                                       dimension, where)));
  }

  SolverConfig cfg;
  if (j.contains("config")) apply_config_json(j.at("config"), cfg);

  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (key != "dimension" && key != "truncation" && key != "moments" && key != "config")
      throw std::invalid_argument("problem file: unknown key \"" + key + "\"");
  }

  // MomentSequence validates coverage of K + K and finiteness, naming the
  // offending index in its own message.
  return ProblemInput{std::move(spec), MomentSequence(std::move(K), std::move(values)),
                      std::move(cfg)};
}

inline ProblemInput parse_problem(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("problem file is not valid JSON: ") + e.what());
  }
  return problem_from_json(j);
}

inline json config_to_json(const SolverConfig& cfg) {
  const SolverConfig defaults;
  json out = json::object();
  if (cfg.tau_psd != defaults.tau_psd) out["tol_psd"] = cfg.tau_psd;
  if (cfg.tau_ker != defaults.tau_ker) out["tol_ker"] = cfg.tau_ker;
  if (cfg.tau_rank != defaults.tau_rank) out["tol_rank"] = cfg.tau_rank;
  if (cfg.tau_herm != defaults.tau_herm) out["tol_herm"] = cfg.tau_herm;
  if (cfg.tau_comm != defaults.tau_comm) out["tol_comm"] = cfg.tau_comm;
  if (cfg.tau_eig != defaults.tau_eig) out["tol_eig"] = cfg.tau_eig;
  if (cfg.tau_cluster != defaults.tau_cluster) out["tol_cluster"] = cfg.tau_cluster;
  if (cfg.tau_atom != defaults.tau_atom) out["tol_atom"] = cfg.tau_atom;
  if (cfg.tau_verify != defaults.tau_verify) out["tol_verify"] = cfg.tau_verify;
  if (cfg.max_iters != defaults.max_iters) out["max_iters"] = cfg.max_iters;
  if (cfg.seed != defaults.seed) out["seed"] = cfg.seed;
  if (cfg.strategy != defaults.strategy) out["strategy"] = to_string(cfg.strategy);
  if (cfg.verify != defaults.verify) out["verify"] = cfg.verify;
  if (!cfg.param_values.empty()) {
    json params = json::object();
    for (const auto& [id, v] : cfg.param_values) params[to_string(id)] = v;
    out["params"] = params;
  }
  return out;
}

/// Serializes a problem in the canonical form: truncation as given, moments
/// listed in the sorted order of K + K, non-default config settings only.
inline json problem_to_json(const TruncationSpec& spec, const MomentSequence& S,
                            const SolverConfig* cfg = nullptr) {
  const AdmissibleIndexSet& K = S.truncation();
  json out;
  out["dimension"] = K.dimension();
  switch (spec.kind) {
    case TruncationSpec::Kind::rectangle:
      out["truncation"] = {{"family", "rectangle"}, {"bounds", spec.bounds}};
      break;
    case TruncationSpec::Kind::simplex:
      out["truncation"] = {{"family", "simplex"}, {"degree", spec.degree}};
      break;
    case TruncationSpec::Kind::explicit_list: {
      json members = json::array();
      for (const auto& k : spec.members) members.push_back(io_detail::index_to_json(k));
      out["truncation"] = {{"family", "explicit"}, {"members", members}};
      break;
    }
  }
  json moments = json::array();
  for (const auto& k : sumset(K))
    moments.push_back({{"index", io_detail::index_to_json(k)}, {"value", S.at(k)}});
  out["moments"] = moments;
  if (cfg) {
    json jc = config_to_json(*cfg);
    if (!jc.empty()) out["config"] = jc;
  }
  return out;
}

inline std::string serialize_problem(const TruncationSpec& spec, const MomentSequence& S,
                                     const SolverConfig* cfg = nullptr) {
  return problem_to_json(spec, S, cfg).dump(2) + "\n";
}

inline json measure_to_json(const AtomicMeasure& mu) {
  json atoms = json::array();
  for (const auto& a : mu.atoms) {
    json point = json::array();
    for (int i = 0; i < a.point.size(); ++i) point.push_back(a.point(i));
    atoms.push_back({{"point", point}, {"weight", a.weight}});
  }
  return json{{"atoms", atoms}, {"total_mass", mu.total_mass()}};
}

inline AtomicMeasure measure_from_json(const json& j) {
  if (!j.is_object() || !j.contains("atoms") || !j.at("atoms").is_array())
    throw std::invalid_argument("measure: expected an object with an \"atoms\" array");
  AtomicMeasure mu;
  const json& ja = j.at("atoms");
  for (size_t i = 0; i < ja.size(); ++i) {
    const std::string where = "atoms[" + std::to_string(i) + "]";
    const json& entry = ja[i];
    if (!entry.is_object() || !entry.contains("point") || !entry.contains("weight"))
      throw std::invalid_argument(where + ": expected an object with \"point\" and \"weight\"");
    const json& jp = entry.at("point");
    if (!jp.is_array()) throw std::invalid_argument(where + ".point: expected an array");
    Eigen::VectorXd p(static_cast<int>(jp.size()));
    for (size_t c = 0; c < jp.size(); ++c)
      p(static_cast<int>(c)) = io_detail::number_from_json(jp[c], where + ".point");
    mu.atoms.push_back(
        Atom{p, io_detail::number_from_json(entry.at("weight"), where + ".weight")});
  }
  return mu;
}

inline json report_to_json(const SolverReport& rep) {
  json out;
  out["status"] = to_string(rep.status);
  out["stopped_at_step"] = rep.stopped_at_step;
  out["route"] = rep.route;
  out["dimensions"] = {{"H", rep.dimension_H}, {"H0", rep.dimension_H0}};
  out["stable"] = rep.stable;

  json pos = {{"ok", rep.conditions.positivity.ok},
              {"min_eigenvalue", rep.conditions.positivity.min_eigenvalue},
              {"matrix_norm", rep.conditions.positivity.matrix_norm}};
  if (rep.conditions.positivity.witness) {
    json x = json::array();
    for (int i = 0; i < rep.conditions.positivity.witness->size(); ++i)
      x.push_back((*rep.conditions.positivity.witness)(i));
    pos["witness"] = x;
  }
  json ker = {{"ok", rep.conditions.kernel.ok}};
  if (!rep.conditions.kernel.ok_per_axis.empty()) {
    json per = json::array();
    for (bool ok : rep.conditions.kernel.ok_per_axis) per.push_back(ok);
    ker["per_axis"] = per;
  }
  if (rep.conditions.kernel.witness) {
    const auto& w = *rep.conditions.kernel.witness;
    json x = json::array();
    for (int i = 0; i < w.x.size(); ++i) x.push_back(w.x(i));
    ker["witness"] = {{"axis", w.axis + 1}, {"defect", w.defect}, {"x", x}};
  }
  out["conditions"] = {{"positivity", pos}, {"kernel", ker}};

  out["residuals"] = {{"hermiticity", rep.hermiticity_residual},
                      {"commutator", rep.commutator_residual},
                      {"eigen", rep.eigen_residual},
                      {"parseval", rep.parseval_defect}};

  if (!rep.parameter_values.empty() || !rep.free_parameters.empty()) {
    json values = json::object();
    for (const auto& [name, v] : rep.parameter_values) values[name] = v;
    out["parameters"] = {{"values", values}, {"free", rep.free_parameters}};
  }

  if (rep.measure) out["measure"] = measure_to_json(*rep.measure);
  if (rep.verification) {
    out["verification"] = {{"ok", rep.verification->ok},
                           {"max_abs_error", rep.verification->max_abs_error},
                           {"scale", rep.verification->scale},
                           {"worst_index",
                            io_detail::index_to_json(rep.verification->worst_index)}};
  }

  out["detail"] = rep.detail;
  json trace = json::array();
  for (const auto& rec : rep.trace)
    trace.push_back(
        {{"step", rec.step}, {"name", rec.name}, {"ok", rec.ok}, {"note", rec.note}});
  out["trace"] = trace;
  return out;
}

/// Process exit code for a terminal solver status: 0 when a measure (possibly
/// zero) was produced, 2 when the data was rejected by a certificate, 3 when
/// the search ended without a certificate either way.
inline int exit_code_for(SolverStatus status) {
  switch (status) {
    case SolverStatus::solved:
    case SolverStatus::zero_measure:
      return 0;
    case SolverStatus::rejected_positivity:
    case SolverStatus::rejected_kernel:
    case SolverStatus::rejected_ill_defined:
      return 2;
    case SolverStatus::commutativity_unresolved:
    case SolverStatus::stability_failed_and_extension_failed:
      return 3;
  }
  return 3;
}

}  // namespace tmoment

#endif  // TMOMENT_PROBLEM_IO_HPP
