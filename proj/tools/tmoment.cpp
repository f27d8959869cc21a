// Command-line front end: solve a problem file, check its necessary
// conditions, or generate a random solvable instance with a truth sidecar.
//
// Exit codes: 0 when a measure (possibly zero) is produced or all checks
// pass, 2 when the data is rejected by a certificate, 3 when the search ends
// without a certificate either way, 1 on malformed input or I/O failure.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <tmoment/problem_io.hpp>
#include <tmoment/solver.hpp>

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open \"" + path + "\" for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::invalid_argument("cannot open \"" + path + "\" for writing");
  out << text;
  if (!out) throw std::invalid_argument("failed while writing \"" + path + "\"");
}

// One "--params" token has the form id=value, e.g. alpha:2:1,1=13.85.
void apply_param_token(const std::string& token, std::map<tmoment::ParamId, double>& into) {
  const auto eq = token.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == token.size())
    throw std::invalid_argument("--params entry \"" + token +
                                "\" is not of the form id=value");
  const tmoment::ParamId id = tmoment::parse_param_id(token.substr(0, eq));
  const std::string num = token.substr(eq + 1);
  size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(num, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("--params entry \"" + token + "\" has a malformed value");
  }
  if (used != num.size())
    throw std::invalid_argument("--params entry \"" + token + "\" has a malformed value");
  into[id] = value;
}

std::string format_point(const Eigen::VectorXd& p) {
  std::ostringstream os;
  os.precision(6);
  os << "(";
  for (int i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p(i);
  os << ")";
  return os.str();
}

void print_summary(const tmoment::SolverReport& rep) {
  std::cerr << "status: " << tmoment::to_string(rep.status);
  if (rep.measure) {
    std::cerr << " (" << rep.measure->atoms.size() << " atoms; route " << rep.route;
    if (rep.verification)
      std::cerr << "; re-integration error " << rep.verification->max_abs_error;
    std::cerr << ")\n";
    for (const auto& a : rep.measure->atoms)
      std::cerr << "  weight " << a.weight << " at " << format_point(a.point) << "\n";
  } else {
    std::cerr << " - " << rep.detail << "\n";
  }
}

struct SolveFlags {
  std::string input;
  std::string output;
  double tol_psd = 0, tol_ker = 0, tol_rank = 0, tol_comm = 0, tol_atom = 0;
  std::string strategy;
  std::vector<std::string> params;
  int max_iters = 0;
  bool verify = true;
};

int cmd_solve(const CLI::App& sub, SolveFlags& f) {
  auto input = tmoment::parse_problem(read_file(f.input));
  tmoment::SolverConfig cfg = input.config;

  if (sub.count("--tol-psd")) cfg.tau_psd = f.tol_psd;
  if (sub.count("--tol-ker")) cfg.tau_ker = f.tol_ker;
  if (sub.count("--tol-rank")) cfg.tau_rank = f.tol_rank;
  if (sub.count("--tol-comm")) cfg.tau_comm = f.tol_comm;
  if (sub.count("--tol-atom")) cfg.tau_atom = f.tol_atom;
  if (sub.count("--strategy")) cfg.strategy = tmoment::parse_strategy(f.strategy);
  if (sub.count("--max-iters")) cfg.max_iters = f.max_iters;
  if (sub.count("--verify") || sub.count("--no-verify")) cfg.verify = f.verify;
  for (const auto& token : f.params) apply_param_token(token, cfg.param_values);

  const tmoment::SolverReport rep = tmoment::solve(input.S, cfg);
  const std::string text = tmoment::report_to_json(rep).dump(2) + "\n";
  if (f.output.empty()) {
    std::cout << text;
  } else {
    write_file(f.output, text);
    std::cerr << "report written to " << f.output << "\n";
  }
  print_summary(rep);
  return tmoment::exit_code_for(rep.status);
}

struct CheckFlags {
  std::string input;
  std::string output;
  double tol_psd = 0, tol_ker = 0, tol_rank = 0;
};

int cmd_check(const CLI::App& sub, CheckFlags& f) {
  auto input = tmoment::parse_problem(read_file(f.input));
  tmoment::SolverConfig cfg = input.config;
  if (sub.count("--tol-psd")) cfg.tau_psd = f.tol_psd;
  if (sub.count("--tol-ker")) cfg.tau_ker = f.tol_ker;
  if (sub.count("--tol-rank")) cfg.tau_rank = f.tol_rank;

  const auto G = tmoment::build_gram(input.S);
  const auto cond = tmoment::check_conditions(G, cfg.tau_psd, cfg.tau_ker);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G.gamma);
  const auto& ev = es.eigenvalues();
  int rank = 0;
  for (int i = 0; i < ev.size(); ++i)
    if (ev(i) > cfg.tau_rank * std::max(1.0, cond.positivity.matrix_norm)) ++rank;

  std::cout << "Gram matrix: " << G.gamma.rows() << "x" << G.gamma.cols()
            << ", eigenvalues in [" << ev(0) << ", " << ev(ev.size() - 1) << "], numerical rank "
            << rank << "\n";
  std::cout << "positivity: " << (cond.positivity.ok ? "ok" : "FAIL")
            << " (min eigenvalue " << cond.positivity.min_eigenvalue << ")\n";
  for (size_t l = 0; l < cond.kernel.ok_per_axis.size(); ++l) {
    std::cout << "kernel inclusion, axis " << l + 1 << ": "
              << (cond.kernel.ok_per_axis[l] ? "ok" : "FAIL");
    if (cond.kernel.witness && cond.kernel.witness->axis == static_cast<int>(l))
      std::cout << " (defect " << cond.kernel.witness->defect << ")";
    std::cout << "\n";
  }

  int dim_H = 0, dim_H0 = 0;
  bool stable = false;
  bool dims_known = false;
  if (input.S.s0() > 0.0) {
    try {
      std::vector<int> all(G.K.size());
      for (int j = 0; j < G.K.size(); ++j) all[j] = j;
      const auto full = tmoment::gram_schmidt(G, all, cfg.tau_rank);
      const auto stab = tmoment::check_dimensional_stability(G, cfg.tau_rank);
      dim_H = full.dim;
      dim_H0 = stab.dim_H0;
      stable = stab.stable;
      dims_known = true;
      std::cout << "dimensions: dim H = " << dim_H << ", dim H0 = " << dim_H0 << "\n";
      std::cout << "dimensional stability: " << (stable ? "ok" : "FAIL") << "\n";
    } catch (const std::exception& e) {
      std::cout << "basis construction failed: " << e.what() << "\n";
    }
  } else {
    std::cout << "dimensions: dim H = 0 (total mass is zero)\n";
    std::cout << "dimensional stability: ok (trivial space)\n";
    stable = true;
    dims_known = true;
  }

  if (!f.output.empty()) {
    tmoment::json out;
    out["conditions"] = {{"positivity", cond.positivity.ok}, {"kernel", cond.kernel.ok}};
    if (dims_known) {
      out["dimensions"] = {{"H", dim_H}, {"H0", dim_H0}};
      out["stable"] = stable;
    }
    write_file(f.output, out.dump(2) + "\n");
  }
  return cond.all_ok() ? 0 : 2;
}

struct GenerateFlags {
  int dimension = 0;
  std::string family = "rectangle";
  std::vector<int> bounds;
  int degree = 2;
  int atoms = 2;
  std::uint64_t seed = 0;
  double lo = -2.0, hi = 2.0;
  std::string output;
  std::string truth;
};

int cmd_generate(GenerateFlags& f) {
  tmoment::TruncationSpec spec;
  if (f.family == "rectangle") {
    spec.kind = tmoment::TruncationSpec::Kind::rectangle;
    if (f.bounds.empty())
      throw std::invalid_argument("--family rectangle requires --bounds");
    spec.bounds = f.bounds;
  } else {
    spec.kind = tmoment::TruncationSpec::Kind::simplex;
    spec.degree = f.degree;
  }
  const auto K = spec.build(f.dimension);
  const auto prob = [&]() -> tmoment::GeneratedProblem {
    if (f.atoms > 0) return tmoment::generate_problem(K, f.atoms, f.lo, f.hi, f.seed);
    // Zero atoms: the all-zero moment sequence of the zero measure.
    std::map<tmoment::MultiIndex, double> zeros;
    for (const auto& k : tmoment::sumset(K)) zeros[k] = 0.0;
    return {K, tmoment::MomentSequence(K, zeros), tmoment::AtomicMeasure{}};
  }();

  const std::string truth_path = f.truth.empty() ? f.output + ".truth.json" : f.truth;
  write_file(f.output, tmoment::serialize_problem(spec, prob.S));
  write_file(truth_path, tmoment::measure_to_json(prob.truth).dump(2) + "\n");
  std::cerr << "wrote " << f.output << " (" << tmoment::sumset(K).size() << " moments) and "
            << truth_path << " (" << prob.truth.atoms.size() << " atoms)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"solver for truncated multivariate moment problems"};
  app.require_subcommand(1);

  SolveFlags sf;
  CLI::App* solve = app.add_subcommand("solve", "solve a problem file");
  solve->add_option("input", sf.input, "problem file (JSON)")->required();
  solve->add_option("--tol-psd", sf.tol_psd, "positivity tolerance");
  solve->add_option("--tol-ker", sf.tol_ker, "kernel-inclusion tolerance");
  solve->add_option("--tol-rank", sf.tol_rank, "rank / linear-dependence tolerance");
  solve->add_option("--tol-comm", sf.tol_comm, "commutator acceptance tolerance");
  solve->add_option("--tol-atom", sf.tol_atom, "atom weight pruning tolerance");
  solve->add_option("--strategy", sf.strategy, "route selection")
      ->check(CLI::IsMember({"auto", "stable", "extension"}));
  solve->add_option("--params", sf.params,
                    "pinned extension parameters, each id=value "
                    "(e.g. alpha:2:1,1=13.85)");
  solve->add_option("--max-iters", sf.max_iters, "commutativity sweep limit");
  solve->add_flag("--verify,!--no-verify", sf.verify, "re-integrate the measure (default on)");
  solve->add_option("--output,-o", sf.output, "write the JSON report here instead of stdout");

  CheckFlags cf;
  CLI::App* check = app.add_subcommand("check", "check necessary conditions only");
  check->add_option("input", cf.input, "problem file (JSON)")->required();
  check->add_option("--tol-psd", cf.tol_psd, "positivity tolerance");
  check->add_option("--tol-ker", cf.tol_ker, "kernel-inclusion tolerance");
  check->add_option("--tol-rank", cf.tol_rank, "rank / linear-dependence tolerance");
  check->add_option("--output,-o", cf.output, "also write a JSON verdict here");

  GenerateFlags gf;
  CLI::App* gen = app.add_subcommand("generate", "generate a random solvable problem");
  gen->add_option("--dimension,-n", gf.dimension, "number of variables")
      ->required()
      ->check(CLI::PositiveNumber);
  gen->add_option("--family", gf.family, "truncation family (default rectangle)")
      ->check(CLI::IsMember({"rectangle", "simplex"}));
  gen->add_option("--bounds", gf.bounds, "rectangle bounds, one per variable")
      ->delimiter(',');
  gen->add_option("--degree", gf.degree, "simplex total degree (default 2)");
  gen->add_option("--atoms", gf.atoms, "number of atoms; 0 writes the all-zero sequence")
      ->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", gf.seed, "random seed (default 0)");
  gen->add_option("--lo", gf.lo, "coordinate range lower end (default -2)");
  gen->add_option("--hi", gf.hi, "coordinate range upper end (default 2)");
  gen->add_option("--output,-o", gf.output, "problem file to write")->required();
  gen->add_option("--truth", gf.truth, "truth sidecar path (default <output>.truth.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);  // prints help or the parse error
    return rc == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand(solve)) return cmd_solve(*solve, sf);
    if (app.got_subcommand(check)) return cmd_check(*check, cf);
    return cmd_generate(gf);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
