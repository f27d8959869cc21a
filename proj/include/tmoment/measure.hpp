#ifndef TMOMENT_MEASURE_HPP
#define TMOMENT_MEASURE_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <vector>

#include <tmoment/gram_system.hpp>
#include <tmoment/multi_index.hpp>

namespace tmoment {

/// Neumaier-compensated accumulator; keeps sums of many small terms honest.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct Atom {
  Eigen::VectorXd point;
  double weight = 0.0;
};

/// Finitely supported nonnegative measure: the solver's output format and the
/// generator's ground truth.
struct AtomicMeasure {
  std::vector<Atom> atoms;

  double total_mass() const {
    CompensatedSum s;
    for (const auto& a : atoms) s.add(a.weight);
    return s.value();
  }
};

namespace detail {

// Exact integer power by repeated squaring; 0^0 = 1 by the usual moment
// convention.
inline double ipow(double base, int exp) {
  double result = 1.0;
  double b = base;
  for (int e = exp; e > 0; e >>= 1) {
    if (e & 1) result *= b;
    b *= b;
  }
  return result;
}

}  // namespace detail

/// Integral of t^k against mu.
inline double integrate_monomial(const AtomicMeasure& mu, const MultiIndex& k) {
  CompensatedSum s;
  for (const auto& a : mu.atoms) {
    if (a.point.size() != k.dimension())
      throw std::invalid_argument("atom dimension does not match index " + to_string(k));
    double term = a.weight;
    for (int i = 0; i < k.dimension(); ++i) term *= detail::ipow(a.point(i), k[i]);
    s.add(term);
  }
  return s.value();
}

/// All moments of mu on K + K.
inline MomentSequence moments_of(const AtomicMeasure& mu, const AdmissibleIndexSet& K) {
  std::map<MultiIndex, double> values;
  for (const auto& k : sumset(K)) values[k] = integrate_monomial(mu, k);
  return MomentSequence(K, std::move(values));
}

struct VerificationResult {
  bool ok = false;
  double max_abs_error = 0.0;
  double scale = 1.0;  // max(1, max |s_k|)
  MultiIndex worst_index;
};

/// Re-integrates every monomial of K + K against mu and compares with S.
inline VerificationResult verify_solution(const MomentSequence& S, const AtomicMeasure& mu,
                                          double tau_verify) {
  VerificationResult out;
  for (const auto& [k, s] : S.values()) {
    out.scale = std::max(out.scale, std::abs(s));
    const double err = std::abs(integrate_monomial(mu, k) - s);
    if (err >= out.max_abs_error) {
      out.max_abs_error = err;
      out.worst_index = k;
    }
  }
  out.ok = out.max_abs_error <= tau_verify * out.scale;
  return out;
}

struct GeneratedProblem {
  AdmissibleIndexSet K;
  MomentSequence S;
  AtomicMeasure truth;
};

namespace detail {

// Uniform double in [0,1) from the top 53 bits of the engine output; avoids
// std::uniform_real_distribution, whose output is implementation-defined.
inline double uniform01(std::mt19937_64& rng) { return (rng() >> 11) * 0x1.0p-53; }

inline double uniform_in(std::mt19937_64& rng, double lo, double hi) {
  return lo + uniform01(rng) * (hi - lo);
}

}  // namespace detail

/// Seed-reproducible random problem: num_atoms distinct points in
/// [lo, hi]^n (pairwise max-norm separation at least 1e-2), weights in
/// [0.1, 2], and the induced moments on K + K.
inline GeneratedProblem generate_problem(const AdmissibleIndexSet& K, int num_atoms, double lo,
                                         double hi, std::uint64_t seed) {
  if (num_atoms < 1) throw std::invalid_argument("need at least one atom");
  if (!(lo < hi)) throw std::invalid_argument("coordinate range is empty");
  const int n = K.dimension();
  const double min_sep = 1e-2;

  std::mt19937_64 rng(seed);
  AtomicMeasure mu;
  int attempts = 0;
  const int max_attempts = 1000 * num_atoms;
  while (static_cast<int>(mu.atoms.size()) < num_atoms) {
    if (++attempts > max_attempts)
      throw std::runtime_error("cannot place " + std::to_string(num_atoms) +
                               " separated atoms in the given range");
    Eigen::VectorXd p(n);
    for (int i = 0; i < n; ++i) p(i) = detail::uniform_in(rng, lo, hi);
    bool separated = true;
    for (const auto& a : mu.atoms)
      separated = separated && (a.point - p).lpNorm<Eigen::Infinity>() >= min_sep;
    if (!separated) continue;
    mu.atoms.push_back(Atom{p, detail::uniform_in(rng, 0.1, 2.0)});
  }
  std::sort(mu.atoms.begin(), mu.atoms.end(), [](const Atom& a, const Atom& b) {
    return std::lexicographical_compare(a.point.data(), a.point.data() + a.point.size(),
                                        b.point.data(), b.point.data() + b.point.size());
  });
  MomentSequence S = moments_of(mu, K);
  return GeneratedProblem{K, std::move(S), std::move(mu)};
}

}  // namespace tmoment

#endif  // TMOMENT_MEASURE_HPP
