#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <map>
#include <numeric>
#include <vector>

#include <tmoment/measure.hpp>
#include <tmoment/operator_builder.hpp>

#include "fixture_data.hpp"

using namespace tmoment;
using Catch::Approx;

namespace {

constexpr double kTauRank = 1e-9;
constexpr double kTauHerm = 1e-8;
constexpr double kTauComm = 1e-8;

std::vector<int> all_ordinals(const GramSystem& G) {
  std::vector<int> v(G.gamma.rows());
  std::iota(v.begin(), v.end(), 0);
  return v;
}

double entry_error(const Eigen::MatrixXcd& m, const Eigen::MatrixXcd& ref) {
  return (m - ref).cwiseAbs().maxCoeff();
}

// Deterministic pseudo-random parameter draws for the property tests.
double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + ((rng() >> 11) * 0x1.0p-53) * (hi - lo);
}

Eigen::VectorXd random_vector(std::mt19937_64& rng, int n, double lo, double hi) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = uniform(rng, lo, hi);
  return v;
}

// M must map the coordinates of every domain generator to the coordinates of
// its shifted successor; that is the defining property of an extension.
void check_extension_property(const GramSystem& G, const OrthonormalBasis& B,
                              const Eigen::MatrixXcd& M, int axis, double tol) {
  for (int j : G.omega.omega[axis]) {
    Eigen::VectorXcd img = M * B.D.row(j).transpose().cast<Complex>();
    Eigen::VectorXcd want =
        B.D.row(G.omega.successor[axis].at(j)).transpose().cast<Complex>();
    CHECK((img - want).norm() <= tol * std::max(1.0, want.norm()));
  }
}

}  // namespace

TEST_CASE("parameter id formatting and parsing") {
  ParamId a{1, 2, 0, false};
  CHECK(to_string(a) == "alpha:2:2,0");
  ParamId b{0, 1, 3, true};
  CHECK(to_string(b) == "beta:1:1,3");

  CHECK(parse_param_id("alpha:2:2,0") == a);
  CHECK(parse_param_id("beta:1:1,3") == b);

  CHECK_THROWS_AS(parse_param_id("gamma:1:1,0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_param_id("alpha:1:1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_param_id("alpha:0:1,0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_param_id("alpha"), std::invalid_argument);
  CHECK_THROWS_AS(parse_param_id("alpha:x:1,0"), std::invalid_argument);
}

TEST_CASE("parametric matrix evaluation and pinning") {
  ParametricMatrix P;
  P.const_part = Eigen::MatrixXcd::Zero(2, 2);
  P.const_part(0, 0) = 1.0;
  Eigen::MatrixXcd c1 = Eigen::MatrixXcd::Zero(2, 2);
  c1(0, 1) = Complex(0.0, 1.0);
  Eigen::MatrixXcd c2 = Eigen::MatrixXcd::Zero(2, 2);
  c2(1, 1) = 2.0;
  P.coeffs.emplace_back(ParamId{0, 1, 0, true}, c1);
  P.coeffs.emplace_back(ParamId{0, 1, 1, false}, c2);

  Eigen::VectorXd p(2);
  p << 3.0, 0.5;
  auto M = P.eval(p);
  CHECK(M(0, 0) == Complex(1.0, 0.0));
  CHECK(M(0, 1) == Complex(0.0, 3.0));
  CHECK(M(1, 1) == Complex(1.0, 0.0));
  CHECK_THROWS_AS(P.eval(Eigen::VectorXd::Zero(1)), std::invalid_argument);

  auto pinned = pin_params(P, {{ParamId{0, 1, 0, true}, 2.0}});
  CHECK(pinned.param_count() == 1);
  CHECK(pinned.coeffs[0].first == (ParamId{0, 1, 1, false}));
  CHECK(pinned.const_part(0, 1) == Complex(0.0, 2.0));
}

TEST_CASE("vertical pair: first-axis action extends to the identity") {
  auto prob = fixtures::k11_vertical_pair();
  auto G = build_gram(prob.S);
  auto B = gram_schmidt(G, all_ordinals(G), kTauRank);
  REQUIRE(B.dim == 2);

  auto ext = parametrize_extension(G, B, 0, kTauRank);
  REQUIRE(ext.well_defined);
  CHECK(ext.fresh_params.empty());
  CHECK(ext.extended_generators.empty());
  CHECK(entry_error(ext.matrix.const_part, Eigen::MatrixXcd::Identity(2, 2)) < 1e-12);
}

TEST_CASE("vertical pair: second-axis extension matches the closed form") {
  auto prob = fixtures::k11_vertical_pair();
  auto G = build_gram(prob.S);
  auto B = gram_schmidt(G, all_ordinals(G), kTauRank);

  auto ext = parametrize_extension(G, B, 1, kTauRank);
  REQUIRE(ext.well_defined);
  REQUIRE(ext.fresh_params.size() == 4);  // alpha/beta for each basis direction
  CHECK(ext.extended_generators == std::vector<int>{1});

  // Constant part [[3, -3 sqrt(3)], [sqrt(3), -3]], parameters entering the
  // second column with coefficient 1/(2 sqrt(3)).
  const double s3 = std::sqrt(3.0);
  Eigen::MatrixXcd ref(2, 2);
  ref << 3.0, -3.0 * s3, s3, -3.0;
  CHECK(entry_error(ext.matrix.const_part, ref) < 1e-12);

  REQUIRE(ext.matrix.param_count() == 4);
  CHECK(ext.matrix.coeffs[0].first == (ParamId{1, 1, 0, false}));
  CHECK(ext.matrix.coeffs[1].first == (ParamId{1, 1, 0, true}));
  CHECK(ext.matrix.coeffs[2].first == (ParamId{1, 1, 1, false}));
  CHECK(ext.matrix.coeffs[3].first == (ParamId{1, 1, 1, true}));
  const double c = 1.0 / (2.0 * s3);
  CHECK(std::abs(ext.matrix.coeffs[0].second(0, 1) - Complex(c, 0.0)) < 1e-13);
  CHECK(std::abs(ext.matrix.coeffs[1].second(0, 1) - Complex(0.0, c)) < 1e-13);
  CHECK(std::abs(ext.matrix.coeffs[2].second(1, 1) - Complex(c, 0.0)) < 1e-13);
  CHECK(std::abs(ext.matrix.coeffs[3].second(1, 1) - Complex(0.0, c)) < 1e-13);
  CHECK(ext.matrix.coeffs[0].second.cwiseAbs().sum() == Approx(c).margin(1e-13));
}

TEST_CASE("vertical pair: hermiticity determines the off-diagonal parameter") {
  auto prob = fixtures::k11_vertical_pair();
  auto G = build_gram(prob.S);
  auto B = gram_schmidt(G, all_ordinals(G), kTauRank);
  auto ext = parametrize_extension(G, B, 1, kTauRank);

  auto herm = solve_hermiticity(ext.matrix, kTauHerm);
  REQUIRE(herm.feasible);
  CHECK(herm.residual < 1e-12);

  // alpha for the first direction is forced to 24, both betas vanish, and
  // the diagonal alpha stays free (minimum-norm solution sets it to zero).
  REQUIRE(herm.p_hat.size() == 4);
  CHECK(herm.p_hat(0) == Approx(24.0).margin(1e-10));
  CHECK(herm.p_hat(1) == Approx(0.0).margin(1e-10));
  CHECK(herm.p_hat(2) == Approx(0.0).margin(1e-10));
  CHECK(herm.p_hat(3) == Approx(0.0).margin(1e-10));

  REQUIRE(herm.reduced.param_count() == 1);
  CHECK(herm.reduced.coeffs[0].first == (ParamId{1, 1, 1, false}));
  CHECK(to_string(herm.reduced.coeffs[0].first) == "alpha:2:1,1");

  const double s3 = std::sqrt(3.0);
  Eigen::MatrixXcd hermitized(2, 2);
  hermitized << 3.0, s3, s3, -3.0;
  CHECK(entry_error(herm.reduced.const_part, hermitized) < 1e-10);

  // Choosing alpha:2:1,1 = 8 sqrt(3) reproduces the multiplication matrix of
  // the exact two-atom solution.
  Eigen::VectorXd q(1);
  q << 8.0 * s3;
  Eigen::MatrixXcd target(2, 2);
  target << 3.0, s3, s3, 1.0;
  CHECK(entry_error(herm.reduced.eval(q), target) < 1e-10);

  // Map back to original parameter values: alpha:2:1,0 = 24 and the free
  // diagonal entry equals the chosen value.
  Eigen::VectorXd orig = herm.original_values(q);
  CHECK(orig(0) == Approx(24.0).margin(1e-9));
  CHECK(orig(2) == Approx(8.0 * s3).margin(1e-9));
}

TEST_CASE("vertical pair: a pinned conflicting value makes hermiticity infeasible") {
  auto prob = fixtures::k11_vertical_pair();
  auto G = build_gram(prob.S);
  auto B = gram_schmidt(G, all_ordinals(G), kTauRank);
  auto ext = parametrize_extension(G, B, 1, kTauRank);

  auto pinned = pin_params(ext.matrix, {{ParamId{1, 1, 0, false}, 999.0}});
  auto herm = solve_hermiticity(pinned, kTauHerm);
  CHECK_FALSE(herm.feasible);
  CHECK(herm.residual > 1.0);
}

TEST_CASE("three unit atoms: extensions and hermiticity match the closed forms") {
  auto prob = fixtures::k11_three_unit_atoms();
  auto G = build_gram(prob.S);
  auto B = gram_schmidt(G, all_ordinals(G), kTauRank);
  REQUIRE(B.dim == 3);

  const double s3 = std::sqrt(3.0);
  const double s23 = std::sqrt(2.0 / 3.0);

  auto ext1 = parametrize_extension(G, B, 0, kTauRank);
  auto ext2 = parametrize_extension(G, B, 1, kTauRank);
  REQUIRE(ext1.well_defined);
  REQUIRE(ext2.well_defined);
  CHECK(ext1.fresh_params.size() == 6);
  CHECK(ext2.fresh_params.size() == 6);
  CHECK(ext1.extended_generators == std::vector<int>{2});
  CHECK(ext2.extended_generators == std::vector<int>{1});

  Eigen::MatrixXcd ref1(3, 3);
  ref1 << 1.0, 0.0, -std::sqrt(1.5),  //
      0.0, 1.0, 0.0,                  //
      s23, 1.0 / s3, -1.0;
  CHECK(entry_error(ext1.matrix.const_part, ref1) < 1e-12);

  Eigen::MatrixXcd ref2(3, 3);
  ref2 << 2.0 / 3.0, -2.0 * std::sqrt(2.0) / 3.0, 0.0,  //
      std::sqrt(2.0) / 3.0, -2.0 / 3.0, 0.0,            //
      0.0, 0.0, 1.0;
  CHECK(entry_error(ext2.matrix.const_part, ref2) < 1e-12);

  auto herm1 = solve_hermiticity(ext1.matrix, kTauHerm);
  auto herm2 = solve_hermiticity(ext2.matrix, kTauHerm);
  REQUIRE(herm1.feasible);
  REQUIRE(herm2.feasible);

  // Axis 1: alpha:1:2,0 = 5/sqrt(3), alpha:1:2,1 = sqrt(2/3), betas vanish,
  // alpha:1:2,2 stays free.
  CHECK(herm1.p_hat(0) == Approx(5.0 / s3).margin(1e-10));
  CHECK(herm1.p_hat(2) == Approx(s23).margin(1e-10));
  CHECK(herm1.p_hat(1) == Approx(0.0).margin(1e-12));
  CHECK(herm1.p_hat(3) == Approx(0.0).margin(1e-12));
  CHECK(herm1.p_hat(5) == Approx(0.0).margin(1e-12));
  REQUIRE(herm1.reduced.param_count() == 1);
  CHECK(to_string(herm1.reduced.coeffs[0].first) == "alpha:1:2,2");

  // Axis 2: alpha:2:1,0 = 2/sqrt(3), alpha:2:1,2 = 0, alpha:2:1,1 stays free.
  CHECK(herm2.p_hat(0) == Approx(2.0 / s3).margin(1e-10));
  CHECK(herm2.p_hat(4) == Approx(0.0).margin(1e-12));
  REQUIRE(herm2.reduced.param_count() == 1);
  CHECK(to_string(herm2.reduced.coeffs[0].first) == "alpha:2:1,1");

  // The documented closed-form solution family, evaluated at the reference
  // parameter choice alpha:1:2,2 = 2 sqrt(2), alpha:2:1,1 = sqrt(2/3).
  Eigen::VectorXd q1(1), q2(1);
  q1 << 2.0 * std::sqrt(2.0);
  q2 << s23;
  Eigen::MatrixXcd m1(3, 3), m2(3, 3);
  m1 << 1.0, 0.0, s23,  //
      0.0, 1.0, 1.0 / s3,  //
      s23, 1.0 / s3, 1.0;
  m2 << 2.0 / 3.0, std::sqrt(2.0) / 3.0, 0.0,  //
      std::sqrt(2.0) / 3.0, 1.0 / 3.0, 0.0,    //
      0.0, 0.0, 1.0;
  CHECK(entry_error(herm1.reduced.eval(q1), m1) < 1e-10);
  CHECK(entry_error(herm2.reduced.eval(q2), m2) < 1e-10);
}

TEST_CASE("three unit atoms: commutativity recovers the forced parameter") {
  auto prob = fixtures::k11_three_unit_atoms();
  auto G = build_gram(prob.S);
  auto B = gram_schmidt(G, all_ordinals(G), kTauRank);
  auto ext1 = parametrize_extension(G, B, 0, kTauRank);
  auto ext2 = parametrize_extension(G, B, 1, kTauRank);

  const double s23 = std::sqrt(2.0 / 3.0);

  SECTION("with the first-axis parameter pinned to the reference value") {
    auto pinned = pin_params(ext1.matrix, {{ParamId{0, 2, 2, false}, 2.0 * std::sqrt(2.0)}});
    auto herm1 = solve_hermiticity(pinned, kTauHerm);
    auto herm2 = solve_hermiticity(ext2.matrix, kTauHerm);
    REQUIRE(herm1.feasible);
    REQUIRE(herm2.feasible);
    CHECK(herm1.reduced.param_count() == 0);

    auto comm = solve_commutativity({herm1.reduced, herm2.reduced}, kTauComm, 50, 1234);
    REQUIRE(comm.ok);
    CHECK(comm.residual < 1e-10);
    CHECK(comm.q[1](0) == Approx(s23).margin(1e-9));

    Eigen::MatrixXcd m2(3, 3);
    m2 << 2.0 / 3.0, std::sqrt(2.0) / 3.0, 0.0,  //
        std::sqrt(2.0) / 3.0, 1.0 / 3.0, 0.0,    //
        0.0, 0.0, 1.0;
    CHECK(entry_error(comm.matrices[1], m2) < 1e-9);
  }

  SECTION("with both parameters free") {
    auto herm1 = solve_hermiticity(ext1.matrix, kTauHerm);
    auto herm2 = solve_hermiticity(ext2.matrix, kTauHerm);
    auto comm = solve_commutativity({herm1.reduced, herm2.reduced}, kTauComm, 50, 1234);
    REQUIRE(comm.ok);
    // The second-axis parameter is forced no matter where the first ends up.
    CHECK(comm.q[1](0) == Approx(s23).margin(1e-8));
    for (const auto& m : comm.matrices)
      CHECK(tmoment::detail::hermiticity_defect(m) < 1e-10);
    CHECK(commutator_residual(comm.matrices) < kTauComm);
  }
}

TEST_CASE("vertical pair: commutativity with an identity factor is immediate") {
  auto prob = fixtures::k11_vertical_pair();
  auto G = build_gram(prob.S);
  auto B = gram_schmidt(G, all_ordinals(G), kTauRank);
  auto ext1 = parametrize_extension(G, B, 0, kTauRank);
  auto ext2 = parametrize_extension(G, B, 1, kTauRank);
  auto herm1 = solve_hermiticity(ext1.matrix, kTauHerm);
  auto herm2 = solve_hermiticity(ext2.matrix, kTauHerm);

  auto comm = solve_commutativity({herm1.reduced, herm2.reduced}, kTauComm, 50, 7);
  REQUIRE(comm.ok);
  CHECK(comm.sweeps == 0);
  CHECK(comm.residual < 1e-14);
}

TEST_CASE("stable path matrices of the axis-pair problem") {
  auto prob = fixtures::k22_axis_pair();
  auto G = build_gram(prob.S);
  auto stab = check_dimensional_stability(G, kTauRank);
  REQUIRE(stab.stable);

  auto ms = stable_matrices(G, stab.basis0);
  REQUIRE(ms.size() == 2);

  const double r23 = 2.0 * std::sqrt(2.0) / 3.0;
  Eigen::MatrixXd m1(2, 2), m2(2, 2);
  m1 << 4.0 / 3.0, -r23, -r23, 2.0 / 3.0;
  m2 << 1.0 / 3.0, std::sqrt(2.0) / 3.0, std::sqrt(2.0) / 3.0, 2.0 / 3.0;
  CHECK((ms[0] - m1).cwiseAbs().maxCoeff() < 1e-13);
  CHECK((ms[1] - m2).cwiseAbs().maxCoeff() < 1e-13);

  // Hermitian, commuting, and genuinely extending the defined action.
  std::vector<Eigen::MatrixXcd> cs;
  for (const auto& m : ms) cs.push_back(m.cast<Complex>());
  for (const auto& m : cs) CHECK(tmoment::detail::hermiticity_defect(m) < 1e-13);
  CHECK(commutator_residual(cs) < 1e-13);
  for (int l = 0; l < 2; ++l)
    for (int j : G.omega.omega0)
      CHECK((ms[l] * stab.basis0.D.row(j).transpose() -
             stab.basis0.D.row(G.omega.successor[l].at(j)).transpose())
                .norm() < 1e-12);
}

TEST_CASE("single-variable extension has the tridiagonal shape") {
  // Moments s = (4, 0, 9) on {0, 1}: two symmetric atoms of total mass 4.
  auto K = AdmissibleIndexSet::rectangle({1});
  MomentSequence S(K, {{MultiIndex{0}, 4.0}, {MultiIndex{1}, 0.0}, {MultiIndex{2}, 9.0}});
  auto G = build_gram(S);
  auto B = gram_schmidt(G, all_ordinals(G), kTauRank);
  REQUIRE(B.dim == 2);

  auto ext = parametrize_extension(G, B, 0, kTauRank);
  REQUIRE(ext.well_defined);
  REQUIRE(ext.fresh_params.size() == 4);

  Eigen::MatrixXcd ref = Eigen::MatrixXcd::Zero(2, 2);
  ref(1, 0) = 1.5;  // sqrt(s2 / s0)
  CHECK(entry_error(ext.matrix.const_part, ref) < 1e-13);

  auto herm = solve_hermiticity(ext.matrix, kTauHerm);
  REQUIRE(herm.feasible);
  CHECK(herm.p_hat(0) == Approx(4.5).margin(1e-12));  // s2 / sqrt(s0)
  REQUIRE(herm.reduced.param_count() == 1);
  CHECK(to_string(herm.reduced.coeffs[0].first) == "alpha:1:1,1");
  Eigen::MatrixXcd tri(2, 2);
  tri << 0.0, 1.5, 1.5, 0.0;
  CHECK(entry_error(herm.reduced.const_part, tri) < 1e-12);
  CHECK(std::abs(herm.reduced.coeffs[0].second(1, 1) - Complex(1.0 / 3.0, 0.0)) < 1e-13);

  // One variable: nothing to commute, any hermitian choice is final.
  auto comm = solve_commutativity({herm.reduced}, kTauComm, 50, 5);
  CHECK(comm.ok);
  CHECK(comm.residual == 0.0);
}

TEST_CASE("prescribed action on a dependent generator must be consistent") {
  // Hand-made data passing positivity but failing the kernel condition on
  // the second axis: the extension must refuse to define an operator there.
  auto K = AdmissibleIndexSet::rectangle({1, 1});
  std::map<MultiIndex, double> vals;
  for (const auto& k : sumset(K)) vals[k] = 0.0;
  vals[MultiIndex{0, 0}] = 1.0;
  vals[MultiIndex{1, 0}] = 1.0;
  vals[MultiIndex{2, 0}] = 1.0;
  vals[MultiIndex{0, 2}] = 1.0;
  vals[MultiIndex{2, 2}] = 1.0;
  MomentSequence S(K, vals);
  auto G = build_gram(S);
  auto B = gram_schmidt(G, all_ordinals(G), kTauRank);
  REQUIRE(B.dim == 3);

  auto ext1 = parametrize_extension(G, B, 0, kTauRank);
  CHECK(ext1.well_defined);

  auto ext2 = parametrize_extension(G, B, 1, kTauRank);
  REQUIRE_FALSE(ext2.well_defined);
  CHECK(ext2.conflicting_generator == 2);
  CHECK(ext2.conflict_defect == Approx(std::sqrt(2.0)).margin(1e-12));
}

TEST_CASE("extension property holds for random parameter choices") {
  std::mt19937_64 rng(20260817);
  const std::vector<AdmissibleIndexSet> families = {
      AdmissibleIndexSet::rectangle({3}),
      AdmissibleIndexSet::rectangle({1, 1}),
      AdmissibleIndexSet::rectangle({2, 1}),
      AdmissibleIndexSet::simplex(2, 2),
      AdmissibleIndexSet::rectangle({1, 1, 1}),
  };
  int seed = 900;
  for (const auto& K : families) {
    for (int atoms = 1; atoms <= 3; ++atoms) {
      auto prob = generate_problem(K, atoms, -1.5, 1.5, static_cast<unsigned>(seed++));
      auto G = build_gram(prob.S);
      auto B = gram_schmidt(G, all_ordinals(G), kTauRank);
      for (int l = 0; l < K.dimension(); ++l) {
        auto ext = parametrize_extension(G, B, l, kTauRank);
        REQUIRE(ext.well_defined);
        for (int draw = 0; draw < 3; ++draw) {
          Eigen::VectorXd p = random_vector(rng, ext.matrix.param_count(), -2.0, 2.0);
          check_extension_property(G, B, ext.matrix.eval(p), l, 1e-8);
        }
      }
    }
  }
}

TEST_CASE("hermitian reduction keeps the matrix hermitian for any free choice") {
  std::mt19937_64 rng(77);
  const std::vector<AdmissibleIndexSet> families = {
      AdmissibleIndexSet::rectangle({2}),
      AdmissibleIndexSet::rectangle({1, 1}),
      AdmissibleIndexSet::simplex(2, 2),
  };
  int seed = 4500;
  for (const auto& K : families) {
    for (int atoms = 1; atoms <= 4; ++atoms) {
      auto prob = generate_problem(K, atoms, -1.2, 1.2, static_cast<unsigned>(seed++));
      auto G = build_gram(prob.S);
      auto B = gram_schmidt(G, all_ordinals(G), kTauRank);
      for (int l = 0; l < K.dimension(); ++l) {
        auto ext = parametrize_extension(G, B, l, kTauRank);
        REQUIRE(ext.well_defined);
        auto herm = solve_hermiticity(ext.matrix, kTauHerm);
        REQUIRE(herm.feasible);
        for (int draw = 0; draw < 3; ++draw) {
          Eigen::VectorXd q = random_vector(rng, herm.reduced.param_count(), -3.0, 3.0);
          CHECK(tmoment::detail::hermiticity_defect(herm.reduced.eval(q)) < 1e-10);
          // The extension property is parameter-independent, so it survives
          // the hermitian re-parametrization too.
          check_extension_property(G, B, herm.reduced.eval(q), l, 1e-8);
        }
      }
    }
  }
}

TEST_CASE("single-variable problems always reach a hermitian extension") {
  // With one variable there is no commutativity constraint, so every
  // positive-definite data set ends with a valid operator.
  int seed = 31000;
  for (int m = 1; m <= 4; ++m) {
    for (int atoms = 1; atoms <= 5; ++atoms) {
      auto K = AdmissibleIndexSet::rectangle({m});
      auto prob = generate_problem(K, atoms, -2.0, 2.0, static_cast<unsigned>(seed++));
      auto G = build_gram(prob.S);
      auto B = gram_schmidt(G, all_ordinals(G), kTauRank);
      auto ext = parametrize_extension(G, B, 0, kTauRank);
      REQUIRE(ext.well_defined);
      auto herm = solve_hermiticity(ext.matrix, kTauHerm);
      REQUIRE(herm.feasible);
      auto comm = solve_commutativity({herm.reduced}, kTauComm, 50, 99);
      CHECK(comm.ok);
    }
  }
}
