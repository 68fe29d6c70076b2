#include "mwlab/characteristics.hpp"
#include "mwlab/error.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>

using namespace mwlab;

namespace {

const GridSpec kLine2{1, 1, {0, 0}};

Mat oracle_power(const Mat& s, double t) {
  Eigen::SelfAdjointEigenSolver<Mat> es(s);
  return es.eigenvectors() * es.eigenvalues().array().pow(t).matrix().asDiagonal() * es.eigenvectors().transpose();
}

double oracle_norm(const Mat& m) { return Eigen::JacobiSVD<Mat>(m).singularValues()(0); }

// sup_Q (avg_x (avg_y ||V^{1/q}(x)(B(x)-B(y))U^{-1/q}(y)||^{p'})^{q/p'})^{1/q}, straight from the definition
double oracle_tilde(const MatrixField& u, const MatrixField& v, const MatrixField& b, const ExponentTriple& e) {
  const double q = e.q, pc = e.p_conj();
  double best = 0.0;
  for (const Cube& cube : enumerate_cubes(u.grid())) {
    const CubeSet s = cells_of(cube);
    double outer = 0.0;
    for (std::size_t x : s.members) {
      double inner = 0.0;
      for (std::size_t y : s.members)
        inner += std::pow(oracle_norm(oracle_power(v[x], 1 / q) * (b[x] - b[y]) * oracle_power(u[y], -1 / q)), pc);
      outer += std::pow(inner / s.size(), q / pc);
    }
    best = std::max(best, std::pow(outer / s.size(), 1 / q));
  }
  return best;
}

// `swapped` integrates x innermost, with the exponents exchanged
double oracle_apq(const MatrixField& w, const ExponentTriple& e, bool swapped = false) {
  const double q = swapped ? e.p_conj() : e.q, pc = swapped ? e.q : e.p_conj();
  double best = 0.0;
  for (const Cube& cube : enumerate_cubes(w.grid())) {
    const CubeSet s = cells_of(cube);
    double outer = 0.0;
    for (std::size_t x : s.members) {
      double inner = 0.0;
      for (std::size_t y : s.members)
        inner += std::pow(swapped ? oracle_norm(oracle_power(w[y], 1 / e.q) * oracle_power(w[x], -1 / e.q))
                                  : oracle_norm(oracle_power(w[x], 1 / e.q) * oracle_power(w[y], -1 / e.q)),
                          pc);
      outer += std::pow(inner / s.size(), q / pc);
    }
    best = std::max(best, outer / s.size());
  }
  return best;
}

struct Instance {
  MatrixField u, v, b;
  ExponentTriple e;
};

Instance random_instance(std::uint64_t seed, int L, int n, const ExponentTriple& e) {
  const GridSpec g{1, L, {0, 0}};
  return {generate_weight(seed, g, n, "log-bounded-random").field,
          generate_weight(seed + 100, g, n, "log-bounded-random").field, generate_symbol(seed + 200, g, n, "random"),
          e};
}

const ExponentTriple kFrac = ExponentTriple::from_alpha_q(0.5, 4.0, 1);
const ExponentTriple kFrac2 = ExponentTriple::from_alpha_q(0.25, 2.4, 1);

}  // namespace

TEST_CASE("apq of constant weights is 1") {
  Mat c(2, 2);
  c << 3, 1, 1, 2;
  const MatrixField w = MatrixField::constant_weight(GridSpec{1, 4, {0, 0}}, c);
  CHECK(apq_characteristic(w, kFrac).value == doctest::Approx(1.0).epsilon(1e-12));
  const MatrixField w2 = MatrixField::constant_weight(GridSpec{2, 2, {0, 0}}, Mat::Identity(3, 3) * 7);
  CHECK(apq_characteristic(w2, ExponentTriple::from_alpha_q(0.5, 3.0, 2)).value ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("apq two-cell example") {
  const MatrixField u = MatrixField::scalar_weight(kLine2, {1.0, 4.0});
  const Characteristic c = apq_characteristic(u, ExponentTriple::make(2, 2, 0, 1));
  CHECK(c.value == doctest::Approx(1.5625).epsilon(1e-14));
  REQUIRE(c.argmax.has_value());
  CHECK(c.argmax->level == 0);
}

TEST_CASE("apq matches the brute-force definition") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const MatrixField w = generate_weight(seed, GridSpec{1, 3, {0, 0}}, 2, "log-bounded-random").field;
    for (const ExponentTriple& e : {kFrac, kFrac2}) {
      const double value = apq_characteristic(w, e).value;
      CHECK(value == doctest::Approx(oracle_apq(w, e)).epsilon(1e-12));
      CHECK(value >= 1.0);
    }
  }
}

TEST_CASE("apq of the dual weight at dual exponents") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const MatrixField w = generate_weight(seed, GridSpec{1, 3, {0, 0}}, 2, "log-bounded-random").field;
    // q = p': the two double sums coincide
    CHECK(apq_characteristic(dual_weight(w, kFrac), kFrac.dual()).value ==
          doctest::Approx(apq_characteristic(w, kFrac).value).epsilon(1e-9));
    const ExponentTriple a2 = ExponentTriple::make(2, 2, 0, 1);
    CHECK(apq_characteristic(dual_weight(w, a2), a2.dual()).value ==
          doctest::Approx(apq_characteristic(w, a2).value).epsilon(1e-9));
    // q != p': the order of integration flips
    CHECK(apq_characteristic(dual_weight(w, kFrac2), kFrac2.dual()).value ==
          doctest::Approx(oracle_apq(w, kFrac2, true)).epsilon(1e-9));
  }
}

TEST_CASE("restriction never increases a characteristic") {
  const GridSpec g{1, 4, {0, 0}};
  const MatrixField w = generate_weight(3, g, 2, "log-bounded-random").field;
  const double full = apq_characteristic(w, kFrac).value;
  for (const Cube& q : enumerate_cubes(g)) CHECK(apq_characteristic(w, kFrac, cells_of(q)).value <= full * (1 + 1e-12));
}

TEST_CASE("tilde BMO two-cell example") {
  const MatrixField one = MatrixField::scalar_weight(kLine2, {1.0, 1.0});
  const MatrixField b = MatrixField::scalar_symbol(kLine2, {0.0, 1.0});
  const ExponentTriple e = ExponentTriple::make(2, 2, 0, 1);
  CHECK(jn_quantity(4, one, one, b, e).value == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
  CHECK(tilde_bmo(one, one, b, e).value == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
}

TEST_CASE("tilde BMO matches the brute-force definition") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    for (const ExponentTriple& e : {kFrac, kFrac2}) {
      const Instance in = random_instance(seed, 3, 2, e);
      const double oracle = oracle_tilde(in.u, in.v, in.b, e);
      CHECK(tilde_bmo(in.v, in.u, in.b, e).value == doctest::Approx(oracle).epsilon(1e-12));
      CHECK(jn_quantity(4, in.u, in.v, in.b, e).value == doctest::Approx(oracle).epsilon(1e-12));
    }
  }
}

TEST_CASE("constant symbols give zero") {
  const GridSpec g{1, 3, {0, 0}};
  Mat c(2, 2);
  c << 1, -2, -2, 5;
  const MatrixField b = MatrixField::constant_symbol(g, c);
  const MatrixField u = generate_weight(1, g, 2, "log-bounded-random").field;
  const MatrixField v = generate_weight(2, g, 2, "log-bounded-random").field;
  for (int k = 1; k <= 6; ++k) CHECK(jn_quantity(k, u, v, b, kFrac).value <= 1e-12);
  CHECK(bmo_classic(u, v, b, kFrac).value <= 1e-12);
  CHECK(dual_tilde_bmo(u, v, b, kFrac).value <= 1e-12);
}

TEST_CASE("Hoelder ordering and dual identity") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (int n : {1, 2}) {
      for (const ExponentTriple& e : {kFrac, kFrac2}) {
        const Instance in = random_instance(seed, 3, n, e);
        const double j5 = jn_quantity(5, in.u, in.v, in.b, e).value;
        const double j6 = jn_quantity(6, in.u, in.v, in.b, e).value;
        CHECK(j6 <= j5 * (1 + 1e-9));
        CHECK(dual_tilde_bmo(in.u, in.v, in.b, e).value == doctest::Approx(j5).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("BMO quantities are shift invariant and homogeneous") {
  const Instance in = random_instance(7, 3, 2, kFrac);
  Mat shift(2, 2);
  shift << 0.3, 0.1, 0.1, -2.0;
  const MatrixField shifted = in.b.plus_constant(shift);
  std::vector<Mat> scaled_cells;
  for (const Mat& m : in.b.cells()) scaled_cells.push_back(2.5 * m);
  const MatrixField scaled = MatrixField::symbol(in.b.grid(), 2, scaled_cells);
  for (int k = 1; k <= 6; ++k) {
    const double base = jn_quantity(k, in.u, in.v, in.b, kFrac).value;
    CHECK(jn_quantity(k, in.u, in.v, shifted, kFrac).value == doctest::Approx(base).epsilon(1e-12));
    CHECK(jn_quantity(k, in.u, in.v, scaled, kFrac).value == doctest::Approx(2.5 * base).epsilon(1e-9));
  }
}

TEST_CASE("classic BMO with identity weights is the mean oscillation") {
  const GridSpec g{1, 3, {0, 0}};
  const MatrixField one = MatrixField::scalar_weight(g, std::vector<double>(8, 1.0));
  const std::vector<double> vals{0.0, 1.0, -2.0, 0.5, 3.0, 3.0, 1.0, -1.0};
  const MatrixField b = MatrixField::scalar_symbol(g, vals);
  double best = 0.0;
  for (const Cube& q : enumerate_cubes(g)) {
    const CubeSet s = cells_of(q);
    double m = 0.0, osc = 0.0;
    for (std::size_t c : s.members) m += vals[c];
    m /= s.size();
    for (std::size_t c : s.members) osc += std::abs(vals[c] - m);
    best = std::max(best, std::pow(osc / s.size(), 1 / kFrac.q));
  }
  CHECK(bmo_classic(one, one, b, kFrac).value == doctest::Approx(best).epsilon(1e-14));
}

TEST_CASE("bloom nu") {
  const MatrixField u = MatrixField::scalar_weight(kLine2, {2.0, 3.0});
  const MatrixField b = MatrixField::scalar_symbol(kLine2, {0.0, 1.0});
  const auto inst = ScalarBloomInstance::make(u, u, b, kFrac);
  CHECK(bloom_nu(inst, kFrac).value == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(bloom_nu(inst, kFrac, all_cells(kLine2)).value == doctest::Approx(0.5).epsilon(1e-15));
  const auto flat = ScalarBloomInstance::make(u, u, MatrixField::scalar_symbol(kLine2, {2.0, 2.0}), kFrac);
  CHECK(bloom_nu(flat, kFrac).value == 0.0);
}

TEST_CASE("scalar chain Hoelder direction") {
  const GridSpec g{1, 4, {0, 0}};
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const MatrixField u = generate_weight(seed, g, 1, "log-bounded-random").field;
    const MatrixField v = generate_weight(seed + 9, g, 1, "log-bounded-random").field;
    const auto inst = ScalarBloomInstance::make(u, v, generate_symbol(seed, g, 1, "random"), kFrac2);
    for (const Cube& q : enumerate_cubes(g)) {
      const ScalarChainTerms t = scalar_chain_terms(inst, kFrac2, cells_of(q));
      CHECK(t.mean_nu <= t.holder_bound * (1 + 1e-12));
    }
  }
  const MatrixField u = MatrixField::scalar_weight(kLine2, {5.0, 5.0});
  const auto inst = ScalarBloomInstance::make(u, u, MatrixField::scalar_symbol(kLine2, {0, 1}), kFrac);
  const ScalarChainTerms t = scalar_chain_terms(inst, kFrac, all_cells(kLine2));
  CHECK(t.mean_nu == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(t.root_ratio == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("scalar JN reducing quantities are exact") {
  const Instance in = random_instance(2, 3, 1, kFrac);
  WeightedBmoEvaluator eval(in.u, in.v, in.b, kFrac);
  const JnValues vals = eval.evaluate(all_cells(in.u.grid()));
  CHECK(vals.distortion_u == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(vals.jn[5] <= vals.split_a + vals.split_b + 1e-12);
}

TEST_CASE("iterated_mean and argument checks") {
  Mat k(2, 2);
  k << 1, 2, 3, 4;
  // avg_x (avg_y k^1)^{2/1}, root 1/2
  const double expect = std::sqrt((1.5 * 1.5 + 3.5 * 3.5) / 2);
  CHECK(iterated_mean(k, {1.0, 2.0, 0.5, true}) == doctest::Approx(expect).epsilon(1e-15));
  const double expect_t = std::sqrt((2.0 * 2.0 + 3.0 * 3.0) / 2);
  CHECK(iterated_mean(k, {1.0, 2.0, 0.5, false}) == doctest::Approx(expect_t).epsilon(1e-15));
  CHECK_THROWS_AS(jn_quantity(7, MatrixField::scalar_weight(kLine2, {1, 1}), MatrixField::scalar_weight(kLine2, {1, 1}),
                              MatrixField::scalar_symbol(kLine2, {0, 1}), kFrac),
                  ParameterError);
}
