#include "mwlab/error.hpp"
#include "mwlab/norms.hpp"

#include <doctest.h>

#include <Eigen/SVD>

#include <cmath>
#include <random>

using namespace mwlab;

namespace {

const ExponentTriple kFrac = ExponentTriple::from_alpha_q(0.5, 4.0, 1);

OperatorMatrix random_operator(std::uint64_t seed, int L, int n) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const GridSpec g{1, L, {0, 0}};
  const auto dim = static_cast<Eigen::Index>(g.cell_count()) * n;
  return {g, n, OperatorKind::product, Mat::NullaryExpr(dim, dim, [&] { return normal(rng); }), 0.0};
}

}  // namespace

TEST_CASE("weighted norms") {
  const GridSpec g{1, 1, {0, 0}};
  const MatrixField id = MatrixField::constant_weight(g, Mat::Identity(2, 2));
  Vec v(2);
  v << 3, 4;
  for (double r : {1.5, 2.0, 4.0}) CHECK(weighted_norm(VectorField::constant(g, v), id, r, 0.25) ==
                                         doctest::Approx(5.0).epsilon(1e-14));

  const MatrixField one = MatrixField::scalar_weight(g, {1.0, 1.0});
  VectorField f = VectorField::zeros(g, 1);
  f.values[0](0) = 1.0;
  CHECK(weighted_norm(f, one, 2.0, 0.5) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));

  const MatrixField w = generate_weight(3, GridSpec{1, 3, {0, 0}}, 2, "log-bounded-random").field;
  const VectorField h = generate_vector(2, w.grid(), 2);
  VectorField hc = h;
  for (Vec& x : hc.values) x *= -2.5;
  CHECK(weighted_norm(hc, w, 4.0 / 3.0, -0.25) == doctest::Approx(2.5 * weighted_norm(h, w, 4.0 / 3.0, -0.25)).epsilon(1e-13));

  const MatrixField four = MatrixField::scalar_weight(g, {16.0, 16.0});
  CHECK(weighted_norm(VectorField::constant(g, Vec::Ones(1)), four, 2.0, 0.25) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("identity operator norms") {
  const GridSpec g{1, 1, {0, 0}};
  const MatrixField one = MatrixField::scalar_weight(g, {1.0, 1.0});
  const OpNormEstimate two = opnorm(build_identity(g), one, one, ExponentTriple::make(2, 2, 0, 1));
  CHECK(two.exact);
  CHECK(two.estimate == doctest::Approx(1.0).epsilon(1e-12));
  const OpNormEstimate frac = opnorm(build_identity(g), one, one, kFrac);
  CHECK(std::abs(frac.estimate - std::sqrt(2.0)) <= 1e-6);
  CHECK(frac.lower <= frac.estimate);

  const GridSpec g3{1, 3, {0, 0}};
  const MatrixField id3 = MatrixField::constant_weight(g3, Mat::Identity(2, 2));
  const OpNormEstimate big = opnorm(build_identity(g3, 2), id3, id3, kFrac);
  CHECK(std::abs(big.estimate - std::pow(8.0, 1 / kFrac.p - 1 / kFrac.q)) <= 1e-6);
}

TEST_CASE("p = q = 2 matches the largest singular value") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const OperatorMatrix k = random_operator(seed, 3, 2);
    const double sv = Eigen::JacobiSVD<Mat>(k.entries).singularValues()(0);
    const OpNormEstimate est = mixed_opnorm(k, 2.0, 2.0);
    CHECK(est.exact);
    CHECK(std::abs(est.estimate - sv) <= 1e-6 * sv);
    CHECK(mixed_opnorm_oracle(random_operator(seed, 2, 2), 2.0, 2.0) ==
          doctest::Approx(Eigen::JacobiSVD<Mat>(random_operator(seed, 2, 2).entries).singularValues()(0)).epsilon(1e-6));
  }
}

TEST_CASE("witness certifies the lower bound") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const OperatorMatrix k = random_operator(seed, 3, 1);
    const OpNormEstimate est = mixed_opnorm(k, 4.0 / 3.0, 4.0);
    CHECK(std::abs(mixed_ratio(k, est.witness, 4.0 / 3.0, 4.0) - est.lower) <= 1e-10 * est.lower);
    CHECK(est.lower <= est.estimate);
    CHECK_FALSE(est.flagged);
  }
}

TEST_CASE("mixed norms agree with the oracle") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    for (int n : {1, 2}) {
      const OperatorMatrix k = random_operator(seed, n == 1 ? 2 : 1, n);
      const double est = mixed_opnorm(k, 4.0 / 3.0, 4.0).estimate;
      OracleOptions o;
      o.samples = 200000;
      const double oracle = mixed_opnorm_oracle(k, 4.0 / 3.0, 4.0, o);
      CHECK(std::abs(est - oracle) <= 0.02 * oracle);
    }
  }
}

TEST_CASE("duality of mixed norms") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const OperatorMatrix k = random_operator(seed, 3, 1);
    OperatorMatrix kt = k;
    kt.entries = k.entries.transpose();
    const double p = 1.5, q = 2.4;
    const double direct = mixed_opnorm(k, p, q).estimate;
    const double dual = mixed_opnorm(kt, q / (q - 1), p / (p - 1)).estimate;
    CHECK(std::abs(direct - dual) <= 0.02 * direct);
  }
}

TEST_CASE("oracle is monotone under truncation and refuses large problems") {
  const OperatorMatrix k = random_operator(9, 2, 2);
  const CubeSet e{k.grid, {1, 2}};
  OracleOptions o;
  o.samples = 100000;
  CHECK(mixed_opnorm_oracle(truncate(k, e), 1.5, 3.0, o) <= mixed_opnorm_oracle(k, 1.5, 3.0, o) * (1 + 1e-9));
  CHECK_THROWS_AS(mixed_opnorm_oracle(random_operator(1, 3, 2), 1.5, 3.0), ParameterError);
}

TEST_CASE("weighted opnorm equals the conjugated mixed norm") {
  const GridSpec g{1, 3, {0, 0}};
  const MatrixField u = generate_weight(1, g, 2, "log-bounded-random").field;
  const MatrixField v = generate_weight(2, g, 2, "log-bounded-random").field;
  const OperatorMatrix t = build_ialpha(g, kFrac, 2);
  OpNormOptions o;
  o.seed = 3;
  const double weighted = opnorm(t, u, v, kFrac, o).estimate;
  const double mixed = mixed_opnorm(conjugate(t, v, u, kFrac), kFrac.p, kFrac.q, o).estimate;
  CHECK(weighted == doctest::Approx(mixed).epsilon(1e-12));

  // direct evaluation of the weighted ratio at the witness
  const OpNormEstimate est = opnorm(t, u, v, kFrac, o);
  VectorField f = est.witness;
  for (std::size_t c = 0; c < f.values.size(); ++c) f.values[c] = sym_power(u[c], -1 / kFrac.q) * f.values[c];
  const double ratio = weighted_norm(t.apply(f), v, kFrac.q, 1 / kFrac.q) / weighted_norm(f, u, kFrac.p, 1 / kFrac.q);
  CHECK(ratio == doctest::Approx(est.lower).epsilon(1e-10));
}

TEST_CASE("commutator of a constant symbol has norm zero") {
  const GridSpec g{1, 3, {0, 0}};
  const MatrixField u = generate_weight(1, g, 2, "log-bounded-random").field;
  Mat c(2, 2);
  c << 1, 0.5, 0.5, 2;
  const OperatorMatrix t = build_commutator(build_ialpha(g, kFrac, 2), MatrixField::constant_symbol(g, c));
  CHECK(opnorm(t, u, u, kFrac).estimate <= 1e-12);
}
