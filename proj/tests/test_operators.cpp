#include "mwlab/error.hpp"
#include "mwlab/operators.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace mwlab;

namespace {

const ExponentTriple kFrac = ExponentTriple::from_alpha_q(0.5, 4.0, 1);

// second difference of |t|^{1+a} / (a (1+a)), the tent-weighted integral of |z|^{a-1}
double d1_oracle(double alpha, int m) {
  auto f = [alpha](double t) { return std::pow(std::abs(t), 1 + alpha) / (alpha * (1 + alpha)); };
  return f(m + 1.0) - 2 * f(m) + f(m - 1.0);
}

double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

TEST_CASE("single-cell kernel is 8/3") {
  const GridSpec g{1, 0, {0, 0}};
  CHECK(std::abs(ialpha_kernel(g, 0.5, 0, 0) - 8.0 / 3.0) <= 1e-12);
  CHECK(std::abs(ialpha_unit_kernel(1, 0.5, {0, 0}) - 8.0 / 3.0) <= 1e-12);
}

TEST_CASE("d = 1 kernel matches the antiderivative oracle") {
  for (double alpha : {0.1, 0.25, 0.5, 0.75, 0.9}) {
    for (int m = -6; m <= 6; ++m) {
      double err = -1;
      CHECK(ialpha_unit_kernel(1, alpha, {m, 0}, &err) == doctest::Approx(d1_oracle(alpha, m)).epsilon(1e-12));
      CHECK(err == 0.0);
    }
  }
}

TEST_CASE("kernel refinement consistency") {
  for (double alpha : {0.25, 0.5, 0.8}) {
    const double root = ialpha_kernel(GridSpec{1, 0, {0, 0}}, alpha, 0, 0);
    for (int L = 1; L <= 7; ++L) {
      const GridSpec g{1, L, {0, 0}};
      const OperatorMatrix t = build_ialpha(g, ExponentTriple::from_alpha_q(alpha, 2.0 / (1.0 - alpha), 1));
      double sum = 0.0;
      for (std::size_t i = 0; i < g.cell_count(); ++i)
        for (std::size_t j = 0; j < g.cell_count(); ++j) sum += g.cell_measure() * t.entries(i, j);
      CHECK(std::abs(sum - root) <= 1e-9);
    }
    // one coarse cell pair against its refinement
    const GridSpec g1{1, 1, {0, 0}}, g3{1, 3, {0, 0}};
    double fine = 0.0;
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 4; j < 8; ++j) fine += g3.cell_measure() * ialpha_kernel(g3, alpha, i, j);
    CHECK(std::abs(fine - g1.cell_measure() * ialpha_kernel(g1, alpha, 0, 1)) <= 1e-9);
  }
}

TEST_CASE("d = 2 kernel reference values") {
  struct Ref {
    double alpha;
    Coords m;
    double value;
  };
  const Ref refs[] = {
      {0.5, {0, 0}, 8.05560928191839},  {0.5, {0, 1}, 1.32695820773088}, {0.5, {1, 1}, 0.682826202287431},
      {0.5, {0, 2}, 0.371236549364446}, {0.5, {2, 3}, 0.148268787787998}, {1.0, {0, 0}, 2.97320959824738},
      {1.0, {0, 1}, 1.11212868984901},  {1.0, {1, 1}, 0.748952218549366}, {1.0, {0, 2}, 0.510726752201181},
      {1.0, {2, 3}, 0.279195361814803}, {1.5, {0, 0}, 1.58440917156989},  {1.5, {0, 1}, 1.02211140339072},
      {1.5, {1, 1}, 0.852753899213588}, {1.5, {0, 2}, 0.710723424848813}, {1.5, {2, 3}, 0.527513422471896},
  };
  for (const Ref& r : refs) {
    double err = 0;
    const double v = ialpha_unit_kernel(2, r.alpha, r.m, &err);
    CHECK(std::abs(v - r.value) <= 1e-6);
    CHECK(err <= 1e-6);
    CHECK(ialpha_unit_kernel(2, r.alpha, {r.m[1], r.m[0]}) == doctest::Approx(v).epsilon(1e-9));
    CHECK(ialpha_unit_kernel(2, r.alpha, {-r.m[0], r.m[1]}) == doctest::Approx(v).epsilon(1e-9));
  }
  const double closed = 4.0 / 3.0 * (1 - std::sqrt(2.0)) + 4 * std::asinh(1.0);
  CHECK(std::abs(ialpha_unit_kernel(2, 1.0, {0, 0}) - closed) <= 1e-9);
}

TEST_CASE("fractional integral matrix") {
  const GridSpec g{1, 1, {0, 0}};
  const OperatorMatrix t = build_ialpha(g, kFrac);
  CHECK(t.entries(0, 1) == t.entries(1, 0));
  CHECK(t.entries(0, 1) == doctest::Approx(std::pow(0.5, 0.5) * d1_oracle(0.5, 1)).epsilon(1e-13));
  const GridSpec g2{2, 2, {0, 0}};
  const OperatorMatrix t2 = build_ialpha(g2, ExponentTriple::from_alpha_q(0.5, 3.0, 2), 2);
  CHECK(t2.entries.rows() == 32);
  for (std::size_t i = 0; i < g2.cell_count(); ++i) {
    for (std::size_t j = 0; j < g2.cell_count(); ++j) {
      const Mat b = t2.block(i, j);
      CHECK(b(0, 0) > 0.0);
      CHECK(b(0, 1) == 0.0);
      CHECK(b(0, 0) == b(1, 1));
      CHECK(b(0, 0) == doctest::Approx(t2.block(j, i)(0, 0)).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(build_ialpha(g, ExponentTriple::make(2, 2, 0, 1)), ParameterError);
}

TEST_CASE("averaging operator") {
  const GridSpec g{1, 3, {0, 0}};
  const OperatorMatrix a = build_averaging(all_cells(g), kFrac, 2);
  Vec v(2);
  v << 1.5, -2.0;
  const VectorField out = a.apply(VectorField::constant(g, v));
  for (const Vec& c : out.values) CHECK((c - v).norm() < 1e-14);

  const CubeSet s{g, {1, 2, 5}};
  const OperatorMatrix as = build_averaging(s, kFrac, 1);
  const VectorField f = generate_vector(3, g, 1);
  const VectorField once = as.apply(f);
  const VectorField twice = as.apply(once);
  const double factor = std::pow(s.measure(), kFrac.alpha);
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    CHECK(twice.values[c](0) == doctest::Approx(factor * once.values[c](0)).epsilon(1e-13));
    if (!s.contains(c)) CHECK(once.values[c](0) == 0.0);
  }
  CHECK_THROWS_AS(build_averaging(CubeSet{g, {}}, kFrac), ParameterError);
}

TEST_CASE("commutator") {
  const GridSpec g{1, 1, {0, 0}};
  const OperatorMatrix t = build_ialpha(g, kFrac);
  const OperatorMatrix c = build_commutator(t, MatrixField::scalar_symbol(g, {0.0, 1.0}));
  CHECK(c.entries(0, 0) == 0.0);
  CHECK(c.entries(1, 1) == 0.0);
  CHECK(c.entries(0, 1) == doctest::Approx(-t.entries(0, 1)).epsilon(1e-15));
  CHECK(c.entries(1, 0) == doctest::Approx(t.entries(1, 0)).epsilon(1e-15));

  const GridSpec g3{1, 3, {0, 0}};
  const MatrixField b = generate_symbol(2, g3, 2, "random");
  CHECK(max_abs(build_commutator(build_identity(g3, 2), b).entries) == 0.0);
  Mat k(2, 2);
  k << 1, 2, 2, -1;
  CHECK(max_abs(build_commutator(build_ialpha(g3, kFrac, 2), MatrixField::constant_symbol(g3, k)).entries) <= 1e-12);

  // scalar symbols: antisymmetric blocks
  const MatrixField bs = generate_symbol(5, g3, 1, "random");
  const OperatorMatrix cs = build_commutator(build_ialpha(g3, kFrac), bs);
  CHECK(max_abs(cs.entries + cs.entries.transpose()) <= 1e-14);
  CHECK_THROWS_AS(build_commutator(build_ialpha(g, kFrac, 2), bs), ParameterError);
}

TEST_CASE("conjugation") {
  const GridSpec g{1, 3, {0, 0}};
  const OperatorMatrix t = build_ialpha(g, kFrac, 2);
  const MatrixField id = MatrixField::constant_weight(g, Mat::Identity(2, 2));
  CHECK(max_abs(conjugate(t, id, id, kFrac).entries - t.entries) <= 1e-15);

  const MatrixField u = generate_weight(1, g, 1, "log-bounded-random").field;
  const OperatorMatrix diag = build_identity(g, 1);
  const OperatorMatrix cd = conjugate(diag, u, u, kFrac);
  for (Eigen::Index i = 0; i < cd.entries.rows(); ++i) CHECK(cd.entries(i, i) == doctest::Approx(1.0).epsilon(1e-14));

  const MatrixField v = generate_weight(2, g, 2, "log-bounded-random").field;
  const MatrixField w = generate_weight(3, g, 2, "log-bounded-random").field;
  const MatrixField b = generate_symbol(4, g, 2, "random");
  const OperatorMatrix c = conjugate(build_commutator(t, b), v, w, kFrac);
  for (std::size_t i = 0; i < g.cell_count(); ++i) {
    for (std::size_t j = 0; j < g.cell_count(); ++j) {
      const Mat expected = sym_power(v[i], 0.25) * (b[i] - b[j]) * sym_power(w[j], -0.25) * t.entries(2 * i, 2 * j);
      CHECK(max_abs(c.block(i, j) - expected) <= 1e-13);
    }
  }
}

TEST_CASE("block weight") {
  const GridSpec g{1, 3, {0, 0}};
  const MatrixField u = generate_weight(1, g, 2, "log-bounded-random").field;
  const MatrixField v = generate_weight(2, g, 2, "log-bounded-random").field;

  const BlockWeight zero = build_block_weight(u, v, MatrixField::constant_symbol(g, Mat::Zero(2, 2)), kFrac);
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    CHECK(max_abs(zero.w[c].topLeftCorner(2, 2) - v[c]) <= 1e-12);
    CHECK(max_abs(zero.w[c].bottomRightCorner(2, 2) - u[c]) <= 1e-12);
    CHECK(max_abs(zero.w[c].topRightCorner(2, 2)) <= 1e-12);
  }

  const MatrixField one = MatrixField::scalar_weight(g, std::vector<double>(8, 1.0));
  const double b = 0.7;
  const BlockWeight bw = build_block_weight(one, one, MatrixField::scalar_symbol(g, std::vector<double>(8, b)), kFrac);
  Mat gram(2, 2);
  gram << 1, b, b, 1 + b * b;
  const double tr = 2 + b * b, disc = std::sqrt(tr * tr - 4);
  const double lp = (tr + disc) / 2, lm = (tr - disc) / 2;
  const Mat id = Mat::Identity(2, 2);
  const Mat expected = (std::pow(lp, 2.0) * (gram - lm * id) - std::pow(lm, 2.0) * (gram - lp * id)) / (lp - lm);
  CHECK(max_abs(bw.w[0] - expected) <= 1e-12);
  CHECK(bw.phi[0](0, 1) == doctest::Approx(b).epsilon(1e-15));
  CHECK(bw.phi[0](1, 0) == 0.0);

  const MatrixField sym = generate_symbol(3, g, 2, "random");
  const BlockWeight full = build_block_weight(u, v, sym, kFrac);
  CHECK(full.inverse_residual <= 1e-10);
  for (std::size_t c = 0; c < g.cell_count(); ++c) CHECK(sym_eig_range(full.w[c]).min > 0.0);
  const OperatorMatrix t = build_ialpha(g, kFrac, 2);
  const OperatorMatrix upper = upper_right(full.conjugated(t));
  const OperatorMatrix direct = conjugate(build_commutator(t, sym), v, u, kFrac);
  CHECK(max_abs(upper.entries - direct.entries) <= 1e-10);
}

TEST_CASE("truncation sets") {
  const GridSpec g{1, 1, {0, 0}};
  const MatrixField u = MatrixField::scalar_weight(g, {2.0, 10.0});
  const MatrixField v = MatrixField::scalar_weight(g, {1.0, 1.0});
  const CubeSet all = all_cells(g);
  CHECK(truncation_set(u, v, 100.0, all).size() == 2);
  CHECK(truncation_set(u, v, 0.5, all).empty());
  const CubeSet mid = truncation_set(u, v, 5.0, all);
  REQUIRE(mid.size() == 1);
  CHECK(mid.members[0] == 0);
  const double m = least_truncation_threshold(u, v, all);
  CHECK(2 * truncation_set(u, v, m, all).measure() > all.measure());
  CHECK(2 * truncation_set(u, v, 10.0, all).measure() <= all.measure());
}

TEST_CASE("truncate and compose") {
  const GridSpec g{1, 2, {0, 0}};
  const OperatorMatrix t = build_ialpha(g, kFrac);
  const CubeSet e{g, {0, 3}};
  const OperatorMatrix te = truncate(t, e);
  CHECK(te.entries(1, 1) == 0.0);
  CHECK(te.entries(0, 3) == t.entries(0, 3));
  CHECK(max_abs(compose(t, build_identity(g)).entries - t.entries) == 0.0);
}
