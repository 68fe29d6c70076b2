#include "mwlab/error.hpp"
#include "mwlab/orlicz.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace mwlab;

namespace {

const ExponentTriple kFrac = ExponentTriple::from_alpha_q(0.5, 4.0, 1);

std::vector<double> random_values(std::uint64_t seed, int count) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> dist(1.0);
  std::vector<double> out(static_cast<std::size_t>(count));
  for (double& x : out) x = dist(rng);
  return out;
}

double power_mean(const std::vector<double>& f, double r) {
  double s = 0.0;
  for (double x : f) s += std::pow(std::abs(x), r);
  return std::pow(s / f.size(), 1 / r);
}

}  // namespace

TEST_CASE("Young functions") {
  const YoungFunction sq = YoungFunction::parse("power:2");
  CHECK(sq(3.0) == 9.0);
  CHECK(sq.inverse(9.0) == doctest::Approx(3.0).epsilon(1e-12));
  const YoungFunction pl = YoungFunction::parse("powerlog:1.5,0.5");
  CHECK(pl(0.0) == 0.0);
  for (double y : {0.01, 1.0, 37.0}) CHECK(pl(pl.inverse(y)) == doctest::Approx(y).epsilon(1e-10));
  for (double t : {0.5, 1.0, 4.0}) CHECK(pl.derivative(t) == doctest::Approx((pl(t + 1e-6) - pl(t - 1e-6)) / 2e-6).epsilon(1e-5));
  CHECK_THROWS_AS(YoungFunction::parse("power:0.5"), ParameterError);
  CHECK_THROWS_AS(YoungFunction::parse("cubic:3"), ParameterError);
}

TEST_CASE("complementary functions satisfy Young's inequality") {
  for (const char* spec : {"power:3", "powerlog:1.5,0.5", "powerlog:4,1"}) {
    const YoungFunction phi = YoungFunction::parse(spec);
    const YoungFunction bar = phi.complementary();
    for (double s : {0.1, 0.5, 1.0, 2.0, 5.0}) {
      for (double t : {0.1, 0.7, 1.0, 3.0, 10.0}) CHECK(s * t <= phi(s) + bar(t) + 1e-9 * (phi(s) + bar(t)));
      // equality at t = phi'(s)
      const double t = phi.derivative(s);
      CHECK(phi(s) + bar(t) == doctest::Approx(s * t).epsilon(1e-6));
    }
  }
  const YoungFunction cube = YoungFunction::power(3.0);
  CHECK(cube.complementary()(2.0) == doctest::Approx(2.0 * std::pow(2.0 / 3.0, 1.5)).epsilon(1e-12));
}

TEST_CASE("Luxemburg norms") {
  CHECK(luxemburg({3, 3, 3}, YoungFunction::power(2)) == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(luxemburg({0, 0}, YoungFunction::power(2)) == 0.0);
  const auto f = random_values(1, 16);
  for (double r : {1.2, 2.0, 4.0}) CHECK(luxemburg(f, YoungFunction::power(r)) == doctest::Approx(power_mean(f, r)).epsilon(1e-9));

  // monotone in |f|
  auto g = f;
  for (double& x : g) x *= 1.1;
  const YoungFunction pl = YoungFunction::power_log(2.0, 0.5);
  CHECK(luxemburg(g, pl) >= luxemburg(f, pl));
  CHECK(luxemburg(g, pl) == doctest::Approx(1.1 * luxemburg(f, pl)).epsilon(1e-9));
}

TEST_CASE("Luxemburg star is two-sided") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto f = random_values(seed, 8 + static_cast<int>(seed));
    for (const char* spec : {"power:2", "powerlog:1.333,0.5", "powerlog:4,0.5", "power:1.2"}) {
      const YoungFunction phi = YoungFunction::parse(spec);
      const double norm = luxemburg(f, phi);
      const double star = luxemburg_star(f, phi);
      CHECK(norm <= star * (1 + 1e-9));
      CHECK(star <= 2 * norm * (1 + 1e-9));
      // grid search of the infimum
      double grid = std::numeric_limits<double>::infinity();
      for (int i = 0; i <= 4000; ++i) {
        const double s = norm * std::pow(10.0, -2.0 + 4.0 * i / 4000);
        double acc = 0.0;
        for (double x : f) acc += phi(x / s);
        grid = std::min(grid, s + s * acc / f.size());
      }
      CHECK(star <= grid * (1 + 1e-9));
      CHECK(star >= grid * (1 - 1e-3));
    }
  }
}

TEST_CASE("bump constants") {
  const GridSpec g{1, 3, {0, 0}};
  const MatrixField u = generate_weight(1, g, 2, "log-bounded-random").field;
  const MatrixField v = generate_weight(2, g, 2, "log-bounded-random").field;
  const MatrixField b = generate_symbol(3, g, 2, "random");
  const YoungFunction c = YoungFunction::power(kFrac.q), d = YoungFunction::power(kFrac.p_conj());

  const BumpConstants k = orlicz_bump_constants(u, v, b, kFrac, c, d);
  CHECK(k.kappa1 == doctest::Approx(jn_quantity(5, u, v, b, kFrac).value).epsilon(1e-8));
  CHECK(k.kappa2 == doctest::Approx(jn_quantity(4, u, v, b, kFrac).value).epsilon(1e-8));

  const BumpConstants zero = orlicz_bump_constants(u, v, MatrixField::constant_symbol(g, Mat::Identity(2, 2)), kFrac,
                                                   YoungFunction::power_log(4, 0.5), YoungFunction::power_log(4, 0.5));
  CHECK(zero.kappa1 == 0.0);
  CHECK(zero.kappa2 == 0.0);

  std::vector<Mat> cells;
  for (const Mat& m : b.cells()) cells.push_back(3 * m);
  const MatrixField b3 = MatrixField::symbol(g, 2, cells);
  const YoungFunction pc = YoungFunction::power_log(4, 0.5), pd = YoungFunction::power_log(4, 0.5);
  const BumpConstants k1 = orlicz_bump_constants(u, v, b, kFrac, pc, pd);
  const BumpConstants k3 = orlicz_bump_constants(u, v, b3, kFrac, pc, pd);
  CHECK(k3.kappa1 == doctest::Approx(3 * k1.kappa1).epsilon(1e-8));
  CHECK(k3.kappa2 == doctest::Approx(3 * k1.kappa2).epsilon(1e-8));
}

TEST_CASE("Orlicz maximal function") {
  const GridSpec g{1, 3, {0, 0}};
  const YoungFunction id = YoungFunction::power(1.0);
  for (double m : orlicz_maximal(std::vector<double>(8, 2.5), id, 0.0, g)) CHECK(m == doctest::Approx(2.5).epsilon(1e-10));

  std::vector<double> spike(8, 0.0);
  spike[0] = 1.0;
  const auto mf = orlicz_maximal(spike, id, 0.0, g);
  CHECK(mf[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(mf[1] == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(mf[2] == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(mf[7] == doctest::Approx(0.125).epsilon(1e-10));

  const auto f = random_values(4, 8);
  const YoungFunction bar = YoungFunction::power_log(4.0 / 3.0, 0.5);
  const double top = luxemburg(f, bar);
  for (double m : orlicz_maximal(f, bar, 0.5, g)) CHECK(m >= top * (1 - 1e-10));
}

TEST_CASE("domination sum vanishes on trivial inputs") {
  const GridSpec g{1, 3, {0, 0}};
  const MatrixField u = generate_weight(1, g, 1, "log-bounded-random").field;
  const MatrixField v = generate_weight(2, g, 1, "log-bounded-random").field;
  const VectorField f = generate_vector(3, g, 1), h = generate_vector(4, g, 1);
  const DominationResult flat = domination_sum(u, v, MatrixField::scalar_symbol(g, std::vector<double>(8, 1.5)), kFrac, f, h);
  CHECK(flat.lhs == 0.0);
  CHECK(flat.rhs == 0.0);
  CHECK(flat.ratio == 0.0);
  const DominationResult none = domination_sum(u, v, generate_symbol(5, g, 1, "random"), kFrac, VectorField::zeros(g, 1), h);
  CHECK(none.lhs == 0.0);
  CHECK(none.rhs == 0.0);
}

TEST_CASE("domination and per-cube Hoelder") {
  const GridSpec g{1, 4, {0, 0}};
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const MatrixField u = generate_weight(seed, g, 1, "log-bounded-random").field;
    const MatrixField v = generate_weight(seed + 50, g, 1, "log-bounded-random").field;
    const MatrixField b = generate_symbol(seed, g, 1, "random");
    const VectorField f = generate_vector(seed, g, 1), h = generate_vector(seed + 7, g, 1);
    const auto holder = std::make_pair(YoungFunction::power_log(kFrac.q, 0.5), YoungFunction::power_log(kFrac.p_conj(), 0.5));
    const DominationResult r = domination_sum(u, v, b, kFrac, f, h, holder);
    CHECK(r.rhs > 0.0);
    CHECK(std::isfinite(r.ratio));
    CHECK(r.lhs <= 100 * r.rhs);
    for (const DominationCube& c : r.cubes) CHECK(c.summand <= c.holder_bound * (1 + 1e-9));
  }
}

TEST_CASE("sparse family") {
  const GridSpec g{1, 4, {0, 0}};
  const YoungFunction dbar = YoungFunction::power_log(4.0 / 3.0, 0.5);
  const double a = default_sparse_parameter(1);
  CHECK(a > 4.0);
  CHECK_THROWS_AS(build_sparse_family(generate_vector(1, g, 1), dbar, 4.0, g), ParameterError);

  const SparseFamily flat = build_sparse_family(VectorField::constant(g, Vec::Constant(1, 2.0)), dbar, a, g);
  std::size_t count = 0;
  for (std::size_t k = 0; k < flat.stopping.size(); ++k) {
    for (std::size_t i = 0; i < flat.stopping[k].size(); ++i) {
      ++count;
      CHECK(flat.stopping[k][i].level == 0);
      CHECK(flat.e_sets[k][i].size() == g.cell_count());
    }
  }
  CHECK(count == 1);

  VectorField spike = VectorField::zeros(g, 1);
  spike.values[5](0) = 1.0;
  const SparseFamily tower = build_sparse_family(spike, dbar, a, g);
  CHECK(tower.min_fraction >= 0.5);
  CHECK(tower.disjoint);
  CHECK(tower.total_measure <= 1.0 + 1e-15);
  for (const auto& level : tower.stopping)
    for (const Cube& q : level) CHECK(cells_of(q).contains(5));

  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const SparseFamily s = build_sparse_family(generate_vector(seed, g, 2), dbar, a, g);
    CHECK(s.min_fraction >= 0.5);
    CHECK(s.disjoint);
    std::vector<int> hits(g.cell_count(), 0);
    for (const auto& sets : s.e_sets)
      for (const CubeSet& e : sets)
        for (std::size_t c : e.members) ++hits[c];
    for (int h : hits) CHECK(h <= 1);
  }
}

TEST_CASE("integral probe verdicts") {
  ProbeSchedule conv{1.0, 3.0, 40};
  CHECK(bq_integral_probe(YoungFunction::power(2.0), conv).converging);
  ProbeSchedule edge{1.0, 2.0, 40};
  const ProbeResult div = bq_integral_probe(YoungFunction::power(2.0), edge);
  CHECK_FALSE(div.converging);
  CHECK(std::isinf(div.extrapolated));
  CHECK_FALSE(bq_integral_probe(YoungFunction::power_log(2.0, 0.0), edge).converging);
  const ProbeResult c = bq_integral_probe(YoungFunction::power(2.0), conv);
  CHECK(c.extrapolated == doctest::Approx(1.0).epsilon(1e-6));
}
