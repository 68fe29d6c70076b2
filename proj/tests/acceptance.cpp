// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include "mwlab/characteristics.hpp"
#include "mwlab/norms.hpp"
#include "mwlab/operators.hpp"
#include "mwlab/orlicz.hpp"
#include "mwlab/reducing.hpp"
#include "mwlab/verify.hpp"

#include <Eigen/SVD>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <string>

using namespace mwlab;

namespace {

constexpr double kMinutes5 = 300.0;

struct Outcome {
  bool pass = true;
  std::string detail;
};

void report(int id, const char* title, const Outcome& o) {
  std::printf("criterion %d %s: %s (%s)\n", id, title, o.pass ? "PASS" : "FAIL", o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

const std::vector<ExponentTriple>& triples() {
  static const std::vector<ExponentTriple> t{ExponentTriple::from_alpha_q(0.5, 4.0, 1),
                                             ExponentTriple::from_alpha_q(0.25, 2.4, 1)};
  return t;
}

Outcome exact_direction(const std::map<std::string, ExperimentReport>& reports, double seconds) {
  std::size_t hard = 0, asserted = 0;
  std::string worst;
  for (const auto& [name, rep] : reports) {
    hard += rep.hard_failures();
    asserted += rep.assertions();
    if (rep.hard_failures() > 0) worst += name + " ";
  }
  Outcome o;
  o.pass = hard == 0 && seconds < kMinutes5;
  o.detail = std::to_string(asserted) + " assertions, " + std::to_string(hard) + " hard failures" +
             (worst.empty() ? "" : " in " + worst) + fmt(", %.1f s of 300 s", seconds);
  return o;
}

Outcome sandwich() {
  Outcome o;
  std::size_t cases = 0;
  double worst_distortion_ratio = 0.0, worst_sandwich = 0.0, worst_exact_defect = 0.0, worst_mvee_defect = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    for (int n : {2, 3}) {
      const GridSpec g{1, 4, {0, 0}};
      const MatrixField w = generate_weight(seed, g, n, "log-bounded-random").field;
      for (const ExponentTriple& e : triples()) {
        for (const Cube& cube : enumerate_cubes(g, 2)) {
          const CubeSet s = cells_of(cube);
          const ReducingMatrix m = reduce(w, s, e.q, 1 / e.q);
          const ReducingMatrix mp = reduce(w, s, e.p_conj(), -1 / e.q);
          for (const ReducingMatrix* r : {&m, &mp}) {
            ++cases;
            const MatrixField powered = matrix_power(w, r == &m ? 1 / e.q : -1 / e.q);
            worst_distortion_ratio = std::max(worst_distortion_ratio, r->distortion / n);
            for (const Vec& dir : sample_directions(n, 512)) {
              const double rho = averaged_norm(powered, s, r->r, dir);
              const double ae = (r->A * dir).norm();
              worst_sandwich = std::max({worst_sandwich, rho / (r->distortion * ae), ae / (r->distortion * rho)});
            }
          }
          worst_mvee_defect =
              std::max(worst_mvee_defect, matrix_holder_defect(m, mp) / (m.distortion * mp.distortion));
          const ReducingMatrix m2 = reduce(w, s, 2.0, 0.5);
          const ReducingMatrix mp2 = reduce(w, s, 2.0, -0.5);
          worst_exact_defect = std::max(worst_exact_defect, matrix_holder_defect(m2, mp2));
        }
      }
    }
  }
  o.pass = worst_distortion_ratio <= 1.0 && worst_sandwich <= 1.0 + 1e-9 && worst_exact_defect <= 1.0 + 1e-6 &&
           worst_mvee_defect <= 1.0 + 1e-9;
  o.detail = std::to_string(cases) + " reducing matrices; max distortion/n " + fmt("%.4f", worst_distortion_ratio) +
             fmt(", max sandwich ratio %.12f, exact-r2 defect %.12f", worst_sandwich, worst_exact_defect) +
             fmt(", mvee defect/slack %.6f", worst_mvee_defect);
  return o;
}

Outcome calibration() {
  Outcome o;
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> normal;
  double worst_svd = 0.0;
  for (int i = 0; i < 50; ++i) {
    const int L = 1 + i % 4, n = 1 + i % 3;
    const GridSpec g{1, L, {0, 0}};
    const auto dim = static_cast<Eigen::Index>(g.cell_count()) * n;
    const OperatorMatrix k{g, n, OperatorKind::product, Mat::NullaryExpr(dim, dim, [&] { return normal(rng); }), 0.0};
    const double sv = Eigen::JacobiSVD<Mat>(k.entries).singularValues()(0);
    worst_svd = std::max(worst_svd, std::abs(mixed_opnorm(k, 2.0, 2.0).estimate - sv) / sv);
  }

  double worst_oracle = 0.0;
  const std::pair<int, int> shapes[] = {{1, 1}, {1, 2}, {1, 3}, {1, 4}, {2, 1}, {2, 2}, {3, 1}};
  for (int i = 0; i < 50; ++i) {
    const auto [L, n] = shapes[i % 7];
    const GridSpec g{1, L, {0, 0}};
    const ExponentTriple& e = triples()[static_cast<std::size_t>(i / 7) % 2];
    const auto seed = static_cast<std::uint64_t>(1000 + i);
    const MatrixField u = generate_weight(seed, g, n, "log-bounded-random").field;
    const MatrixField v = generate_weight(seed + 1, g, n, "log-bounded-random").field;
    OperatorMatrix t = build_ialpha(g, e, n);
    if (i % 2 == 1) t = build_commutator(t, generate_symbol(seed + 2, g, n, "random"));
    OpNormOptions opts;
    opts.seed = seed;
    const double est = opnorm(t, u, v, e, opts).estimate;
    const double oracle = opnorm_oracle(t, u, v, e);
    worst_oracle = std::max(worst_oracle, std::abs(est - oracle) / oracle);
  }

  const GridSpec g1{1, 1, {0, 0}};
  const MatrixField one = MatrixField::scalar_weight(g1, {1.0, 1.0});
  const double id = opnorm(build_identity(g1), one, one, triples()[0]).estimate;
  const double id_err = std::abs(id - std::sqrt(2.0));

  o.pass = worst_svd <= 1e-6 && worst_oracle <= 0.02 && id_err <= 1e-6;
  o.detail = fmt("svd rel err %.2e over 50, oracle rel err %.4f over 50, |Id| - sqrt2 = %.2e", worst_svd, worst_oracle,
                 id_err);
  return o;
}

Outcome kernel() {
  const double single = ialpha_kernel(GridSpec{1, 0, {0, 0}}, 0.5, 0, 0);
  const double err = std::abs(single - 8.0 / 3.0);
  double worst = 0.0;
  for (double alpha : {0.25, 0.5, 0.75}) {
    const double root = ialpha_kernel(GridSpec{1, 0, {0, 0}}, alpha, 0, 0);
    for (int L = 1; L <= 8; ++L) {
      const GridSpec g{1, L, {0, 0}};
      double sum = 0.0;
      for (std::size_t i = 0; i < g.cell_count(); ++i)
        for (std::size_t j = 0; j < g.cell_count(); ++j) sum += g.cell_measure() * ialpha_kernel(g, alpha, i, j);
      worst = std::max(worst, std::abs(sum - root));
    }
  }
  Outcome o;
  o.pass = err <= 1e-12 && worst <= 1e-9;
  o.detail = fmt("|kappa - 8/3| = %.2e, refinement drift %.2e", err, worst);
  return o;
}

Outcome soft_caps(const std::map<std::string, ExperimentReport>& reports) {
  Outcome o;
  std::size_t soft = 0;
  for (const auto& [name, rep] : reports) soft += rep.soft_failures();
  o.pass = soft == 0;
  auto constant = [&](const std::string& suite, const std::string& key) {
    const auto& c = reports.at(suite).constants;
    const auto it = c.find(key);
    return it == c.end() ? std::nan("") : it->second.max;
  };
  o.detail = std::to_string(soft) + " soft failures" +
             fmt("; jn max log-ratio %.3f, lower ratio max %.3f", constant("jn", "jn_max_log_ratio"),
                 constant("lower", "lower_ratio")) +
             fmt(", averaging ratio max %.3f, domination max %.3f", constant("averaging", "averaging_ratio"),
                 constant("orlicz", "domination_ratio"));
  return o;
}

Outcome degenerate() {
  double worst_bmo = 0.0, worst_op = 0.0, worst_apq = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (int n : {1, 2}) {
      const GridSpec g{1, 3, {0, 0}};
      const MatrixField u = generate_weight(seed, g, n, "log-bounded-random").field;
      const MatrixField v = generate_weight(seed + 10, g, n, "log-bounded-random").field;
      const MatrixField b = MatrixField::constant_symbol(g, generate_symbol(seed, GridSpec{1, 0, {0, 0}}, n, "random")[0]);
      for (const ExponentTriple& e : triples()) {
        for (int k = 1; k <= 6; ++k) worst_bmo = std::max(worst_bmo, jn_quantity(k, u, v, b, e).value);
        worst_bmo = std::max({worst_bmo, bmo_classic(u, v, b, e).value, tilde_bmo(v, u, b, e).value,
                              dual_tilde_bmo(u, v, b, e).value});
        const BumpConstants kc = orlicz_bump_constants(u, v, b, e, YoungFunction::power_log(e.q, 0.5),
                                                       YoungFunction::power_log(e.p_conj(), 0.5));
        worst_bmo = std::max({worst_bmo, kc.kappa1, kc.kappa2});
        if (n == 1) worst_bmo = std::max(worst_bmo, bloom_nu(ScalarBloomInstance::make(u, v, b, e), e).value);
        const OperatorMatrix c = build_commutator(build_ialpha(g, e, n), b);
        worst_op = std::max({worst_op, c.entries.cwiseAbs().maxCoeff(), opnorm(c, u, v, e).estimate});

        const MatrixField w = MatrixField::constant_weight(g, u[seed % g.cell_count()]);
        worst_apq = std::max(worst_apq, std::abs(apq_characteristic(w, e).value - 1.0));
      }
    }
  }
  Outcome o;
  o.pass = worst_bmo <= 1e-12 && worst_op <= 1e-12 && worst_apq <= 1e-12;
  o.detail = fmt("max BMO-type %.2e, max commutator %.2e, max |apq - 1| %.2e", worst_bmo, worst_op, worst_apq);
  return o;
}

}  // namespace

int main() {
  const BatchConfig cfg = load_batch_config("default");
  const auto start = std::chrono::steady_clock::now();
  std::map<std::string, ExperimentReport> reports;
  for (const std::string& name : suite_names()) reports.emplace(name, run_suite(name, cfg));
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  bool all = true;
  auto check = [&](int id, const char* title, const Outcome& o) {
    report(id, title, o);
    all = all && o.pass;
  };
  check(1, "exact-direction suite", exact_direction(reports, seconds));
  check(2, "reducing-matrix sandwich", sandwich());
  check(3, "operator-norm calibration", calibration());
  check(4, "kernel exactness", kernel());
  check(5, "equivalence batches", soft_caps(reports));
  check(6, "degenerate cases", degenerate());
  return all ? 0 : 1;
}
