#include "mwlab/orlicz.hpp"

#include "mwlab/error.hpp"
#include "mwlab/operators.hpp"
#include "mwlab/parallel.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mwlab {

namespace {

// Smallest x >= 0 with f(x) = target for increasing f with f(0) <= target.
template <class F>
double solve_increasing(F f, double target, const char* what) {
  if (target <= 0.0) return 0.0;
  double lo = 0.0, hi = 1.0;
  int guard = 0;
  while (f(hi) < target) {
    lo = hi;
    hi *= 2.0;
    if (++guard > 2000 || !std::isfinite(hi)) throw ConvergenceError(std::string(what) + ": no bracket");
  }
  std::uintmax_t iterations = 200;
  const auto r = boost::math::tools::toms748_solve([&](double x) { return f(x) - target; }, lo, hi,
                                                   boost::math::tools::eps_tolerance<double>(50), iterations);
  return 0.5 * (r.first + r.second);
}

double power_log_value(double r, double delta, double t) {
  if (t <= 0.0) return 0.0;
  return std::pow(t, r) * std::pow(std::log(M_E + t), delta);
}

double power_log_derivative(double r, double delta, double t) {
  if (t <= 0.0) return r > 1.0 ? 0.0 : std::pow(std::log(M_E), delta);
  const double l = std::log(M_E + t);
  return r * std::pow(t, r - 1.0) * std::pow(l, delta) + delta * std::pow(t, r) * std::pow(l, delta - 1.0) / (M_E + t);
}

std::vector<double> cell_norms(const VectorField& f) {
  std::vector<double> out;
  out.reserve(f.values.size());
  for (const Vec& v : f.values) out.push_back(v.norm());
  return out;
}

}  // namespace

YoungFunction YoungFunction::power(double r, double coefficient) {
  if (!(r >= 1.0) || !std::isfinite(r)) throw ParameterError("young function: power exponent must lie in [1, inf)");
  if (!(coefficient > 0.0)) throw ParameterError("young function: coefficient must be positive");
  return {Family::power, r, 0.0, coefficient};
}

YoungFunction YoungFunction::power_log(double r, double delta) {
  if (!(r > 1.0) || !std::isfinite(r)) throw ParameterError("young function: power-log exponent must exceed 1");
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw ParameterError("young function: log exponent must be >= 0");
  return {Family::power_log, r, delta, 1.0};
}

YoungFunction YoungFunction::parse(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw ParameterError("young function '" + spec + "': expected family:params");
  const std::string family = spec.substr(0, colon);
  std::vector<double> params;
  std::stringstream ss(spec.substr(colon + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      params.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ParameterError("young function '" + spec + "': bad number '" + item + "'");
    }
  }
  if (family == "power" && params.size() == 1) return power(params[0]);
  if (family == "powerlog" && params.size() == 2) return power_log(params[0], params[1]);
  throw ParameterError("young function '" + spec + "': expected power:r or powerlog:r,delta");
}

double YoungFunction::operator()(double t) const {
  if (t <= 0.0) return 0.0;
  switch (family_) {
    case Family::power:
      return c_ * std::pow(t, r_);
    case Family::power_log:
      return power_log_value(r_, delta_, t);
    case Family::power_log_conjugate: {
      // sup_s (s t - Phi(s)) is attained where Phi'(s) = t
      const double s = solve_increasing([&](double x) { return power_log_derivative(r_, delta_, x); }, t,
                                        "complementary function");
      return std::max(0.0, s * t - power_log_value(r_, delta_, s));
    }
  }
  return 0.0;
}

double YoungFunction::derivative(double t) const {
  switch (family_) {
    case Family::power:
      return t <= 0.0 ? (r_ == 1.0 ? c_ : 0.0) : c_ * r_ * std::pow(t, r_ - 1.0);
    case Family::power_log:
      return power_log_derivative(r_, delta_, t);
    case Family::power_log_conjugate:
      if (t <= 0.0) return 0.0;
      return solve_increasing([&](double x) { return power_log_derivative(r_, delta_, x); }, t,
                              "complementary derivative");
  }
  return 0.0;
}

double YoungFunction::inverse(double y) const {
  if (y <= 0.0) return 0.0;
  if (family_ == Family::power) return std::pow(y / c_, 1.0 / r_);
  return solve_increasing([this](double x) { return (*this)(x); }, y, "young function inverse");
}

YoungFunction YoungFunction::complementary() const {
  switch (family_) {
    case Family::power: {
      if (r_ == 1.0) throw ParameterError("young function: t has no finite complementary function");
      const double rc = r_ / (r_ - 1.0);
      return power(rc, (r_ - 1.0) / r_ * std::pow(c_ * r_, -1.0 / (r_ - 1.0)));
    }
    case Family::power_log:
      return {Family::power_log_conjugate, r_, delta_, 1.0};
    case Family::power_log_conjugate:
      return power_log(r_, delta_);
  }
  return *this;
}

std::string YoungFunction::describe() const {
  std::ostringstream os;
  os.precision(6);
  switch (family_) {
    case Family::power:
      if (c_ != 1.0) os << c_ << "*";
      os << "t^" << r_;
      break;
    case Family::power_log:
      os << "t^" << r_ << " log(e+t)^" << delta_;
      break;
    case Family::power_log_conjugate:
      os << "complement of t^" << r_ << " log(e+t)^" << delta_;
      break;
  }
  return os.str();
}

double luxemburg(const std::vector<double>& values, const YoungFunction& phi) {
  if (values.empty()) throw ParameterError("luxemburg: empty set");
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  if (m == 0.0) return 0.0;
  if (!std::isfinite(m)) throw ParameterError("luxemburg: non-finite value");
  const double count = static_cast<double>(values.size());
  auto mean_phi = [&](double lambda) {
    double acc = 0.0;
    for (double v : values) acc += phi(std::abs(v) / m / lambda);
    return acc / count;
  };
  // values normalized by max|f| keep Phi within [0, count]
  double lo = 1.0 / phi.inverse(count);
  double hi = 1.0 / phi.inverse(1.0);
  while (mean_phi(hi) > 1.0) hi *= 2.0;
  while (lo > 0.0 && mean_phi(lo) <= 1.0) lo *= 0.5;
  for (int it = 0; it < 200 && hi / lo - 1.0 > 1e-14; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (mean_phi(mid) <= 1.0)
      hi = mid;
    else
      lo = mid;
  }
  return m * hi;
}

double luxemburg_star(const std::vector<double>& values, const YoungFunction& phi) {
  const double lambda = luxemburg(values, phi);
  if (lambda == 0.0) return 0.0;
  const double count = static_cast<double>(values.size());
  auto h = [&](double s) {
    double acc = 0.0;
    for (double v : values) acc += phi(std::abs(v) / s);
    return s + s * acc / count;
  };
  // convex in s with minimizer in (0, 2 lambda]; search in log s
  auto hl = [&](double u) { return h(std::exp(u)); };
  const auto best = boost::math::tools::brent_find_minima(hl, std::log(lambda * 1e-6), std::log(2.0 * lambda), 50);
  return std::min({best.second, h(lambda), h(2.0 * lambda)});
}

std::vector<double> restrict_values(const std::vector<double>& field, const CubeSet& s) {
  std::vector<double> out;
  out.reserve(s.size());
  for (std::size_t c : s.members) out.push_back(field.at(c));
  return out;
}

std::pair<double, double> bump_pair(const Mat& kernel, const YoungFunction& c, const YoungFunction& d) {
  const auto m = kernel.rows();
  std::vector<double> inner1(static_cast<std::size_t>(m)), inner2(static_cast<std::size_t>(m));
  std::vector<double> line(static_cast<std::size_t>(m));
  for (Eigen::Index y = 0; y < m; ++y) {
    for (Eigen::Index x = 0; x < m; ++x) line[static_cast<std::size_t>(x)] = kernel(x, y);
    inner1[static_cast<std::size_t>(y)] = luxemburg(line, c);
  }
  for (Eigen::Index x = 0; x < m; ++x) {
    for (Eigen::Index y = 0; y < m; ++y) line[static_cast<std::size_t>(y)] = kernel(x, y);
    inner2[static_cast<std::size_t>(x)] = luxemburg(line, d);
  }
  return {luxemburg(inner1, d), luxemburg(inner2, c)};
}

BumpConstants orlicz_bump_constants(const MatrixField& u, const MatrixField& v, const MatrixField& b,
                                    const ExponentTriple& e, const YoungFunction& c, const YoungFunction& d,
                                    const Scope& scope) {
  e.validate();
  if (u.kind() != FieldKind::weight || v.kind() != FieldKind::weight || b.kind() != FieldKind::symbol)
    throw ParameterError("bump constants: expected weights U, V and a symbol B");
  const MatrixField vq = matrix_power(v, 1.0 / e.q);
  const MatrixField umq = matrix_power(u, -1.0 / e.q);
  BumpConstants out;
  if (scope) {
    const auto [k1, k2] = bump_pair(pair_norms(*scope, vq, umq, &b), c, d);
    out.kappa1 = k1;
    out.kappa2 = k2;
    return out;
  }
  const CubeFamily family = standard_family(u.grid());
  std::vector<std::pair<double, double>> vals(family.sets.size());
  parallel_for(vals.size(), [&](std::size_t i) { vals[i] = bump_pair(pair_norms(family.sets[i], vq, umq, &b), c, d); });
  std::size_t b1 = 0, b2 = 0;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (vals[i].first > vals[b1].first) b1 = i;
    if (vals[i].second > vals[b2].second) b2 = i;
  }
  out.kappa1 = vals[b1].first;
  out.kappa2 = vals[b2].second;
  out.argmax1 = family.cubes[b1];
  out.argmax2 = family.cubes[b2];
  return out;
}

std::vector<double> orlicz_maximal(const std::vector<double>& f, const YoungFunction& phi, double power,
                                   const GridSpec& grid) {
  if (f.size() != grid.cell_count()) throw ParameterError("orlicz_maximal: field size differs from the grid");
  if (!(power >= 0.0)) throw ParameterError("orlicz_maximal: power must be >= 0");
  const CubeFamily family = standard_family(grid);
  std::vector<double> out(f.size(), 0.0);
  for (std::size_t i = 0; i < family.cubes.size(); ++i) {
    const double value =
        std::pow(family.cubes[i].measure(), power / grid.d) * luxemburg(restrict_values(f, family.sets[i]), phi);
    for (std::size_t c : family.sets[i].members) out[c] = std::max(out[c], value);
  }
  return out;
}

DominationResult domination_sum(const MatrixField& u, const MatrixField& v, const MatrixField& b,
                                const ExponentTriple& e, const VectorField& f, const VectorField& g,
                                const std::optional<std::pair<YoungFunction, YoungFunction>>& holder) {
  e.validate();
  const GridSpec& grid = u.grid();
  if (!f.grid.same_lattice(grid) || !g.grid.same_lattice(grid) || f.n != u.n() || g.n != u.n())
    throw ParameterError("domination_sum: fields differ in grid or size");
  const int n = u.n();
  const std::size_t cells = grid.cell_count();
  const double mu = grid.cell_measure();

  // left side: |<V^{1/q} [M_B, I_alpha] U^{-1/q} f, g>|
  const OperatorMatrix k = conjugate(build_commutator(build_ialpha(grid, e, n), b), v, u, e);
  const Vec kf = k.entries * f.flatten();
  DominationResult out;
  out.lhs = std::abs(mu * g.flatten().dot(kf));

  const MatrixField vq = matrix_power(v, 1.0 / e.q);
  const MatrixField umq = matrix_power(u, -1.0 / e.q);
  Mat pairing(static_cast<Eigen::Index>(cells), static_cast<Eigen::Index>(cells));
  Mat norms(static_cast<Eigen::Index>(cells), static_cast<Eigen::Index>(cells));
  for (std::size_t i = 0; i < cells; ++i)
    for (std::size_t j = 0; j < cells; ++j) {
      const Mat mij = vq[i] * (b[i] - b[j]) * umq[j];
      pairing(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::abs(g.values[i].dot(mij * f.values[j]));
      norms(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = spectral_norm(mij);
    }
  const std::vector<double> fn = cell_norms(f);
  const std::vector<double> gn = cell_norms(g);
  std::optional<YoungFunction> cbar, dbar;
  if (holder) {
    cbar = holder->first.complementary();
    dbar = holder->second.complementary();
  }

  for (const GridSpec& shifted : shifted_grids(grid.d, grid.L)) {
    const std::vector<Cube> cubes = enumerate_cubes(shifted);
    std::vector<DominationCube> rows(cubes.size());
    parallel_for(cubes.size(), [&](std::size_t ci) {
      const Cube& q = cubes[ci];
      const CubeSet s = cells_of(q);
      double acc = 0.0;
      for (std::size_t i : s.members)
        for (std::size_t j : s.members)
          acc += pairing(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      DominationCube row{q, std::pow(q.measure(), e.alpha / e.d - 1.0) * mu * mu * acc, 0.0};
      if (holder) {
        const auto m = static_cast<Eigen::Index>(s.size());
        Mat sub(m, m);
        for (Eigen::Index a = 0; a < m; ++a)
          for (Eigen::Index c = 0; c < m; ++c)
            sub(a, c) = norms(static_cast<Eigen::Index>(s.members[static_cast<std::size_t>(a)]),
                              static_cast<Eigen::Index>(s.members[static_cast<std::size_t>(c)]));
        const auto [k1, k2] = bump_pair(sub, holder->first, holder->second);
        row.holder_bound = 4.0 * std::pow(q.measure(), 1.0 + e.alpha / e.d) *
                           luxemburg(restrict_values(fn, s), *dbar) * luxemburg(restrict_values(gn, s), *cbar) *
                           std::min(k1, k2);
      }
      rows[ci] = row;
    });
    for (const DominationCube& row : rows) out.rhs += row.summand;
    out.cubes.insert(out.cubes.end(), rows.begin(), rows.end());
  }
  out.ratio = out.rhs > 0.0 ? out.lhs / out.rhs : (out.lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  return out;
}

double default_sparse_parameter(int d) { return std::pow(2.0, d + 1) + 1.0; }

SparseFamily build_sparse_family(const VectorField& f, const YoungFunction& dbar, double a, const GridSpec& grid) {
  grid.validate();
  if (!f.grid.same_lattice(grid)) throw ParameterError("sparse family: field lives on another grid");
  if (!(a > std::pow(2.0, grid.d + 1))) throw ParameterError("sparse family: a must exceed 2^{d+1}");
  const std::vector<double> fn = cell_norms(f);
  const CubeFamily family = standard_family(grid);
  std::vector<double> norm(family.cubes.size());
  parallel_for(norm.size(), [&](std::size_t i) { norm[i] = luxemburg(restrict_values(fn, family.sets[i]), dbar); });

  SparseFamily out;
  out.a = a;
  out.tau0 = norm[0] / 2.0;
  if (norm[0] == 0.0) return out;

  std::vector<std::vector<std::size_t>> chosen;
  for (int k = 0;; ++k) {
    const double tau = out.tau0 * std::pow(a, k);
    std::vector<char> covered(grid.cell_count(), 0);
    std::vector<std::size_t> level;
    // cubes are ordered coarse to fine, so the first hit on a cell is maximal
    for (std::size_t i = 0; i < family.cubes.size(); ++i) {
      if (!(norm[i] > tau) || covered[family.sets[i].members.front()]) continue;
      level.push_back(i);
      for (std::size_t c : family.sets[i].members) covered[c] = 1;
    }
    if (level.empty()) break;
    std::size_t bucket = 0;
    for (double x : norm)
      if (x > tau && x <= tau * a) ++bucket;
    out.bucket_sizes.push_back(bucket);
    chosen.push_back(std::move(level));
  }

  std::vector<int> owner(grid.cell_count(), 0);
  for (std::size_t k = 0; k < chosen.size(); ++k) {
    std::vector<char> next(grid.cell_count(), 0);
    if (k + 1 < chosen.size())
      for (std::size_t i : chosen[k + 1])
        for (std::size_t c : family.sets[i].members) next[c] = 1;
    std::vector<Cube> cubes;
    std::vector<CubeSet> sets;
    for (std::size_t i : chosen[k]) {
      CubeSet e{grid, {}};
      for (std::size_t c : family.sets[i].members)
        if (!next[c]) e.members.push_back(c);
      for (std::size_t c : e.members) ++owner[c];
      out.min_fraction = std::min(out.min_fraction, static_cast<double>(e.size()) / family.sets[i].size());
      out.total_measure += e.measure();
      cubes.push_back(family.cubes[i]);
      sets.push_back(std::move(e));
    }
    out.stopping.push_back(std::move(cubes));
    out.e_sets.push_back(std::move(sets));
  }
  out.disjoint = std::all_of(owner.begin(), owner.end(), [](int c) { return c <= 1; });
  return out;
}

ProbeResult bq_integral_probe(const YoungFunction& phi, const ProbeSchedule& schedule) {
  if (schedule.blocks < 8) throw ParameterError("bq probe: at least 8 blocks are required");
  ProbeResult out;
  auto integrand = [&](double u) {
    const double t = std::exp(u);
    return std::pow(phi(t), schedule.a) * std::exp(-schedule.b * u);
  };
  for (int j = 0; j < schedule.blocks; ++j) {
    const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        integrand, j * M_LN2, (j + 1) * M_LN2, 10, 1e-12);
    out.block_values.push_back(v);
    out.partial += v;
  }
  // fit log block_j = c0 - rate * j - expo * log(j + 1) on the second half
  const int start = schedule.blocks / 2;
  const int count = schedule.blocks - start;
  Mat a(count, 3);
  Vec y(count);
  for (int i = 0; i < count; ++i) {
    const int j = start + i;
    a(i, 0) = 1.0;
    a(i, 1) = -static_cast<double>(j);
    a(i, 2) = -std::log(j + 1.0);
    y(i) = std::log(std::max(out.block_values[static_cast<std::size_t>(j)], std::numeric_limits<double>::min()));
  }
  const Vec coef = a.colPivHouseholderQr().solve(y);
  out.decay_rate = coef(1);
  out.log_exponent = coef(2);
  out.converging = out.decay_rate > 1e-2 || (out.decay_rate > -1e-2 && out.log_exponent > 1.05);
  if (!out.converging) {
    out.extrapolated = std::numeric_limits<double>::infinity();
    return out;
  }
  double tail = 0.0;
  for (int j = schedule.blocks; j < schedule.blocks + 1000000; ++j) {
    const double term = std::exp(coef(0) - coef(1) * j - coef(2) * std::log(j + 1.0));
    tail += term;
    if (term < 1e-16 * (out.partial + tail)) break;
  }
  out.extrapolated = out.partial + tail;
  return out;
}

}  // namespace mwlab
