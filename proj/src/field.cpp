#include "mwlab/field.hpp"

#include "mwlab/error.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <random>
#include <sstream>

namespace mwlab {

namespace {

constexpr double kTripleTol = 1e-12;

Mat random_orthogonal(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat g(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) g(i, j) = gauss(rng);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ() * Mat::Identity(n, n);
  const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  return q;
}

Mat random_symmetric(std::mt19937_64& rng, int n, double amplitude) {
  std::uniform_real_distribution<double> unif(-amplitude, amplitude);
  Mat s(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= j; ++i) s(i, j) = s(j, i) = unif(rng);
  return s;
}

Mat rotation(int n, double theta) {
  Mat r = Mat::Identity(n, n);
  for (int k = 0; k + 1 < n; ++k) {
    const double t = theta / (k + 1);
    Mat g = Mat::Identity(n, n);
    g(k, k) = std::cos(t);
    g(k, k + 1) = -std::sin(t);
    g(k + 1, k) = std::sin(t);
    g(k + 1, k + 1) = std::cos(t);
    r = g * r;
  }
  return r;
}

// Average of f over finest cell `idx` with 16-point Gauss-Legendre per axis.
template <typename F>
Mat cell_average(const GridSpec& grid, std::size_t idx, int n, F&& f) {
  using Quad = boost::math::quadrature::gauss<double, 16>;
  const auto lo = grid.cell_lower(idx);
  const double h = std::ldexp(1.0, -grid.L);
  Mat acc = Mat::Zero(n, n);
  const auto& abs = Quad::abscissa();
  const auto& wts = Quad::weights();
  // symmetric rule: nodes +-abs[k] (abs[0] == 0 only for odd orders)
  std::vector<std::pair<double, double>> nodes;
  for (std::size_t k = 0; k < abs.size(); ++k) {
    if (abs[k] == 0.0) {
      nodes.emplace_back(0.0, wts[k]);
    } else {
      nodes.emplace_back(abs[k], wts[k]);
      nodes.emplace_back(-abs[k], wts[k]);
    }
  }
  for (const auto& [u, wu] : nodes) {
    const double x0 = lo[0] + 0.5 * h * (u + 1.0);
    if (grid.d == 1) {
      acc += 0.5 * wu * f(std::array<double, 2>{x0, 0.0});
      continue;
    }
    for (const auto& [v, wv] : nodes) {
      const double x1 = lo[1] + 0.5 * h * (v + 1.0);
      acc += 0.25 * wu * wv * f(std::array<double, 2>{x0, x1});
    }
  }
  return acc;
}

double distance(const std::array<double, 2>& x, const std::array<double, 2>& x0, int d) {
  const double dx = x[0] - x0[0];
  const double dy = d == 2 ? x[1] - x0[1] : 0.0;
  return std::hypot(dx, dy);
}

Mat floored(const Mat& m, int cell) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrized(m));
  Vec lam = es.eigenvalues();
  if (!lam.allFinite()) throw DegeneracyError("generator produced a non-finite value at cell " + std::to_string(cell));
  if (lam.minCoeff() >= kGeneratorEigenFloor) return symmetrized(m);
  lam = lam.cwiseMax(kGeneratorEigenFloor);
  return symmetrized(es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose());
}

}  // namespace

ExponentTriple ExponentTriple::make(double p, double q, double alpha, int d) {
  ExponentTriple e{p, q, alpha, d};
  e.validate();
  return e;
}

ExponentTriple ExponentTriple::from_alpha_q(double alpha, double q, int d) {
  const double inv_p = alpha / d + 1.0 / q;
  return make(1.0 / inv_p, q, alpha, d);
}

void ExponentTriple::validate() const {
  if (d < 1 || d > 2) throw ParameterError("exponents: d must be 1 or 2");
  if (!(p > 1.0) || !(q >= p) || !std::isfinite(q))
    throw ParameterError("exponents: need 1 < p <= q < inf (" + describe() + ")");
  if (!(alpha >= 0.0) || !(alpha < d)) throw ParameterError("exponents: need 0 <= alpha < d (" + describe() + ")");
  if (std::abs(alpha / d + 1.0 / q - 1.0 / p) > kTripleTol)
    throw ParameterError("exponents: alpha/d + 1/q != 1/p (" + describe() + ")");
}

ExponentTriple ExponentTriple::dual() const {
  ExponentTriple e{q_conj(), p_conj(), alpha, d};
  return e;
}

std::string ExponentTriple::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << "p=" << p << " q=" << q << " alpha=" << alpha << " d=" << d;
  return os.str();
}

std::string to_string(FieldKind k) { return k == FieldKind::weight ? "weight" : "symbol"; }

FieldKind field_kind_from_string(const std::string& s) {
  if (s == "weight") return FieldKind::weight;
  if (s == "symbol") return FieldKind::symbol;
  throw FormatError("unknown field kind '" + s + "'");
}

MatrixField::MatrixField(GridSpec grid, int n, FieldKind kind, std::vector<Mat> cells)
    : grid_(grid), n_(n), kind_(kind), cells_(std::move(cells)) {
  grid_.validate();
  if (n_ < 1) throw ParameterError("field: matrix size must be positive");
  if (cells_.size() != grid_.cell_count())
    throw ParameterError("field: expected " + std::to_string(grid_.cell_count()) + " cells, got " +
                         std::to_string(cells_.size()));
  lambda_min_ = std::numeric_limits<double>::infinity();
  lambda_max_ = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    const Mat& m = cells_[i];
    if (m.rows() != n_ || m.cols() != n_) throw ParameterError("field: cell " + std::to_string(i) + " has wrong shape");
    if (!m.allFinite()) throw ParameterError("field: cell " + std::to_string(i) + " is not finite");
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff()))
      throw ParameterError("field: cell " + std::to_string(i) + " is not symmetric");
    cells_[i] = symmetrized(m);
    const EigRange r = sym_eig_range(cells_[i]);
    if (kind_ == FieldKind::weight && !(r.min > 0.0))
      throw DegeneracyError("field: weight cell " + std::to_string(i) + " is not positive definite");
    lambda_min_ = std::min(lambda_min_, r.min);
    lambda_max_ = std::max(lambda_max_, r.max);
  }
}

MatrixField MatrixField::weight(GridSpec grid, int n, std::vector<Mat> cells) {
  return MatrixField(grid, n, FieldKind::weight, std::move(cells));
}

MatrixField MatrixField::symbol(GridSpec grid, int n, std::vector<Mat> cells) {
  return MatrixField(grid, n, FieldKind::symbol, std::move(cells));
}

MatrixField MatrixField::constant_weight(GridSpec grid, const Mat& value) {
  return weight(grid, static_cast<int>(value.rows()), std::vector<Mat>(grid.cell_count(), value));
}

MatrixField MatrixField::constant_symbol(GridSpec grid, const Mat& value) {
  return symbol(grid, static_cast<int>(value.rows()), std::vector<Mat>(grid.cell_count(), value));
}

MatrixField MatrixField::scalar_weight(GridSpec grid, const std::vector<double>& values) {
  std::vector<Mat> cells;
  for (double v : values) cells.push_back(Mat::Constant(1, 1, v));
  return weight(grid, 1, std::move(cells));
}

MatrixField MatrixField::scalar_symbol(GridSpec grid, const std::vector<double>& values) {
  std::vector<Mat> cells;
  for (double v : values) cells.push_back(Mat::Constant(1, 1, v));
  return symbol(grid, 1, std::move(cells));
}

MatrixField MatrixField::scaled(double c) const {
  if (kind_ == FieldKind::weight && !(c > 0.0)) throw ParameterError("field: weights scale by c > 0 only");
  std::vector<Mat> out;
  out.reserve(cells_.size());
  for (const Mat& m : cells_) out.push_back(c * m);
  return MatrixField(grid_, n_, kind_, std::move(out));
}

MatrixField MatrixField::plus_constant(const Mat& c) const {
  std::vector<Mat> out;
  out.reserve(cells_.size());
  for (const Mat& m : cells_) out.push_back(m + c);
  return MatrixField(grid_, n_, kind_, std::move(out));
}

VectorField VectorField::zeros(GridSpec grid, int n) {
  return VectorField{grid, n, std::vector<Vec>(grid.cell_count(), Vec::Zero(n))};
}

VectorField VectorField::constant(GridSpec grid, const Vec& v) {
  return VectorField{grid, static_cast<int>(v.size()), std::vector<Vec>(grid.cell_count(), v)};
}

Vec VectorField::flatten() const {
  Vec flat(static_cast<Eigen::Index>(values.size()) * n);
  for (std::size_t i = 0; i < values.size(); ++i) flat.segment(static_cast<Eigen::Index>(i) * n, n) = values[i];
  return flat;
}

VectorField VectorField::unflatten(GridSpec grid, int n, const Vec& flat) {
  VectorField out{grid, n, {}};
  const auto cells = static_cast<std::size_t>(flat.size() / n);
  out.values.reserve(cells);
  for (std::size_t i = 0; i < cells; ++i) out.values.push_back(flat.segment(static_cast<Eigen::Index>(i) * n, n));
  return out;
}

MatrixField matrix_power(const MatrixField& w, double exponent) {
  if (w.kind() != FieldKind::weight) throw ParameterError("matrix_power: field is not a weight");
  std::vector<Mat> out;
  out.reserve(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out.push_back(sym_power(w[i], exponent, "cell " + std::to_string(i)));
  return MatrixField::weight(w.grid(), w.n(), std::move(out));
}

MatrixField dual_weight(const MatrixField& w, const ExponentTriple& e) {
  return matrix_power(w, -e.p_conj() / e.q);
}

GeneratedWeight generate_weight(std::uint64_t seed, const GridSpec& grid, int n, const std::string& family,
                                const WeightParams& params) {
  grid.validate();
  if (n < 1) throw ParameterError("generate_weight: n must be positive");
  std::mt19937_64 rng(seed);
  GeneratedWeight out;
  std::vector<Mat> cells;
  cells.reserve(grid.cell_count());

  auto betas = params.beta.empty() ? std::vector<double>{0.0} : params.beta;
  while (static_cast<int>(betas.size()) < n) betas.push_back(betas.back());
  if (params.exponents && (family == "scalar-power" || family == "rotating-diagonal")) {
    const ExponentTriple& e = *params.exponents;
    const double guard = grid.d * std::min(e.q / e.p_conj(), 1.0);
    for (int i = 0; i < n; ++i) {
      if (std::abs(betas[i]) >= guard) {
        std::ostringstream os;
        os << "beta[" << i << "]=" << betas[i] << " outside |beta| < " << guard
           << "; membership decided by the computed characteristic";
        out.warnings.push_back(os.str());
      }
    }
  }

  if (family == "constant") {
    std::uniform_real_distribution<double> unif(-params.log_bound, params.log_bound);
    const Mat q = random_orthogonal(rng, n);
    Vec lam(n);
    for (int i = 0; i < n; ++i) lam(i) = std::exp(unif(rng));
    const Mat value = floored(params.scale * q * lam.asDiagonal() * q.transpose(), 0);
    cells.assign(grid.cell_count(), value);
  } else if (family == "log-bounded-random") {
    std::uniform_real_distribution<double> unif(-params.log_bound, params.log_bound);
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
      const Mat q = random_orthogonal(rng, n);
      Vec lam(n);
      for (int i = 0; i < n; ++i) lam(i) = std::exp(unif(rng));
      cells.push_back(floored(params.scale * q * lam.asDiagonal() * q.transpose(), static_cast<int>(c)));
    }
  } else if (family == "scalar-power") {
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
      const Mat avg = cell_average(grid, c, 1, [&](const std::array<double, 2>& x) {
        return Mat::Constant(1, 1, std::pow(distance(x, params.x0, grid.d), betas[0]));
      });
      cells.push_back(floored(params.scale * avg(0, 0) * Mat::Identity(n, n), static_cast<int>(c)));
    }
  } else if (family == "rotating-diagonal") {
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
      const Mat avg = cell_average(grid, c, n, [&](const std::array<double, 2>& x) {
        const double r = distance(x, params.x0, grid.d);
        Vec lam(n);
        for (int i = 0; i < n; ++i) lam(i) = std::pow(r, betas[i]);
        const Mat rot = rotation(n, params.omega * (x[0] + (grid.d == 2 ? x[1] : 0.0)));
        return Mat(rot * lam.asDiagonal() * rot.transpose());
      });
      cells.push_back(floored(params.scale * avg, static_cast<int>(c)));
    }
  } else {
    throw ParameterError("generate_weight: unknown family '" + family + "'");
  }
  out.field = MatrixField::weight(grid, n, std::move(cells));
  return out;
}

MatrixField generate_symbol(std::uint64_t seed, const GridSpec& grid, int n, const std::string& family,
                            double amplitude) {
  grid.validate();
  std::mt19937_64 rng(seed);
  std::vector<Mat> cells;
  cells.reserve(grid.cell_count());
  if (family == "constant") {
    cells.assign(grid.cell_count(), random_symmetric(rng, n, amplitude));
  } else if (family == "random") {
    for (std::size_t c = 0; c < grid.cell_count(); ++c) cells.push_back(random_symmetric(rng, n, amplitude));
  } else if (family == "smooth") {
    const Mat a = random_symmetric(rng, n, amplitude);
    const Mat b = random_symmetric(rng, n, amplitude);
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
      cells.push_back(cell_average(grid, c, n, [&](const std::array<double, 2>& x) {
        const double t = 2.0 * M_PI * (x[0] + 0.5 * x[1]);
        return Mat(std::cos(t) * a + std::sin(2.0 * t) * b);
      }));
    }
  } else if (family == "log") {
    const Mat a = random_symmetric(rng, n, amplitude);
    const std::array<double, 2> x0{0.3, 0.3};
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
      cells.push_back(cell_average(grid, c, n, [&](const std::array<double, 2>& x) {
        return Mat(std::log(distance(x, x0, grid.d)) * a);
      }));
    }
  } else {
    throw ParameterError("generate_symbol: unknown family '" + family + "'");
  }
  return MatrixField::symbol(grid, n, std::move(cells));
}

VectorField generate_vector(std::uint64_t seed, const GridSpec& grid, int n) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  VectorField out{grid, n, {}};
  out.values.reserve(grid.cell_count());
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = gauss(rng);
    out.values.push_back(v);
  }
  return out;
}

}  // namespace mwlab
