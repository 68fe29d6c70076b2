#include "mwlab/operators.hpp"

#include "mwlab/error.hpp"
#include "mwlab/parallel.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <tuple>

namespace mwlab {

namespace {

using boost::math::quadrature::gauss_kronrod;

constexpr double kQuadTolerance = 1e-12;
constexpr unsigned kQuadDepth = 15;

double tent(double t) { return std::max(0.0, 1.0 - std::abs(t)); }

// int_0^R r^{alpha-1} (c0 + c1 r + c2 r^2) dr
double radial_moment(double alpha, double r, double c0, double c1, double c2) {
  return c0 * std::pow(r, alpha) / alpha + c1 * std::pow(r, alpha + 1.0) / (alpha + 1.0) +
         c2 * std::pow(r, alpha + 2.0) / (alpha + 2.0);
}

// Unit square with a corner at the origin, reflected onto [0,1]^2; the tent
// factors become a_k + b_k s_k.
double corner_square(double alpha, double a1, double b1, double a2, double b2, double* error) {
  auto integrand = [&](double theta) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const double r = 1.0 / std::max(c, s);
    return radial_moment(alpha, r, a1 * a2, a1 * b2 * s + b1 * a2 * c, b1 * b2 * c * s);
  };
  double e1 = 0.0, e2 = 0.0;
  const double v = gauss_kronrod<double, 31>::integrate(integrand, 0.0, M_PI / 4, kQuadDepth, kQuadTolerance, &e1) +
                   gauss_kronrod<double, 31>::integrate(integrand, M_PI / 4, M_PI / 2, kQuadDepth, kQuadTolerance, &e2);
  *error += e1 + e2;
  return v;
}

double regular_square(double alpha, int k1, int k2, int m1, int m2, double* error) {
  double inner_error = 0.0;
  auto outer = [&](double z1) {
    auto inner = [&](double z2) {
      return std::pow(std::hypot(z1, z2), alpha - 2.0) * tent(z1 - m1) * tent(z2 - m2);
    };
    double e = 0.0;
    const double v = gauss_kronrod<double, 31>::integrate(inner, k2, k2 + 1.0, kQuadDepth, kQuadTolerance, &e);
    inner_error = std::max(inner_error, e);
    return v;
  };
  double e = 0.0;
  const double v = gauss_kronrod<double, 31>::integrate(outer, k1, k1 + 1.0, kQuadDepth, kQuadTolerance, &e);
  *error += e + inner_error;
  return v;
}

double unit_kernel_2d(double alpha, int m1, int m2, double* error) {
  double total = 0.0;
  for (int k1 : {m1 - 1, m1}) {
    for (int k2 : {m2 - 1, m2}) {
      const bool corner = (k1 == 0 || k1 == -1) && (k2 == 0 || k2 == -1);
      if (!corner) {
        total += regular_square(alpha, k1, k2, m1, m2, error);
        continue;
      }
      const double s1 = k1 == 0 ? 1.0 : -1.0;
      const double s2 = k2 == 0 ? 1.0 : -1.0;
      const double a1 = tent(-m1), a2 = tent(-m2);
      const double b1 = tent(s1 - m1) - a1, b2 = tent(s2 - m2) - a2;
      total += corner_square(alpha, a1, b1, a2, b2, error);
    }
  }
  return total;
}

struct KernelCache {
  std::mutex mutex;
  std::map<std::tuple<int, double, int, int>, std::pair<double, double>> values;
};

KernelCache& cache() {
  static KernelCache c;
  return c;
}

void check_same_shape(const OperatorMatrix& t, const MatrixField& f, const char* what) {
  if (!t.grid.same_lattice(f.grid()) || t.n != f.n())
    throw ParameterError(std::string(what) + ": operator and field differ in grid or matrix size");
}

}  // namespace

std::string to_string(OperatorKind k) {
  switch (k) {
    case OperatorKind::identity:
      return "identity";
    case OperatorKind::ialpha:
      return "ialpha";
    case OperatorKind::averaging:
      return "averaging";
    case OperatorKind::commutator:
      return "commutator";
    case OperatorKind::conjugated:
      return "conjugated";
    case OperatorKind::truncated:
      return "truncated";
    case OperatorKind::product:
      return "product";
    case OperatorKind::block:
      return "block";
  }
  return "?";
}

OperatorKind operator_kind_from_string(const std::string& s) {
  for (OperatorKind k : {OperatorKind::identity, OperatorKind::ialpha, OperatorKind::averaging,
                         OperatorKind::commutator, OperatorKind::conjugated, OperatorKind::truncated,
                         OperatorKind::product, OperatorKind::block})
    if (to_string(k) == s) return k;
  throw FormatError("unknown operator kind '" + s + "'");
}

Mat OperatorMatrix::block(std::size_t i, std::size_t j) const {
  return entries.block(static_cast<Eigen::Index>(i) * n, static_cast<Eigen::Index>(j) * n, n, n);
}

void OperatorMatrix::set_block(std::size_t i, std::size_t j, const Mat& b) {
  entries.block(static_cast<Eigen::Index>(i) * n, static_cast<Eigen::Index>(j) * n, n, n) = b;
}

VectorField OperatorMatrix::apply(const VectorField& f) const {
  if (!f.grid.same_lattice(grid) || f.n != n) throw ParameterError("apply: field does not match the operator");
  return VectorField::unflatten(grid, n, entries * f.flatten());
}

double ialpha_unit_kernel(int d, double alpha, Coords offset, double* error) {
  if (!(alpha > 0.0) || !(alpha < d)) throw ParameterError("ialpha: alpha must lie in (0, d)");
  if (error) *error = 0.0;
  if (d == 1) {
    const double m = offset[0];
    auto g = [alpha](double t) { return std::pow(std::abs(t), alpha + 1.0) / (alpha * (alpha + 1.0)); };
    // int_0^1 int_m^{m+1} |x - y|^{alpha-1} dy dx
    return g(1.0 - m) - 2.0 * g(-m) + g(-m - 1.0);
  }
  if (d != 2) throw ParameterError("ialpha: only d = 1, 2 are supported");
  int m1 = std::abs(offset[0]);
  int m2 = std::abs(offset[1]);
  if (m1 > m2) std::swap(m1, m2);
  const auto key = std::make_tuple(d, alpha, m1, m2);
  {
    std::lock_guard<std::mutex> lock(cache().mutex);
    const auto it = cache().values.find(key);
    if (it != cache().values.end()) {
      if (error) *error = it->second.second;
      return it->second.first;
    }
  }
  double err = 0.0;
  const double value = unit_kernel_2d(alpha, m1, m2, &err);
  {
    std::lock_guard<std::mutex> lock(cache().mutex);
    cache().values.emplace(key, std::make_pair(value, err));
  }
  if (error) *error = err;
  return value;
}

double ialpha_kernel(const GridSpec& grid, double alpha, std::size_t i, std::size_t j, double* error) {
  const Coords ci = grid.cell_coords(i);
  const Coords cj = grid.cell_coords(j);
  const double h = 1.0 / grid.side();
  const double scale = std::pow(h, alpha);
  double err = 0.0;
  const double v = scale * ialpha_unit_kernel(grid.d, alpha, {cj[0] - ci[0], cj[1] - ci[1]}, &err);
  if (error) *error = scale * err;
  return v;
}

OperatorMatrix build_identity(const GridSpec& grid, int n) {
  grid.validate();
  if (n < 1) throw ParameterError("operator: n must be >= 1");
  const auto dim = static_cast<Eigen::Index>(grid.cell_count()) * n;
  return {grid, n, OperatorKind::identity, Mat::Identity(dim, dim), 0.0};
}

OperatorMatrix build_ialpha(const GridSpec& grid, const ExponentTriple& e, int n) {
  e.validate();
  grid.validate();
  if (e.d != grid.d) throw ParameterError("ialpha: exponent dimension differs from the grid dimension");
  if (e.alpha == 0.0)
    throw ParameterError("ialpha: alpha = 0 has no fractional integral; use the identity or averaging operators");
  if (n < 1) throw ParameterError("operator: n must be >= 1");
  const std::size_t cells = grid.cell_count();
  OperatorMatrix out{grid, n, OperatorKind::ialpha, Mat::Zero(static_cast<Eigen::Index>(cells) * n,
                                                               static_cast<Eigen::Index>(cells) * n), 0.0};
  std::vector<double> row_error(cells, 0.0);
  parallel_for(cells, [&](std::size_t i) {
    for (std::size_t j = 0; j < cells; ++j) {
      double err = 0.0;
      const double k = ialpha_kernel(grid, e.alpha, i, j, &err);
      row_error[i] = std::max(row_error[i], err);
      for (int a = 0; a < n; ++a)
        out.entries(static_cast<Eigen::Index>(i) * n + a, static_cast<Eigen::Index>(j) * n + a) = k;
    }
  });
  out.quad_error = *std::max_element(row_error.begin(), row_error.end());
  return out;
}

OperatorMatrix build_averaging(const CubeSet& s, const ExponentTriple& e, int n) {
  e.validate();
  if (s.empty()) throw ParameterError("averaging: empty set");
  if (e.d != s.grid.d) throw ParameterError("averaging: exponent dimension differs from the grid dimension");
  OperatorMatrix out = build_identity(s.grid, n);
  out.kind = OperatorKind::averaging;
  out.entries.setZero();
  const double coef = std::pow(s.measure(), e.alpha / e.d - 1.0) * s.grid.cell_measure();
  const Mat b = coef * Mat::Identity(n, n);
  for (std::size_t i : s.members)
    for (std::size_t j : s.members) out.set_block(i, j, b);
  return out;
}

OperatorMatrix build_commutator(const OperatorMatrix& t, const MatrixField& b) {
  check_same_shape(t, b, "commutator");
  OperatorMatrix out = t;
  out.kind = OperatorKind::commutator;
  const std::size_t cells = t.cells();
  for (std::size_t i = 0; i < cells; ++i)
    for (std::size_t j = 0; j < cells; ++j) {
      const Mat tij = t.block(i, j);
      out.set_block(i, j, b[i] * tij - tij * b[j]);
    }
  return out;
}

OperatorMatrix conjugate(const OperatorMatrix& t, const MatrixField& v, const MatrixField& u,
                         const ExponentTriple& e) {
  check_same_shape(t, v, "conjugate");
  check_same_shape(t, u, "conjugate");
  const MatrixField vq = matrix_power(v, 1.0 / e.q);
  const MatrixField umq = matrix_power(u, -1.0 / e.q);
  OperatorMatrix out = t;
  out.kind = OperatorKind::conjugated;
  const std::size_t cells = t.cells();
  for (std::size_t i = 0; i < cells; ++i)
    for (std::size_t j = 0; j < cells; ++j) out.set_block(i, j, vq[i] * t.block(i, j) * umq[j]);
  return out;
}

OperatorMatrix truncate(const OperatorMatrix& t, const CubeSet& e) {
  if (!e.grid.same_lattice(t.grid)) throw ParameterError("truncate: set lives on another grid");
  OperatorMatrix out = t;
  out.kind = OperatorKind::truncated;
  out.entries.setZero();
  for (std::size_t i : e.members)
    for (std::size_t j : e.members) out.set_block(i, j, t.block(i, j));
  return out;
}

OperatorMatrix compose(const OperatorMatrix& a, const OperatorMatrix& b) {
  if (!a.grid.same_lattice(b.grid) || a.n != b.n) throw ParameterError("compose: operators differ in shape");
  return {a.grid, a.n, OperatorKind::product, a.entries * b.entries, a.quad_error + b.quad_error};
}

OperatorMatrix BlockWeight::conjugated(const OperatorMatrix& t) const {
  if (t.cells() != phi.size() || 2 * t.n != w.n()) throw ParameterError("block conjugation: operator shape differs");
  const int n = t.n;
  OperatorMatrix out{t.grid, 2 * n, OperatorKind::block,
                     Mat::Zero(static_cast<Eigen::Index>(t.cells()) * 2 * n,
                               static_cast<Eigen::Index>(t.cells()) * 2 * n),
                     t.quad_error};
  const std::size_t cells = t.cells();
  for (std::size_t i = 0; i < cells; ++i)
    for (std::size_t j = 0; j < cells; ++j) {
      Mat lifted = Mat::Zero(2 * n, 2 * n);
      const Mat tij = t.block(i, j);
      lifted.topLeftCorner(n, n) = tij;
      lifted.bottomRightCorner(n, n) = tij;
      out.set_block(i, j, phi[i] * lifted * phi_inv[j]);
    }
  return out;
}

BlockWeight build_block_weight(const MatrixField& u, const MatrixField& v, const MatrixField& b,
                               const ExponentTriple& e) {
  e.validate();
  if (u.kind() != FieldKind::weight || v.kind() != FieldKind::weight || b.kind() != FieldKind::symbol)
    throw ParameterError("block weight: expected weights U, V and a symbol B");
  if (!u.grid().same_lattice(v.grid()) || !u.grid().same_lattice(b.grid()) || u.n() != v.n() || u.n() != b.n())
    throw ParameterError("block weight: fields differ in grid or matrix size");
  const int n = u.n();
  const MatrixField uq = matrix_power(u, 1.0 / e.q);
  const MatrixField umq = matrix_power(u, -1.0 / e.q);
  const MatrixField vq = matrix_power(v, 1.0 / e.q);
  const MatrixField vmq = matrix_power(v, -1.0 / e.q);
  BlockWeight out;
  std::vector<Mat> w_cells;
  for (std::size_t c = 0; c < u.size(); ++c) {
    Mat phi = Mat::Zero(2 * n, 2 * n);
    phi.topLeftCorner(n, n) = vq[c];
    phi.topRightCorner(n, n) = vq[c] * b[c];
    phi.bottomRightCorner(n, n) = uq[c];
    Mat inv = Mat::Zero(2 * n, 2 * n);
    inv.topLeftCorner(n, n) = vmq[c];
    inv.topRightCorner(n, n) = -b[c] * umq[c];
    inv.bottomRightCorner(n, n) = umq[c];
    out.inverse_residual =
        std::max(out.inverse_residual, (phi * inv - Mat::Identity(2 * n, 2 * n)).cwiseAbs().maxCoeff());
    w_cells.push_back(sym_power(symmetrized(phi.transpose() * phi), e.q / 2.0, "block weight cell " + std::to_string(c)));
    out.phi.push_back(std::move(phi));
    out.phi_inv.push_back(std::move(inv));
  }
  if (out.inverse_residual > 1e-10)
    throw DegeneracyError("block weight: Phi Phi^{-1} deviates from the identity by " +
                          std::to_string(out.inverse_residual));
  out.w = MatrixField::weight(u.grid(), 2 * n, std::move(w_cells));
  return out;
}

OperatorMatrix upper_right(const OperatorMatrix& t2) {
  if (t2.n % 2 != 0) throw ParameterError("upper_right: block size must be even");
  const int n = t2.n / 2;
  const std::size_t cells = t2.cells();
  OperatorMatrix out{t2.grid, n, OperatorKind::conjugated,
                     Mat::Zero(static_cast<Eigen::Index>(cells) * n, static_cast<Eigen::Index>(cells) * n),
                     t2.quad_error};
  for (std::size_t i = 0; i < cells; ++i)
    for (std::size_t j = 0; j < cells; ++j) out.set_block(i, j, t2.block(i, j).topRightCorner(n, n));
  return out;
}

double truncation_norm(const MatrixField& u, const MatrixField& v, std::size_t cell) {
  // for SPD matrices the norms are the extreme eigenvalues and their reciprocals
  const EigRange ru = sym_eig_range(u[cell]);
  const EigRange rv = sym_eig_range(v[cell]);
  return std::max({ru.max, 1.0 / ru.min, rv.max, 1.0 / rv.min});
}

CubeSet truncation_set(const MatrixField& u, const MatrixField& v, double m, const CubeSet& ambient) {
  if (!(m > 0.0)) throw ParameterError("truncation_set: threshold must be positive");
  CubeSet out{ambient.grid, {}};
  for (std::size_t c : ambient.members)
    if (truncation_norm(u, v, c) < m) out.members.push_back(c);
  return out;
}

double least_truncation_threshold(const MatrixField& u, const MatrixField& v, const CubeSet& ambient) {
  if (ambient.empty()) throw ParameterError("least_truncation_threshold: empty ambient set");
  std::vector<double> norms;
  norms.reserve(ambient.size());
  for (std::size_t c : ambient.members) norms.push_back(truncation_norm(u, v, c));
  std::sort(norms.begin(), norms.end());
  const std::size_t k = ambient.size() / 2 + 1;
  return std::nextafter(norms[k - 1], std::numeric_limits<double>::infinity());
}

}  // namespace mwlab
