#include "mwlab/reducing.hpp"

#include "mwlab/error.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace mwlab {

namespace {

int default_direction_count(int n) {
  if (n <= 1) return 2;
  if (n == 2) return 64;
  if (n == 3) return 256;
  return 64 << std::min(n - 2, 6);
}

// Directions used to certify the distortion: the fitting sample plus a
// denser independent set.
std::vector<Vec> certification_directions(int n, int fit_count) {
  std::vector<Vec> dirs = sample_directions(n, fit_count);
  const std::vector<Vec> dense = sample_directions(n, 4 * fit_count);
  dirs.insert(dirs.end(), dense.begin(), dense.end());
  return dirs;
}

void check_set(const MatrixField& w, const CubeSet& s) {
  if (s.empty()) throw ParameterError("reduce: empty cell set");
  if (!s.grid.same_lattice(w.grid())) throw ParameterError("reduce: set and field live on different grids");
}

}  // namespace

std::string to_string(ReducingMode m) {
  switch (m) {
    case ReducingMode::exact_r2:
      return "exact-r2";
    case ReducingMode::scalar:
      return "scalar";
    case ReducingMode::mvee:
      return "mvee";
  }
  return "?";
}

std::vector<Vec> sample_directions(int n, int count) {
  std::vector<Vec> out;
  if (n == 1) {
    out.push_back(Vec::Constant(1, 1.0));
    out.push_back(Vec::Constant(1, -1.0));
    return out;
  }
  const int half = std::max(1, count / 2);
  if (n == 2) {
    for (int k = 0; k < 2 * half; ++k) {
      const double t = M_PI * k / half;
      Vec v(2);
      v << std::cos(t), std::sin(t);
      out.push_back(v);
    }
    return out;
  }
  std::vector<Vec> base;
  if (n == 3) {
    // Fibonacci lattice on the upper hemisphere, mirrored below.
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < half; ++k) {
      const double z = (k + 0.5) / half;
      const double rad = std::sqrt(1.0 - z * z);
      Vec v(3);
      v << rad * std::cos(golden * k), rad * std::sin(golden * k), z;
      base.push_back(v);
    }
  } else {
    std::mt19937_64 rng(0x5eedULL + static_cast<unsigned>(n));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int k = 0; k < half; ++k) {
      Vec v(n);
      for (int i = 0; i < n; ++i) v(i) = gauss(rng);
      base.push_back(v.normalized());
    }
  }
  for (const Vec& v : base) {
    out.push_back(v);
    out.push_back(-v);
  }
  return out;
}

double averaged_norm(const MatrixField& powered, const CubeSet& s, double r, const Vec& e) {
  double acc = 0.0;
  for (std::size_t c : s.members) acc += std::pow((powered[c] * e).norm(), r);
  return std::pow(acc / static_cast<double>(s.size()), 1.0 / r);
}

namespace {

// Coordinates of a symmetric n x n matrix: diagonal first, then the upper
// triangle; p^T H p = a(p) . h with off-diagonal products doubled.
Vec quadratic_features(const Vec& p) {
  const auto n = p.size();
  Vec a(n * (n + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i) a(k++) = p(i) * p(i);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) a(k++) = 2.0 * p(i) * p(j);
  return a;
}

Mat unpack(const Vec& h, Eigen::Index n) {
  Mat m(n, n);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i) m(i, i) = h(k++);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) m(i, j) = m(j, i) = h(k++);
  return m;
}

Vec pack(const Mat& m) {
  const auto n = m.rows();
  Vec h(n * (n + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i) h(k++) = m(i, i);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) h(k++) = m(i, j);
  return h;
}

// Log-barrier path following for max log det H s.t. p_i^T H p_i <= 1,
// started from a strictly feasible H. Stops once the duality gap m/t
// falls below `gap`. Returns the Newton step count.
int barrier_polish(const Mat& x, Mat& h_mat, double gap, int max_steps) {
  const auto n = x.rows();
  const auto m = x.cols();
  const auto dim = n * (n + 1) / 2;
  Mat a(dim, m);
  for (Eigen::Index i = 0; i < m; ++i) a.col(i) = quadratic_features(x.col(i));
  // basis matrices of the packed coordinates
  std::vector<Mat> basis;
  for (Eigen::Index k = 0; k < dim; ++k) {
    Vec e = Vec::Zero(dim);
    e(k) = 1.0;
    basis.push_back(unpack(e, n));
  }
  Vec h = pack(h_mat);
  auto value = [&](const Vec& hv, double t, bool& ok) {
    ok = false;
    Eigen::LLT<Mat> llt(unpack(hv, n));
    if (llt.info() != Eigen::Success) return 0.0;
    const Vec slack = Vec::Ones(m) - a.transpose() * hv;
    if (slack.minCoeff() <= 0.0) return 0.0;
    ok = true;
    const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return -t * logdet - slack.array().log().sum();
  };
  double t = static_cast<double>(m);
  int steps = 0;
  for (;;) {
    for (int inner = 0; inner < 100; ++inner) {
      const Mat hinv = unpack(h, n).inverse();
      const Vec slack = Vec::Ones(m) - a.transpose() * h;
      const Vec w = slack.cwiseInverse();
      Vec grad = a * w;
      Mat hess = a * w.cwiseAbs2().asDiagonal() * a.transpose();
      std::vector<Mat> hb(static_cast<std::size_t>(dim));
      for (Eigen::Index k = 0; k < dim; ++k) hb[static_cast<std::size_t>(k)] = hinv * basis[static_cast<std::size_t>(k)];
      for (Eigen::Index k = 0; k < dim; ++k) {
        grad(k) -= t * hb[static_cast<std::size_t>(k)].trace();
        for (Eigen::Index l = 0; l < dim; ++l)
          hess(k, l) += t * (hb[static_cast<std::size_t>(k)] * hb[static_cast<std::size_t>(l)]).trace();
      }
      const Vec step = -hess.ldlt().solve(grad);
      const double decrement = -grad.dot(step);
      if (decrement / 2.0 <= 1e-12) break;
      bool ok = false;
      const double f0 = value(h, t, ok);
      double s = 1.0;
      for (;;) {
        const Vec trial = h + s * step;
        const double f1 = value(trial, t, ok);
        if (ok && f1 <= f0 - 0.25 * s * decrement) {
          h = trial;
          break;
        }
        s *= 0.5;
        if (s < 1e-14) break;
      }
      if (++steps >= max_steps) {
        h_mat = unpack(h, n);
        return steps;
      }
      if (s < 1e-14) break;
    }
    if (static_cast<double>(m) / t <= gap) break;
    t *= 8.0;
  }
  h_mat = unpack(h, n);
  return steps;
}

}  // namespace

Mvee khachiyan_mvee(const std::vector<Vec>& points, double tolerance, int max_iterations) {
  if (points.empty()) throw ParameterError("mvee: no points");
  const auto n = points.front().size();
  const auto m = points.size();
  Mat x(n, static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) x.col(static_cast<Eigen::Index>(i)) = points[i];
  Vec u = Vec::Constant(static_cast<Eigen::Index>(m), 1.0 / static_cast<double>(m));
  const double dn = static_cast<double>(n);

  Mat moment;
  Vec kappa;
  auto evaluate = [&]() {
    moment = x * u.asDiagonal() * x.transpose();
    Eigen::LLT<Mat> llt(moment);
    if (llt.info() != Eigen::Success) throw DegeneracyError("mvee: points do not span the space");
    const Mat solved = llt.solve(x);
    kappa = (x.cwiseProduct(solved)).colwise().sum().transpose();
  };

  // Khachiyan's barycentric ascent; near-degenerate point sets (several
  // points almost on the optimal ellipsoid) stall it, and the remaining gap
  // is closed by Newton steps on the primal barrier problem
  constexpr int kAscentBudget = 400;
  Mvee out;
  int it = 0;
  double kmax = 0.0;
  for (;; ++it) {
    evaluate();
    Eigen::Index j = 0;
    kmax = kappa.maxCoeff(&j);
    if (kmax <= dn * (1.0 + tolerance)) {
      out.H = symmetrized(moment.inverse() / kmax);
      out.iterations = it;
      return out;
    }
    if (it >= std::min(kAscentBudget, max_iterations)) break;
    const double step = (kmax - dn) / (dn * (kmax - 1.0));
    u *= (1.0 - step);
    u(j) += step;
  }
  // strictly feasible start inside the current ellipsoid
  Mat h = moment.inverse() / (kmax * 1.01);
  // log det gap below n log(1 + tol) matches the ascent's stopping rule
  const int newton = barrier_polish(x, h, dn * std::log1p(tolerance), max_iterations - it);
  it += newton;
  double reach = 0.0;
  for (std::size_t i = 0; i < m; ++i) reach = std::max(reach, points[i].dot(h * points[i]));
  if (it >= max_iterations) {
    std::ostringstream os;
    os << "mvee: no convergence after " << max_iterations << " iterations (max leverage " << kmax << ", target "
       << dn * (1.0 + tolerance) << ")";
    throw ConvergenceError(os.str());
  }
  out.H = symmetrized(h / reach);
  out.iterations = it;
  return out;
}

ReducingMatrix reduce_powered(const MatrixField& powered, const CubeSet& s, double r, const MveeOptions& options) {
  check_set(powered, s);
  if (!(r >= 1.0) || !std::isfinite(r)) throw ParameterError("reduce: exponent r must lie in [1, inf)");
  const int n = powered.n();
  ReducingMatrix out;
  out.r = r;
  out.options = options;

  if (n == 1) {
    out.A = Mat::Constant(1, 1, averaged_norm(powered, s, r, Vec::Constant(1, 1.0)));
    out.mode = ReducingMode::scalar;
    out.distortion = 1.0;
    out.sample_count = 1;
    return out;
  }
  if (r == 2.0) {
    Mat gram = Mat::Zero(n, n);
    for (std::size_t c : s.members) gram += powered[c].transpose() * powered[c];
    gram /= static_cast<double>(s.size());
    out.A = sym_power(gram, 0.5, "reduce: averaged Gram matrix");
    out.mode = ReducingMode::exact_r2;
    out.distortion = 1.0;
    return out;
  }

  const int count = options.directions > 0 ? options.directions : default_direction_count(n);
  const std::vector<Vec> dirs = sample_directions(n, count);
  std::vector<Vec> boundary;
  boundary.reserve(dirs.size());
  for (const Vec& e : dirs) boundary.push_back(e / averaged_norm(powered, s, r, e));
  const Mvee mvee = khachiyan_mvee(boundary, options.tolerance, options.max_iterations);
  Mat a = sym_power(mvee.H, 0.5, "reduce: ellipsoid matrix");

  auto ratio = [&](const Vec& e) { return averaged_norm(powered, s, r, e) / (a * e).norm(); };
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  Vec arg_lo, arg_hi;
  for (const Vec& e : certification_directions(n, count)) {
    const double t = ratio(e);
    if (t < lo) lo = t, arg_lo = e;
    if (t > hi) hi = t, arg_hi = e;
  }
  if (n == 2) {
    // the ratio is smooth on the circle; polish the leading samples of both ends
    const double width = 2.0 * M_PI / count;
    auto at = [](double t) {
      Vec v(2);
      v << std::cos(t), std::sin(t);
      return v;
    };
    auto polish = [&](const Vec& e, double sign) {
      const double center = std::atan2(e(1), e(0));
      auto f = [&](double t) { return sign * ratio(at(t)); };
      const double best = boost::math::tools::brent_find_minima(f, center - width, center + width, 40).second;
      return sign * best;
    };
    const std::vector<Vec> cert = certification_directions(n, count);
    std::vector<std::pair<double, std::size_t>> ranked;
    for (std::size_t i = 0; i < cert.size(); ++i) ranked.emplace_back(ratio(cert[i]), i);
    std::sort(ranked.begin(), ranked.end());
    const std::size_t keep = std::min<std::size_t>(16, ranked.size());
    for (std::size_t i = 0; i < keep; ++i) {
      lo = std::min(lo, polish(cert[ranked[i].second], 1.0));
      hi = std::max(hi, polish(cert[ranked[ranked.size() - 1 - i].second], -1.0));
    }
  } else {
    // coordinate ascent along great circles through the best few samples
    const double width = 2.0 * std::pow(static_cast<double>(count), -1.0 / (n - 1));
    auto polish = [&](Vec x, double sign) {
      double best = sign * ratio(x);
      for (int sweep = 0; sweep < 30; ++sweep) {
        const double before = best;
        Eigen::HouseholderQR<Mat> qr(x);
        const Mat basis = qr.householderQ();
        for (int k = 1; k < n; ++k) {
          const Vec t = basis.col(k);
          auto f = [&](double th) { return sign * ratio(std::cos(th) * x + std::sin(th) * t); };
          const auto [th, val] = boost::math::tools::brent_find_minima(f, -width, width, 40);
          if (val < best) {
            best = val;
            x = (std::cos(th) * x + std::sin(th) * t).normalized();
          }
        }
        if (before - best <= 1e-15 * std::abs(best)) break;
      }
      return sign * best;
    };
    // polish every sample that is a local extreme among its angular neighbours
    const std::vector<Vec> cert = certification_directions(n, count);
    std::vector<double> values(cert.size());
    for (std::size_t i = 0; i < cert.size(); ++i) values[i] = ratio(cert[i]);
    const double near = std::cos(1.5 * width);
    std::vector<std::pair<double, std::size_t>> minima, maxima;
    for (std::size_t i = 0; i < cert.size(); ++i) {
      bool is_min = true, is_max = true;
      for (std::size_t j = 0; j < cert.size() && (is_min || is_max); ++j) {
        if (j == i || std::abs(cert[i].dot(cert[j])) < near) continue;
        if (values[j] < values[i]) is_min = false;
        if (values[j] > values[i]) is_max = false;
      }
      if (is_min) minima.emplace_back(values[i], i);
      if (is_max) maxima.emplace_back(-values[i], i);
    }
    std::sort(minima.begin(), minima.end());
    std::sort(maxima.begin(), maxima.end());
    for (std::size_t i = 0; i < std::min<std::size_t>(16, minima.size()); ++i)
      lo = std::min(lo, polish(cert[minima[i].second], 1.0));
    for (std::size_t i = 0; i < std::min<std::size_t>(16, maxima.size()); ++i)
      hi = std::max(hi, polish(cert[maxima[i].second], -1.0));
  }
  out.A = a * std::sqrt(lo * hi);
  out.distortion = std::sqrt(hi / lo);
  out.mode = ReducingMode::mvee;
  out.sample_count = static_cast<int>(dirs.size());
  out.iterations = mvee.iterations;
  return out;
}

ReducingMatrix reduce(const MatrixField& w, const CubeSet& s, double r, double power, const MveeOptions& options) {
  check_set(w, s);
  // only the cells of S are needed
  std::vector<Mat> cells(w.size(), Mat::Identity(w.n(), w.n()));
  for (std::size_t c : s.members) cells[c] = sym_power(w[c], power, "cell " + std::to_string(c));
  return reduce_powered(MatrixField::weight(w.grid(), w.n(), std::move(cells)), s, r, options);
}

double matrix_holder_defect(const ReducingMatrix& m, const ReducingMatrix& mp) {
  Eigen::FullPivLU<Mat> lu_m(m.A);
  Eigen::FullPivLU<Mat> lu_mp(mp.A);
  if (!lu_m.isInvertible() || !lu_mp.isInvertible()) throw DegeneracyError("matrix_holder_defect: singular reducing matrix");
  return spectral_norm(lu_m.inverse() * lu_mp.inverse());
}

DualityGap duality_gap(const MatrixField& w, const CubeSet& s, const ExponentTriple& e, const MveeOptions& options) {
  const double pc = e.p_conj();
  const ReducingMatrix via_dual = reduce(dual_weight(w, e), s, pc, 1.0 / pc, options);
  const ReducingMatrix direct = reduce(w, s, pc, -1.0 / e.q, options);
  const int count = options.directions > 0 ? options.directions : default_direction_count(w.n());
  DualityGap out;
  for (const Vec& dir : certification_directions(w.n(), count))
    out.gap = std::max(out.gap, std::abs(std::log((via_dual.A * dir).norm() / (direct.A * dir).norm())));
  out.bound = std::log(via_dual.distortion * direct.distortion);
  return out;
}

}  // namespace mwlab
