#include "mwlab/norms.hpp"

#include "mwlab/error.hpp"
#include "mwlab/parallel.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <random>

namespace mwlab {

namespace {

// Unweighted blockwise l^r norm.
double block_norm(const Vec& x, int n, double r) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < x.size(); i += n) acc += std::pow(x.segment(i, n).norm(), r);
  return std::pow(acc, 1.0 / r);
}

// |b|^{r-2} b per block.
Vec duality_map(const Vec& x, int n, double r) {
  Vec out(x.size());
  for (Eigen::Index i = 0; i < x.size(); i += n) {
    const double len = x.segment(i, n).norm();
    out.segment(i, n) = len > 0.0 ? Vec(x.segment(i, n) * std::pow(len, r - 2.0)) : Vec::Zero(n);
  }
  return out;
}

double l_ratio(const Mat& k, const Vec& x, int n, double p, double q) {
  const double den = block_norm(x, n, p);
  if (den == 0.0) return 0.0;
  return block_norm(k * x, n, q) / den;
}

void check_exponents(double p, double q) {
  if (!(p > 1.0) || !(q > 1.0) || !std::isfinite(p) || !std::isfinite(q))
    throw ParameterError("opnorm: exponents must lie in (1, inf)");
}

struct RestartResult {
  Vec witness;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

RestartResult power_iteration(const Mat& k, Vec f, int n, double p, double q, const OpNormOptions& o) {
  const double pc = p / (p - 1.0);
  RestartResult out;
  f /= block_norm(f, n, p);
  double prev = -1.0;
  for (int it = 0; it < o.max_iterations; ++it) {
    const Vec y = k * f;
    const double value = block_norm(y, n, q);
    out.iterations = it + 1;
    if (value > out.value) {
      out.value = value;
      out.witness = f;
    }
    if (value == 0.0) break;
    if (prev >= 0.0 && std::abs(value - prev) <= o.tolerance * value) {
      out.converged = true;
      break;
    }
    prev = value;
    const Vec z = k.transpose() * duality_map(y, n, q);
    Vec next = duality_map(z, n, pc);
    const double len = block_norm(next, n, p);
    if (len == 0.0) break;
    f = next / len;
  }
  if (out.witness.size() == 0) out.witness = f;
  return out;
}

}  // namespace

double lebesgue_norm(const VectorField& f, double r) {
  double acc = 0.0;
  for (const Vec& v : f.values) acc += std::pow(v.norm(), r);
  return std::pow(acc * f.grid.cell_measure(), 1.0 / r);
}

double weighted_norm(const VectorField& f, const MatrixField& w, double r, double power) {
  if (!(r >= 1.0)) throw ParameterError("weighted_norm: exponent must be >= 1");
  if (!f.grid.same_lattice(w.grid()) || f.n != w.n()) throw ParameterError("weighted_norm: field and weight differ");
  const MatrixField wp = matrix_power(w, power);
  double acc = 0.0;
  for (std::size_t c = 0; c < f.values.size(); ++c) acc += std::pow((wp[c] * f.values[c]).norm(), r);
  return std::pow(acc * f.grid.cell_measure(), 1.0 / r);
}

double mixed_ratio(const OperatorMatrix& k, const VectorField& f, double p, double q) {
  const double den = lebesgue_norm(f, p);
  if (den == 0.0) return 0.0;
  return lebesgue_norm(k.apply(f), q) / den;
}

OpNormEstimate mixed_opnorm(const OperatorMatrix& k, double p, double q, const OpNormOptions& o) {
  check_exponents(p, q);
  if (o.restarts < 1) throw ParameterError("opnorm: at least one restart is required");
  const double mu = k.grid.cell_measure();
  const double scale = std::pow(mu, 1.0 / q - 1.0 / p);
  const int n = k.n;
  OpNormEstimate out;
  if (p == 2.0 && q == 2.0) {
    Eigen::BDCSVD<Mat> svd(k.entries, Eigen::ComputeThinV);
    out.estimate = out.lower = svd.singularValues()(0);
    out.witness = VectorField::unflatten(k.grid, n, svd.matrixV().col(0));
    out.exact = true;
    out.restarts = 1;
    out.converged_restarts = 1;
    out.lower = mixed_ratio(k, out.witness, p, q);
    return out;
  }
  const auto dim = k.entries.cols();
  std::vector<RestartResult> results(static_cast<std::size_t>(o.restarts));
  parallel_for(results.size(), [&](std::size_t r) {
    Vec start;
    if (r == 0 && o.warm_start && o.warm_start->size() == dim) {
      start = *o.warm_start;
    } else if (r == 0) {
      start = Vec::Ones(dim);
    } else {
      std::mt19937_64 rng(o.seed * 1000003ULL + r);
      std::normal_distribution<double> gauss(0.0, 1.0);
      start.resize(dim);
      for (Eigen::Index i = 0; i < dim; ++i) start(i) = gauss(rng);
    }
    results[r] = power_iteration(k.entries, start, n, p, q, o);
  });
  std::size_t best = 0;
  for (std::size_t r = 0; r < results.size(); ++r) {
    out.iterations += results[r].iterations;
    if (results[r].converged) ++out.converged_restarts;
    if (results[r].value > results[best].value) best = r;
  }
  out.restarts = o.restarts;
  out.flagged = out.converged_restarts == 0;
  out.estimate = scale * results[best].value;
  out.witness = VectorField::unflatten(k.grid, n, results[best].witness);
  out.lower = mixed_ratio(k, out.witness, p, q);
  out.estimate = std::max(out.estimate, out.lower);
  return out;
}

OpNormEstimate opnorm(const OperatorMatrix& t, const MatrixField& u, const MatrixField& v, const ExponentTriple& e,
                      const OpNormOptions& options) {
  e.validate();
  return mixed_opnorm(conjugate(t, v, u, e), e.p, e.q, options);
}

double mixed_opnorm_oracle(const OperatorMatrix& k, double p, double q, const OracleOptions& o) {
  check_exponents(p, q);
  const auto dim = k.entries.cols();
  if (dim > kOracleMaxDimension)
    throw ParameterError("opnorm_oracle: total dimension " + std::to_string(dim) + " exceeds " +
                         std::to_string(kOracleMaxDimension));
  const int n = k.n;
  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec x(dim), best_x = Vec::Zero(dim);
  double best = 0.0;
  for (long s = 0; s < o.samples; ++s) {
    for (Eigen::Index i = 0; i < dim; ++i) x(i) = gauss(rng);
    const double r = l_ratio(k.entries, x, n, p, q);
    if (r > best) {
      best = r;
      best_x = x;
    }
  }
  // local random-perturbation ascent
  best_x /= best_x.norm();
  double step = 0.05;
  for (int s = 0; s < o.polish_steps && step > 1e-12; ++s) {
    for (Eigen::Index i = 0; i < dim; ++i) x(i) = best_x(i) + step * gauss(rng);
    const double r = l_ratio(k.entries, x, n, p, q);
    if (r > best) {
      best = r;
      best_x = x / x.norm();
      step *= 1.5;
    } else {
      step *= 0.97;
    }
  }
  return std::pow(k.grid.cell_measure(), 1.0 / q - 1.0 / p) * best;
}

double opnorm_oracle(const OperatorMatrix& t, const MatrixField& u, const MatrixField& v, const ExponentTriple& e,
                     const OracleOptions& options) {
  e.validate();
  return mixed_opnorm_oracle(conjugate(t, v, u, e), e.p, e.q, options);
}

}  // namespace mwlab
