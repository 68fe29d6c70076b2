#include "mwlab/characteristics.hpp"

#include "mwlab/error.hpp"
#include "mwlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace mwlab {

namespace {

constexpr std::size_t kGlobalKernelLimit = 2048;

void require_weight(const MatrixField& w, const char* what) {
  if (w.kind() != FieldKind::weight) throw ParameterError(std::string(what) + ": expected a weight field");
}

void require_symbol(const MatrixField& b, const char* what) {
  if (b.kind() != FieldKind::symbol) throw ParameterError(std::string(what) + ": expected a symbol field");
}

void require_compatible(const MatrixField& a, const MatrixField& b, const char* what) {
  if (!a.grid().same_lattice(b.grid()) || a.n() != b.n())
    throw ParameterError(std::string(what) + ": fields differ in grid or matrix size");
}

void require_scope(const Scope& scope, const GridSpec& grid, const char* what) {
  if (!scope) return;
  if (scope->empty()) throw ParameterError(std::string(what) + ": empty cell set");
  if (!scope->grid.same_lattice(grid)) throw ParameterError(std::string(what) + ": set lives on another grid");
}

// Averaged as offsets from the first cell so a constant field returns its
// value exactly.
Mat mean_over(const MatrixField& f, const CubeSet& s) {
  const Mat& base = f[s.members.front()];
  Mat acc = Mat::Zero(f.n(), f.n());
  for (std::size_t c : s.members) acc += f[c] - base;
  return base + acc / static_cast<double>(s.size());
}

// Per-set value with its reducing slack.
using SetFunctional = std::function<std::pair<double, double>(const CubeSet&)>;

// Value on the single set, or the supremum over the standard cube family
// (first cube wins ties).
Characteristic evaluate_scope(const GridSpec& grid, const Scope& scope, CharKind kind, CharKind restricted_kind,
                              const ExponentTriple& e, const SetFunctional& fn) {
  Characteristic out;
  out.exponents = e;
  if (scope) {
    const auto [value, slack] = fn(*scope);
    out.value = value;
    out.slack = slack;
    out.kind = restricted_kind;
    return out;
  }
  const CubeFamily family = standard_family(grid);
  std::vector<std::pair<double, double>> values(family.sets.size());
  parallel_for(family.sets.size(), [&](std::size_t i) { values[i] = fn(family.sets[i]); });
  out.kind = kind;
  std::size_t best = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i].first))
      throw DegeneracyError(to_string(kind) + ": non-finite value on " + family.cubes[i].describe());
    if (values[i].first > values[best].first) best = i;
    out.slack = std::max(out.slack, values[i].second);
  }
  out.value = values[best].first;
  out.argmax = family.cubes[best];
  return out;
}

Mat inverse_of(const Mat& a, const std::string& what) {
  Eigen::FullPivLU<Mat> lu(a);
  if (!lu.isInvertible()) throw DegeneracyError(what + ": singular matrix");
  return lu.inverse();
}

double power_mean(const std::vector<double>& values, double r) {
  double acc = 0.0;
  for (double v : values) acc += std::pow(v, r);
  return std::pow(acc / static_cast<double>(values.size()), 1.0 / r);
}

}  // namespace

std::string to_string(CharKind k) {
  switch (k) {
    case CharKind::apq:
      return "apq";
    case CharKind::apq_restricted:
      return "apq-restricted";
    case CharKind::bmo_classic:
      return "bmo-classic";
    case CharKind::bmo_tilde:
      return "bmo-tilde";
    case CharKind::bmo_tilde_dual:
      return "bmo-tilde-dual";
    case CharKind::jn1:
      return "jn-1";
    case CharKind::jn2:
      return "jn-2";
    case CharKind::jn3:
      return "jn-3";
    case CharKind::jn4:
      return "jn-4";
    case CharKind::jn5:
      return "jn-5";
    case CharKind::jn6:
      return "jn-6";
    case CharKind::bloom_nu:
      return "bloom-nu";
  }
  return "?";
}

CubeFamily standard_family(const GridSpec& grid) {
  GridSpec standard = grid;
  standard.shift = {0, 0};
  CubeFamily out;
  out.cubes = enumerate_cubes(standard);
  out.sets.reserve(out.cubes.size());
  for (const Cube& q : out.cubes) out.sets.push_back(cells_of(q));
  return out;
}

double iterated_mean(const Mat& k, const MeanSchedule& s) {
  if (k.rows() == 0 || k.cols() == 0) throw ParameterError("iterated_mean: empty kernel");
  if (!(s.inner > 0.0) || !(s.outer > 0.0)) throw ParameterError("iterated_mean: exponents must be positive");
  const Mat& m = k;
  const Eigen::Index outer_count = s.inner_over_y ? m.rows() : m.cols();
  const Eigen::Index inner_count = s.inner_over_y ? m.cols() : m.rows();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < outer_count; ++i) {
    double inner = 0.0;
    for (Eigen::Index j = 0; j < inner_count; ++j) {
      const double v = s.inner_over_y ? m(i, j) : m(j, i);
      inner += std::pow(v, s.inner);
    }
    inner /= static_cast<double>(inner_count);
    acc += std::pow(inner, s.outer / s.inner);
  }
  acc /= static_cast<double>(outer_count);
  return std::pow(acc, s.root);
}

Mat pair_norms(const CubeSet& s, const MatrixField& left, const MatrixField& right, const MatrixField* symbol) {
  const auto m = static_cast<Eigen::Index>(s.size());
  Mat k(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const std::size_t ci = s.members[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m; ++j) {
      const std::size_t cj = s.members[static_cast<std::size_t>(j)];
      if (symbol)
        k(i, j) = spectral_norm(left[ci] * ((*symbol)[ci] - (*symbol)[cj]) * right[cj]);
      else
        k(i, j) = spectral_norm(left[ci] * right[cj]);
    }
  }
  return k;
}

Characteristic apq_characteristic(const MatrixField& w, const ExponentTriple& e, const Scope& scope) {
  e.validate();
  require_weight(w, "apq");
  require_scope(scope, w.grid(), "apq");
  const MatrixField wq = matrix_power(w, 1.0 / e.q);
  const MatrixField wmq = matrix_power(w, -1.0 / e.q);
  const MeanSchedule schedule{e.p_conj(), e.q, 1.0, true};
  return evaluate_scope(w.grid(), scope, CharKind::apq, CharKind::apq_restricted, e, [&](const CubeSet& s) {
    return std::make_pair(iterated_mean(pair_norms(s, wq, wmq), schedule), 1.0);
  });
}

Characteristic tilde_bmo(const MatrixField& left, const MatrixField& right, const MatrixField& symbol,
                         const ExponentTriple& e, const Scope& scope) {
  e.validate();
  require_weight(left, "tilde_bmo");
  require_weight(right, "tilde_bmo");
  require_symbol(symbol, "tilde_bmo");
  require_compatible(left, right, "tilde_bmo");
  require_compatible(left, symbol, "tilde_bmo");
  require_scope(scope, left.grid(), "tilde_bmo");
  const MatrixField lq = matrix_power(left, 1.0 / e.q);
  const MatrixField rmq = matrix_power(right, -1.0 / e.q);
  const MeanSchedule schedule{e.p_conj(), e.q, 1.0 / e.q, true};
  return evaluate_scope(left.grid(), scope, CharKind::bmo_tilde, CharKind::bmo_tilde, e, [&](const CubeSet& s) {
    return std::make_pair(iterated_mean(pair_norms(s, lq, rmq, &symbol), schedule), 1.0);
  });
}

Characteristic dual_tilde_bmo(const MatrixField& u, const MatrixField& v, const MatrixField& b,
                              const ExponentTriple& e, const Scope& scope) {
  e.validate();
  require_symbol(b, "dual_tilde_bmo");
  std::vector<Mat> bt;
  bt.reserve(b.size());
  for (const Mat& c : b.cells()) bt.push_back(c.transpose());
  const MatrixField b_star = MatrixField::symbol(b.grid(), b.n(), std::move(bt));
  Characteristic out = tilde_bmo(dual_weight(u, e), dual_weight(v, e), b_star, e.dual(), scope);
  out.kind = CharKind::bmo_tilde_dual;
  out.exponents = e;
  return out;
}

Characteristic bmo_classic(const MatrixField& u, const MatrixField& v, const MatrixField& b, const ExponentTriple& e,
                           const Scope& scope) {
  e.validate();
  require_weight(u, "bmo_classic");
  require_weight(v, "bmo_classic");
  require_symbol(b, "bmo_classic");
  require_compatible(u, v, "bmo_classic");
  require_compatible(u, b, "bmo_classic");
  require_scope(scope, u.grid(), "bmo_classic");
  const MatrixField uq = matrix_power(u, 1.0 / e.q);
  const MatrixField vq = matrix_power(v, 1.0 / e.q);
  return evaluate_scope(u.grid(), scope, CharKind::bmo_classic, CharKind::bmo_classic, e, [&](const CubeSet& s) {
    const Mat mv = mean_over(vq, s);
    const Mat mu_inv = inverse_of(mean_over(uq, s), "bmo_classic: average of U^{1/q}");
    const Mat mb = mean_over(b, s);
    double acc = 0.0;
    for (std::size_t c : s.members) acc += spectral_norm(mv * (b[c] - mb) * mu_inv);
    return std::make_pair(std::pow(acc / static_cast<double>(s.size()), 1.0 / e.q), 1.0);
  });
}

WeightedBmoEvaluator::WeightedBmoEvaluator(const MatrixField& u, const MatrixField& v, const MatrixField& b,
                                           const ExponentTriple& e, const MveeOptions& options)
    : e_(e), options_(options), b_(b) {
  e.validate();
  require_weight(u, "weighted BMO");
  require_weight(v, "weighted BMO");
  require_symbol(b, "weighted BMO");
  require_compatible(u, v, "weighted BMO");
  require_compatible(u, b, "weighted BMO");
  v_q_ = matrix_power(v, 1.0 / e.q);
  v_mq_ = matrix_power(v, -1.0 / e.q);
  u_q_ = matrix_power(u, 1.0 / e.q);
  u_mq_ = matrix_power(u, -1.0 / e.q);
  if (u.size() <= kGlobalKernelLimit) global_kernel_ = pair_norms(all_cells(u.grid()), v_q_, u_mq_, &b_);
}

Mat WeightedBmoEvaluator::symbol_kernel(const CubeSet& s) const {
  if (global_kernel_.size() == 0) return pair_norms(s, v_q_, u_mq_, &b_);
  const auto m = static_cast<Eigen::Index>(s.size());
  Mat k(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      k(i, j) = global_kernel_(static_cast<Eigen::Index>(s.members[static_cast<std::size_t>(i)]),
                               static_cast<Eigen::Index>(s.members[static_cast<std::size_t>(j)]));
  return k;
}

ReducingMatrix WeightedBmoEvaluator::reduce_u(const CubeSet& s) const {
  return reduce_powered(u_q_, s, e_.q, options_);
}

ReducingMatrix WeightedBmoEvaluator::reduce_v(const CubeSet& s) const {
  return reduce_powered(v_q_, s, e_.q, options_);
}

ReducingMatrix WeightedBmoEvaluator::reduce_v_dual(const CubeSet& s) const {
  return reduce_powered(v_mq_, s, e_.p_conj(), options_);
}

double WeightedBmoEvaluator::jn1(const CubeSet& s, const ReducingMatrix& vq, const ReducingMatrix& uq) const {
  const Mat u_inv = inverse_of(uq.A, "jn-1: reducing matrix of U");
  const Mat mb = mean_over(b_, s);
  double acc = 0.0;
  for (std::size_t c : s.members) acc += spectral_norm(vq.A * (b_[c] - mb) * u_inv);
  return acc / static_cast<double>(s.size());
}

double WeightedBmoEvaluator::jn2(const CubeSet& s, const ReducingMatrix& uq) const {
  const Mat u_inv = inverse_of(uq.A, "jn-2: reducing matrix of U");
  const Mat mb = mean_over(b_, s);
  std::vector<double> vals;
  vals.reserve(s.size());
  for (std::size_t c : s.members) vals.push_back(spectral_norm(v_q_[c] * (b_[c] - mb) * u_inv));
  return power_mean(vals, e_.q);
}

double WeightedBmoEvaluator::jn3(const CubeSet& s, const ReducingMatrix& vpq) const {
  const Mat vp_inv = inverse_of(vpq.A, "jn-3: reducing matrix of V^{-1/q}");
  const Mat mbt = mean_over(b_, s).transpose();
  std::vector<double> vals;
  vals.reserve(s.size());
  for (std::size_t c : s.members)
    vals.push_back(spectral_norm(u_mq_[c] * (b_[c].transpose() - mbt) * vp_inv));
  return power_mean(vals, e_.p_conj());
}

std::pair<double, double> WeightedBmoEvaluator::quantity(int k, const CubeSet& s) const {
  const double pc = e_.p_conj();
  const double qc = e_.q_conj();
  switch (k) {
    case 1: {
      const ReducingMatrix vq = reduce_v(s);
      const ReducingMatrix uq = reduce_u(s);
      return {jn1(s, vq, uq), vq.distortion * uq.distortion};
    }
    case 2: {
      const ReducingMatrix uq = reduce_u(s);
      return {jn2(s, uq), uq.distortion};
    }
    case 3: {
      const ReducingMatrix vpq = reduce_v_dual(s);
      return {jn3(s, vpq), vpq.distortion};
    }
    case 4:
      return {iterated_mean(symbol_kernel(s), {pc, e_.q, 1.0 / e_.q, true}), 1.0};
    case 5:
      return {iterated_mean(symbol_kernel(s), {e_.q, pc, 1.0 / pc, false}), 1.0};
    case 6:
      return {iterated_mean(symbol_kernel(s), {e_.q, qc, 1.0 / qc, false}), 1.0};
    default:
      throw ParameterError("jn_quantity: k must lie in 1..6");
  }
}

JnValues WeightedBmoEvaluator::evaluate(const CubeSet& s) const {
  const double pc = e_.p_conj();
  const double qc = e_.q_conj();
  const double q = e_.q;
  const ReducingMatrix uq = reduce_u(s);
  const ReducingMatrix vq = reduce_v(s);
  const ReducingMatrix vpq = reduce_v_dual(s);

  JnValues out;
  out.distortion_u = uq.distortion;
  out.distortion_v = vq.distortion;
  out.distortion_vp = vpq.distortion;
  out.jn[1] = jn1(s, vq, uq);
  out.jn[2] = jn2(s, uq);
  out.jn[3] = jn3(s, vpq);
  const Mat k = symbol_kernel(s);
  out.jn[4] = iterated_mean(k, {pc, q, 1.0 / q, true});
  out.jn[5] = iterated_mean(k, {q, pc, 1.0 / pc, false});
  out.jn[6] = iterated_mean(k, {q, qc, 1.0 / qc, false});

  {
    const Mat mu = mean_over(u_q_, s);
    const Mat mv = mean_over(v_q_, s);
    const Mat mu_inv = inverse_of(mu, "bmo_classic: average of U^{1/q}");
    const Mat mb = mean_over(b_, s);
    double acc = 0.0;
    for (std::size_t c : s.members) acc += spectral_norm(mv * (b_[c] - mb) * mu_inv);
    out.classic = std::pow(acc / static_cast<double>(s.size()), 1.0 / q);
  }

  // (A): B(x) - m B, (B): B(y) - m B, both with the jn-5 schedule
  const Mat mb = mean_over(b_, s);
  const auto m = static_cast<Eigen::Index>(s.size());
  Mat ka(m, m), kb(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const std::size_t ci = s.members[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m; ++j) {
      const std::size_t cj = s.members[static_cast<std::size_t>(j)];
      ka(i, j) = spectral_norm(v_q_[ci] * (b_[ci] - mb) * u_mq_[cj]);
      kb(i, j) = spectral_norm(v_q_[ci] * (b_[cj] - mb) * u_mq_[cj]);
    }
  }
  const MeanSchedule jn5_schedule{q, pc, 1.0 / pc, false};
  out.split_a = iterated_mean(ka, jn5_schedule);
  out.split_b = iterated_mean(kb, jn5_schedule);

  std::vector<double> fu, gv;
  fu.reserve(s.size());
  gv.reserve(s.size());
  for (std::size_t c : s.members) {
    fu.push_back(spectral_norm(uq.A * u_mq_[c]));
    gv.push_back(spectral_norm(v_q_[c] * vpq.A));
  }
  out.factor_u = power_mean(fu, pc);
  out.factor_v = power_mean(gv, q);
  out.apq_star_u = iterated_mean(pair_norms(s, u_q_, u_mq_), {q, pc, 1.0 / pc, false});
  out.apq_v = iterated_mean(pair_norms(s, v_q_, v_mq_), {pc, q, 1.0, true});
  return out;
}

Characteristic jn_quantity(int k, const MatrixField& u, const MatrixField& v, const MatrixField& b,
                           const ExponentTriple& e, const Scope& scope, const MveeOptions& options) {
  if (k < 1 || k > 6) throw ParameterError("jn_quantity: k must lie in 1..6");
  require_scope(scope, u.grid(), "jn_quantity");
  const WeightedBmoEvaluator eval(u, v, b, e, options);
  static constexpr CharKind kinds[] = {CharKind::jn1, CharKind::jn2, CharKind::jn3,
                                       CharKind::jn4, CharKind::jn5, CharKind::jn6};
  const CharKind kind = kinds[k - 1];
  return evaluate_scope(u.grid(), scope, kind, kind, e, [&](const CubeSet& s) { return eval.quantity(k, s); });
}

ScalarBloomInstance ScalarBloomInstance::make(const MatrixField& u, const MatrixField& v, const MatrixField& b,
                                              const ExponentTriple& e) {
  e.validate();
  require_weight(u, "bloom instance");
  require_weight(v, "bloom instance");
  require_symbol(b, "bloom instance");
  if (u.n() != 1 || v.n() != 1 || b.n() != 1) throw ParameterError("bloom instance: fields must be scalar");
  require_compatible(u, v, "bloom instance");
  require_compatible(u, b, "bloom instance");
  std::vector<double> nu(u.size());
  for (std::size_t c = 0; c < u.size(); ++c) nu[c] = std::pow(u[c](0, 0), 1.0 / e.q) * std::pow(v[c](0, 0), -1.0 / e.q);
  return {u, v, b, MatrixField::scalar_weight(u.grid(), nu)};
}

Characteristic bloom_nu(const ScalarBloomInstance& inst, const ExponentTriple& e, const Scope& scope) {
  require_scope(scope, inst.b.grid(), "bloom_nu");
  return evaluate_scope(inst.b.grid(), scope, CharKind::bloom_nu, CharKind::bloom_nu, e, [&](const CubeSet& s) {
    double mb = 0.0, mnu = 0.0;
    for (std::size_t c : s.members) {
      mb += inst.b[c](0, 0);
      mnu += inst.nu[c](0, 0);
    }
    mb /= static_cast<double>(s.size());
    mnu /= static_cast<double>(s.size());
    double osc = 0.0;
    for (std::size_t c : s.members) osc += std::abs(inst.b[c](0, 0) - mb);
    osc /= static_cast<double>(s.size());
    return std::make_pair(osc / mnu, 1.0);
  });
}

ScalarChainTerms scalar_chain_terms(const ScalarBloomInstance& inst, const ExponentTriple& e, const CubeSet& s) {
  const double q = e.q;
  const double qc = e.q_conj();
  double nu = 0.0, uq = 0.0, vq = 0.0, mu = 0.0, mv = 0.0;
  for (std::size_t c : s.members) {
    const double u = inst.u[c](0, 0);
    const double v = inst.v[c](0, 0);
    nu += inst.nu[c](0, 0);
    uq += std::pow(u, 1.0 / q);
    vq += std::pow(v, 1.0 / q);
    mu += u;
    mv += std::pow(v, -qc / q);
  }
  const double count = static_cast<double>(s.size());
  ScalarChainTerms out;
  out.mean_nu = nu / count;
  out.root_ratio = (uq / count) / (vq / count);
  out.holder_bound = std::pow(mu / count, 1.0 / q) * std::pow(mv / count, 1.0 / qc);
  return out;
}

}  // namespace mwlab
