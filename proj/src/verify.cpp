#include "mwlab/verify.hpp"

#include "mwlab/characteristics.hpp"
#include "mwlab/error.hpp"
#include "mwlab/norms.hpp"
#include "mwlab/operators.hpp"
#include "mwlab/orlicz.hpp"
#include "mwlab/parallel.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

namespace mwlab {

using json = nlohmann::ordered_json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------- config

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw FormatError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; }))
      throw FormatError(where + ": unknown key '" + it.key() + "'");
  }
}

template <class T>
void read_key(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& ex) {
    throw FormatError(where + "." + key + ": " + ex.what());
  }
}

json caps_json(const Caps& c) {
  return {{"apq", c.apq},
          {"jn_log_ratio", c.jn_log_ratio},
          {"lower_ratio", c.lower_ratio},
          {"domination", c.domination},
          {"averaging", c.averaging},
          {"averaging_truncation", c.averaging_truncation},
          {"orlicz", c.orlicz},
          {"bloom_log_ratio", c.bloom_log_ratio}};
}

json config_json(const BatchConfig& c) {
  json exps = json::array();
  for (const ExponentChoice& x : c.exponents) exps.push_back({{"alpha", x.alpha}, {"q", x.q}});
  return {{"schema", c.schema},
          {"d", c.d},
          {"levels", c.levels},
          {"ns", c.ns},
          {"seeds", c.seeds},
          {"seed_base", c.seed_base},
          {"exponents", exps},
          {"weight_family", c.weight_family},
          {"log_bound", c.log_bound},
          {"symbol_family", c.symbol_family},
          {"amplitude", c.amplitude},
          {"young_c", c.young_c},
          {"young_d", c.young_d},
          {"averaging_subsets", c.averaging_subsets},
          {"domination_max_level", c.domination_max_level},
          {"caps", caps_json(c.caps)},
          {"solver",
           {{"restarts", c.solver.restarts},
            {"max_iterations", c.solver.max_iterations},
            {"tolerance", c.solver.tolerance},
            {"mvee",
             {{"max_iterations", c.solver.mvee.max_iterations},
              {"tolerance", c.solver.mvee.tolerance},
              {"directions", c.solver.mvee.directions}}}}},
          {"hard_tolerance", c.hard_tolerance}};
}

// ---------------------------------------------------------------- instances

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct InstanceSpec {
  int L = 0;
  int n = 1;
  std::size_t exponent_index = 0;
  std::uint64_t seed = 0;  // user-facing seed (seed_base + k)
  ExponentTriple e;

  std::uint64_t derived(int offset) const {
    return mix(seed ^ (static_cast<std::uint64_t>(L) << 40) ^ (static_cast<std::uint64_t>(n) << 48) ^
               (static_cast<std::uint64_t>(exponent_index) << 56)) +
           static_cast<std::uint64_t>(offset);
  }
};

struct Instance {
  GridSpec grid;
  int n = 1;
  MatrixField u, v, b;
  VectorField f, g;
};

std::vector<InstanceSpec> expand(const BatchConfig& cfg) {
  std::vector<InstanceSpec> out;
  for (std::size_t ei = 0; ei < cfg.exponents.size(); ++ei) {
    const ExponentTriple e = ExponentTriple::from_alpha_q(cfg.exponents[ei].alpha, cfg.exponents[ei].q, cfg.d);
    for (int L : cfg.levels)
      for (int n : cfg.ns)
        for (int s = 0; s < cfg.seeds; ++s)
          out.push_back({L, n, ei, cfg.seed_base + static_cast<std::uint64_t>(s), e});
  }
  return out;
}

// ---------------------------------------------------------------- records

struct Recorder {
  InstanceReport& report;

  static double scale(double a, double b) { return std::max({std::abs(a), std::abs(b)}); }

  static double ratio(double lhs, double rhs) {
    if (rhs == 0.0) return lhs == 0.0 ? 0.0 : kInf;
    return lhs / rhs;
  }

  // lhs <= rhs up to relative tolerance
  void le(const std::string& anchor, double lhs, double rhs, double tol, const std::string& where = {}) {
    const bool pass = std::isfinite(lhs) && std::isfinite(rhs) && lhs <= rhs + tol * scale(lhs, rhs);
    report.records.push_back({anchor, true, lhs, rhs, ratio(lhs, rhs), tol, pass, where});
  }

  void eq(const std::string& anchor, double lhs, double rhs, double tol, const std::string& where = {}) {
    const bool pass = std::isfinite(lhs) && std::isfinite(rhs) && std::abs(lhs - rhs) <= tol * scale(lhs, rhs);
    report.records.push_back({anchor, true, lhs, rhs, ratio(lhs, rhs), tol, pass, where});
  }

  // soft: value <= cap
  void cap(const std::string& anchor, double value, double cap, const std::string& where = {}) {
    const bool pass = !std::isnan(value) && value <= cap;
    report.records.push_back({anchor, false, value, cap, value, 0.0, pass, where});
  }
};

// Keeps, per anchor, only the worst of many per-cube comparisons.
class WorstOf {
 public:
  WorstOf(std::string anchor, bool equality, double tol) : anchor_(std::move(anchor)), eq_(equality), tol_(tol) {}

  void add(double lhs, double rhs, const std::string& where) {
    const double s = Recorder::scale(lhs, rhs);
    double excess = 0.0;
    if (!std::isfinite(lhs) || !std::isfinite(rhs))
      excess = kInf;
    else if (s > 0.0)
      excess = eq_ ? std::abs(lhs - rhs) / s : (lhs - rhs) / s;
    else
      excess = eq_ ? 0.0 : -1.0;
    if (count_++ == 0 || excess > excess_) {
      excess_ = excess;
      lhs_ = lhs;
      rhs_ = rhs;
      where_ = where;
    }
  }

  void flush(Recorder& rec) const {
    if (count_ == 0) return;
    const std::string where = where_ + " (worst of " + std::to_string(count_) + ")";
    if (eq_)
      rec.eq(anchor_, lhs_, rhs_, tol_, where);
    else
      rec.le(anchor_, lhs_, rhs_, tol_, where);
  }

 private:
  std::string anchor_;
  bool eq_;
  double tol_;
  std::size_t count_ = 0;
  double excess_ = 0.0;
  double lhs_ = 0.0;
  double rhs_ = 0.0;
  std::string where_;
};

double log_ratio(double a, double b) {
  if (a == 0.0 && b == 0.0) return 0.0;
  if (a == 0.0 || b == 0.0) return kInf;
  return std::abs(std::log(a / b));
}

OpNormOptions solver_options(const BatchConfig& cfg, std::uint64_t seed) {
  OpNormOptions o;
  o.restarts = cfg.solver.restarts;
  o.max_iterations = cfg.solver.max_iterations;
  o.tolerance = cfg.solver.tolerance;
  o.seed = seed;
  return o;
}

YoungFunction young_c(const BatchConfig& cfg, const ExponentTriple& e) {
  return cfg.young_c.empty() ? YoungFunction::power_log(e.q, 0.5) : YoungFunction::parse(cfg.young_c);
}

YoungFunction young_d(const BatchConfig& cfg, const ExponentTriple& e) {
  return cfg.young_d.empty() ? YoungFunction::power_log(e.p_conj(), 0.5) : YoungFunction::parse(cfg.young_d);
}

std::vector<double> cell_norms(const VectorField& f) {
  std::vector<double> out;
  out.reserve(f.values.size());
  for (const Vec& v : f.values) out.push_back(v.norm());
  return out;
}

// ---------------------------------------------------------------- suites

using SuiteBody = std::function<void(const BatchConfig&, const InstanceSpec&, const Instance&, InstanceReport&)>;

void suite_jn(const BatchConfig& cfg, const InstanceSpec& spec, const Instance& in, InstanceReport& rep) {
  Recorder rec{rep};
  const ExponentTriple& e = spec.e;
  const double tol = cfg.hard_tolerance;
  const WeightedBmoEvaluator eval(in.u, in.v, in.b, e, cfg.solver.mvee);
  const CubeFamily family = standard_family(in.grid);
  std::vector<JnValues> per(family.sets.size());
  parallel_for(per.size(), [&](std::size_t i) { per[i] = eval.evaluate(family.sets[i]); });

  WorstOf jn65("jn6 <= jn5 per cube", false, tol);
  WorstOf split("jn5 <= (A) + (B) per cube", false, tol);
  WorstOf split_a("(A) <= jn2 * F_U per cube", false, tol);
  WorstOf split_b("(B) <= G_V * jn3 per cube", false, tol);
  // these two use sample-certified distortions
  WorstOf fu("F_U <= distortion(U_Q) * A*_Q(U) per cube", false, 1e-6);
  WorstOf gv("G_V <= distortion(V'_Q) * apq_Q(V)^{1/q} per cube", false, 1e-6);
  std::array<double, 7> sup{};
  double classic = 0.0;
  for (std::size_t i = 0; i < per.size(); ++i) {
    const JnValues& x = per[i];
    const std::string where = family.cubes[i].describe();
    jn65.add(x.jn[6], x.jn[5], where);
    split.add(x.jn[5], x.split_a + x.split_b, where);
    split_a.add(x.split_a, x.jn[2] * x.factor_u, where);
    split_b.add(x.split_b, x.factor_v * x.jn[3], where);
    fu.add(x.factor_u, x.distortion_u * x.apq_star_u, where);
    gv.add(x.factor_v, x.distortion_vp * std::pow(x.apq_v, 1.0 / e.q), where);
    for (int k = 1; k <= 6; ++k) sup[k] = std::max(sup[k], x.jn[k]);
    classic = std::max(classic, x.classic);
  }
  for (const WorstOf* w : {&jn65, &split, &split_a, &split_b, &fu, &gv}) w->flush(rec);

  const double tilde = tilde_bmo(in.v, in.u, in.b, e).value;
  const double dual = dual_tilde_bmo(in.u, in.v, in.b, e).value;
  rec.eq("tilde BMO = jn4", tilde, sup[4], tol);
  rec.eq("dual tilde BMO = jn5", dual, sup[5], tol);

  std::vector<std::pair<std::string, double>> named;
  for (int k = 1; k <= 6; ++k) named.emplace_back("jn" + std::to_string(k), sup[k]);
  named.emplace_back("classic", classic);
  named.emplace_back("tilde", tilde);
  named.emplace_back("dual", dual);
  double worst = 0.0;
  std::string pair = "-";
  for (std::size_t a = 0; a < named.size(); ++a)
    for (std::size_t b = a + 1; b < named.size(); ++b) {
      const double lr = log_ratio(named[a].second, named[b].second);
      if (lr > worst || (std::isinf(lr) && !std::isinf(worst))) {
        worst = lr;
        pair = named[a].first + "/" + named[b].first;
      }
    }
  rec.cap("max pairwise |log ratio| of BMO functionals", worst, cfg.caps.jn_log_ratio, pair);
  for (const auto& [name, value] : named) rep.values[name] = value;
  rep.values["jn_max_log_ratio"] = worst;
}

void suite_upper(const BatchConfig& cfg, const InstanceSpec& spec, const Instance& in, InstanceReport& rep) {
  Recorder rec{rep};
  const ExponentTriple& e = spec.e;
  const double tol = cfg.hard_tolerance;
  const double pc = e.p_conj();
  const double factor = std::pow(3.0, e.q / pc);

  const BlockWeight bw = build_block_weight(in.u, in.v, in.b, e);
  const MatrixField wq = matrix_power(bw.w, 1.0 / e.q), wmq = matrix_power(bw.w, -1.0 / e.q);
  const MatrixField uq = matrix_power(in.u, 1.0 / e.q), umq = matrix_power(in.u, -1.0 / e.q);
  const MatrixField vq = matrix_power(in.v, 1.0 / e.q), vmq = matrix_power(in.v, -1.0 / e.q);
  const MeanSchedule apq_schedule{pc, e.q, 1.0, true};

  const CubeFamily family = standard_family(in.grid);
  std::vector<std::array<double, 4>> per(family.sets.size());
  parallel_for(per.size(), [&](std::size_t i) {
    const CubeSet& s = family.sets[i];
    per[i] = {iterated_mean(pair_norms(s, wq, wmq), apq_schedule), iterated_mean(pair_norms(s, uq, umq), apq_schedule),
              iterated_mean(pair_norms(s, vq, vmq), apq_schedule),
              iterated_mean(pair_norms(s, vq, umq, &in.b), apq_schedule)};
  });
  WorstOf upper("apq(W) <= 3^{q/p'} (apq(U) + apq(V) + tilde^q) per cube", false, tol);
  WorstOf lower("max(apq(U), apq(V), tilde^q) <= apq(W) per cube", false, tol);
  std::array<double, 4> sup{};
  for (std::size_t i = 0; i < per.size(); ++i) {
    const auto& [w, a, b, t] = per[i];
    const std::string where = family.cubes[i].describe();
    upper.add(w, factor * (a + b + t), where);
    const double m = std::max({a, b, t});
    lower.add(m, w, where);
    for (int k = 0; k < 4; ++k) sup[k] = std::max(sup[k], per[i][k]);
  }
  upper.flush(rec);
  lower.flush(rec);
  rec.le("apq(W) <= 3^{q/p'} (apq(U) + apq(V) + tilde^q)", sup[0], factor * (sup[1] + sup[2] + sup[3]), tol);
  rep.values["apq_w"] = sup[0];
  rep.values["apq_u"] = sup[1];
  rep.values["apq_v"] = sup[2];
  rep.values["tilde_q"] = sup[3];
  rep.values["apq_w_over_max_summand"] = sup[0] / std::max({sup[1], sup[2], sup[3]});

  rec.le("block weight inverse residual", bw.inverse_residual, 1e-10, 0.0);
  const OperatorMatrix t = build_ialpha(in.grid, e, in.n);
  const OperatorMatrix comm = conjugate(build_commutator(t, in.b), in.v, in.u, e);
  const OperatorMatrix big = bw.conjugated(t);
  const OperatorMatrix ur = upper_right(big);
  const double diff = (ur.entries - comm.entries).cwiseAbs().maxCoeff();
  rec.le("upper-right block of Phi T Phi^{-1} = conjugated commutator (max entry difference)", diff, 1e-10, 0.0);

  const OpNormEstimate small = mixed_opnorm(comm, e.p, e.q, solver_options(cfg, spec.derived(7)));
  OpNormOptions big_opts = solver_options(cfg, spec.derived(8));
  const Vec w = small.witness.flatten();
  Vec embedded = Vec::Zero(2 * w.size());
  for (std::size_t c = 0; c < in.grid.cell_count(); ++c)
    embedded.segment(static_cast<Eigen::Index>(2 * c * in.n + in.n), in.n) =
        w.segment(static_cast<Eigen::Index>(c * in.n), in.n);
  big_opts.warm_start = embedded;
  const OpNormEstimate whole = mixed_opnorm(big, e.p, e.q, big_opts);
  rec.le("||conjugated commutator|| <= ||Phi T Phi^{-1}||", small.estimate, whole.estimate, tol);
  rep.values["commutator_estimate"] = small.estimate;
  rep.values["block_estimate"] = whole.estimate;

  const double tilde = std::pow(sup[3], 1.0 / e.q);
  if (tilde > 0.0) {
    const MatrixField bn = MatrixField::symbol(in.grid, in.n, [&] {
      std::vector<Mat> cells;
      for (const Mat& m : in.b.cells()) cells.push_back(m / tilde);
      return cells;
    }());
    rec.eq("tilde BMO of B / ||B||_tilde = 1", tilde_bmo(in.v, in.u, bn, e).value, 1.0, tol);
    rec.eq("tilde BMO of 2B = 2 tilde BMO of B", tilde_bmo(in.v, in.u, [&] {
             std::vector<Mat> cells;
             for (const Mat& m : in.b.cells()) cells.push_back(2.0 * m);
             return MatrixField::symbol(in.grid, in.n, std::move(cells));
           }(), e).value,
           2.0 * tilde, tol);
  }
}

void suite_lower(const BatchConfig& cfg, const InstanceSpec& spec, const Instance& in, InstanceReport& rep) {
  Recorder rec{rep};
  const ExponentTriple& e = spec.e;
  const double tol = cfg.hard_tolerance;
  const double tilde = tilde_bmo(in.v, in.u, in.b, e).value;
  const double dual = dual_tilde_bmo(in.u, in.v, in.b, e).value;
  const OperatorMatrix comm = conjugate(build_commutator(build_ialpha(in.grid, e, in.n), in.b), in.v, in.u, e);
  const OpNormEstimate est = mixed_opnorm(comm, e.p, e.q, solver_options(cfg, spec.derived(7)));
  rec.eq("commutator witness reproduces the lower bound", mixed_ratio(comm, est.witness, e.p, e.q), est.lower, 1e-10);
  const double top = std::max(tilde, dual);
  const double ratio = Recorder::ratio(top, est.lower);
  rec.cap("max(tilde, dual tilde) / commutator lower bound", ratio, cfg.caps.lower_ratio);
  rep.values["tilde"] = tilde;
  rep.values["dual"] = dual;
  rep.values["commutator_lower"] = est.lower;
  rep.values["lower_ratio"] = ratio;

  // truncation sets E_M for increasing M
  const CubeSet ambient = all_cells(in.grid);
  std::vector<double> norms;
  for (std::size_t c = 0; c < in.grid.cell_count(); ++c) norms.push_back(truncation_norm(in.u, in.v, c));
  std::sort(norms.begin(), norms.end());
  std::vector<double> thresholds{least_truncation_threshold(in.u, in.v, ambient)};
  for (double frac : {0.75, 0.9}) {
    const double m = std::nextafter(norms[static_cast<std::size_t>(frac * (norms.size() - 1))], kInf);
    if (m > thresholds.back()) thresholds.push_back(m);
  }
  thresholds.push_back(std::nextafter(norms.back(), kInf));
  std::vector<std::array<double, 2>> restricted;
  for (double m : thresholds) {
    const CubeSet em = truncation_set(in.u, in.v, m, ambient);
    restricted.push_back({tilde_bmo(in.v, in.u, in.b, e, em).value, dual_tilde_bmo(in.u, in.v, in.b, e, em).value});
  }
  std::size_t monotone = 0;
  for (std::size_t k = 1; k < restricted.size(); ++k)
    if (restricted[k][0] >= restricted[k - 1][0] && restricted[k][1] >= restricted[k - 1][1]) ++monotone;
  rep.values["em_steps"] = static_cast<double>(restricted.size() - 1);
  rep.values["em_monotone_steps"] = static_cast<double>(monotone);

  const CubeSet saturated = truncation_set(in.u, in.v, thresholds.back(), ambient);
  rec.eq("E_M saturates above every cell norm", static_cast<double>(saturated.size()),
         static_cast<double>(ambient.size()), 0.0);
  const WeightedBmoEvaluator eval(in.u, in.v, in.b, e, cfg.solver.mvee);
  rec.eq("saturated restricted tilde BMO = whole-domain value", restricted.back()[0], eval.quantity(4, ambient).first,
         tol);
  rec.eq("saturated restricted dual tilde BMO = whole-domain value", restricted.back()[1],
         eval.quantity(5, ambient).first, tol);
}

void suite_averaging(const BatchConfig& cfg, const InstanceSpec& spec, const Instance& in, InstanceReport& rep) {
  Recorder rec{rep};
  const ExponentTriple& e = spec.e;
  const MatrixField& w = in.u;
  std::mt19937_64 rng(spec.derived(6));
  const std::vector<Cube> cubes = enumerate_cubes(in.grid, in.grid.L - 1);
  const OperatorMatrix ialpha = build_ialpha(in.grid, e, in.n);
  double worst_ratio = 1.0, worst_trunc = 0.0;
  for (int k = 0; k < cfg.averaging_subsets; ++k) {
    const Cube q = cubes[std::uniform_int_distribution<std::size_t>(0, cubes.size() - 1)(rng)];
    CubeSet cells = cells_of(q);
    std::shuffle(cells.members.begin(), cells.members.end(), rng);
    const std::size_t total = cells.size();
    const std::size_t min_size = k % 2 == 0 ? (total + 1) / 2 : 1;
    const std::size_t size = std::uniform_int_distribution<std::size_t>(min_size, total)(rng);
    CubeSet es{in.grid, std::vector<std::size_t>(cells.members.begin(), cells.members.begin() + size)};
    std::sort(es.members.begin(), es.members.end());
    const std::string where = q.describe() + " |E|=" + std::to_string(size) + "/" + std::to_string(total);

    const OpNormEstimate avg = opnorm(build_averaging(es, e, in.n), w, w, e, solver_options(cfg, spec.derived(20 + k)));
    const ReducingMatrix m = reduce(w, es, e.q, 1.0 / e.q, cfg.solver.mvee);
    const ReducingMatrix mp = reduce(w, es, e.p_conj(), -1.0 / e.q, cfg.solver.mvee);
    const double product = spectral_norm(mp.A * m.A);
    const double slack = m.distortion * mp.distortion;
    const double ratio = avg.estimate / product;
    const double cap = cfg.caps.averaging * slack;
    rec.cap("||A_E|| / ||M'_E M_E||", ratio, cap, where);
    rec.cap("||M'_E M_E|| / ||A_E||", 1.0 / ratio, cap, where);
    if (std::abs(std::log(ratio)) > std::abs(std::log(worst_ratio))) worst_ratio = ratio;

    const OpNormEstimate trunc = opnorm(truncate(ialpha, es), w, w, e, solver_options(cfg, spec.derived(40 + k)));
    const double growth = std::pow(static_cast<double>(total) / static_cast<double>(size), 1.0 - e.alpha / e.d);
    const double c = product / (growth * trunc.lower);
    rec.cap("||M'_E M_E|| / ((|Q|/|E|)^{1-alpha/d} ||chi_E I_alpha chi_E||)", c, cfg.caps.averaging_truncation,
            where);
    worst_trunc = std::max(worst_trunc, c);
    rep.values["distortion_product_" + std::to_string(k)] = slack;
  }
  rep.values["averaging_ratio"] = worst_ratio;
  rep.values["averaging_truncation"] = worst_trunc;
}

void suite_scalar(const BatchConfig& cfg, const InstanceSpec& spec, const Instance& in, InstanceReport& rep) {
  Recorder rec{rep};
  const ExponentTriple& e = spec.e;
  const ScalarBloomInstance inst = ScalarBloomInstance::make(in.u, in.v, in.b, e);
  const CubeFamily family = standard_family(in.grid);
  WorstOf holder("m_Q nu <= (m_Q u)^{1/q} (m_Q v^{-q'/q})^{1/q'} per cube", false, cfg.hard_tolerance);
  double lo = kInf, hi = 0.0;
  for (std::size_t i = 0; i < family.sets.size(); ++i) {
    const ScalarChainTerms t = scalar_chain_terms(inst, e, family.sets[i]);
    holder.add(t.mean_nu, t.holder_bound, family.cubes[i].describe());
    const double r = t.mean_nu / t.root_ratio;
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  holder.flush(rec);
  rep.values["nu_ratio_min"] = lo;
  rep.values["nu_ratio_max"] = hi;
  rec.cap("|log(m_Q nu / ((m_Q u^{1/q}) (m_Q v^{1/q})^{-1}))| over cubes", std::max(std::abs(std::log(lo)), std::abs(std::log(hi))),
          cfg.caps.bloom_log_ratio);
  const double classic = bmo_classic(in.u, in.v, in.b, e).value;
  const double bloom = bloom_nu(inst, e).value;
  const double lr = log_ratio(classic, bloom);
  rec.cap("|log(classic BMO / BMO_nu)|", lr, cfg.caps.bloom_log_ratio);
  rep.values["classic"] = classic;
  rep.values["bloom"] = bloom;
  rep.values["bloom_log_ratio"] = lr;
}

void suite_orlicz(const BatchConfig& cfg, const InstanceSpec& spec, const Instance& in, InstanceReport& rep) {
  Recorder rec{rep};
  const ExponentTriple& e = spec.e;
  const double tol = cfg.hard_tolerance;
  const YoungFunction c = young_c(cfg, e), d = young_d(cfg, e);
  const YoungFunction cbar = c.complementary(), dbar = d.complementary();

  const BumpConstants bump = orlicz_bump_constants(in.u, in.v, in.b, e, c, d);
  const OperatorMatrix comm = conjugate(build_commutator(build_ialpha(in.grid, e, in.n), in.b), in.v, in.u, e);
  const OpNormEstimate est = mixed_opnorm(comm, e.p, e.q, solver_options(cfg, spec.derived(7)));
  const double kmin = std::min(bump.kappa1, bump.kappa2);
  const double ratio = Recorder::ratio(est.lower, kmin);
  rec.cap("commutator lower bound / min(kappa1, kappa2)", ratio, cfg.caps.orlicz);
  rep.values["kappa1"] = bump.kappa1;
  rep.values["kappa2"] = bump.kappa2;
  rep.values["commutator_lower"] = est.lower;
  rep.values["orlicz_ratio"] = ratio;

  const BumpConstants power = orlicz_bump_constants(in.u, in.v, in.b, e, YoungFunction::power(e.q),
                                                    YoungFunction::power(e.p_conj()));
  rec.eq("kappa1 with power functions = jn5", power.kappa1, jn_quantity(5, in.u, in.v, in.b, e).value, tol);
  rec.eq("kappa2 with power functions = jn4", power.kappa2, jn_quantity(4, in.u, in.v, in.b, e).value, tol);

  // Luxemburg two-sidedness on the test functions over the coarse cubes
  const std::vector<double> fn = cell_norms(in.f), gn = cell_norms(in.g);
  const std::vector<Cube> coarse = enumerate_cubes(in.grid, std::min(in.grid.L, 2));
  const std::array<std::pair<const char*, const YoungFunction*>, 4> phis{
      {{"C", &c}, {"D", &d}, {"Cbar", &cbar}, {"Dbar", &dbar}}};
  for (const auto& [name, phi] : phis) {
    WorstOf lower(std::string("||f||_") + name + " <= ||f||*_" + name, false, tol);
    WorstOf upper(std::string("||f||*_") + name + " <= 2 ||f||_" + name, false, tol);
    for (const Cube& q : coarse) {
      const CubeSet s = cells_of(q);
      for (const auto* field : {&fn, &gn}) {
        const std::vector<double> vals = restrict_values(*field, s);
        const double lux = luxemburg(vals, *phi);
        const double star = luxemburg_star(vals, *phi);
        const std::string where = q.describe() + (field == &fn ? " f" : " g");
        lower.add(lux, star, where);
        upper.add(star, 2.0 * lux, where);
      }
    }
    lower.flush(rec);
    upper.flush(rec);
  }

  const SparseFamily sparse = build_sparse_family(in.f, dbar, default_sparse_parameter(in.grid.d), in.grid);
  rec.le("1/2 <= |E_P| / |P| over the sparse family", 0.5, sparse.min_fraction, tol);
  rec.eq("sparse sets E_P pairwise disjoint (overlapping cells)", sparse.disjoint ? 0.0 : 1.0, 0.0, 0.0);
  rec.le("sum |E_P| <= 1", sparse.total_measure, 1.0, tol);
  std::size_t stopping = 0;
  for (const auto& level : sparse.stopping) stopping += level.size();
  rep.values["sparse_cubes"] = static_cast<double>(stopping);
  rep.values["sparse_min_fraction"] = sparse.min_fraction;

  if (in.grid.L <= cfg.domination_max_level) {
    const DominationResult dom = domination_sum(in.u, in.v, in.b, e, in.f, in.g, std::make_pair(c, d));
    rec.cap("domination LHS / RHS", dom.ratio, cfg.caps.domination);
    WorstOf holder("domination summand <= generalized Hoelder bound per cube", false, tol);
    for (const DominationCube& row : dom.cubes) holder.add(row.summand, row.holder_bound, row.cube.describe());
    holder.flush(rec);
    rep.values["domination_ratio"] = dom.ratio;
  }
}

const std::vector<std::pair<std::string, SuiteBody>>& suites() {
  static const std::vector<std::pair<std::string, SuiteBody>> table{
      {"jn", suite_jn},         {"upper", suite_upper},   {"lower", suite_lower},
      {"averaging", suite_averaging}, {"scalar", suite_scalar}, {"orlicz", suite_orlicz},
  };
  return table;
}

Instance make_instance(const BatchConfig& cfg, const std::string& suite, const InstanceSpec& spec,
                       InstanceReport& rep) {
  Instance in;
  in.grid = GridSpec{cfg.d, spec.L, {0, 0}};
  in.n = spec.n;
  WeightParams params;
  params.log_bound = cfg.log_bound;
  params.exponents = spec.e;
  GeneratedWeight u = generate_weight(spec.derived(1), in.grid, spec.n, cfg.weight_family, params);
  GeneratedWeight v;
  if (suite == "scalar") {
    // power-type v against a randomly perturbed u
    const double guard = cfg.d * std::min(spec.e.q / spec.e.p_conj(), 1.0);
    WeightParams power = params;
    power.beta = {(spec.seed % 2 == 0 ? 0.5 : -0.5) * guard};
    v = generate_weight(spec.derived(2), in.grid, spec.n, "scalar-power", power);
  } else {
    v = generate_weight(spec.derived(2), in.grid, spec.n, cfg.weight_family, params);
  }
  in.u = std::move(u.field);
  in.v = std::move(v.field);
  for (auto* w : {&u.warnings, &v.warnings}) rep.warnings.insert(rep.warnings.end(), w->begin(), w->end());
  in.b = generate_symbol(spec.derived(3), in.grid, spec.n, cfg.symbol_family, cfg.amplitude);
  in.f = generate_vector(spec.derived(4), in.grid, spec.n);
  in.g = generate_vector(spec.derived(5), in.grid, spec.n);
  return in;
}

InstanceReport run_instance(const BatchConfig& cfg, const std::string& suite, const SuiteBody& body,
                            const InstanceSpec& spec) {
  InstanceReport rep;
  rep.id = "L" + std::to_string(spec.L) + "-n" + std::to_string(spec.n) + "-e" + std::to_string(spec.exponent_index) +
           "-s" + std::to_string(spec.seed);
  rep.d = cfg.d;
  rep.L = spec.L;
  rep.n = spec.n;
  rep.seed = spec.seed;
  rep.e = spec.e;
  if (suite == "scalar" && spec.n != 1) {
    rep.skipped = true;
    rep.reason = "scalar suite runs on n = 1 only";
    return rep;
  }
  Instance in;
  try {
    in = make_instance(cfg, suite, spec, rep);
    const double au = apq_characteristic(in.u, spec.e).value;
    const double av = apq_characteristic(in.v, spec.e).value;
    rep.values["apq_u"] = au;
    rep.values["apq_v"] = av;
    if (!(au <= cfg.caps.apq) || !(av <= cfg.caps.apq)) {
      rep.skipped = true;
      rep.reason = "A_{p,q} characteristic above the cap";
      return rep;
    }
  } catch (const Error& ex) {
    rep.skipped = true;
    rep.reason = std::string("generation failed: ") + ex.what();
    return rep;
  }
  try {
    body(cfg, spec, in, rep);
  } catch (const Error& ex) {
    rep.records.push_back({"evaluation completed", true, 0.0, 0.0, 0.0, 0.0, false, ex.what()});
  }
  return rep;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

json number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

}  // namespace

void BatchConfig::validate() const {
  if (schema != "mwlab.batch/1") throw FormatError("batch config: unsupported schema '" + schema + "'");
  if (d != 1 && d != 2) throw FormatError("batch config: d must be 1 or 2");
  if (levels.empty() || ns.empty() || exponents.empty()) throw FormatError("batch config: empty levels, ns or exponents");
  for (int L : levels)
    if (L < 1 || L * d > 10) throw FormatError("batch config: level " + std::to_string(L) + " out of range");
  for (int n : ns)
    if (n < 1 || n > 4) throw FormatError("batch config: n must lie in 1..4");
  if (seeds < 1) throw FormatError("batch config: seeds must be positive");
  for (const ExponentChoice& x : exponents) {
    try {
      const ExponentTriple e = ExponentTriple::from_alpha_q(x.alpha, x.q, d);
      if (!(e.alpha > 0.0)) throw ParameterError("alpha must be positive");
    } catch (const ParameterError& ex) {
      throw FormatError(std::string("batch config: exponent triple rejected: ") + ex.what());
    }
  }
  for (double t : {log_bound, amplitude, hard_tolerance, solver.tolerance, solver.mvee.tolerance, caps.apq,
                   caps.jn_log_ratio, caps.lower_ratio, caps.domination, caps.averaging, caps.averaging_truncation,
                   caps.orlicz, caps.bloom_log_ratio})
    if (!(t > 0.0) || !std::isfinite(t)) throw FormatError("batch config: tolerances, caps and scales must be positive");
  if (solver.restarts < 1 || solver.max_iterations < 1 || solver.mvee.max_iterations < 1 || solver.mvee.directions < 0)
    throw FormatError("batch config: solver counts must be positive");
  if (averaging_subsets < 1) throw FormatError("batch config: averaging_subsets must be positive");
  try {
    if (!young_c.empty()) YoungFunction::parse(young_c);
    if (!young_d.empty()) YoungFunction::parse(young_d);
  } catch (const ParameterError& ex) {
    throw FormatError(std::string("batch config: ") + ex.what());
  }
}

BatchConfig parse_batch_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& ex) {
    throw FormatError(std::string("batch config: ") + ex.what());
  }
  reject_unknown(j,
                 {"schema", "d", "levels", "ns", "seeds", "seed_base", "exponents", "weight_family", "log_bound",
                  "symbol_family", "amplitude", "young_c", "young_d", "averaging_subsets", "domination_max_level",
                  "caps", "solver", "hard_tolerance"},
                 "config");
  BatchConfig c;
  if (!j.contains("schema")) throw FormatError("config: missing 'schema'");
  read_key(j, "schema", c.schema, "config");
  read_key(j, "d", c.d, "config");
  read_key(j, "levels", c.levels, "config");
  read_key(j, "ns", c.ns, "config");
  read_key(j, "seeds", c.seeds, "config");
  read_key(j, "seed_base", c.seed_base, "config");
  if (j.contains("exponents")) {
    if (!j["exponents"].is_array()) throw FormatError("config.exponents: expected an array");
    c.exponents.clear();
    for (const json& x : j["exponents"]) {
      reject_unknown(x, {"alpha", "q"}, "config.exponents");
      ExponentChoice ec;
      read_key(x, "alpha", ec.alpha, "config.exponents");
      read_key(x, "q", ec.q, "config.exponents");
      c.exponents.push_back(ec);
    }
  }
  read_key(j, "weight_family", c.weight_family, "config");
  read_key(j, "log_bound", c.log_bound, "config");
  read_key(j, "symbol_family", c.symbol_family, "config");
  read_key(j, "amplitude", c.amplitude, "config");
  read_key(j, "young_c", c.young_c, "config");
  read_key(j, "young_d", c.young_d, "config");
  read_key(j, "averaging_subsets", c.averaging_subsets, "config");
  read_key(j, "domination_max_level", c.domination_max_level, "config");
  read_key(j, "hard_tolerance", c.hard_tolerance, "config");
  if (j.contains("caps")) {
    const json& k = j["caps"];
    reject_unknown(k,
                   {"apq", "jn_log_ratio", "lower_ratio", "domination", "averaging", "averaging_truncation", "orlicz",
                    "bloom_log_ratio"},
                   "config.caps");
    read_key(k, "apq", c.caps.apq, "config.caps");
    read_key(k, "jn_log_ratio", c.caps.jn_log_ratio, "config.caps");
    read_key(k, "lower_ratio", c.caps.lower_ratio, "config.caps");
    read_key(k, "domination", c.caps.domination, "config.caps");
    read_key(k, "averaging", c.caps.averaging, "config.caps");
    read_key(k, "averaging_truncation", c.caps.averaging_truncation, "config.caps");
    read_key(k, "orlicz", c.caps.orlicz, "config.caps");
    read_key(k, "bloom_log_ratio", c.caps.bloom_log_ratio, "config.caps");
  }
  if (j.contains("solver")) {
    const json& s = j["solver"];
    reject_unknown(s, {"restarts", "max_iterations", "tolerance", "mvee"}, "config.solver");
    read_key(s, "restarts", c.solver.restarts, "config.solver");
    read_key(s, "max_iterations", c.solver.max_iterations, "config.solver");
    read_key(s, "tolerance", c.solver.tolerance, "config.solver");
    if (s.contains("mvee")) {
      const json& m = s["mvee"];
      reject_unknown(m, {"max_iterations", "tolerance", "directions"}, "config.solver.mvee");
      read_key(m, "max_iterations", c.solver.mvee.max_iterations, "config.solver.mvee");
      read_key(m, "tolerance", c.solver.mvee.tolerance, "config.solver.mvee");
      read_key(m, "directions", c.solver.mvee.directions, "config.solver.mvee");
    }
  }
  c.validate();
  return c;
}

BatchConfig load_batch_config(const std::string& source) {
  if (source == "default") return BatchConfig{};
  std::ifstream is(source);
  if (!is) throw FormatError("batch config: cannot open '" + source + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_batch_config(ss.str());
}

std::string batch_config_json(const BatchConfig& cfg) { return config_json(cfg).dump(2); }

std::size_t ExperimentReport::hard_failures() const {
  std::size_t n = 0;
  for (const InstanceReport& i : instances)
    for (const AssertionRecord& r : i.records) n += r.hard && !r.pass;
  return n;
}

std::size_t ExperimentReport::soft_failures() const {
  std::size_t n = 0;
  for (const InstanceReport& i : instances)
    for (const AssertionRecord& r : i.records) n += !r.hard && !r.pass;
  return n;
}

std::size_t ExperimentReport::assertions() const {
  std::size_t n = 0;
  for (const InstanceReport& i : instances) n += i.records.size();
  return n;
}

std::size_t ExperimentReport::skipped() const {
  return static_cast<std::size_t>(
      std::count_if(instances.begin(), instances.end(), [](const InstanceReport& i) { return i.skipped; }));
}

std::string ExperimentReport::to_json() const {
  json j;
  j["schema"] = "mwlab.report/1";
  j["suite"] = suite;
  j["config"] = config_json(config);
  j["summary"] = {{"instances", instances.size()},
                  {"skipped", skipped()},
                  {"assertions", assertions()},
                  {"hard_failures", hard_failures()},
                  {"soft_failures", soft_failures()},
                  {"passed", passed()}};
  json consts = json::object();
  for (const auto& [key, s] : constants)
    consts[key] = {{"min", number(s.min)}, {"median", number(s.median)}, {"max", number(s.max)}, {"count", s.count}};
  j["constants"] = consts;
  json list = json::array();
  for (const InstanceReport& i : instances) {
    json x;
    x["id"] = i.id;
    x["grid"] = {{"d", i.d}, {"L", i.L}, {"n", i.n}};
    x["seed"] = i.seed;
    x["exponents"] = {{"p", i.e.p}, {"q", i.e.q}, {"alpha", i.e.alpha}};
    x["skipped"] = i.skipped;
    if (i.skipped) x["reason"] = i.reason;
    json vals = json::object();
    for (const auto& [k, v] : i.values) vals[k] = number(v);
    x["values"] = vals;
    json recs = json::array();
    for (const AssertionRecord& r : i.records)
      recs.push_back({{"anchor", r.anchor},
                      {"tier", r.hard ? "hard" : "soft"},
                      {"lhs", number(r.lhs)},
                      {"rhs", number(r.rhs)},
                      {"ratio", number(r.ratio)},
                      {"tolerance", r.tolerance},
                      {"pass", r.pass},
                      {"where", r.where}});
    x["assertions"] = recs;
    if (!i.warnings.empty()) x["warnings"] = i.warnings;
    list.push_back(std::move(x));
  }
  j["instances"] = list;
  return j.dump(2);
}

std::vector<std::string> suite_names() {
  std::vector<std::string> out;
  for (const auto& [name, body] : suites()) out.push_back(name);
  return out;
}

ExperimentReport run_suite(const std::string& name, const BatchConfig& cfg) {
  cfg.validate();
  const auto& table = suites();
  const auto it = std::find_if(table.begin(), table.end(), [&](const auto& s) { return s.first == name; });
  if (it == table.end()) throw ParameterError("unknown suite '" + name + "'");
  const std::vector<InstanceSpec> specs = expand(cfg);
  ExperimentReport out;
  out.suite = name;
  out.config = cfg;
  out.instances.resize(specs.size());
  parallel_for(specs.size(), [&](std::size_t i) { out.instances[i] = run_instance(cfg, name, it->second, specs[i]); });

  std::map<std::string, std::vector<double>> pooled;
  for (const InstanceReport& i : out.instances)
    if (!i.skipped)
      for (const auto& [k, v] : i.values) pooled[k].push_back(v);
  for (auto& [k, v] : pooled) {
    ConstantSummary s;
    s.count = v.size();
    s.min = *std::min_element(v.begin(), v.end());
    s.max = *std::max_element(v.begin(), v.end());
    s.median = median_of(v);
    out.constants[k] = s;
  }
  return out;
}

}  // namespace mwlab
