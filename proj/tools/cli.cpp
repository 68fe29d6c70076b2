#include "cli.hpp"

#include "mwlab/characteristics.hpp"
#include "mwlab/error.hpp"
#include "mwlab/io.hpp"
#include "mwlab/norms.hpp"
#include "mwlab/operators.hpp"
#include "mwlab/orlicz.hpp"
#include "mwlab/verify.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace mwlab {

namespace {

using json = nlohmann::ordered_json;

json number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

json cube_json(const std::optional<Cube>& q) {
  if (!q) return nullptr;
  json anchor = json::array();
  for (int k = 0; k < q->grid.d; ++k) anchor.push_back(q->anchor[k]);
  return {{"level", q->level}, {"anchor", anchor}};
}

json exponents_json(const ExponentTriple& e) { return {{"p", e.p}, {"q", e.q}, {"alpha", e.alpha}, {"d", e.d}}; }

json characteristic_json(const Characteristic& c) {
  return {{"quantity", to_string(c.kind)},
          {"value", number(c.value)},
          {"argmax", cube_json(c.argmax)},
          {"slack", c.slack},
          {"exponents", exponents_json(c.exponents)}};
}

void emit(const json& j, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << j.dump(2) << '\n';
    return;
  }
  std::ofstream os(path);
  if (!os) throw FormatError("cannot write '" + path + "'");
  os << j.dump(2) << '\n';
}

// Shared --alpha/--q pair; d comes from the data.
struct ExponentArgs {
  double alpha = 0.5;
  double q = 4.0;
  ExponentTriple triple(int d) const { return ExponentTriple::from_alpha_q(alpha, q, d); }
};

void add_exponents(CLI::App* app, ExponentArgs& e) {
  app->add_option("--alpha", e.alpha, "fractional order alpha")->capture_default_str();
  app->add_option("--q", e.q, "target exponent q (p from alpha/d + 1/q = 1/p)")->capture_default_str();
}

struct GridArgs {
  int d = 1;
  int L = 3;
  int n = 1;
};

void add_grid(CLI::App* app, GridArgs& g) {
  app->add_option("--d", g.d, "dimension (1 or 2)")->capture_default_str();
  app->add_option("--L", g.L, "finest level")->capture_default_str();
  app->add_option("--n", g.n, "matrix size")->capture_default_str();
}

GridSpec grid_of(const GridArgs& g) {
  GridSpec grid{g.d, g.L, {0, 0}};
  grid.validate();
  return grid;
}

Cube parse_cube(const std::string& text, const GridSpec& grid) {
  // "level,a0[,a1]"
  std::vector<int> parts;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      parts.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw ParameterError("--cube: bad integer '" + tok + "'");
    }
  }
  if (parts.size() != static_cast<std::size_t>(grid.d + 1)) throw ParameterError("--cube expects level,anchor...");
  Cube q{grid, parts[0], {0, 0}};
  if (q.level < 0 || q.level > grid.L) throw ParameterError("--cube: level out of range");
  for (int k = 0; k < grid.d; ++k) {
    q.anchor[k] = parts[static_cast<std::size_t>(k + 1)];
    if (q.anchor[k] < 0 || q.anchor[k] >= (1 << q.level)) throw ParameterError("--cube: anchor out of range");
  }
  return q;
}

json witness_json(const VectorField& w) {
  json cells = json::array();
  for (const Vec& v : w.values) {
    json row = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) row.push_back(v(i));
    cells.push_back(row);
  }
  return cells;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Matrix-weighted fractional commutator laboratory", "mwlab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "mwlab 0.1.0");
  std::string report_path;

  // gen
  auto* gen = app.add_subcommand("gen", "generate a weight, symbol or vector field");
  GridArgs gen_grid;
  add_grid(gen, gen_grid);
  std::uint64_t gen_seed = 0;
  std::string gen_kind = "weight", gen_family, gen_out;
  WeightParams gen_params;
  double gen_amplitude = 1.0;
  std::optional<double> gen_alpha, gen_q;
  gen->add_option("--seed", gen_seed, "generator seed")->capture_default_str();
  gen->add_option("--kind", gen_kind, "weight | symbol | vector")
      ->check(CLI::IsMember({"weight", "symbol", "vector"}))
      ->capture_default_str();
  gen->add_option("--family", gen_family,
                  "weight: constant, scalar-power, rotating-diagonal, log-bounded-random; "
                  "symbol: constant, random, smooth, log "
                  "(default log-bounded-random for weights, random for symbols)");
  gen->add_option("--log-bound", gen_params.log_bound, "log-eigenvalue bound")->capture_default_str();
  gen->add_option("--beta", gen_params.beta, "power exponents per eigenvalue")->capture_default_str();
  gen->add_option("--omega", gen_params.omega, "rotation rate")->capture_default_str();
  gen->add_option("--scale", gen_params.scale, "overall multiplier")->capture_default_str();
  gen->add_option("--amplitude", gen_amplitude, "symbol amplitude")->capture_default_str();
  gen->add_option("--alpha", gen_alpha, "enables the beta range check together with --q");
  gen->add_option("--q", gen_q, "enables the beta range check together with --alpha");
  gen->add_option("--out", gen_out, "artifact path (stdout when omitted)");

  // apq
  auto* apq = app.add_subcommand("apq", "matrix A_{p,q} characteristic of a weight");
  std::string apq_weight;
  ExponentArgs apq_e;
  apq->add_option("--weight", apq_weight, "weight field")->required();
  add_exponents(apq, apq_e);
  apq->add_option("--report", report_path, "report path (stdout when omitted)");

  // bmo
  auto* bmo = app.add_subcommand("bmo", "weighted BMO functionals of a symbol");
  std::string bmo_u, bmo_v, bmo_b, bmo_quantity = "tilde";
  ExponentArgs bmo_e;
  bmo->add_option("--u", bmo_u, "weight U")->required();
  bmo->add_option("--v", bmo_v, "weight V")->required();
  bmo->add_option("--b", bmo_b, "symbol B")->required();
  bmo->add_option("--quantity", bmo_quantity, "classic | tilde | dual | jn1..jn6 | nu")
      ->check(CLI::IsMember({"classic", "tilde", "dual", "jn1", "jn2", "jn3", "jn4", "jn5", "jn6", "nu"}))
      ->capture_default_str();
  add_exponents(bmo, bmo_e);
  bmo->add_option("--report", report_path, "report path (stdout when omitted)");

  // opnorm
  auto* opn = app.add_subcommand("opnorm", "weighted L^p -> L^q operator norm estimate");
  std::string op_kind = "ialpha", op_u, op_v, op_b, op_cube;
  GridArgs op_grid;
  ExponentArgs op_e;
  OpNormOptions op_opts;
  opn->add_option("--op", op_kind, "ialpha | avg | commutator | conjugated")
      ->check(CLI::IsMember({"ialpha", "avg", "commutator", "conjugated"}))
      ->capture_default_str();
  opn->add_option("--u", op_u, "weight U (identity when omitted)");
  opn->add_option("--v", op_v, "weight V (identity when omitted)");
  opn->add_option("--b", op_b, "symbol B (commutator, conjugated)");
  opn->add_option("--cube", op_cube, "averaging cube as level,anchor... (root when omitted)");
  add_grid(opn, op_grid);
  add_exponents(opn, op_e);
  opn->add_option("--restarts", op_opts.restarts, "power-iteration restarts")->capture_default_str();
  opn->add_option("--seed", op_opts.seed, "restart seed")->capture_default_str();
  opn->add_option("--max-iterations", op_opts.max_iterations)->capture_default_str();
  opn->add_option("--tolerance", op_opts.tolerance)->capture_default_str();
  opn->add_option("--report", report_path, "report path (stdout when omitted)");

  // orlicz
  auto* orl = app.add_subcommand("orlicz", "Orlicz bump constants kappa1, kappa2");
  std::string orl_u, orl_v, orl_b, orl_c = "power:4", orl_d = "power:4";
  ExponentArgs orl_e;
  orl->add_option("--u", orl_u, "weight U")->required();
  orl->add_option("--v", orl_v, "weight V")->required();
  orl->add_option("--b", orl_b, "symbol B")->required();
  orl->add_option("--C", orl_c, "Young function C (power:r or powerlog:r,delta)")->capture_default_str();
  orl->add_option("--D", orl_d, "Young function D")->capture_default_str();
  add_exponents(orl, orl_e);
  orl->add_option("--report", report_path, "report path (stdout when omitted)");

  // sparse
  auto* spr = app.add_subcommand("sparse", "sparse stopping family of a vector field");
  std::string spr_f, spr_phi = "power:2";
  std::optional<double> spr_a;
  spr->add_option("--f", spr_f, "vector field")->required();
  spr->add_option("--phi", spr_phi, "Young function of the stopping norm")->capture_default_str();
  spr->add_option("--a", spr_a, "threshold ratio (default 2^{d+1} + 1)");
  spr->add_option("--report", report_path, "report path (stdout when omitted)");

  // verify
  auto* ver = app.add_subcommand("verify", "run an experiment suite");
  std::string ver_suite, ver_config = "default";
  ver->add_option("--suite", ver_suite, "suite name")->required()->check(CLI::IsMember(suite_names()));
  ver->add_option("--config", ver_config, "'default' or a JSON batch config")->capture_default_str();
  ver->add_option("--report", report_path, "report path (stdout when omitted)");

  // dump
  auto* dmp = app.add_subcommand("dump", "re-serialize an artifact in canonical form");
  std::string dmp_path;
  dmp->add_option("path", dmp_path, "artifact")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    out << e.what() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << json{{"error", "usage"}, {"message", e.what()}}.dump() << '\n';
    return kExitUsage;
  }

  try {
    if (gen->parsed()) {
      const GridSpec grid = grid_of(gen_grid);
      if (gen_alpha.has_value() != gen_q.has_value()) throw ParameterError("--alpha and --q go together");
      if (gen_alpha) gen_params.exponents = ExponentTriple::from_alpha_q(*gen_alpha, *gen_q, grid.d);
      std::ostringstream os;
      if (gen_family.empty()) gen_family = gen_kind == "symbol" ? "random" : "log-bounded-random";
      if (gen_kind == "weight") {
        const GeneratedWeight w = generate_weight(gen_seed, grid, gen_grid.n, gen_family, gen_params);
        for (const std::string& msg : w.warnings) err << json{{"warning", msg}}.dump() << '\n';
        write_field(os, w.field);
      } else if (gen_kind == "symbol") {
        write_field(os, generate_symbol(gen_seed, grid, gen_grid.n, gen_family, gen_amplitude));
      } else {
        write_vector(os, generate_vector(gen_seed, grid, gen_grid.n));
      }
      if (gen_out.empty()) {
        out << os.str();
      } else {
        std::ofstream f(gen_out);
        if (!f) throw FormatError("cannot write '" + gen_out + "'");
        f << os.str();
      }
      return kExitOk;
    }

    if (apq->parsed()) {
      const MatrixField w = load_field(apq_weight);
      const ExponentTriple e = apq_e.triple(w.grid().d);
      emit({{"command", "apq"}, {"weight", apq_weight}, {"result", characteristic_json(apq_characteristic(w, e))}},
           report_path, out);
      return kExitOk;
    }

    if (bmo->parsed()) {
      const MatrixField u = load_field(bmo_u), v = load_field(bmo_v), b = load_field(bmo_b);
      const ExponentTriple e = bmo_e.triple(u.grid().d);
      Characteristic c;
      if (bmo_quantity == "classic")
        c = bmo_classic(u, v, b, e);
      else if (bmo_quantity == "tilde")
        c = tilde_bmo(v, u, b, e);
      else if (bmo_quantity == "dual")
        c = dual_tilde_bmo(u, v, b, e);
      else if (bmo_quantity == "nu")
        c = bloom_nu(ScalarBloomInstance::make(u, v, b, e), e);
      else
        c = jn_quantity(bmo_quantity.back() - '0', u, v, b, e);
      emit({{"command", "bmo"}, {"result", characteristic_json(c)}}, report_path, out);
      return kExitOk;
    }

    if (opn->parsed()) {
      std::optional<MatrixField> u, v, b;
      if (!op_u.empty()) u = load_field(op_u);
      if (!op_v.empty()) v = load_field(op_v);
      if (!op_b.empty()) b = load_field(op_b);
      GridSpec grid = grid_of(op_grid);
      int n = op_grid.n;
      for (const auto* f : {&u, &v, &b})
        if (*f) {
          grid = (*f)->grid();
          n = (*f)->n();
        }
      if (!u) u = MatrixField::constant_weight(grid, Mat::Identity(n, n));
      if (!v) v = MatrixField::constant_weight(grid, Mat::Identity(n, n));
      const ExponentTriple e = op_e.triple(grid.d);
      if ((op_kind == "commutator" || op_kind == "conjugated") && !b)
        throw ParameterError("--op " + op_kind + " needs --b");
      OpNormEstimate est;
      if (op_kind == "ialpha") {
        est = opnorm(build_ialpha(grid, e, n), *u, *v, e, op_opts);
      } else if (op_kind == "avg") {
        const Cube q = op_cube.empty() ? Cube{grid, 0, {0, 0}} : parse_cube(op_cube, grid);
        est = opnorm(build_averaging(cells_of(q), e, n), *u, *v, e, op_opts);
      } else if (op_kind == "commutator") {
        est = opnorm(build_commutator(build_ialpha(grid, e, n), *b), *u, *v, e, op_opts);
      } else {
        // unweighted norm of Phi I_alpha Phi^{-1} for the block weight of (U, V, B)
        const BlockWeight bw = build_block_weight(*u, *v, *b, e);
        est = mixed_opnorm(bw.conjugated(build_ialpha(grid, e, n)), e.p, e.q, op_opts);
      }
      emit({{"command", "opnorm"},
            {"op", op_kind},
            {"grid", grid.describe()},
            {"n", n},
            {"exponents", exponents_json(e)},
            {"estimate", number(est.estimate)},
            {"lower", number(est.lower)},
            {"exact", est.exact},
            {"flagged", est.flagged},
            {"restarts", est.restarts},
            {"converged_restarts", est.converged_restarts},
            {"iterations", est.iterations},
            {"witness", witness_json(est.witness)}},
           report_path, out);
      return kExitOk;
    }

    if (orl->parsed()) {
      const MatrixField u = load_field(orl_u), v = load_field(orl_v), b = load_field(orl_b);
      const ExponentTriple e = orl_e.triple(u.grid().d);
      const YoungFunction c = YoungFunction::parse(orl_c), d = YoungFunction::parse(orl_d);
      const BumpConstants k = orlicz_bump_constants(u, v, b, e, c, d);
      emit({{"command", "orlicz"},
            {"C", c.describe()},
            {"D", d.describe()},
            {"exponents", exponents_json(e)},
            {"kappa1", number(k.kappa1)},
            {"argmax1", cube_json(k.argmax1)},
            {"kappa2", number(k.kappa2)},
            {"argmax2", cube_json(k.argmax2)}},
           report_path, out);
      return kExitOk;
    }

    if (spr->parsed()) {
      const VectorField f = load_vector(spr_f);
      const YoungFunction phi = YoungFunction::parse(spr_phi);
      const double a = spr_a ? *spr_a : default_sparse_parameter(f.grid.d);
      const SparseFamily s = build_sparse_family(f, phi, a, f.grid);
      json levels = json::array();
      for (std::size_t k = 0; k < s.stopping.size(); ++k) {
        json cubes = json::array();
        for (std::size_t i = 0; i < s.stopping[k].size(); ++i)
          cubes.push_back({{"cube", cube_json(s.stopping[k][i])}, {"e_cells", s.e_sets[k][i].size()}});
        levels.push_back({{"k", k}, {"bucket_size", s.bucket_sizes[k]}, {"stopping", cubes}});
      }
      emit({{"command", "sparse"},
            {"phi", phi.describe()},
            {"a", s.a},
            {"tau0", s.tau0},
            {"min_fraction", s.min_fraction},
            {"disjoint", s.disjoint},
            {"total_measure", s.total_measure},
            {"levels", levels}},
           report_path, out);
      return s.min_fraction >= 0.5 && s.disjoint ? kExitOk : kExitHardFailure;
    }

    if (ver->parsed()) {
      const BatchConfig cfg = load_batch_config(ver_config);
      const ExperimentReport rep = run_suite(ver_suite, cfg);
      const std::string text = rep.to_json();
      if (report_path.empty()) {
        out << text << '\n';
      } else {
        std::ofstream os(report_path);
        if (!os) throw FormatError("cannot write '" + report_path + "'");
        os << text << '\n';
      }
      err << json{{"suite", ver_suite},
                  {"instances", rep.instances.size()},
                  {"skipped", rep.skipped()},
                  {"assertions", rep.assertions()},
                  {"hard_failures", rep.hard_failures()},
                  {"soft_failures", rep.soft_failures()}}
                 .dump()
          << '\n';
      return rep.hard_failures() == 0 ? kExitOk : kExitHardFailure;
    }

    if (dmp->parsed()) {
      dump_artifact(dmp_path, out);
      return kExitOk;
    }
  } catch (const FormatError& ex) {
    err << json{{"error", "format"}, {"message", ex.what()}}.dump() << '\n';
    return kExitUsage;
  } catch (const ParameterError& ex) {
    err << json{{"error", "parameter"}, {"message", ex.what()}}.dump() << '\n';
    return kExitUsage;
  } catch (const DegeneracyError& ex) {
    err << json{{"error", "degeneracy"}, {"message", ex.what()}}.dump() << '\n';
    return kExitRuntime;
  } catch (const ConvergenceError& ex) {
    err << json{{"error", "convergence"}, {"message", ex.what()}}.dump() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace mwlab
