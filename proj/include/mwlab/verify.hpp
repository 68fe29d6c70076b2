#pragma once

#include "mwlab/field.hpp"
#include "mwlab/orlicz.hpp"
#include "mwlab/reducing.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace mwlab {

/// Soft caps for the comparisons that only hold up to an unknown constant.
struct Caps {
  double apq = 100.0;                    // instances with a larger A_{p,q} characteristic are skipped
  double jn_log_ratio = std::log(100.0);  // |log(a/b)| between any two BMO functionals
  double lower_ratio = 100.0;             // max(tilde, dual) / commutator lower bound
  double domination = 100.0;              // LHS / RHS of the sparse domination
  double averaging = 10.0;                // opnorm(A_E) vs ||M_E M'_E||, times the distortion
  double averaging_truncation = 100.0;    // ||M_E M'_E|| / ((|Q|/|E|)^{1-alpha/d} ||chi_E I_alpha chi_E||)
  double orlicz = 100.0;                  // commutator lower bound / min(kappa1, kappa2)
  double bloom_log_ratio = std::log(100.0);
};

struct SolverConfig {
  int restarts = 8;
  int max_iterations = 10000;
  double tolerance = 1e-9;
  MveeOptions mvee;
};

struct ExponentChoice {
  double alpha = 0.5;
  double q = 4.0;
};

struct BatchConfig {
  std::string schema = "mwlab.batch/1";
  int d = 1;
  std::vector<int> levels{3, 4, 5};
  std::vector<int> ns{1, 2};
  int seeds = 20;
  std::uint64_t seed_base = 1;
  std::vector<ExponentChoice> exponents{{0.5, 4.0}, {0.25, 2.4}};
  std::string weight_family = "log-bounded-random";
  double log_bound = 1.0;
  std::string symbol_family = "random";
  double amplitude = 1.0;
  // empty: power-log with the instance exponents, C ~ t^q log, D ~ t^{p'} log
  std::string young_c;
  std::string young_d;
  int averaging_subsets = 2;
  int domination_max_level = 4;
  Caps caps;
  SolverConfig solver;
  double hard_tolerance = 1e-9;

  void validate() const;
};

/// "default" or a JSON file; unknown keys are rejected.
BatchConfig load_batch_config(const std::string& source);
BatchConfig parse_batch_config(const std::string& json_text);
std::string batch_config_json(const BatchConfig& cfg);

struct AssertionRecord {
  std::string anchor;
  bool hard = true;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  double tolerance = 0.0;
  bool pass = true;
  std::string where;
};

struct InstanceReport {
  std::string id;
  int d = 1;
  int L = 0;
  int n = 1;
  std::uint64_t seed = 0;
  ExponentTriple e;
  bool skipped = false;
  std::string reason;
  std::vector<AssertionRecord> records;
  std::map<std::string, double> values;
  std::vector<std::string> warnings;
};

struct ConstantSummary {
  double min = 0.0;
  double median = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

struct ExperimentReport {
  std::string suite;
  BatchConfig config;
  std::vector<InstanceReport> instances;
  std::map<std::string, ConstantSummary> constants;

  std::size_t hard_failures() const;
  std::size_t soft_failures() const;
  std::size_t assertions() const;
  std::size_t skipped() const;
  bool passed() const { return hard_failures() == 0 && soft_failures() == 0; }
  std::string to_json() const;
};

std::vector<std::string> suite_names();

/// Runs one suite on every instance of the batch.
ExperimentReport run_suite(const std::string& name, const BatchConfig& cfg);

}  // namespace mwlab
