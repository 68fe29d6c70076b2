#pragma once

#include "mwlab/field.hpp"
#include "mwlab/operators.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace mwlab {

/// (sum_cells |cell| |W^{power} f|^r)^{1/r}; power is typically +-1/q.
double weighted_norm(const VectorField& f, const MatrixField& w, double r, double power);

/// Unweighted (sum_cells |cell| |f|^r)^{1/r} with the Euclidean norm per cell.
double lebesgue_norm(const VectorField& f, double r);

struct OpNormOptions {
  int restarts = 32;
  std::uint64_t seed = 0;
  int max_iterations = 10000;
  double tolerance = 1e-9;
  // replaces the all-ones start of restart 0 when set (flattened field)
  std::optional<Vec> warm_start;
};

struct OpNormEstimate {
  double lower = 0.0;     // certified by `witness`
  double estimate = 0.0;  // best value over all restarts
  VectorField witness;
  int restarts = 0;
  int iterations = 0;     // summed over restarts
  int converged_restarts = 0;
  bool exact = false;     // p = q = 2 singular-value path
  // set when no restart met the tolerance
  bool flagged = false;
};

/// ||K||_{L^p -> L^q} for an already conjugated operator, cell measures
/// included. p = q = 2 is the exact largest singular value; otherwise a
/// nonlinear power iteration with seeded restarts.
OpNormEstimate mixed_opnorm(const OperatorMatrix& k, double p, double q, const OpNormOptions& options = {});

/// ||T||_{L^p(U^{p/q}) -> L^q(V)}, computed as the mixed norm of V^{1/q} T U^{-1/q}.
OpNormEstimate opnorm(const OperatorMatrix& t, const MatrixField& u, const MatrixField& v, const ExponentTriple& e,
                      const OpNormOptions& options = {});

/// Ratio ||K f||_q / ||f||_p.
double mixed_ratio(const OperatorMatrix& k, const VectorField& f, double p, double q);

/// Brute-force mixed norm (random directions plus hill climbing); refuses
/// total dimension above 8.
struct OracleOptions {
  long samples = 1000000;
  int polish_steps = 20000;
  std::uint64_t seed = 12345;
};
double mixed_opnorm_oracle(const OperatorMatrix& k, double p, double q, const OracleOptions& options = {});
double opnorm_oracle(const OperatorMatrix& t, const MatrixField& u, const MatrixField& v, const ExponentTriple& e,
                     const OracleOptions& options = {});

inline constexpr int kOracleMaxDimension = 8;

}  // namespace mwlab
