#pragma once

#include "mwlab/grid.hpp"
#include "mwlab/linalg.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mwlab {

/// Exponents (p, q, alpha, d) tied by alpha/d + 1/q = 1/p, 1 < p <= q < inf,
/// 0 <= alpha < d. alpha = 0 is the p = q limiting case.
struct ExponentTriple {
  double p = 2.0;
  double q = 2.0;
  double alpha = 0.0;
  int d = 1;

  static ExponentTriple make(double p, double q, double alpha, int d);
  // Solves for p from alpha/d + 1/q = 1/p.
  static ExponentTriple from_alpha_q(double alpha, double q, int d);

  void validate() const;
  double p_conj() const { return p / (p - 1.0); }
  double q_conj() const { return q / (q - 1.0); }
  // (q', p') with the same alpha; again a valid triple.
  ExponentTriple dual() const;
  std::string describe() const;
};

enum class FieldKind { weight, symbol };

std::string to_string(FieldKind k);
FieldKind field_kind_from_string(const std::string& s);

/// One real symmetric n x n matrix per finest cell. Weights are positive
/// definite with recorded eigenvalue bounds; symbols are only symmetric.
class MatrixField {
 public:
  MatrixField() = default;

  static MatrixField weight(GridSpec grid, int n, std::vector<Mat> cells);
  static MatrixField symbol(GridSpec grid, int n, std::vector<Mat> cells);
  static MatrixField constant_weight(GridSpec grid, const Mat& value);
  static MatrixField constant_symbol(GridSpec grid, const Mat& value);
  // n = 1 scalar helpers
  static MatrixField scalar_weight(GridSpec grid, const std::vector<double>& values);
  static MatrixField scalar_symbol(GridSpec grid, const std::vector<double>& values);

  const GridSpec& grid() const { return grid_; }
  int n() const { return n_; }
  FieldKind kind() const { return kind_; }
  std::size_t size() const { return cells_.size(); }
  const Mat& operator[](std::size_t i) const { return cells_[i]; }
  const std::vector<Mat>& cells() const { return cells_; }
  double lambda_min() const { return lambda_min_; }
  double lambda_max() const { return lambda_max_; }

  // Scalar multiple (weights need c > 0).
  MatrixField scaled(double c) const;
  // Cellwise B + C for symbols.
  MatrixField plus_constant(const Mat& c) const;

 private:
  MatrixField(GridSpec grid, int n, FieldKind kind, std::vector<Mat> cells);

  GridSpec grid_;
  int n_ = 0;
  FieldKind kind_ = FieldKind::weight;
  std::vector<Mat> cells_;
  double lambda_min_ = 0.0;
  double lambda_max_ = 0.0;
};

/// One n-vector per finest cell.
struct VectorField {
  GridSpec grid;
  int n = 1;
  std::vector<Vec> values;

  static VectorField zeros(GridSpec grid, int n);
  static VectorField constant(GridSpec grid, const Vec& v);
  // Flatten to a length N*n vector (cell-major) and back.
  Vec flatten() const;
  static VectorField unflatten(GridSpec grid, int n, const Vec& flat);
};

/// Cellwise W^exponent by symmetric eigendecomposition.
MatrixField matrix_power(const MatrixField& w, double exponent);

/// W^{-p'/q}.
MatrixField dual_weight(const MatrixField& w, const ExponentTriple& e);

struct WeightParams {
  // log-bounded-random: log-eigenvalues uniform in [-log_bound, log_bound]
  double log_bound = 1.0;
  // scalar-power / rotating-diagonal: |x - x0|^{beta_i}
  std::vector<double> beta{0.5};
  std::array<double, 2> x0{0.3, 0.3};
  // rotation angle omega * (x_0 + x_1)
  double omega = 3.0;
  // overall multiplier
  double scale = 1.0;
  // enables the beta range guard
  std::optional<ExponentTriple> exponents;
};

struct GeneratedWeight {
  MatrixField field;
  std::vector<std::string> warnings;
};

/// Deterministic weight generator; families: constant, scalar-power,
/// rotating-diagonal, log-bounded-random.
GeneratedWeight generate_weight(std::uint64_t seed, const GridSpec& grid, int n,
                                const std::string& family, const WeightParams& params = {});

/// Symbol generator; families: constant, random (entries uniform in
/// [-amplitude, amplitude]), smooth (cosine modes), log (log|x - x0| times a
/// random symmetric matrix).
MatrixField generate_symbol(std::uint64_t seed, const GridSpec& grid, int n, const std::string& family,
                            double amplitude = 1.0);

/// Gaussian per-cell entries.
VectorField generate_vector(std::uint64_t seed, const GridSpec& grid, int n);

/// Eigenvalue floor applied by every weight generator.
inline constexpr double kGeneratorEigenFloor = 1e-10;

}  // namespace mwlab
