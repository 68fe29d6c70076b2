#pragma once

#include "mwlab/field.hpp"
#include "mwlab/grid.hpp"

#include <vector>

namespace mwlab {

struct MveeOptions {
  int max_iterations = 100000;
  double tolerance = 1e-7;
  // 0 selects the default count for the matrix size (64 for n=2, 256 for n=3).
  int directions = 0;
};

enum class ReducingMode { exact_r2, scalar, mvee };

std::string to_string(ReducingMode m);

/// SPD matrix A with distortion^{-1}|Ae| <= rho(e) <= distortion |Ae| on the
/// certified direction set, where rho(e) = (avg_S |X e|^r)^{1/r}.
struct ReducingMatrix {
  Mat A;
  ReducingMode mode = ReducingMode::exact_r2;
  double distortion = 1.0;
  double r = 2.0;
  int sample_count = 0;
  int iterations = 0;
  MveeOptions options;
};

/// rho(e) for the averaged norm of `powered` (already raised to +-1/q) over S.
double averaged_norm(const MatrixField& powered, const CubeSet& s, double r, const Vec& e);

/// Reducing matrix of e -> (avg_S |W^{power} e|^r)^{1/r}. Exact for r = 2 and
/// for n = 1; otherwise the minimum-volume enclosing ellipsoid of sampled
/// points e/rho(e), computed by Khachiyan's barycentric ascent.
ReducingMatrix reduce(const MatrixField& w, const CubeSet& s, double r, double power,
                      const MveeOptions& options = {});

/// Same as reduce() with W^{power} precomputed.
ReducingMatrix reduce_powered(const MatrixField& powered, const CubeSet& s, double r,
                              const MveeOptions& options = {});

/// ||M^{-1} Mp^{-1}||; at most 1 for exact reducing matrices.
double matrix_holder_defect(const ReducingMatrix& m, const ReducingMatrix& mp);

/// Maximum over sampled directions of |log(|A1 e| / |A2 e|)| where A1 reduces
/// W^{-p'/q} with exponent p' and A2 reduces W^{-1/q} with exponent p'.
struct DualityGap {
  double gap = 0.0;
  double bound = 0.0;  // log(distortion_1 * distortion_2)
};
DualityGap duality_gap(const MatrixField& w, const CubeSet& s, const ExponentTriple& e,
                       const MveeOptions& options = {});

/// Quasi-uniform unit directions in R^n, closed under negation.
std::vector<Vec> sample_directions(int n, int count);

/// Centered minimum-volume ellipsoid {x : x^T H x <= 1} containing the given
/// points (assumed symmetric about the origin).
struct Mvee {
  Mat H;
  int iterations = 0;
};
Mvee khachiyan_mvee(const std::vector<Vec>& points, double tolerance, int max_iterations);

}  // namespace mwlab
