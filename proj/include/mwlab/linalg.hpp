#pragma once

#include <Eigen/Dense>

#include <string>

namespace mwlab {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Largest singular value.
double spectral_norm(const Mat& m);

// S^exponent for a symmetric positive definite S via eigendecomposition.
// `what` names the offending object in the DegeneracyError message.
Mat sym_power(const Mat& s, double exponent, const std::string& what = "matrix");

// Eigenvalue range of a symmetric matrix.
struct EigRange {
  double min;
  double max;
};
EigRange sym_eig_range(const Mat& s);

// Symmetrize (s + s^T)/2; used after products that are symmetric in exact arithmetic.
inline Mat symmetrized(const Mat& s) { return 0.5 * (s + s.transpose()); }

}  // namespace mwlab
