#include "mwlab/linalg.hpp"

#include "mwlab/error.hpp"

#include <cmath>
#include <sstream>

namespace mwlab {

double spectral_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == 1 || m.cols() == 1) return m.norm();
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(0);
}

Mat sym_power(const Mat& s, double exponent, const std::string& what) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrized(s));
  if (es.info() != Eigen::Success) throw DegeneracyError(what + ": eigendecomposition failed");
  const Vec& lam = es.eigenvalues();
  if (!(lam.minCoeff() > 0.0)) {
    std::ostringstream os;
    os << what << ": not positive definite (smallest eigenvalue " << lam.minCoeff() << ")";
    throw DegeneracyError(os.str());
  }
  if (exponent == 1.0) return symmetrized(s);
  Vec powered = lam.unaryExpr([exponent](double x) { return std::pow(x, exponent); });
  const Mat& q = es.eigenvectors();
  return symmetrized(q * powered.asDiagonal() * q.transpose());
}

EigRange sym_eig_range(const Mat& s) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrized(s), Eigen::EigenvaluesOnly);
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

}  // namespace mwlab
