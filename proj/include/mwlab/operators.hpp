#pragma once

#include "mwlab/field.hpp"
#include "mwlab/grid.hpp"

#include <string>

namespace mwlab {

enum class OperatorKind { identity, ialpha, averaging, commutator, conjugated, truncated, product, block };

std::string to_string(OperatorKind k);
OperatorKind operator_kind_from_string(const std::string& s);

/// Dense operator on cell-vector fields: block (i, j) of size n x n maps the
/// value on cell j to cell i, and (Tf)_i = sum_j T_ij f_j is the average over
/// cell i of the continuum image of the piecewise-constant f.
struct OperatorMatrix {
  GridSpec grid;
  int n = 1;
  OperatorKind kind = OperatorKind::identity;
  Mat entries;
  // absolute quadrature error bound of the kernel entries (0 when exact)
  double quad_error = 0.0;

  std::size_t cells() const { return grid.cell_count(); }
  Mat block(std::size_t i, std::size_t j) const;
  void set_block(std::size_t i, std::size_t j, const Mat& b);
  VectorField apply(const VectorField& f) const;
};

/// Unit-cube kernel integral J(m) = int |z|^{alpha-d} prod_k tent(z_k - m_k) dz
/// for the integer cell offset m, so kappa_ij = h^alpha J(j - i). `error`
/// receives the quadrature error estimate (0 for d = 1).
double ialpha_unit_kernel(int d, double alpha, Coords offset, double* error = nullptr);

/// kappa_ij = |Q_i|^{-1} int_{Q_i} int_{R_j} |x - y|^{alpha - d} dy dx.
double ialpha_kernel(const GridSpec& grid, double alpha, std::size_t i, std::size_t j, double* error = nullptr);

/// Discretized fractional integral with scalar blocks kappa_ij I_n.
OperatorMatrix build_ialpha(const GridSpec& grid, const ExponentTriple& e, int n = 1);

/// Identity operator.
OperatorMatrix build_identity(const GridSpec& grid, int n = 1);

/// Fractional average chi_S |S|^{alpha/d - 1} int_S f.
OperatorMatrix build_averaging(const CubeSet& s, const ExponentTriple& e, int n = 1);

/// [M_B, T]: blocks B_i T_ij - T_ij B_j.
OperatorMatrix build_commutator(const OperatorMatrix& t, const MatrixField& b);

/// Blocks V_i^{1/q} T_ij U_j^{-1/q}.
OperatorMatrix conjugate(const OperatorMatrix& t, const MatrixField& v, const MatrixField& u, const ExponentTriple& e);

/// chi_E T chi_E.
OperatorMatrix truncate(const OperatorMatrix& t, const CubeSet& e);

/// Operator product a * b.
OperatorMatrix compose(const OperatorMatrix& a, const OperatorMatrix& b);

/// Phi = [[V^{1/q}, V^{1/q} B], [0, U^{1/q}]] per cell and W = (Phi^T Phi)^{q/2}.
struct BlockWeight {
  std::vector<Mat> phi;
  std::vector<Mat> phi_inv;
  MatrixField w;
  // max over cells of the entrywise |Phi Phi^{-1} - I|
  double inverse_residual = 0.0;

  /// Phi T Phi^{-1} for an n-block operator T acting diagonally on 2n-vectors.
  OperatorMatrix conjugated(const OperatorMatrix& t) const;
};

BlockWeight build_block_weight(const MatrixField& u, const MatrixField& v, const MatrixField& b,
                               const ExponentTriple& e);

/// Upper-right n x n blocks of a 2n-block operator.
OperatorMatrix upper_right(const OperatorMatrix& t2);

/// max{||U||, ||U^{-1}||, ||V||, ||V^{-1}||} on one cell.
double truncation_norm(const MatrixField& u, const MatrixField& v, std::size_t cell);

/// Cells of `ambient` where all four norms are < m.
CubeSet truncation_set(const MatrixField& u, const MatrixField& v, double m, const CubeSet& ambient);

/// Least threshold m with 2 |E_m| > |ambient|.
double least_truncation_threshold(const MatrixField& u, const MatrixField& v, const CubeSet& ambient);

}  // namespace mwlab
