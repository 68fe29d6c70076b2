#pragma once

#include "mwlab/field.hpp"
#include "mwlab/grid.hpp"
#include "mwlab/reducing.hpp"

#include <array>
#include <optional>
#include <utility>
#include <string>

namespace mwlab {

enum class CharKind {
  apq,
  apq_restricted,
  bmo_classic,
  bmo_tilde,
  bmo_tilde_dual,
  jn1,
  jn2,
  jn3,
  jn4,
  jn5,
  jn6,
  bloom_nu,
};

std::string to_string(CharKind k);

/// A scalar functional of weights/symbols: either a supremum over every
/// dyadic cube of the standard grid (argmax recorded) or the value on one
/// cell set.
struct Characteristic {
  double value = 0.0;
  CharKind kind = CharKind::apq;
  ExponentTriple exponents;
  std::optional<Cube> argmax;
  // product of reducing-matrix distortions entering the value (1 when exact)
  double slack = 1.0;
};

/// Where a characteristic is evaluated: all cubes (nullopt) or one set.
using Scope = std::optional<CubeSet>;

/// avg_outer ( avg_inner K^inner )^{outer/inner}, then ^root. K(i, j) pairs
/// x_i (rows) with y_j (columns); `inner_over_y` selects which index is
/// averaged first.
struct MeanSchedule {
  double inner = 1.0;
  double outer = 1.0;
  double root = 1.0;
  bool inner_over_y = true;
};

double iterated_mean(const Mat& pair_values, const MeanSchedule& schedule);

/// K(i, j) = || left_i * (B_i - B_j) * right_j || over the cells of `s`
/// (B omitted when null: || left_i * right_j ||).
Mat pair_norms(const CubeSet& s, const MatrixField& left, const MatrixField& right,
               const MatrixField* symbol = nullptr);

/// Matrix A_{p,q} characteristic.
Characteristic apq_characteristic(const MatrixField& w, const ExponentTriple& e, const Scope& scope = std::nullopt);

/// Weighted BMO of `symbol` with left weight `left` and right weight `right`
/// in the "tilde" (double average) form; jn4 is tilde_bmo(V, U, B).
Characteristic tilde_bmo(const MatrixField& left, const MatrixField& right, const MatrixField& symbol,
                         const ExponentTriple& e, const Scope& scope = std::nullopt);

/// Tilde BMO of B^T with weights (U', V') = (U^{-p'/q}, V^{-p'/q}) and exponents (q', p').
Characteristic dual_tilde_bmo(const MatrixField& u, const MatrixField& v, const MatrixField& b,
                              const ExponentTriple& e, const Scope& scope = std::nullopt);

/// Classic matrix BMO: sup (avg ||(m V^{1/q})(B - m B)(m U^{1/q})^{-1}||)^{1/q}.
Characteristic bmo_classic(const MatrixField& u, const MatrixField& v, const MatrixField& b,
                           const ExponentTriple& e, const Scope& scope = std::nullopt);

/// John-Nirenberg quantity k in 1..6.
Characteristic jn_quantity(int k, const MatrixField& u, const MatrixField& v, const MatrixField& b,
                           const ExponentTriple& e, const Scope& scope = std::nullopt,
                           const MveeOptions& options = {});

/// Per-set values of every weighted-BMO functional plus the terms of the
/// Hoelder split jn5 <= (A) + (B) <= jn2 * F_U + G_V * jn3.
struct JnValues {
  std::array<double, 7> jn{};  // jn[1..6]; jn[0] unused
  double classic = 0.0;
  double split_a = 0.0;        // (A)
  double split_b = 0.0;        // (B)
  double factor_u = 0.0;       // F_U = (avg_y ||U_Q U^{-1/q}(y)||^{p'})^{1/p'}
  double factor_v = 0.0;       // G_V = (avg_x ||V^{1/q}(x) V'_Q||^q)^{1/q}
  double apq_star_u = 0.0;     // (avg_y (avg_x ||U^{1/q}(x)U^{-1/q}(y)||^q)^{p'/q})^{1/p'}
  double apq_v = 0.0;          // apq of V on the set
  double distortion_u = 1.0;   // of U_Q
  double distortion_v = 1.0;   // of V_Q
  double distortion_vp = 1.0;  // of V'_Q
};

/// Evaluates all weighted-BMO functionals set by set, sharing the cellwise
/// matrix powers and one pair kernel per set.
class WeightedBmoEvaluator {
 public:
  WeightedBmoEvaluator(const MatrixField& u, const MatrixField& v, const MatrixField& b, const ExponentTriple& e,
                       const MveeOptions& options = {});

  JnValues evaluate(const CubeSet& s) const;
  // Only quantity k (1..6); returns {value, reducing slack}.
  std::pair<double, double> quantity(int k, const CubeSet& s) const;
  const ExponentTriple& exponents() const { return e_; }

 private:
  Mat symbol_kernel(const CubeSet& s) const;
  ReducingMatrix reduce_u(const CubeSet& s) const;
  ReducingMatrix reduce_v(const CubeSet& s) const;
  ReducingMatrix reduce_v_dual(const CubeSet& s) const;
  double jn1(const CubeSet& s, const ReducingMatrix& vq, const ReducingMatrix& uq) const;
  double jn2(const CubeSet& s, const ReducingMatrix& uq) const;
  double jn3(const CubeSet& s, const ReducingMatrix& vpq) const;

  ExponentTriple e_;
  MveeOptions options_;
  MatrixField b_;
  MatrixField v_q_;   // V^{1/q}
  MatrixField v_mq_;  // V^{-1/q}
  MatrixField u_q_;   // U^{1/q}
  MatrixField u_mq_;  // U^{-1/q}
  // ||V^{1/q}(x)(B(x)-B(y))U^{-1/q}(y)|| over all cell pairs (small grids only)
  Mat global_kernel_;
};

/// u, v scalar weights, b scalar symbol; nu = u^{1/q} v^{-1/q}.
struct ScalarBloomInstance {
  MatrixField u;
  MatrixField v;
  MatrixField b;
  MatrixField nu;

  static ScalarBloomInstance make(const MatrixField& u, const MatrixField& v, const MatrixField& b,
                                  const ExponentTriple& e);
};

/// sup avg_Q |b - m_Q b| / m_Q nu.
Characteristic bloom_nu(const ScalarBloomInstance& inst, const ExponentTriple& e, const Scope& scope = std::nullopt);

/// Per-set scalar terms: m nu, (m u^{1/q})(m v^{1/q})^{-1}, and the Hoelder
/// bound (m u)^{1/q} (m v^{-q'/q})^{1/q'}.
struct ScalarChainTerms {
  double mean_nu = 0.0;
  double root_ratio = 0.0;
  double holder_bound = 0.0;
};
ScalarChainTerms scalar_chain_terms(const ScalarBloomInstance& inst, const ExponentTriple& e, const CubeSet& s);

/// Cube sets of every dyadic cube of the standard grid of `grid`, in
/// enumeration order (shared by every sup-type characteristic).
struct CubeFamily {
  std::vector<Cube> cubes;
  std::vector<CubeSet> sets;
};
CubeFamily standard_family(const GridSpec& grid);

}  // namespace mwlab
