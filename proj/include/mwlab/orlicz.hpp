#pragma once

#include "mwlab/characteristics.hpp"
#include "mwlab/field.hpp"
#include "mwlab/grid.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mwlab {

/// Young functions: power c t^r, power-log t^r log(e + t)^delta, and the
/// numerically evaluated complement of a power-log function.
class YoungFunction {
 public:
  enum class Family { power, power_log, power_log_conjugate };

  static YoungFunction power(double r, double coefficient = 1.0);
  static YoungFunction power_log(double r, double delta);
  /// "power:2", "powerlog:1.333,0.5".
  static YoungFunction parse(const std::string& spec);

  double operator()(double t) const;
  double derivative(double t) const;
  /// Phi^{-1}(y) for y >= 0.
  double inverse(double y) const;
  /// Complementary function sup_s (s t - Phi(s)).
  YoungFunction complementary() const;

  Family family() const { return family_; }
  double r() const { return r_; }
  double delta() const { return delta_; }
  double coefficient() const { return c_; }
  std::string describe() const;

 private:
  YoungFunction(Family f, double r, double delta, double c) : family_(f), r_(r), delta_(delta), c_(c) {}
  Family family_;
  double r_;
  double delta_;
  double c_;
};

/// inf {lambda > 0 : avg Phi(|f|/lambda) <= 1} over equally weighted values
/// (0 when f vanishes).
double luxemburg(const std::vector<double>& values, const YoungFunction& phi);

/// inf_s { s + s avg Phi(|f|/s) }.
double luxemburg_star(const std::vector<double>& values, const YoungFunction& phi);

/// Values of a scalar field on a cell set.
std::vector<double> restrict_values(const std::vector<double>& field, const CubeSet& s);

/// Iterated Luxemburg norms of K(x,y) = ||V^{1/q}(x)(B(x)-B(y))U^{-1/q}(y)||:
/// kappa1 = sup ||| K ||_{C, x} ||_{D, y}, kappa2 = sup ||| K ||_{D, y} ||_{C, x}.
struct BumpConstants {
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  std::optional<Cube> argmax1;
  std::optional<Cube> argmax2;
};
BumpConstants orlicz_bump_constants(const MatrixField& u, const MatrixField& v, const MatrixField& b,
                                    const ExponentTriple& e, const YoungFunction& c, const YoungFunction& d,
                                    const Scope& scope = std::nullopt);

/// Per-set pair (kappa1_Q, kappa2_Q) given the pair kernel of the set.
std::pair<double, double> bump_pair(const Mat& kernel, const YoungFunction& c, const YoungFunction& d);

/// sup over the dyadic tower of P containing each cell of |P|^{power/d} ||f||_{Phi, P}.
std::vector<double> orlicz_maximal(const std::vector<double>& f, const YoungFunction& phi, double power,
                                   const GridSpec& grid);

/// Both sides of the sparse domination of the conjugated commutator pairing.
struct DominationCube {
  Cube cube;
  double summand = 0.0;
  double holder_bound = 0.0;  // 4 |Q|^{1+alpha/d} ||f||_{Dbar} ||g||_{Cbar} min(kappa1_Q, kappa2_Q)
};
struct DominationResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;  // lhs / rhs (0 when both vanish)
  std::vector<DominationCube> cubes;
};
/// `holder` selects the pair (C, D) for the per-cube generalized Hoelder bound.
DominationResult domination_sum(const MatrixField& u, const MatrixField& v, const MatrixField& b,
                                const ExponentTriple& e, const VectorField& f, const VectorField& g,
                                const std::optional<std::pair<YoungFunction, YoungFunction>>& holder = std::nullopt);

/// Stopping family for thresholds tau_k = tau_0 a^k, tau_0 = ||f||_{root}/2.
struct SparseFamily {
  double a = 0.0;
  double tau0 = 0.0;
  // stopping cubes per k, each maximal with ||f|| > tau_k
  std::vector<std::vector<Cube>> stopping;
  // E_P cell sets aligned with `stopping`
  std::vector<std::vector<CubeSet>> e_sets;
  // number of cubes with tau_k < ||f||_Q <= tau_{k+1}
  std::vector<std::size_t> bucket_sizes;
  double min_fraction = 1.0;  // min |E_P| / |P|
  bool disjoint = true;
  double total_measure = 0.0; // sum |E_P|
};
SparseFamily build_sparse_family(const VectorField& f, const YoungFunction& dbar, double a, const GridSpec& grid);
double default_sparse_parameter(int d);

/// Tail probe of int_1^T Phi(t)^a t^{-b} dt/t over dyadic blocks.
struct ProbeSchedule {
  double a = 1.0;
  double b = 1.0;
  int blocks = 40;
};
struct ProbeResult {
  bool converging = false;
  double partial = 0.0;       // int over [1, 2^blocks]
  double extrapolated = 0.0;  // partial + fitted tail (inf when diverging)
  double decay_rate = 0.0;    // fitted geometric rate per block
  double log_exponent = 0.0;  // fitted power of the block index
  std::vector<double> block_values;
};
ProbeResult bq_integral_probe(const YoungFunction& phi, const ProbeSchedule& schedule);

}  // namespace mwlab
