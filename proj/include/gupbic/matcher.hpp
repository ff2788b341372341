#pragma once

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gupbic/basis.hpp"
#include "gupbic/core.hpp"
#include "gupbic/oracle.hpp"

namespace gupbic {

enum class ConditionKind {
  PointZero,            // phi(x) = 0
  DecayAtPlusInfinity,  // no Growing component toward +inf
  DecayAtMinusInfinity,
  VanishOnRay,          // phi = 0 beyond `x` toward `side`; imposed as phi(x) = 0
  PointDerivativeZero,  // phi^(order)(x) = 0; opt-in extra condition, never key
};

struct BoundaryCondition {
  ConditionKind kind = ConditionKind::PointZero;
  double x = 0.0;
  Side side = Side::PlusInfinity;
  int order = 0;
  bool is_key = true;

  static BoundaryCondition point_zero(double x, bool key = true) {
    return {ConditionKind::PointZero, x, Side::PlusInfinity, 0, key};
  }
  static BoundaryCondition decay(Side side) {
    return {side == Side::PlusInfinity ? ConditionKind::DecayAtPlusInfinity
                                       : ConditionKind::DecayAtMinusInfinity,
            0.0, side, 0, true};
  }
  static BoundaryCondition vanish_on_ray(Side side, double cut) {
    return {ConditionKind::VanishOnRay, cut, side, 0, true};
  }
  static BoundaryCondition derivative_zero(double x, int order) {
    return {ConditionKind::PointDerivativeZero, x, Side::PlusInfinity, order, false};
  }
};

std::string describe(const BoundaryCondition& c);

enum class BoundCase { I, II, III, Unbound };
std::string_view to_string(BoundCase c);

struct CaseClassification {
  BoundCase bound_case = BoundCase::Unbound;
  int kbc_count = 0;
  int non_kbc_count = 0;
  int predicted_dof = 0;  // 0 for Unbound
};

/// Case I: two walls (2 - non-KBCs). Case II: one wall and decay on the open
/// side (1 - non-KBCs). Case III: decay on both sides (2 - non-KBCs).
CaseClassification classify(const std::vector<BoundaryCondition>& conditions);

/// The boundary conditions imposed for each potential kind.
std::vector<BoundaryCondition> default_conditions(const DimensionlessProblem& problem);

/// Four solutions plus what is needed to integrate over them.
struct FundamentalSystem {
  FundamentalSet basis;
  Interval extent;                  // finite range holding the integrable mass
  std::vector<double> breakpoints;  // interior points where pieces join
  /// Mirror-glued systems only: per function, the size of the odd derivatives
  /// at 0+ relative to the even ones, max(|f'|, |f'''|) / max(|f|, |f''|).
  /// Gluing f(|x|) is smooth only when this vanishes.
  std::optional<std::array<double, 4>> junction_jump;
};

/// Exact basis for the well; far-field WKB continued inward by the oracle for
/// the ramp; the same mirrored for the trap; oracle canonical solutions for
/// tabulated potentials.
FundamentalSystem build_fundamental_system(const DimensionlessProblem& problem, double energy,
                                           const OracleOptions& options = {});

struct ConstraintSystem {
  double energy = 0.0;
  Eigen::MatrixXcd matrix;          // r x 4
  std::vector<std::string> row_labels;
};

ConstraintSystem assemble(const FundamentalSet& basis,
                          const std::vector<BoundaryCondition>& conditions, double energy);

struct Nullspace {
  int nullity = 0;
  std::vector<Eigen::Vector4cd> vectors;  // orthonormal
  Eigen::VectorXd singular_values;        // of the column-scaled matrix
};

/// Nullity = 4 - numerical rank, singular values below rank_tol * largest
/// counting as zero. Columns are scaled to unit max before the SVD.
Nullspace nullspace(const ConstraintSystem& system, double rank_tol = 1e-10);

/// D with D1 w1 + D2 w2 + D3 w3 vanishing at both walls: the cross product of
/// the two boundary rows. Throws DegenerateConfiguration when the rows are
/// parallel.
std::array<cplx, 3> well_coefficients(const BasisFunction& w1, const BasisFunction& w2,
                                      const BasisFunction& w3, double left = -1.0,
                                      double right = 1.0);

/// Reference pair for the well: coefficients from (w1, w2, w3) and (w2, w3, w4),
/// embedded in C^4. A triple whose rows are parallel is skipped.
std::vector<Eigen::Vector4cd> reference_pair(const FundamentalSet& basis, double left = -1.0,
                                         double right = 1.0);

/// Largest principal angle between the column spans of `a` and `b`.
double principal_angle(const std::vector<Eigen::Vector4cd>& a,
                       const std::vector<Eigen::Vector4cd>& b);

struct BoundState {
  Eigen::Vector4cd coefficients;
  FundamentalSet basis;

  Jet evaluate(double x) const;
};

struct BoundStateSolution {
  double energy = 0.0;     // E~
  double energy_si = 0.0;  // J
  int degeneracy = 0;
  std::vector<BoundState> states;
  Eigen::MatrixXcd gram;         // F_ij over integrable basis members
  std::vector<int> gram_indices;  // 0-based members entering `gram`
  Interval extent;
  std::vector<double> breakpoints;
};

struct NormalizeOptions {
  bool orthogonalize = true;
  /// Order the span so the state with least weight on exponential members
  /// comes first (the pure sine at the well's special energies).
  bool oscillatory_first = true;
  double rel_tol = 1e-11;  // Gram quadrature
};

/// Unit L2 norm and modified Gram-Schmidt with inner products taken by
/// adaptive quadrature of the combined states. `gram` (F_ij over the
/// integrable members) is filled for reporting.
BoundStateSolution normalize(const std::vector<Eigen::Vector4cd>& vectors,
                             const FundamentalSystem& system, const DimensionlessProblem& problem,
                             double energy, const NormalizeOptions& options = {});

/// build -> assemble -> nullspace -> normalize.
BoundStateSolution solve_bound_states(const DimensionlessProblem& problem, double energy,
                                      const std::vector<BoundaryCondition>& conditions,
                                      const NormalizeOptions& options = {},
                                      const OracleOptions& oracle = {});
BoundStateSolution solve_bound_states(const DimensionlessProblem& problem, double energy);

/// build -> assemble -> nullspace, returning the nullity only.
int degrees_of_freedom(const DimensionlessProblem& problem, double energy,
                       const std::vector<BoundaryCondition>& conditions,
                       const OracleOptions& oracle = {});

}  // namespace gupbic
