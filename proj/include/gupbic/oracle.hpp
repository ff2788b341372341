#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "gupbic/basis.hpp"
#include "gupbic/core.hpp"
#include "gupbic/jet.hpp"

namespace gupbic {

/// Phi = (phi, phi', phi'', phi'''). The second-order (eps = 0) system
/// only uses the first two components.
using StateVector = std::array<cplx, 4>;

enum class EquationOrder { Fourth, Second };

struct OracleOptions {
  double rel_tol = 1e-11;
  double abs_tol = 1e-13;
  EquationOrder order = EquationOrder::Fourth;
  double blowup = 1e300;
};

/// Accepted integrator steps with quintic Hermite dense output between them.
class Trajectory {
 public:
  Trajectory(EquationOrder order, double reported_tolerance)
      : order_(order), reported_tolerance_(reported_tolerance) {}

  const std::vector<double>& grid() const { return grid_; }
  const std::vector<StateVector>& states() const { return states_; }
  double reported_tolerance() const { return reported_tolerance_; }
  EquationOrder order() const { return order_; }
  int dimension() const { return order_ == EquationOrder::Fourth ? 4 : 2; }

  bool blew_up() const { return blew_up_; }
  double last_valid_x() const { return grid_.empty() ? 0.0 : grid_.back(); }
  double lower() const;
  double upper() const;

  /// Dense-output state at x inside the integrated range.
  StateVector at(double x) const;
  /// phi and derivatives 0..4; the top derivative comes from differentiating
  /// the interpolant, not from the equation.
  Jet jet(double x) const;

  // Filled by integrate().
  void push(double x, const StateVector& s, const StateVector& ds, const StateVector& dds);
  void mark_blowup() { blew_up_ = true; }

 private:
  std::size_t segment(double x) const;

  EquationOrder order_;
  double reported_tolerance_;
  bool blew_up_ = false;
  std::vector<double> grid_;
  std::vector<StateVector> states_, first_, second_;
};

/// Integrates Phi' = A(x~) Phi from `from` to `to` (either direction). A blow-up
/// past `options.blowup` stops the run and is reported, not thrown.
Trajectory integrate(const DimensionlessProblem& problem, double energy,
                     const StateVector& initial, double from, double to,
                     const OracleOptions& options = {});

/// Companion matrix A(x~) applied to a state.
StateVector companion_apply(const DimensionlessProblem& problem, double energy, double x,
                            const StateVector& s, EquationOrder order);

/// det of the stacked states of 4 (or 2, for the second-order system)
/// trajectories launched from a common anchor.
cplx wronskian(std::span<const Trajectory> trajectories, double x);

/// Trajectories from the canonical unit vectors at `anchor`, integrated to `to`.
std::vector<Trajectory> canonical_trajectories(const DimensionlessProblem& problem, double energy,
                                               double anchor, double to,
                                               const OracleOptions& options = {});

struct WronskianSample {
  double x;
  cplx value;
};

/// W(x) for the fundamental system that is the identity at `from`, sampled at
/// `samples` evenly spaced points. The propagator is built from segments
/// over which the fastest mode grows by at most e^growth, and W is the
/// product of the segment determinants. A single determinant of canonical
/// trajectories loses the decaying modes to roundoff once they fall ~1e-16
/// below the growing one.
std::vector<WronskianSample> wronskian_profile(const DimensionlessProblem& problem, double energy,
                                              double from, double to, int samples = 41,
                                              const OracleOptions& options = {},
                                              double growth = 2.0);

/// max over the grid of |eps phi'''' - phi'' + (V~ - E~) phi| divided by
/// |eps phi''''| + |phi''| + |(V~ - E~) phi| (floored at 1e-300).
double residual(const std::function<Jet(double)>& wavefunction,
                const DimensionlessProblem& problem, double energy,
                std::span<const double> grid);

/// Same numerator over the grid max of the denominator. Use for states
/// assembled numerically: at their nodes every term is roundoff and the
/// pointwise ratio is O(1) noise.
double scaled_residual(const std::function<Jet(double)>& wavefunction,
                       const DimensionlessProblem& problem, double energy,
                       std::span<const double> grid);

/// Dimension of the solutions bounded toward `side`, counted by marching the
/// canonical solutions in from the far field with QR renormalization.
/// The launch point sits where V~ - E~ = 36 and the interior anchor where
/// V~ - E~ = 4. With order Second this is the classical count (1).
int decaying_subspace_dimension(const DimensionlessProblem& problem, double energy, Side side,
                                const OracleOptions& options = {});

/// Same count between explicit points. Requires V~ - E~ >= 4 at both.
int decaying_subspace_dimension(const DimensionlessProblem& problem, double energy,
                                double launch, double anchor, const OracleOptions& options = {});

/// Two-sided matching function for the second-order equation: Wronskian of
/// the right-decaying and left-decaying solutions at x~ = 0, normalized by
/// their magnitudes. Zeros are the standard bound-state energies.
double two_sided_mismatch(const DimensionlessProblem& problem, double energy,
                          const OracleOptions& options = {});

/// Momentum-space solution for the linear potential, in scaled units
/// q = p / p_c with p_c = hbar / L_c and L_c the bouncer length:
///   i (1 + g q^2) C'(q) + (q^2 - E~) C(q) = 0,  g = beta p_c^2,
///   C(q) = C0 exp(i G(q)),  G = q/g - (1/g + E~) atan(sqrt(g) q)/sqrt(g).
struct MomentumSolution {
  cplx c0 = 1.0;
  double gamma = 0.0;       // beta p_c^2
  double energy = 0.0;      // E~
  double momentum_scale = 0.0;  // p_c in kg m/s
  int dimension = 1;

  double phase(double q) const;
  cplx operator()(double q) const;
  cplx at_si(double p) const { return (*this)(p / momentum_scale); }
};

MomentumSolution momentum_rep_linear(const PhysicalSetup& setup, double energy_si);

/// Max relative residual of the first-order momentum equation with C'
/// taken by high-order finite differences of the closed form.
double momentum_residual(const MomentumSolution& solution, std::span<const double> probe);

/// Rank of the sampled solutions of the momentum equation started from two
/// independent initial values and integrated numerically over [q_lo, q_hi].
int momentum_solution_space_dimension(const MomentumSolution& solution, double q_lo,
                                      double q_hi);

/// `x, re_phi, im_phi, re_d1, im_d1, re_d2, im_d2, re_d3, im_d3` at the grid points.
void write_trajectory_csv(const Trajectory& t, std::ostream& out);

}  // namespace gupbic
