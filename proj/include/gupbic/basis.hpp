#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "gupbic/core.hpp"
#include "gupbic/jet.hpp"

namespace gupbic {

/// Roots of  eps mu^4 - mu^2 - (E~ - V~) = 0.
///
/// mu1 > 0 is the fast exponential rate (mu2 = -mu1). In the allowed region
/// (E~ > V~) the slow pair is +-i kappa; in the forbidden region it is the
/// real pair +-nu. At E~ = V~ both kappa and nu vanish (double root at 0).
struct CharacteristicRoots {
  double epsilon = 0.0;
  double e_minus_v = 0.0;
  double mu1 = 0.0;
  double mu2 = 0.0;
  double kappa = 0.0;
  double nu = 0.0;
  double discriminant = 0.0;  // 1 + 4 eps (E~ - V~)

  bool classically_forbidden() const { return e_minus_v < 0.0; }
  /// {mu1, mu2, i kappa, -i kappa} or {mu1, mu2, nu, -nu}.
  std::array<cplx, 4> roots() const;
};

CharacteristicRoots characteristic_roots(double epsilon, double e_minus_v);

enum class AsymptoticClass { Growing, Decaying, Oscillatory, Undefined };
enum class Side { PlusInfinity, MinusInfinity };
enum class Method { Exact, Wkb, Continued };

std::string_view to_string(AsymptoticClass c);
std::string_view to_string(Side s);
std::string_view to_string(Method m);

/// One member of a fundamental system. Value type; evaluation is pure and
/// safe to call from several threads.
class BasisFunction {
 public:
  using Evaluator = std::function<Jet(double)>;
  using LogEvaluator = std::function<cplx(double)>;
  using NthDerivative = std::function<cplx(double, int)>;

  BasisFunction(int index, Method method, Interval validity, Evaluator eval,
                LogEvaluator log_eval = {}, NthDerivative nth = {});

  int index() const { return index_; }
  Method method() const { return method_; }
  const Interval& validity() const { return validity_; }

  /// Value and derivatives 0..4 at x.
  Jet evaluate(double x) const { return eval_(x); }
  /// log of the value, finite even where the value itself would overflow.
  cplx log_value(double x) const;

  bool has_nth_derivative() const { return static_cast<bool>(nth_); }
  /// Derivative of arbitrary order; closed-form bases only.
  cplx nth_derivative(double x, int n) const;

  AsymptoticClass asymptotic_class(Side side) const {
    return side == Side::PlusInfinity ? plus_ : minus_;
  }
  void set_asymptotic_class(Side side, AsymptoticClass c) {
    (side == Side::PlusInfinity ? plus_ : minus_) = c;
  }

  /// Set when the function is two half-line solutions joined at a point
  /// (mirror construction for symmetric two-sided decay problems).
  std::optional<double> junction() const { return junction_; }
  void set_junction(double x) { junction_ = x; }

 private:
  int index_;
  Method method_;
  Interval validity_;
  Evaluator eval_;
  LogEvaluator log_eval_;
  NthDerivative nth_;
  AsymptoticClass plus_ = AsymptoticClass::Undefined;
  AsymptoticClass minus_ = AsymptoticClass::Undefined;
  std::optional<double> junction_;
};

using FundamentalSet = std::array<BasisFunction, 4>;

/// {exp(mu1 x), exp(-mu1 x), cos(kappa x), sin(kappa x)} in the allowed
/// region, {exp(mu1 x), exp(-mu1 x), exp(nu x), exp(-nu x)} in the forbidden one.
FundamentalSet exact_constant_basis(const CharacteristicRoots& roots);

/// Scaled form  phi'''' - 2 eta^2 a phi'' + b(x) eta^4 phi = 0  of the
/// dimensionless equation: eta = eps^(-1/4), a = eta^2 / 2, b = V~ - E~.
struct WkbParameters {
  double eta = 0.0;
  double a_coef = 0.0;
  std::function<std::array<double, 5>(double)> b;  // derivatives 0..4
  double x0 = 0.0;
  /// Multiplies the  -1/2 int lambda' / sqrt(a^2 - b)  term. The integral is
  /// not scale invariant: its SI value equals the scaled one times
  /// 2^(1/4) sqrt(hbar L_c), which is the default. 1 evaluates the term
  /// literally in scaled variables.
  double correction_weight = 0.0;
};

WkbParameters wkb_parameters(const DimensionlessProblem& problem, double energy, double x0);

struct TurningPoint {
  enum class Type { PotentialCrossing, RootCoalescence };  // b = 0, a^2 = b
  double x;
  Type type;
};

/// Sign changes of b and a^2 - b inside `scan` (infinite ends are clipped to
/// 200 length units).
std::vector<TurningPoint> turning_points(const WkbParameters& params, Interval scan,
                                         int samples = 4000);

inline constexpr double kTurningWindow = 0.05;

/// Natural width of the transition layer at a turning point: (|b'|)^(-1/3)
/// where b = 0 and (2 |b'|)^(-1/3) where a^2 = b. WKB asymptotics hold a few
/// layer widths away; the width does not shrink with eps.
double turning_layer_width(const WkbParameters& params, const TurningPoint& tp);

/// WKB solution omega_j, j = 1..4, valid on `validity`. The exponent and
/// correction integrals are memoized on a fixed lattice anchored at x0, so
/// values do not depend on evaluation order.
BasisFunction wkb_basis(const WkbParameters& params, int j, Interval validity);
FundamentalSet wkb_basis(const WkbParameters& params, Interval validity);

/// Far-field interval beyond the outermost turning point on `side`, shrunk
/// by the turning-point window. Requires eps > 0 and a potential that grows
/// without bound toward `side`.
Interval far_field_validity(const DimensionlessProblem& problem, double energy, Side side,
                            double window = kTurningWindow);

/// Growing / Decaying when |f| changes by 10x or more across the probes,
/// Oscillatory when Re f changes sign and the amplitude ratio stays in
/// [0.5, 2], Undefined otherwise.
AsymptoticClass classify_asymptotics(const BasisFunction& f, Side side,
                                     std::span<const double> probe);

/// Classifies toward `side` on probes inside the validity interval,
/// widening the probe range up to a few times before giving up.
AsymptoticClass classify_far_field(const BasisFunction& f, Side side);

/// Debug dump: `x, re, im, d1, d2, d3` (derivatives as real parts).
void write_basis_csv(const BasisFunction& f, std::span<const double> grid, std::ostream& out);

}  // namespace gupbic
