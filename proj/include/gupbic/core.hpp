#pragma once

#include <array>
#include <filesystem>
#include <limits>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace gupbic {

/// Reduced Planck constant in J*s.
inline constexpr double kHbar = 1.054571817e-34;
/// Electron mass in kg, as used for the reference well and oscillator runs.
inline constexpr double kElectronMass = 9.10956e-31;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Closed interval; either end may be infinite.
struct Interval {
  double lo = -kInf;
  double hi = kInf;

  bool contains(double x) const { return x >= lo && x <= hi; }
  bool finite() const { return lo > -kInf && hi < kInf; }
  double width() const { return hi - lo; }
};

// Potential kinds, in SI.
struct InfiniteWell {
  double half_width;  // m; V = 0 on (-a, a), hard walls outside
};
struct LinearRamp {
  double slope;  // J/m; V = L x on (0, inf), hard wall at 0
};
struct HarmonicTrap {
  double omega;  // rad/s; V = m w^2 x^2 / 2 on the real line
};
struct TabulatedPotential {
  std::vector<double> x;  // m, strictly increasing
  std::vector<double> v;  // J
};

using PotentialSpec =
    std::variant<InfiniteWell, LinearRamp, HarmonicTrap, TabulatedPotential>;

enum class PotentialKind { InfiniteWell, Linear, Harmonic, TabulatedCustom };

PotentialKind kind_of(const PotentialSpec& spec);
std::string_view to_string(PotentialKind kind);

/// Particle, GUP parameter and potential. Validated on construction.
///
/// `beta` is the bare number multiplying [(dP)^2 + <P>^2] in the GUP
/// relation, i.e. it carries units of 1/(kg m/s)^2. The deformation that
/// enters the Hamiltonian is beta' = beta / 3 and is always derived.
class PhysicalSetup {
 public:
  PhysicalSetup(double mass, double beta, PotentialSpec potential,
                double hbar = kHbar);

  double mass() const { return mass_; }
  double beta() const { return beta_; }
  double beta_prime() const { return beta_ / 3.0; }
  double hbar() const { return hbar_; }
  const PotentialSpec& potential() const { return potential_; }
  PotentialKind kind() const { return kind_of(potential_); }

  /// Copy with a different beta; everything else unchanged.
  PhysicalSetup with_beta(double beta) const;

 private:
  double mass_;
  double beta_;
  double hbar_;
  PotentialSpec potential_;
};

/// Dimensionless potential shape V~(x~) with derivatives.
class PotentialShape {
 public:
  virtual ~PotentialShape() = default;
  /// Derivatives of V~ of order 0..4 at x.
  virtual std::array<double, 5> jet(double x) const = 0;
};

/// The scaled equation  eps phi'''' - phi'' + (V~ - E~) phi = 0  on `domain`,
/// with x = L_c x~ and E = E_c E~.
class DimensionlessProblem {
 public:
  DimensionlessProblem(double epsilon, double length_scale, double energy_scale,
                       Interval domain, PotentialKind kind,
                       std::shared_ptr<const PotentialShape> shape);

  // Natural-unit problems (L_c = E_c = 1) used throughout the tests.
  static DimensionlessProblem well(double epsilon);
  static DimensionlessProblem linear(double epsilon);
  static DimensionlessProblem harmonic(double epsilon);

  double epsilon() const { return epsilon_; }
  double length_scale() const { return length_scale_; }
  double energy_scale() const { return energy_scale_; }
  const Interval& domain() const { return domain_; }
  PotentialKind kind() const { return kind_; }

  /// Same potential, different epsilon.
  DimensionlessProblem with_epsilon(double epsilon) const;

  /// V~(x~); throws a Domain error outside the declared domain.
  double potential_value(double x) const;
  /// Derivatives of V~ of order 0..4; no domain check.
  std::array<double, 5> potential_jet(double x) const { return shape_->jet(x); }

  double to_si_energy(double e) const { return e * energy_scale_; }
  double to_dimensionless_energy(double e_si) const { return e_si / energy_scale_; }
  double to_si_length(double x) const { return x * length_scale_; }
  double to_dimensionless_length(double x_si) const { return x_si / length_scale_; }

 private:
  double epsilon_;
  double length_scale_;
  double energy_scale_;
  Interval domain_;
  PotentialKind kind_;
  std::shared_ptr<const PotentialShape> shape_;
};

/// Length scale that makes V~ coefficients O(1): a for the well,
/// (hbar^2 / (2 m L))^(1/3) for the ramp, sqrt(hbar / (m w)) for the trap,
/// half the sample span for tabulated potentials.
double canonical_length_scale(const PhysicalSetup& setup);

DimensionlessProblem nondimensionalize(const PhysicalSetup& setup, double length_scale);
DimensionlessProblem nondimensionalize(const PhysicalSetup& setup);

/// Reads a two-column `x,V` CSV in SI units. A non-numeric first line is
/// treated as a header.
TabulatedPotential read_potential_csv(const std::filesystem::path& path);

/// Parses `key = value` lines (`#` starts a comment). Keys: mass, beta,
/// potential (well|linear|harmonic|custom), a, L, omega, custom_file.
/// Relative custom_file paths resolve against `base_dir`.
PhysicalSetup parse_config(std::string_view text,
                           const std::filesystem::path& base_dir = {});
PhysicalSetup load_config(const std::filesystem::path& path);

/// The reference well: electron mass, a = 1e-10 m, beta = 1e47.
PhysicalSetup reference_well_setup();

}  // namespace gupbic
