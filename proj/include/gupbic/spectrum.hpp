#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gupbic/core.hpp"
#include "gupbic/matcher.hpp"

namespace gupbic {

struct SpecialEnergy {
  int k = 0;
  double energy_si = 0.0;  // J
  double energy = 0.0;     // E~
};

/// E_k = k^4 pi^4 hbar^4 beta' / (16 m a^4) + k^2 pi^2 hbar^2 / (8 m a^2).
std::vector<SpecialEnergy> well_special_energies(const PhysicalSetup& setup, int k_max);

/// Dimensionless reference levels used to label scans: the special energies for
/// the well, 2n+1 for the trap, -a_n (Airy zeros) for the ramp. Ascending,
/// up to `e_max`; tabulated potentials have none.
std::vector<SpecialEnergy> reference_levels(const PhysicalSetup& setup,
                                            const DimensionlessProblem& problem, double e_max);

enum class BandLabel { StandardLevel, ExtraContinuum };
std::string_view to_string(BandLabel label);

struct SpectrumScan {
  std::vector<double> energies;     // E~
  std::vector<double> energies_si;  // J
  std::vector<int> dof;             // -1 where the energy failed
  std::vector<BandLabel> labels;
  std::vector<std::string> errors;  // empty where the energy succeeded
  std::vector<SpecialEnergy> special_marks;
  double energy_scale = 1.0;
};

struct ScanOptions {
  unsigned threads = 1;
  OracleOptions oracle;
  std::optional<std::vector<BoundaryCondition>> conditions;  // default per kind
};

/// DOF per energy over a grid of E~. Failures are recorded per energy and do
/// not stop the scan.
/// A grid point is a StandardLevel when it is the point nearest a reference
/// level and lies within one local spacing of it.
SpectrumScan dof_scan(const DimensionlessProblem& problem, const std::vector<double>& grid,
                      const std::vector<SpecialEnergy>& levels, const ScanOptions& options = {});
SpectrumScan dof_scan(const PhysicalSetup& setup, const std::vector<double>& grid,
                      const ScanOptions& options = {});

/// `E_SI,E_dimensionless,dof,label` rows, 17 significant digits.
std::string scan_csv(const SpectrumScan& scan);
nlohmann::json scan_json(const SpectrumScan& scan);

/// Derivatives 0..6 of a scaled wavefunction.
using Derivatives = std::array<cplx, 7>;

struct StateProfile {
  std::function<Derivatives(double)> eval;
  Interval extent;
  std::vector<double> breakpoints;
};

/// Orders 0..3 from the state, 4..6 through the equation
/// (eps phi'''' = phi'' - q phi, q = V~ - E~, differentiated twice).
StateProfile profile(const BoundState& state, const BoundStateSolution& solution,
                     const DimensionlessProblem& problem);

/// beta = 0 ground state in scaled units with analytic derivatives: the
/// sine for the well, the Gaussian for the trap, Ai(x - |a_1|) for the ramp.
StateProfile standard_ground_state(const DimensionlessProblem& problem);

struct MomentumMoments {
  // moments of p = -i hbar d/dx, SI
  double mean_p = 0.0, mean_p2 = 0.0, mean_p3 = 0.0, mean_p4 = 0.0, mean_p6 = 0.0;
  double delta_p = 0.0;
  // P = p + beta' p^3 at the setup's beta
  double mean_P = 0.0, mean_P2 = 0.0, delta_P = 0.0;
  double beta = 0.0;
  double norm = 0.0;        // int |phi|^2 dx~ before the check
  double ratio = 0.0;       // beta [(dp)^2 + <p>^2]
  double ratio_full = 0.0;  // beta [(dP)^2 + <P>^2]
};

/// Throws Precondition when | ||phi||^2 - 1 | exceeds 1e-6.
MomentumMoments momentum_moments(const StateProfile& state, const DimensionlessProblem& problem,
                                 const PhysicalSetup& setup, double rel_tol = 1e-11);

/// <P^2> for another beta from the same p moments.
double full_second_moment(const MomentumMoments& m, double beta);

enum class Visibility { Obvious, Inconspicuous };
std::string_view to_string(Visibility v);

struct Observability {
  Visibility verdict = Visibility::Inconspicuous;
  double ratio = 0.0;
  double ratio_full = 0.0;
  double threshold = 0.1;
};

Observability observability(const MomentumMoments& moments, double threshold = 0.1);

/// Lowest standard state for the setup: the matcher's oscillatory state at
/// E_1 for the well when eps > 1e-6, otherwise standard_ground_state (the
/// same sine, with analytic derivatives).
StateProfile ground_state(const PhysicalSetup& setup, const DimensionlessProblem& problem);

Observability observability(const PhysicalSetup& setup, double threshold = 0.1);

struct CriticalExponent {
  double leading = 0.0;  // log10 1/<p^2>, beta independent
  double refined = 0.0;  // one fixed-point step with the full P at 10^leading
  std::optional<double> published_value;
  bool discrepancy = false;  // |leading - published_value| > 1.5
};

/// Throws UndefinedExponent for vanishing moments.
CriticalExponent critical_beta_exponent(const MomentumMoments& moments, PotentialKind kind);
CriticalExponent critical_beta_exponent(const PhysicalSetup& setup);

}  // namespace gupbic
