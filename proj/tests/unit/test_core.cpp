#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "gen.hpp"
#include "gupbic/core.hpp"
#include "gupbic/error.hpp"

using namespace gupbic;

namespace {

ErrorKind kind_of_throw(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no gupbic::Error thrown");
  return ErrorKind::Numerical;
}

}  // namespace

TEST_CASE("reference well scales") {
  const PhysicalSetup s = reference_well_setup();
  const DimensionlessProblem p = nondimensionalize(s);
  const double a = 1e-10, m = 9.10956e-31, h = 1.054571817e-34;
  CHECK(p.epsilon() == doctest::Approx(2.0 * (1e47 / 3.0) * h * h / (a * a)).epsilon(1e-14));
  CHECK(p.epsilon() == doctest::Approx(7.414e-2).epsilon(1e-3));
  CHECK(p.energy_scale() == doctest::Approx(h * h / (2.0 * m * a * a)).epsilon(1e-14));
  CHECK(p.energy_scale() == doctest::Approx(6.104e-19).epsilon(1e-3));
  CHECK(p.length_scale() == a);
}

TEST_CASE("beta = 0 gives eps = 0 at any length scale") {
  const PhysicalSetup s = reference_well_setup().with_beta(0.0);
  for (double lc : {1e-12, 1e-10, 3e-9}) CHECK(nondimensionalize(s, lc).epsilon() == 0.0);
}

TEST_CASE("potential values") {
  const DimensionlessProblem well = nondimensionalize(reference_well_setup());
  CHECK(well.potential_value(0.0) == 0.0);
  CHECK(kind_of_throw([&] { well.potential_value(1.5); }) == ErrorKind::Domain);

  const PhysicalSetup trap(kElectronMass, 1e47, HarmonicTrap{2e16});
  CHECK(nondimensionalize(trap).potential_value(2.0) == doctest::Approx(4.0).epsilon(1e-13));

  const PhysicalSetup ramp(kElectronMass, 1e47, LinearRamp{1e-8});
  const DimensionlessProblem canon = nondimensionalize(ramp);
  CHECK(canon.potential_value(3.0) == doctest::Approx(3.0).epsilon(1e-13));
  CHECK(kind_of_throw([&] { canon.potential_value(-0.1); }) == ErrorKind::Domain);
  // any length scale: V~ = (L Lc / Ec) x~
  const double lc = 2.5e-9;
  const DimensionlessProblem p = nondimensionalize(ramp, lc);
  const double slope = 1e-8 * lc / p.energy_scale();
  for (double x : {0.0, 0.7, 4.0, 19.0})
    CHECK(p.potential_value(x) == doctest::Approx(slope * x).epsilon(1e-13));
}

TEST_CASE("marked energies in well units") {
  const DimensionlessProblem p = nondimensionalize(reference_well_setup());
  CHECK(p.to_dimensionless_energy(1e-18) == doctest::Approx(1.638).epsilon(1e-3));
  CHECK(p.to_dimensionless_energy(5e-18) == doctest::Approx(8.192).epsilon(1e-3));
  CHECK(p.to_dimensionless_energy(1e-17) == doctest::Approx(16.38).epsilon(1e-3));
}

TEST_CASE("property: SI round trip is the identity") {
  Gen g(11);
  for (int i = 0; i < 200; ++i) {
    const double m = g.log_uniform(1e-31, 1e-25);
    const double beta = g.integer(0, 3) == 0 ? 0.0 : g.log_uniform(1e20, 1e50);
    PotentialSpec spec;
    switch (g.integer(0, 2)) {
      case 0: spec = InfiniteWell{g.log_uniform(1e-12, 1e-6)}; break;
      case 1: spec = LinearRamp{g.log_uniform(1e-30, 1e-5)}; break;
      default: spec = HarmonicTrap{g.log_uniform(1e10, 1e32)}; break;
    }
    const DimensionlessProblem p = nondimensionalize(PhysicalSetup(m, beta, spec));
    const double e = g.log_uniform(1e-25, 1e-10), x = g.log_uniform(1e-14, 1e-3);
    CHECK(std::abs(p.to_si_energy(p.to_dimensionless_energy(e)) - e) <= 1e-14 * e);
    CHECK(std::abs(p.to_si_length(p.to_dimensionless_length(x)) - x) <= 1e-14 * x);
  }
}

TEST_CASE("property: eps invariant under a -> s a, beta -> s^2 beta") {
  Gen g(12);
  const PhysicalSetup base = reference_well_setup();
  const double eps0 = nondimensionalize(base).epsilon();
  for (int i = 0; i < 10; ++i) {
    const double s = g.log_uniform(1e-3, 1e3);
    const PhysicalSetup scaled(base.mass(), base.beta() * s * s, InfiniteWell{1e-10 * s});
    CHECK(nondimensionalize(scaled).epsilon() == doctest::Approx(eps0).epsilon(1e-13));
  }
}

TEST_CASE("invalid setups") {
  CHECK(kind_of_throw([] { PhysicalSetup(-1.0, 0.0, InfiniteWell{1e-10}); }) ==
        ErrorKind::InvalidSetup);
  CHECK(kind_of_throw([] { PhysicalSetup(1.0, NAN, InfiniteWell{1e-10}); }) ==
        ErrorKind::InvalidSetup);
  CHECK(kind_of_throw([] { PhysicalSetup(1.0, 0.0, HarmonicTrap{0.0}); }) ==
        ErrorKind::InvalidSetup);
  CHECK(kind_of_throw([] {
          nondimensionalize(reference_well_setup(), std::numeric_limits<double>::infinity());
        }) == ErrorKind::InvalidSetup);
}

TEST_CASE("config parsing") {
  const PhysicalSetup s = parse_config(
      "# ramp\nmass = 9.10956e-31\nbeta = 1e47\npotential = linear\nL = 1e-8  # J/m\n");
  CHECK(s.kind() == PotentialKind::Linear);
  CHECK(std::get<LinearRamp>(s.potential()).slope == 1e-8);
  CHECK(s.beta_prime() == doctest::Approx(1e47 / 3.0));
  // a defaults to the reference width
  CHECK(std::get<InfiniteWell>(parse_config("mass = 1\nbeta = 0\npotential = well\n").potential())
            .half_width == 1e-10);
  CHECK(kind_of_throw([] { parse_config("mass = 1\npotential = linear\n"); }) ==
        ErrorKind::InvalidSetup);  // missing L
  CHECK(kind_of_throw([] { parse_config("potential = bowl\n"); }) == ErrorKind::InvalidSetup);
  CHECK(kind_of_throw([] { parse_config("mass = 1\ncolour = red\n"); }) ==
        ErrorKind::InvalidSetup);
  CHECK(kind_of_throw([] { parse_config("mass = 1x\npotential = well\na = 1\n"); }) ==
        ErrorKind::InvalidSetup);
}

TEST_CASE("custom potential CSV") {
  const auto dir = std::filesystem::temp_directory_path() / "gupbic_core_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "good.csv");
    f << "x,V\n";
    for (int i = 0; i <= 40; ++i) {
      const double x = -1e-9 + 5e-11 * i;
      f << x << "," << 1e-19 * (x / 1e-9) * (x / 1e-9) << "\n";
    }
    std::ofstream b(dir / "bad.csv");
    b << "0,0\n1e-10,1e-20\n5e-11,1e-20\n2e-10,3e-20\n3e-10,4e-20\n";
  }
  const TabulatedPotential t = read_potential_csv(dir / "good.csv");
  CHECK(t.x.size() == 41);
  const PhysicalSetup s(kElectronMass, 0.0, t);
  const DimensionlessProblem p = nondimensionalize(s);
  CHECK(p.kind() == PotentialKind::TabulatedCustom);
  // interpolation reproduces samples
  const double x5 = p.to_dimensionless_length(t.x[5]);
  CHECK(p.potential_value(x5) == doctest::Approx(p.to_dimensionless_energy(t.v[5])).epsilon(1e-12));
  CHECK(kind_of_throw([&] { PhysicalSetup(kElectronMass, 0.0, read_potential_csv(dir / "bad.csv")); }) ==
        ErrorKind::InvalidSetup);
  std::filesystem::remove_all(dir);
}
