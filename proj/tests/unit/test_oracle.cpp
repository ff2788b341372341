#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <boost/math/special_functions/airy.hpp>

#include "gen.hpp"
#include "gupbic/basis.hpp"
#include "gupbic/error.hpp"
#include "gupbic/oracle.hpp"
#include "gupbic/spectrum.hpp"

using namespace gupbic;

namespace {

const double kPi = std::numbers::pi;

// E~ at which kappa = k pi / 2 for the given eps
double special(double eps, int k) {
  const double kk = k * kPi / 2.0;
  return eps * kk * kk * kk * kk + kk * kk;
}

StateVector of(const Jet& j) { return {j[0], j[1], j[2], j[3]}; }

std::vector<double> grid(double lo, double hi, int n) {
  std::vector<double> g;
  for (int i = 0; i <= n; ++i) g.push_back(lo + (hi - lo) * i / n);
  return g;
}

}  // namespace

TEST_CASE("well sine launched from the left wall returns to zero at the right") {
  const double eps = 7.414e-2;
  const DimensionlessProblem p = DimensionlessProblem::well(eps);
  for (int k = 1; k <= 3; ++k) {
    const double kk = k * kPi / 2.0;
    const Trajectory t = integrate(p, special(eps, k), {0.0, kk, 0.0, -kk * kk * kk}, -1.0, 1.0);
    CHECK(std::abs(t.at(1.0)[0]) <= 1e-9);
  }
}

TEST_CASE("zero initial data stays zero") {
  const Trajectory t = integrate(DimensionlessProblem::harmonic(0.1), 3.0, {}, -2.0, 2.0);
  for (double x : grid(-2.0, 2.0, 40))
    for (const cplx c : t.at(x)) CHECK(c == 0.0);
}

TEST_CASE("trap: decaying WKB data from the far right stays bounded inward") {
  const DimensionlessProblem p = DimensionlessProblem::harmonic(0.128);
  const double e = 3.7;
  const Interval v = far_field_validity(p, e, Side::PlusInfinity);
  const double seed = v.lo + 2.0;
  const BasisFunction w2 = wkb_basis(wkb_parameters(p, e, seed), 2, v);
  const Trajectory t = integrate(p, e, of(w2.evaluate(seed)), seed, 0.0);
  CHECK_FALSE(t.blew_up());
  CHECK(std::isfinite(std::abs(t.at(0.0)[0])));
}

TEST_CASE("Wronskian of canonical solutions") {
  const DimensionlessProblem p = DimensionlessProblem::well(0.2);
  const auto trajs = canonical_trajectories(p, 4.0, -1.0, 1.0);
  CHECK(std::abs(wronskian(trajs, -1.0) - 1.0) <= 1e-15);
  for (double x : grid(-1.0, 1.0, 20)) CHECK(std::abs(wronskian(trajs, x) - 1.0) <= 1e-8);
  CHECK_THROWS_AS(wronskian(std::span(trajs).first(3), 0.0), Error);
}

TEST_CASE("dependent initial vectors give W = 0") {
  const DimensionlessProblem p = DimensionlessProblem::linear(0.3);
  std::vector<Trajectory> t;
  const StateVector a{1.0, 0.2, -0.1, 0.4}, b{0.0, 1.0, 0.5, -0.3}, c{0.3, 0.0, 1.0, 0.2};
  StateVector d;
  for (int i = 0; i < 4; ++i) d[i] = 2.0 * a[i] - b[i];
  for (const auto& s : {a, b, c, d}) t.push_back(integrate(p, 2.0, s, 0.5, 1.5));
  CHECK(std::abs(wronskian(t, 0.5)) <= 1e-14);
  CHECK(std::abs(wronskian(t, 1.5)) <= 1e-8);
}

TEST_CASE("property: Wronskian constant across random problems") {
  Gen g(31);
  for (int i = 0; i < 12; ++i) {
    const double eps = g.log_uniform(1e-3, 1.0), e = g.uniform(0.5, 15.0);
    DimensionlessProblem p = DimensionlessProblem::well(eps);
    double lo = -1.0, hi = 1.0;
    if (i % 3 == 1) {
      p = DimensionlessProblem::linear(eps);
      lo = 0.0;
      hi = e + 4.0;
    } else if (i % 3 == 2) {
      p = DimensionlessProblem::harmonic(eps);
      hi = std::sqrt(e + 4.0);
      lo = -hi;
    }
    for (const auto& s : wronskian_profile(p, e, lo, hi, 31))
      CHECK(std::abs(s.value - 1.0) <= 1e-8);
  }
}

TEST_CASE("closed-form and integrated well solutions agree") {
  const double eps = 0.1, e = 5.0;
  const DimensionlessProblem p = DimensionlessProblem::well(eps);
  const FundamentalSet f = exact_constant_basis(characteristic_roots(eps, e));
  for (const auto& b : f) {
    const Trajectory t = integrate(p, e, of(b.evaluate(-1.0)), -1.0, 1.0);
    double err = 0.0, scale = 0.0;
    for (double x : grid(-0.999, 0.999, 400)) {
      err = std::max(err, std::abs(t.at(x)[0] - b.evaluate(x)[0]));
      scale = std::max(scale, std::abs(b.evaluate(x)[0]));
    }
    CHECK(err <= 1e-8 * scale);
  }
}

TEST_CASE("property: integration is linear") {
  Gen g(32);
  const DimensionlessProblem p = DimensionlessProblem::harmonic(0.2);
  for (int i = 0; i < 10; ++i) {
    StateVector u, v, w;
    const cplx al(g.uniform(-2, 2), g.uniform(-2, 2)), be(g.uniform(-2, 2), g.uniform(-2, 2));
    for (int k = 0; k < 4; ++k) {
      u[k] = cplx(g.uniform(-1, 1), g.uniform(-1, 1));
      v[k] = cplx(g.uniform(-1, 1), g.uniform(-1, 1));
      w[k] = al * u[k] + be * v[k];
    }
    const double e = g.uniform(1.0, 8.0);
    const Trajectory tu = integrate(p, e, u, -1.0, 1.0), tv = integrate(p, e, v, -1.0, 1.0),
                     tw = integrate(p, e, w, -1.0, 1.0);
    for (double x : grid(-1.0, 1.0, 10)) {
      const cplx lhs = tw.at(x)[0], rhs = al * tu.at(x)[0] + be * tv.at(x)[0];
      CHECK(std::abs(lhs - rhs) <= 1e-8 * (std::abs(lhs) + std::abs(rhs) + 1.0));
    }
  }
}

TEST_CASE("tighter tolerance reduces the error against the exact sine") {
  const double eps = 7.414e-2;
  const DimensionlessProblem p = DimensionlessProblem::well(eps);
  const double kk = kPi, e = special(eps, 2);
  double prev = 1e300;
  for (double tol : {1e-6, 1e-8, 1e-10, 1e-12}) {
    OracleOptions o;
    o.rel_tol = tol;
    o.abs_tol = tol * 1e-2;
    const Trajectory t = integrate(p, e, {0.0, kk, 0.0, -kk * kk * kk}, -1.0, 1.0, o);
    double err = 0.0;
    for (double x : grid(-1.0, 1.0, 200))
      err = std::max(err, std::abs(t.at(x)[0] - std::sin(kk * (x + 1.0))));
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev <= 1e-9);
}

TEST_CASE("dense output between steps") {
  const double eps = 7.414e-2, kk = kPi / 2.0;
  const Trajectory t =
      integrate(DimensionlessProblem::well(eps), special(eps, 1), {0.0, kk, 0.0, -kk * kk * kk}, -1.0, 1.0);
  const auto& xs = t.grid();
  REQUIRE(xs.size() > 3);
  double err = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double mid = 0.5 * (xs[i] + xs[i + 1]);
    err = std::max(err, std::abs(t.at(mid)[0] - std::sin(kk * (mid + 1.0))));
  }
  CHECK(err <= 1e-8);
}

TEST_CASE("residual: exact, WKB and a corrupted state") {
  const double eps = 7.414e-2;
  const DimensionlessProblem well = DimensionlessProblem::well(eps);
  const double kk = kPi / 2.0, e = special(eps, 1);
  auto sine = [&](double x) {
    Jet j;
    const double s = std::sin(kk * (x + 1.0)), c = std::cos(kk * (x + 1.0));
    j[0] = s;
    j[1] = kk * c;
    j[2] = -kk * kk * s;
    j[3] = -kk * kk * kk * c;
    j[4] = kk * kk * kk * kk * s;
    return j;
  };
  const auto g = grid(-1.0, 1.0, 200);
  CHECK(residual(sine, well, e, g) <= 1e-10);
  auto corrupted = [&](double x) {
    Jet j = sine(x);
    j[0] += 0.01 * x;
    j[1] += 0.01;
    return j;
  };
  CHECK(residual(corrupted, well, e, g) > 0.5);
  CHECK(scaled_residual(sine, well, e, g) <= 1e-14);
  CHECK(scaled_residual(corrupted, well, e, g) > 1e-3);

  double prev = 1e300;
  for (double ep : {1e-3, 1e-4}) {
    const DimensionlessProblem p = DimensionlessProblem::linear(ep);
    const Interval v = far_field_validity(p, 3.0, Side::PlusInfinity);
    const double lo = v.lo + 1.0;
    const BasisFunction w2 = wkb_basis(wkb_parameters(p, 3.0, lo), 2, v);
    const double r = residual([&](double x) { return w2.evaluate(x); }, p, 3.0, grid(lo, lo + 3.0, 100));
    CHECK(r <= 1e-2);
    CHECK(r < prev);
    prev = r;
  }
}

TEST_CASE("decaying subspace dimensions") {
  const DimensionlessProblem trap = DimensionlessProblem::harmonic(0.128);
  CHECK(decaying_subspace_dimension(trap, 3.0, Side::PlusInfinity) == 2);
  CHECK(decaying_subspace_dimension(trap, 3.0, Side::MinusInfinity) == 2);
  const DimensionlessProblem ramp = DimensionlessProblem::linear(0.103);
  CHECK(decaying_subspace_dimension(ramp, 4.0, Side::PlusInfinity) == 2);
  OracleOptions second;
  second.order = EquationOrder::Second;
  const DimensionlessProblem classical = DimensionlessProblem::harmonic(0.0);
  CHECK(decaying_subspace_dimension(classical, 3.0, Side::PlusInfinity, second) == 1);
  CHECK(decaying_subspace_dimension(classical, 3.0, Side::MinusInfinity, second) == 1);
  // launch point not forbidden
  CHECK_THROWS_AS(decaying_subspace_dimension(trap, 3.0, 1.0, 3.0), Error);
}

TEST_CASE("momentum representation of the ramp") {
  const PhysicalSetup s(kElectronMass, 1e47, LinearRamp{1e-8});
  const DimensionlessProblem p = nondimensionalize(s);
  const double e = -boost::math::airy_ai_zero<double>(1);
  const MomentumSolution m = momentum_rep_linear(s, p.to_si_energy(e));
  std::vector<double> probe;
  for (int i = 0; i < 100; ++i) probe.push_back(-6.0 + 12.0 * (i + 0.5) / 100.0);
  CHECK(momentum_residual(m, probe) <= 1e-10);
  CHECK(m.dimension == 1);
  CHECK(momentum_solution_space_dimension(m, -4.0, 4.0) == 1);
  CHECK(std::abs(std::abs(m(1.3)) - std::abs(m.c0)) <= 1e-14);

  const MomentumSolution plain = momentum_rep_linear(s.with_beta(0.0), p.to_si_energy(e));
  CHECK(plain.gamma == 0.0);
  CHECK(momentum_residual(plain, probe) <= 1e-10);

  // small beta approaches the standard form exp(i (q^3/3 - E q))
  double prev = 1e300;
  for (double beta : {1e45, 1e43, 1e41, 1e39}) {
    const MomentumSolution ms = momentum_rep_linear(s.with_beta(beta), p.to_si_energy(e));
    double err = 0.0;
    for (double q : grid(-3.0, 3.0, 60))
      err = std::max(err, std::abs(ms(q) - std::exp(cplx(0.0, q * q * q / 3.0 - ms.energy * q))));
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev <= 1e-5);
  CHECK_THROWS_AS(momentum_rep_linear(reference_well_setup(), 1e-18), Error);
}

TEST_CASE("classical mismatch vanishes only at the standard levels") {
  const DimensionlessProblem p = DimensionlessProblem::harmonic(0.0);
  OracleOptions o;
  o.order = EquationOrder::Second;
  for (double e : {1.0, 3.0, 5.0}) CHECK(std::abs(two_sided_mismatch(p, e, o)) <= 1e-9);
  for (double e : {2.0, 4.0, 1.5, 3.6}) CHECK(std::abs(two_sided_mismatch(p, e, o)) >= 0.05);
}

TEST_CASE("trajectory CSV") {
  const Trajectory t = integrate(DimensionlessProblem::well(0.1), 3.0, {1.0, 0.0, 0.0, 0.0}, -1.0, 1.0);
  std::ostringstream out;
  write_trajectory_csv(t, out);
  const std::string s = out.str();
  CHECK(s.rfind("x,re_phi,im_phi,re_d1,im_d1,re_d2,im_d2,re_d3,im_d3\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == static_cast<long>(t.grid().size()) + 1);
}
