#include <doctest.h>

#include <cmath>
#include <numbers>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/Polynomials>

#include "gen.hpp"
#include "gupbic/basis.hpp"
#include "gupbic/error.hpp"

using namespace gupbic;

namespace {

double quartic_rel(double eps, double ev, cplx mu) {
  const cplx m2 = mu * mu;
  const cplx r = eps * m2 * m2 - m2 - ev;
  return std::abs(r) / (std::abs(eps * m2 * m2) + std::abs(m2) + std::abs(ev) + 1e-300);
}

// eps phi'''' - phi'' - (E - V) phi with constant E - V
double ode_rel(const Jet& j, double eps, double ev) {
  const cplx r = eps * j[4] - j[2] - ev * j[0];
  return std::abs(r) / (std::abs(eps * j[4]) + std::abs(j[2]) + std::abs(ev * j[0]) + 1e-300);
}

cplx fd(const BasisFunction& f, double x, int k, double h) {
  return (-f.evaluate(x + 2 * h)[k] + 8.0 * f.evaluate(x + h)[k] - 8.0 * f.evaluate(x - h)[k] +
          f.evaluate(x - 2 * h)[k]) /
         (12.0 * h);
}

}  // namespace

TEST_CASE("roots at E = V") {
  const double eps = 0.2;
  const auto r = characteristic_roots(eps, 0.0);
  CHECK(r.kappa == 0.0);
  CHECK(r.nu == 0.0);
  CHECK(r.mu1 == doctest::Approx(1.0 / std::sqrt(eps)).epsilon(1e-15));
  CHECK(r.mu2 == doctest::Approx(-1.0 / std::sqrt(eps)).epsilon(1e-15));
}

TEST_CASE("roots at the reference special energy against a polynomial solver") {
  const double eps = 7.414e-2, ev = 2.9186;
  const auto r = characteristic_roots(eps, ev);
  CHECK(r.kappa == doctest::Approx(std::numbers::pi / 2).epsilon(1e-4));
  CHECK(r.mu1 == doctest::Approx(3.994).epsilon(1e-3));
  // eps mu^4 - mu^2 - ev, coefficients low to high
  Eigen::VectorXd c(5);
  c << -ev, 0.0, -1.0, 0.0, eps;
  Eigen::PolynomialSolver<double, 4> solver(c);
  const auto& oracle = solver.roots();
  for (const cplx mu : r.roots()) {
    double best = 1e300;
    for (int i = 0; i < 4; ++i) best = std::min(best, std::abs(oracle[i] - mu) / std::abs(mu));
    CHECK(best <= 1e-12);
  }
}

TEST_CASE("eps -> 0 limit") {
  const double ev = 3.0;
  const auto r = characteristic_roots(1e-10, ev);
  CHECK(r.kappa == doctest::Approx(std::sqrt(ev)).epsilon(1e-8));
  CHECK(r.mu1 > 1e4);
}

TEST_CASE("root errors") {
  CHECK_THROWS_AS(characteristic_roots(0.0, 1.0), Error);
  try {
    characteristic_roots(1.0, -1.0);  // 1 + 4 eps (E - V) < 0
    FAIL("expected complex quartet");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ComplexQuartet);
  }
}

TEST_CASE("property: quartic residual and root parity") {
  Gen g(21);
  for (int i = 0; i < 1000; ++i) {
    const double eps = g.log_uniform(1e-6, 10.0);
    const double ev = g.integer(0, 1) ? g.uniform(-0.249 / eps, 0.0) : g.log_uniform(1e-6, 1e3);
    const auto r = characteristic_roots(eps, ev);
    const auto roots = r.roots();
    for (const cplx mu : roots) {
      CHECK(quartic_rel(eps, ev, mu) <= 1e-11);
      double pair = 1e300;
      for (const cplx nu : roots) pair = std::min(pair, std::abs(nu + mu));
      CHECK(pair <= 1e-12 * (std::abs(mu) + 1.0));
    }
  }
}

TEST_CASE("exact basis") {
  const double eps = 7.414e-2, ev = 2.91878;
  const auto r = characteristic_roots(eps, ev);
  const FundamentalSet f = exact_constant_basis(r);
  for (const auto& b : f) {
    double num = 0.0, den = 0.0;
    for (double x : {-1.0, -0.3, 0.0, 0.45, 1.0}) {
      const Jet j = b.evaluate(x);
      num = std::max(num, std::abs(eps * j[4] - j[2] - ev * j[0]));
      den = std::max(den, std::abs(eps * j[4]) + std::abs(j[2]) + std::abs(ev * j[0]));
    }
    CHECK(num <= 1e-13 * den);
  }
  Eigen::Matrix4cd w;
  for (int i = 0; i < 4; ++i)
    for (int d = 0; d < 4; ++d) w(d, i) = f[i].evaluate(0.0)[d];
  CHECK(std::abs(w.determinant()) > 1e-3);
  CHECK(f[0].asymptotic_class(Side::PlusInfinity) == AsymptoticClass::Growing);
  CHECK(f[1].asymptotic_class(Side::PlusInfinity) == AsymptoticClass::Decaying);
  CHECK(f[2].asymptotic_class(Side::PlusInfinity) == AsymptoticClass::Oscillatory);
  CHECK(f[3].asymptotic_class(Side::PlusInfinity) == AsymptoticClass::Oscillatory);
  CHECK_THROWS_AS(exact_constant_basis(characteristic_roots(eps, 0.0)), Error);
}

TEST_CASE("small eps: cos/sin members approach the standard well solutions") {
  const double ev = 2.0;
  double prev = 1e300;
  for (double eps : {1e-2, 1e-4, 1e-6, 1e-8}) {
    const FundamentalSet f = exact_constant_basis(characteristic_roots(eps, ev));
    double err = 0.0;
    for (int i = 0; i <= 20; ++i) {
      const double x = -1.0 + 0.1 * i;
      err = std::max(err, std::abs(f[2].evaluate(x)[0] - std::cos(std::sqrt(ev) * x)));
      err = std::max(err, std::abs(f[3].evaluate(x)[0] - std::sin(std::sqrt(ev) * x)));
    }
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev <= 1e-7);
}

TEST_CASE("WKB with constant b reduces to exponentials of the exact roots") {
  const double eps = 0.05, e = 2.5;
  const DimensionlessProblem p = DimensionlessProblem::well(eps);
  const WkbParameters params = wkb_parameters(p, e, 0.0);
  const auto exact = characteristic_roots(eps, e).roots();
  for (int j = 1; j <= 4; ++j) {
    const BasisFunction w = wkb_basis(params, j, Interval{-1.0, 1.0});
    const Jet j0 = w.evaluate(0.0);
    const cplx rate = j0[1] / j0[0];
    double best = 1e300;
    for (const cplx r : exact) best = std::min(best, std::abs(r - rate) / std::abs(r));
    CHECK(best <= 1e-10);
    for (double x : {-0.9, -0.3, 0.4, 1.0}) {
      const cplx want = j0[0] * std::exp(rate * x);
      CHECK(std::abs(w.evaluate(x)[0] - want) <= 1e-10 * std::abs(want));
    }
  }
}

TEST_CASE("ramp: WKB asymptotics and classification") {
  const DimensionlessProblem p = DimensionlessProblem::linear(1e-2);
  const double e = 3.0;
  const Interval v = far_field_validity(p, e, Side::PlusInfinity);
  const WkbParameters params = wkb_parameters(p, e, v.lo + 1.0);
  const FundamentalSet w = wkb_basis(params, v);
  CHECK(classify_far_field(w[0], Side::PlusInfinity) == AsymptoticClass::Growing);
  CHECK(classify_far_field(w[1], Side::PlusInfinity) == AsymptoticClass::Decaying);
  CHECK(classify_far_field(w[3], Side::PlusInfinity) == AsymptoticClass::Decaying);

  // log|w1| against x^(5/4) on the far tail
  const double a2 = params.a_coef * params.a_coef;
  const double x0 = e + 2.0 * a2, x1 = e + 20.0 * a2;
  const int n = 80;
  Eigen::MatrixXd design(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    const double x = x0 + (x1 - x0) * i / (n - 1);
    design(i, 0) = 1.0;
    design(i, 1) = std::pow(x, 1.25);
    y(i) = w[0].log_value(x).real();
  }
  const Eigen::VectorXd beta = design.colPivHouseholderQr().solve(y);
  const double ss_res = (y - design * beta).squaredNorm();
  const double ss_tot = (y.array() - y.mean()).matrix().squaredNorm();
  CHECK(1.0 - ss_res / ss_tot >= 0.999);
}

TEST_CASE("classify_asymptotics on closed forms") {
  const auto r = characteristic_roots(0.1, 4.0);
  const FundamentalSet f = exact_constant_basis(r);
  const std::vector<double> probe{0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  CHECK(classify_asymptotics(f[0], Side::PlusInfinity, probe) == AsymptoticClass::Growing);
  CHECK(classify_asymptotics(f[1], Side::PlusInfinity, probe) == AsymptoticClass::Decaying);
  std::vector<double> dense;
  for (int i = 0; i <= 60; ++i) dense.push_back(0.1 * i);
  CHECK(classify_asymptotics(f[2], Side::PlusInfinity, dense) == AsymptoticClass::Oscillatory);
}

TEST_CASE("turning point inside the requested interval is rejected") {
  const DimensionlessProblem p = DimensionlessProblem::linear(1e-2);
  const WkbParameters params = wkb_parameters(p, 3.0, 10.0);
  try {
    wkb_basis(params, 3, Interval{1.0, 20.0});  // b = 0 at x~ = 3
    FAIL("expected validity error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Validity);
  }
}

TEST_CASE("property: analytic derivatives match finite differences") {
  Gen g(22);
  const auto r = characteristic_roots(0.1, 3.0);
  const FundamentalSet exact = exact_constant_basis(r);
  const DimensionlessProblem p = DimensionlessProblem::linear(0.1);
  const Interval v = far_field_validity(p, 2.0, Side::PlusInfinity);
  const FundamentalSet wkb = wkb_basis(wkb_parameters(p, 2.0, v.lo + 2.0), v);
  for (int i = 0; i < 50; ++i) {
    const double xe = g.uniform(-0.9, 0.9);
    const double xw = g.uniform(v.lo + 0.5, v.lo + 6.0);
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) {
        const Jet a = exact[j].evaluate(xe);
        CHECK(std::abs(fd(exact[j], xe, k, 1e-3) - a[k + 1]) <=
              1e-6 * (std::abs(a[k + 1]) + std::abs(a[k])));
        const Jet b = wkb[j].evaluate(xw);
        CHECK(std::abs(fd(wkb[j], xw, k, 1e-3) - b[k + 1]) <=
              1e-6 * (std::abs(b[k + 1]) + std::abs(b[k])));
      }
  }
}

TEST_CASE("concurrent WKB evaluation equals serial") {
  const DimensionlessProblem p = DimensionlessProblem::linear(1e-2);
  const Interval v = far_field_validity(p, 4.0, Side::PlusInfinity);
  const BasisFunction w = wkb_basis(wkb_parameters(p, 4.0, v.lo + 1.0), 2, v);
  std::vector<double> xs;
  for (int i = 0; i < 200; ++i) xs.push_back(v.lo + 0.05 * i);
  std::vector<cplx> serial;
  {
    const BasisFunction fresh = wkb_basis(wkb_parameters(p, 4.0, v.lo + 1.0), 2, v);
    for (double x : xs) serial.push_back(fresh.evaluate(x)[0]);
  }
  std::vector<std::vector<cplx>> out(4, std::vector<cplx>(xs.size()));
  std::vector<std::thread> pool;
  for (int t = 0; t < 4; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const std::size_t k = (i * 7 + t * 13) % xs.size();
        out[t][k] = w.evaluate(xs[k])[0];
      }
    });
  for (auto& th : pool) th.join();
  for (int t = 0; t < 4; ++t)
    for (std::size_t i = 0; i < xs.size(); ++i) CHECK(out[t][i] == serial[i]);
}
