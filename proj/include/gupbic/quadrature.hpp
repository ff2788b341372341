#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <complex>

namespace gupbic::quad {

struct Result {
  std::complex<double> value;
  double error = 0.0;
};

/// Adaptive 31-point Gauss-Kronrod over [a, b]; either end may be infinite.
/// `rel_tol` is relative to the running estimate.
template <class F>
Result integrate(F&& f, double a, double b, double rel_tol = 1e-13, unsigned max_depth = 20) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  Result r;
  if (a == b) return r;
  r.value = GK::integrate([&](double x) { return std::complex<double>(f(x)); }, a, b,
                          max_depth, rel_tol, &r.error);
  return r;
}

/// Real-valued convenience wrapper.
template <class F>
double integrate_real(F&& f, double a, double b, double rel_tol = 1e-13,
                      unsigned max_depth = 20) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  if (a == b) return 0.0;
  return GK::integrate([&](double x) { return static_cast<double>(f(x)); }, a, b, max_depth,
                       rel_tol);
}

}  // namespace gupbic::quad
