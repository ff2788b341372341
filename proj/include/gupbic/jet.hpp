#pragma once

#include <array>
#include <complex>
#include <cstddef>

namespace gupbic {

using cplx = std::complex<double>;

/// Value and derivatives 0..4 of a (possibly complex) function at a point.
struct Jet {
  std::array<cplx, 5> d{};
  bool overflow = false;

  cplx& operator[](std::size_t i) { return d[i]; }
  const cplx& operator[](std::size_t i) const { return d[i]; }
};

/// Truncated Taylor series sum_k c[k] h^k, k = 0..N. Used to push
/// derivatives of V~ through the WKB exponent and prefactor exactly.
template <std::size_t N>
struct Taylor {
  std::array<cplx, N + 1> c{};

  static Taylor constant(cplx v) {
    Taylor t;
    t.c[0] = v;
    return t;
  }

  /// Build from plain derivatives f, f', f'', ...
  template <class Derivs>
  static Taylor from_derivatives(const Derivs& f) {
    Taylor t;
    double fact = 1.0;
    for (std::size_t k = 0; k <= N; ++k) {
      if (k > 0) fact *= static_cast<double>(k);
      t.c[k] = cplx(f[k]) / fact;
    }
    return t;
  }

  /// k-th derivative at the expansion point.
  cplx derivative(std::size_t k) const {
    double fact = 1.0;
    for (std::size_t i = 2; i <= k; ++i) fact *= static_cast<double>(i);
    return c[k] * fact;
  }

  /// d/dh, one order shorter.
  Taylor<N - 1> prime() const {
    Taylor<N - 1> out;
    for (std::size_t k = 0; k < N; ++k) out.c[k] = c[k + 1] * static_cast<double>(k + 1);
    return out;
  }

  Taylor<N - 1> truncate() const {
    Taylor<N - 1> out;
    for (std::size_t k = 0; k < N; ++k) out.c[k] = c[k];
    return out;
  }

  friend Taylor operator+(Taylor a, const Taylor& b) {
    for (std::size_t k = 0; k <= N; ++k) a.c[k] += b.c[k];
    return a;
  }
  friend Taylor operator-(Taylor a, const Taylor& b) {
    for (std::size_t k = 0; k <= N; ++k) a.c[k] -= b.c[k];
    return a;
  }
  friend Taylor operator-(Taylor a) {
    for (auto& v : a.c) v = -v;
    return a;
  }
  friend Taylor operator*(Taylor a, cplx s) {
    for (auto& v : a.c) v *= s;
    return a;
  }
  friend Taylor operator*(cplx s, Taylor a) { return a * s; }
  friend Taylor operator+(Taylor a, cplx s) {
    a.c[0] += s;
    return a;
  }
  friend Taylor operator+(cplx s, Taylor a) { return a + s; }
  friend Taylor operator-(cplx s, const Taylor& a) { return (-a) + s; }

  friend Taylor operator*(const Taylor& a, const Taylor& b) {
    Taylor out;
    for (std::size_t k = 0; k <= N; ++k)
      for (std::size_t j = 0; j <= k; ++j) out.c[k] += a.c[j] * b.c[k - j];
    return out;
  }

  friend Taylor operator/(const Taylor& a, const Taylor& b) {
    Taylor q;
    for (std::size_t k = 0; k <= N; ++k) {
      cplx acc = a.c[k];
      for (std::size_t j = 1; j <= k; ++j) acc -= b.c[j] * q.c[k - j];
      q.c[k] = acc / b.c[0];
    }
    return q;
  }
};

template <std::size_t N>
Taylor<N> sqrt(const Taylor<N>& x) {
  Taylor<N> y;
  y.c[0] = std::sqrt(x.c[0]);
  for (std::size_t k = 1; k <= N; ++k) {
    cplx acc = x.c[k];
    for (std::size_t j = 1; j < k; ++j) acc -= y.c[j] * y.c[k - j];
    y.c[k] = acc / (2.0 * y.c[0]);
  }
  return y;
}

template <std::size_t N>
Taylor<N> log(const Taylor<N>& x) {
  Taylor<N> y;
  y.c[0] = std::log(x.c[0]);
  for (std::size_t k = 1; k <= N; ++k) {
    cplx acc = x.c[k];
    for (std::size_t j = 1; j < k; ++j)
      acc -= static_cast<double>(j) / static_cast<double>(k) * y.c[j] * x.c[k - j];
    y.c[k] = acc / x.c[0];
  }
  return y;
}

template <std::size_t N>
Taylor<N> exp(const Taylor<N>& x) {
  Taylor<N> y;
  y.c[0] = std::exp(x.c[0]);
  for (std::size_t k = 1; k <= N; ++k) {
    cplx acc = 0.0;
    for (std::size_t j = 1; j <= k; ++j) acc += static_cast<double>(j) * x.c[j] * y.c[k - j];
    y.c[k] = acc / static_cast<double>(k);
  }
  return y;
}

}  // namespace gupbic
