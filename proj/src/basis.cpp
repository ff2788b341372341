#include "gupbic/basis.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <ostream>

#include <fmt/format.h>

#include "gupbic/error.hpp"
#include "gupbic/quadrature.hpp"

namespace gupbic {

std::string_view to_string(AsymptoticClass c) {
  switch (c) {
    case AsymptoticClass::Growing: return "Growing";
    case AsymptoticClass::Decaying: return "Decaying";
    case AsymptoticClass::Oscillatory: return "Oscillatory";
    case AsymptoticClass::Undefined: return "Undefined";
  }
  return "Undefined";
}

std::string_view to_string(Side s) {
  return s == Side::PlusInfinity ? "+inf" : "-inf";
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Exact: return "exact";
    case Method::Wkb: return "wkb";
    case Method::Continued: return "continued";
  }
  return "unknown";
}

std::array<cplx, 4> CharacteristicRoots::roots() const {
  if (classically_forbidden()) return {cplx(mu1), cplx(mu2), cplx(nu), cplx(-nu)};
  return {cplx(mu1), cplx(mu2), cplx(0.0, kappa), cplx(0.0, -kappa)};
}

CharacteristicRoots characteristic_roots(double epsilon, double e_minus_v) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw Error(ErrorKind::Unsupported,
                "characteristic roots need eps > 0; the second-order limit is handled by the "
                "oracle integrator");
  if (!std::isfinite(e_minus_v)) throw Error(ErrorKind::Domain, "non-finite E~ - V~");
  CharacteristicRoots r;
  r.epsilon = epsilon;
  r.e_minus_v = e_minus_v;
  r.discriminant = 1.0 + 4.0 * epsilon * e_minus_v;
  if (r.discriminant < 0.0)
    throw Error(ErrorKind::ComplexQuartet,
                fmt::format("1 + 4 eps (E~ - V~) = {:.6g} < 0: roots form a complex quartet",
                            r.discriminant));
  const double root_d = std::sqrt(r.discriminant);
  r.mu1 = std::sqrt((1.0 + root_d) / (2.0 * epsilon));
  r.mu2 = -r.mu1;
  // (sqrt(D) - 1) / (2 eps) rewritten as 2 q / (sqrt(D) + 1) to avoid cancellation
  const double slow_sq = 2.0 * e_minus_v / (root_d + 1.0);
  if (e_minus_v >= 0.0)
    r.kappa = std::sqrt(slow_sq);
  else
    r.nu = std::sqrt(-slow_sq);
  return r;
}

BasisFunction::BasisFunction(int index, Method method, Interval validity, Evaluator eval,
                             LogEvaluator log_eval, NthDerivative nth)
    : index_(index),
      method_(method),
      validity_(validity),
      eval_(std::move(eval)),
      log_eval_(std::move(log_eval)),
      nth_(std::move(nth)) {}

cplx BasisFunction::log_value(double x) const {
  if (log_eval_) return log_eval_(x);
  return std::log(eval_(x)[0]);
}

cplx BasisFunction::nth_derivative(double x, int n) const {
  if (!nth_) throw Error(ErrorKind::Unsupported, "closed-form derivatives unavailable");
  return nth_(x, n);
}

// --- exact basis ----------------------------------------------------------

namespace {

enum class TermShape { Exp, Cos, Sin };

cplx term_nth(TermShape shape, double rate, double x, int n) {
  switch (shape) {
    case TermShape::Exp:
      return std::pow(rate, n) * std::exp(rate * x);
    case TermShape::Cos:
      return std::pow(rate, n) * std::cos(rate * x + n * std::numbers::pi / 2);
    case TermShape::Sin:
      return std::pow(rate, n) * std::sin(rate * x + n * std::numbers::pi / 2);
  }
  return 0.0;
}

BasisFunction make_term(int index, TermShape shape, double rate) {
  auto nth = [shape, rate](double x, int n) { return term_nth(shape, rate, x, n); };
  auto eval = [shape, rate](double x) {
    Jet j;
    for (int n = 0; n < 5; ++n) j[n] = term_nth(shape, rate, x, n);
    return j;
  };
  BasisFunction::LogEvaluator log_eval;
  if (shape == TermShape::Exp) log_eval = [rate](double x) { return cplx(rate * x); };
  BasisFunction f(index, Method::Exact, Interval{}, eval, log_eval, nth);
  if (shape == TermShape::Exp) {
    const auto up = rate > 0 ? AsymptoticClass::Growing
                             : (rate < 0 ? AsymptoticClass::Decaying : AsymptoticClass::Undefined);
    const auto down = rate > 0 ? AsymptoticClass::Decaying
                               : (rate < 0 ? AsymptoticClass::Growing : AsymptoticClass::Undefined);
    f.set_asymptotic_class(Side::PlusInfinity, up);
    f.set_asymptotic_class(Side::MinusInfinity, down);
  } else {
    f.set_asymptotic_class(Side::PlusInfinity, AsymptoticClass::Oscillatory);
    f.set_asymptotic_class(Side::MinusInfinity, AsymptoticClass::Oscillatory);
  }
  return f;
}

}  // namespace

FundamentalSet exact_constant_basis(const CharacteristicRoots& r) {
  if (r.kappa == 0.0 && r.nu == 0.0)
    throw Error(ErrorKind::DegenerateBasis,
                "double root at E~ = V~: cos/sin pair degenerates, treat this energy separately");
  if (r.classically_forbidden())
    return {make_term(1, TermShape::Exp, r.mu1), make_term(2, TermShape::Exp, r.mu2),
            make_term(3, TermShape::Exp, r.nu), make_term(4, TermShape::Exp, -r.nu)};
  return {make_term(1, TermShape::Exp, r.mu1), make_term(2, TermShape::Exp, r.mu2),
          make_term(3, TermShape::Cos, r.kappa), make_term(4, TermShape::Sin, r.kappa)};
}

// --- WKB -----------------------------------------------------------------

WkbParameters wkb_parameters(const DimensionlessProblem& problem, double energy, double x0) {
  const double eps = problem.epsilon();
  if (!(eps > 0.0)) throw Error(ErrorKind::Unsupported, "WKB basis requires eps > 0");
  WkbParameters p;
  p.eta = std::pow(eps, -0.25);
  p.a_coef = 0.5 * p.eta * p.eta;
  p.b = [problem, energy](double x) {
    auto v = problem.potential_jet(x);
    v[0] -= energy;
    return v;
  };
  p.x0 = x0;
  // the correction integral carries units; in the SI form it is weighted by
  // sqrt(a~ / a_SI) = 2^(1/4) sqrt(hbar L_c) relative to the scaled one
  p.correction_weight = std::pow(2.0, 0.25) * std::sqrt(kHbar * problem.length_scale());
  return p;
}

namespace {

Interval clipped(Interval scan) {
  constexpr double span = 200.0;
  if (!std::isfinite(scan.lo) && !std::isfinite(scan.hi)) return {-span, span};
  if (!std::isfinite(scan.hi)) return {scan.lo, scan.lo + span};
  if (!std::isfinite(scan.lo)) return {scan.hi - span, scan.hi};
  return scan;
}

double refine_root(const std::function<double(double)>& g, double lo, double hi) {
  if (g(lo) == 0.0) return lo;
  if (g(hi) == 0.0) return hi;
  boost::uintmax_t iters = 100;
  auto r = boost::math::tools::toms748_solve(
      g, lo, hi, boost::math::tools::eps_tolerance<double>(50), iters);
  return 0.5 * (r.first + r.second);
}

}  // namespace

std::vector<TurningPoint> turning_points(const WkbParameters& params, Interval scan,
                                         int samples) {
  const Interval s = clipped(scan);
  const double a2 = params.a_coef * params.a_coef;
  auto b = [&](double x) { return params.b(x)[0]; };
  auto c = [&](double x) { return a2 - params.b(x)[0]; };
  std::vector<TurningPoint> out;
  const double h = s.width() / samples;
  double x_prev = s.lo, b_prev = b(s.lo), c_prev = c(s.lo);
  for (int i = 1; i <= samples; ++i) {
    const double x = (i == samples) ? s.hi : s.lo + i * h;
    const double bx = b(x), cx = c(x);
    if ((b_prev < 0) != (bx < 0) || bx == 0.0)
      out.push_back({refine_root(b, x_prev, x), TurningPoint::Type::PotentialCrossing});
    if ((c_prev < 0) != (cx < 0) || cx == 0.0)
      out.push_back({refine_root(c, x_prev, x), TurningPoint::Type::RootCoalescence});
    x_prev = x;
    b_prev = bx;
    c_prev = cx;
  }
  std::sort(out.begin(), out.end(), [](auto& l, auto& r) { return l.x < r.x; });
  out.erase(std::unique(out.begin(), out.end(),
                        [](auto& l, auto& r) {
                          return l.type == r.type && std::abs(l.x - r.x) < 1e-12;
                        }),
            out.end());
  return out;
}

double turning_layer_width(const WkbParameters& params, const TurningPoint& tp) {
  const double slope = std::abs(params.b(tp.x)[1]);
  if (!(slope > 0.0)) return kInf;
  const double k = tp.type == TurningPoint::Type::RootCoalescence ? 2.0 : 1.0;
  return std::cbrt(1.0 / (k * slope));
}

namespace {

// drops a -0.0 imaginary part so principal branches stay on the upper side
cplx principal(cplx z) { return z.imag() == 0.0 ? cplx(z.real(), 0.0) : z; }

class WkbMode {
 public:
  static constexpr double kCell = 0.25;
  // cells are short and the integrands smooth; deep bisection only chases roundoff
  static constexpr double kQuadRel = 1e-13;
  static constexpr unsigned kQuadDepth = 8;

  WkbMode(WkbParameters p, int j) : p_(std::move(p)), j_(j) {}

  struct Local {
    Taylor<4> lambda;
    Taylor<4> s;  // sqrt(a^2 - b)
  };

  Local local(double x) const {
    const auto bd = p_.b(x);
    const auto bt = Taylor<4>::from_derivatives(bd);
    const double a = p_.a_coef;
    Taylor<4> arg = cplx(a * a) - bt;
    arg.c[0] = cplx(arg.c[0].real(), arg.c[0].imag() == 0.0 ? 0.0 : arg.c[0].imag());
    Local out;
    out.s = sqrt_principal(arg);
    Taylor<4> inner = (j_ <= 2) ? (out.s + cplx(a)) : (cplx(a) - out.s);
    out.lambda = sqrt_principal(inner);
    if (j_ == 2 || j_ == 4) out.lambda = -out.lambda;
    return out;
  }

  // lambda, lambda' and sqrt(a^2 - b) without the series machinery; the
  // quadratures only need these
  struct Scalar {
    cplx lambda, dlambda, s;
  };
  Scalar scalar(double x) const {
    const auto bd = p_.b(x);
    const double a = p_.a_coef;
    const cplx s = std::sqrt(cplx(a * a - bd[0], 0.0));
    const cplx ds = -bd[1] / (2.0 * s);
    cplx inner = j_ <= 2 ? s + a : a - s;
    if (inner.imag() == 0.0) inner = cplx(inner.real(), 0.0);
    cplx lam = std::sqrt(inner);
    if (j_ == 2 || j_ == 4) lam = -lam;
    return {lam, (j_ <= 2 ? ds : -ds) / (2.0 * lam), s};
  }

  // Integrands of the exponent integral and of the correction integral.
  cplx lambda_at(double x) const { return scalar(x).lambda; }
  cplx correction_at(double x) const {
    const auto l = scalar(x);
    return l.dlambda / l.s;
  }

  /// (int_{x0}^x lambda, int_{x0}^x lambda' / sqrt(a^2 - b))
  std::pair<cplx, cplx> integrals(double x) const {
    const double offset = x - p_.x0;
    const long k = static_cast<long>(std::floor(std::abs(offset) / kCell));
    const double dir = offset >= 0 ? 1.0 : -1.0;
    const auto base = cumulative(k, dir);
    const double start = p_.x0 + dir * k * kCell;
    return {base.first + piece(&WkbMode::lambda_at, start, x),
            base.second + piece(&WkbMode::correction_at, start, x)};
  }

  cplx exponent(double x) const {
    const auto [I, K] = integrals(x);
    const auto l = local(x);
    const double a2b = p_.a_coef * p_.a_coef - p_.b(x)[0];
    const cplx prefactor = -0.5 * std::log(principal(l.lambda.c[0])) - 0.25 * std::log(cplx(a2b, 0.0));
    return prefactor + p_.eta * I - 0.5 * p_.correction_weight * K;
  }

  Jet evaluate(double x) const {
    const auto l = local(x);
    const auto [I, K] = integrals(x);
    const double a = p_.a_coef;
    const Taylor<4> bt = Taylor<4>::from_derivatives(p_.b(x));
    Taylor<4> a2b = cplx(a * a) - bt;
    a2b.c[0] = cplx(a2b.c[0].real(), 0.0);
    // prefactor P = -1/2 log lambda - 1/4 log(a^2 - b)
    const Taylor<4> pref = -0.5 * log_principal(l.lambda) + (-0.25) * log_principal(a2b);
    // Q = L' as a series: P' + eta lambda - 1/2 lambda' / s
    const Taylor<3> q = pref.prime() + cplx(p_.eta) * l.lambda.truncate() +
                        cplx(-0.5 * p_.correction_weight) * (l.lambda.prime() / l.s.truncate());
    Taylor<4> tail;  // integral of Q, zero constant term
    for (std::size_t k = 1; k <= 4; ++k) tail.c[k] = q.c[k - 1] / static_cast<double>(k);
    const cplx L0 = pref.c[0] + p_.eta * I - 0.5 * p_.correction_weight * K;
    const Taylor<4> shape = gupbic::exp(tail);
    const cplx scale = std::exp(L0);
    Jet j;
    for (std::size_t k = 0; k < 5; ++k) j[k] = scale * shape.derivative(k);
    j.overflow = std::abs(L0.real()) > 700.0;
    return j;
  }

 private:
  static Taylor<4> sqrt_principal(Taylor<4> t) {
    if (t.c[0].imag() == 0.0) t.c[0] = cplx(t.c[0].real(), 0.0);
    return gupbic::sqrt(t);
  }
  static Taylor<4> log_principal(Taylor<4> t) {
    if (t.c[0].imag() == 0.0) t.c[0] = cplx(t.c[0].real(), 0.0);
    return gupbic::log(t);
  }

  cplx piece(cplx (WkbMode::*f)(double) const, double from, double to) const {
    if (from == to) return 0.0;
    auto r = quad::integrate([&](double t) { return (this->*f)(t); }, from, to, kQuadRel, kQuadDepth);
    return r.value;
  }

  std::pair<cplx, cplx> cumulative(long k, double dir) const {
    std::lock_guard lock(mutex_);
    auto& lam = dir > 0 ? lam_plus_ : lam_minus_;
    auto& cor = dir > 0 ? cor_plus_ : cor_minus_;
    if (lam.empty()) {
      lam.push_back(0.0);
      cor.push_back(0.0);
    }
    while (static_cast<long>(lam.size()) <= k) {
      const long n = static_cast<long>(lam.size());
      const double from = p_.x0 + dir * (n - 1) * kCell;
      const double to = p_.x0 + dir * n * kCell;
      auto rl = quad::integrate([&](double t) { return lambda_at(t); }, from, to, kQuadRel, kQuadDepth);
      auto rc = quad::integrate([&](double t) { return correction_at(t); }, from, to, kQuadRel, kQuadDepth);
      if (rl.error > 1e-12 || rc.error > 1e-12)
        throw Error(ErrorKind::Numerical,
                    fmt::format("WKB exponent quadrature error {:.3g} exceeds 1e-12 on [{}, {}]",
                                std::max(rl.error, rc.error), from, to));
      lam.push_back(lam.back() + rl.value);
      cor.push_back(cor.back() + rc.value);
    }
    return {lam[k], cor[k]};
  }

  WkbParameters p_;
  int j_;
  mutable std::mutex mutex_;
  mutable std::vector<cplx> lam_plus_, lam_minus_, cor_plus_, cor_minus_;
};

}  // namespace

BasisFunction wkb_basis(const WkbParameters& params, int j, Interval validity) {
  if (j < 1 || j > 4) throw Error(ErrorKind::Domain, "WKB index must be 1..4");
  if (!validity.contains(params.x0))
    throw Error(ErrorKind::Validity, "reference point x0 lies outside the validity interval");
  const Interval scan{validity.lo - kTurningWindow, validity.hi + kTurningWindow};
  const double reach = kTurningWindow * (1.0 - 1e-9);
  for (const auto& tp : turning_points(params, scan)) {
    const bool relevant = tp.type == TurningPoint::Type::RootCoalescence || j >= 3;
    const bool near = tp.x > validity.lo - reach && tp.x < validity.hi + reach;
    if (relevant && near)
      throw Error(ErrorKind::Validity,
                  fmt::format("turning point ({}) at x~ = {:.12g} within {} of the validity "
                              "interval [{}, {}]",
                              tp.type == TurningPoint::Type::RootCoalescence ? "a^2 = b" : "b = 0",
                              tp.x, kTurningWindow, validity.lo, validity.hi));
  }
  auto mode = std::make_shared<const WkbMode>(params, j);
  auto eval = [mode](double x) { return mode->evaluate(x); };
  auto log_eval = [mode](double x) { return mode->exponent(x); };
  BasisFunction f(j, Method::Wkb, validity, eval, log_eval);
  if (!std::isfinite(validity.hi))
    f.set_asymptotic_class(Side::PlusInfinity, classify_far_field(f, Side::PlusInfinity));
  if (!std::isfinite(validity.lo))
    f.set_asymptotic_class(Side::MinusInfinity, classify_far_field(f, Side::MinusInfinity));
  return f;
}

FundamentalSet wkb_basis(const WkbParameters& params, Interval validity) {
  return {wkb_basis(params, 1, validity), wkb_basis(params, 2, validity),
          wkb_basis(params, 3, validity), wkb_basis(params, 4, validity)};
}

Interval far_field_validity(const DimensionlessProblem& problem, double energy, Side side,
                            double window) {
  const double eps = problem.epsilon();
  if (!(eps > 0.0)) throw Error(ErrorKind::Unsupported, "far-field WKB needs eps > 0");
  const double dir = side == Side::PlusInfinity ? 1.0 : -1.0;
  const double edge = side == Side::PlusInfinity ? problem.domain().hi : problem.domain().lo;
  if (std::isfinite(edge))
    throw Error(ErrorKind::Domain, "domain is bounded toward the requested side");
  // outermost turning point: V~(x) - E~ = 1/(4 eps), beyond which a^2 - b < 0
  const double level = energy + 0.25 / eps;
  auto g = [&](double t) { return problem.potential_jet(dir * t)[0] - level; };
  double inner = 0.0;
  if (dir > 0 && std::isfinite(problem.domain().lo)) inner = std::max(0.0, problem.domain().lo);
  if (dir < 0 && std::isfinite(problem.domain().hi)) inner = std::max(0.0, -problem.domain().hi);
  double lo = inner, hi = std::max(1.0, inner + 1.0);
  while (g(hi) <= 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) throw Error(ErrorKind::Domain, "potential does not grow toward the side");
  }
  const double t = g(lo) > 0.0 ? lo : refine_root(g, lo, hi);
  // b = 0 lies strictly inside, since V~ - E~ = 0 < 1/(4 eps)
  if (side == Side::PlusInfinity) return {t + window, kInf};
  return {-kInf, -(t + window)};
}

AsymptoticClass classify_asymptotics(const BasisFunction& f, Side side,
                                     std::span<const double> probe) {
  if (probe.size() < 3) throw Error(ErrorKind::Precondition, "need at least 3 probe points");
  const double dir = side == Side::PlusInfinity ? 1.0 : -1.0;
  for (std::size_t i = 1; i < probe.size(); ++i)
    if (!(dir * (probe[i] - probe[i - 1]) > 0))
      throw Error(ErrorKind::Precondition, "probe points must move monotonically toward the side");
  for (double x : probe)
    if (!f.validity().contains(x))
      throw Error(ErrorKind::Precondition, "probe point outside the validity interval");

  std::vector<double> log_abs(probe.size());
  std::vector<double> re_sign(probe.size());
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const cplx lv = f.log_value(probe[i]);
    log_abs[i] = lv.real();
    re_sign[i] = std::cos(lv.imag());  // sign of Re f
  }
  const std::size_t third = std::max<std::size_t>(1, probe.size() / 3);
  const double first = *std::max_element(log_abs.begin(), log_abs.begin() + third);
  const double last = *std::max_element(log_abs.end() - third, log_abs.end());
  const double ln10 = std::log(10.0);
  if (last - first >= ln10) return AsymptoticClass::Growing;
  if (first - last >= ln10) return AsymptoticClass::Decaying;
  bool sign_change = false;
  for (std::size_t i = 1; i < probe.size(); ++i)
    if ((re_sign[i] < 0) != (re_sign[i - 1] < 0)) sign_change = true;
  const double ratio = std::exp(last - first);
  if (sign_change && ratio >= 0.5 && ratio <= 2.0) return AsymptoticClass::Oscillatory;
  return AsymptoticClass::Undefined;
}

AsymptoticClass classify_far_field(const BasisFunction& f, Side side) {
  const Interval v = f.validity();
  const double dir = side == Side::PlusInfinity ? 1.0 : -1.0;
  const double start = side == Side::PlusInfinity ? v.lo : v.hi;
  if (!std::isfinite(start)) throw Error(ErrorKind::Precondition, "validity has no finite start");
  double span = 4.0;
  for (int attempt = 0; attempt < 5; ++attempt, span *= 2.0) {
    std::vector<double> probe(41);
    for (std::size_t i = 0; i < probe.size(); ++i)
      probe[i] = start + dir * span * static_cast<double>(i) / (probe.size() - 1);
    const auto c = classify_asymptotics(f, side, probe);
    if (c != AsymptoticClass::Undefined) return c;
  }
  return AsymptoticClass::Undefined;
}

void write_basis_csv(const BasisFunction& f, std::span<const double> grid, std::ostream& out) {
  out << "x,re,im,d1,d2,d3\n";
  for (double x : grid) {
    const Jet j = f.evaluate(x);
    out << fmt::format("{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n", x, j[0].real(),
                       j[0].imag(), j[1].real(), j[2].real(), j[3].real());
  }
}

}  // namespace gupbic
