#include "gupbic/oracle.hpp"

#include <boost/math/differentiation/finite_difference.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "gupbic/error.hpp"

namespace gupbic {

namespace odeint = boost::numeric::odeint;

// --- companion system -----------------------------------------------------

StateVector companion_apply(const DimensionlessProblem& problem, double energy, double x,
                            const StateVector& s, EquationOrder order) {
  const double q = problem.potential_jet(x)[0] - energy;  // V~ - E~
  if (order == EquationOrder::Second) return {s[1], q * s[0], 0.0, 0.0};
  const double eps = problem.epsilon();
  return {s[1], s[2], s[3], (s[2] - q * s[0]) / eps};
}

namespace {

// A'(x) Phi: only the potential row depends on x.
StateVector companion_prime_apply(const DimensionlessProblem& problem, double x,
                                  const StateVector& s, EquationOrder order) {
  const double dv = problem.potential_jet(x)[1];
  if (order == EquationOrder::Second) return {0.0, dv * s[0], 0.0, 0.0};
  return {0.0, 0.0, 0.0, -dv * s[0] / problem.epsilon()};
}

StateVector second_derivative(const DimensionlessProblem& problem, double energy, double x,
                              const StateVector& s, EquationOrder order) {
  const StateVector ds = companion_apply(problem, energy, x, s, order);
  const StateVector a = companion_prime_apply(problem, x, s, order);
  const StateVector b = companion_apply(problem, energy, x, ds, order);
  StateVector out;
  for (int i = 0; i < 4; ++i) out[i] = a[i] + b[i];
  return out;
}

double magnitude(const StateVector& s) {
  double m = 0.0;
  for (const auto& v : s) m = std::max(m, std::abs(v));
  return m;
}

bool finite(const StateVector& s) {
  for (const auto& v : s)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

using Raw = std::vector<double>;

Raw pack(const StateVector& s, int dim) {
  Raw r(2 * dim);
  for (int i = 0; i < dim; ++i) {
    r[2 * i] = s[i].real();
    r[2 * i + 1] = s[i].imag();
  }
  return r;
}

StateVector unpack(const Raw& r) {
  StateVector s{};
  for (std::size_t i = 0; 2 * i < r.size(); ++i) s[i] = cplx(r[2 * i], r[2 * i + 1]);
  return s;
}

}  // namespace

// --- trajectory -------------------------------------------------------------

double Trajectory::lower() const { return grid_.empty() ? 0.0 : grid_.front(); }
double Trajectory::upper() const { return grid_.empty() ? 0.0 : grid_.back(); }

void Trajectory::push(double x, const StateVector& s, const StateVector& ds,
                      const StateVector& dds) {
  grid_.push_back(x);
  states_.push_back(s);
  first_.push_back(ds);
  second_.push_back(dds);
}

std::size_t Trajectory::segment(double x) const {
  if (grid_.size() < 2) throw Error(ErrorKind::Domain, "trajectory has no steps");
  const double tol = 1e-12 * std::max(1.0, std::abs(x));
  if (x < grid_.front() - tol || x > grid_.back() + tol)
    throw Error(ErrorKind::Domain,
                fmt::format("x~ = {} outside the integrated range [{}, {}]", x, grid_.front(),
                            grid_.back()));
  auto it = std::upper_bound(grid_.begin(), grid_.end(), x);
  std::size_t i = static_cast<std::size_t>(it - grid_.begin());
  if (i == 0) i = 1;
  if (i >= grid_.size()) i = grid_.size() - 1;
  return i - 1;
}

namespace {

// Quintic Hermite basis on t in [0, 1] and its derivatives up to order 2.
// Values y0, y1, first derivatives h*d0, h*d1, second h^2*s0, h^2*s1.
struct Quintic {
  std::array<double, 6> w;  // weights for (y0, hd0, h2s0, y1, hd1, h2s1)
};

Quintic quintic(double t, int order) {
  const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
  switch (order) {
    case 0:
      return {{1 - 10 * t3 + 15 * t4 - 6 * t5, t - 6 * t3 + 8 * t4 - 3 * t5,
               0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5, 10 * t3 - 15 * t4 + 6 * t5,
               -4 * t3 + 7 * t4 - 3 * t5, 0.5 * t3 - t4 + 0.5 * t5}};
    case 1:
      return {{-30 * t2 + 60 * t3 - 30 * t4, 1 - 18 * t2 + 32 * t3 - 15 * t4,
               t - 4.5 * t2 + 6 * t3 - 2.5 * t4, 30 * t2 - 60 * t3 + 30 * t4,
               -12 * t2 + 28 * t3 - 15 * t4, 1.5 * t2 - 4 * t3 + 2.5 * t4}};
    default:
      return {{-60 * t + 180 * t2 - 120 * t3, -36 * t + 96 * t2 - 60 * t3,
               1 - 9 * t + 18 * t2 - 10 * t3, 60 * t - 180 * t2 + 120 * t3,
               -24 * t + 84 * t2 - 60 * t3, 3 * t - 12 * t2 + 10 * t3}};
  }
}

}  // namespace

StateVector Trajectory::at(double x) const {
  const std::size_t i = segment(x);
  const double h = grid_[i + 1] - grid_[i];
  const double t = std::clamp((x - grid_[i]) / h, 0.0, 1.0);
  const auto w = quintic(t, 0).w;
  StateVector out;
  for (int c = 0; c < 4; ++c)
    out[c] = w[0] * states_[i][c] + w[1] * h * first_[i][c] + w[2] * h * h * second_[i][c] +
             w[3] * states_[i + 1][c] + w[4] * h * first_[i + 1][c] +
             w[5] * h * h * second_[i + 1][c];
  return out;
}

Jet Trajectory::jet(double x) const {
  const std::size_t i = segment(x);
  const double h = grid_[i + 1] - grid_[i];
  const double t = std::clamp((x - grid_[i]) / h, 0.0, 1.0);
  auto interp = [&](int c, int order) {
    const auto w = quintic(t, order).w;
    const double scale = std::pow(h, -order);
    return scale * (w[0] * states_[i][c] + w[1] * h * first_[i][c] +
                    w[2] * h * h * second_[i][c] + w[3] * states_[i + 1][c] +
                    w[4] * h * first_[i + 1][c] + w[5] * h * h * second_[i + 1][c]);
  };
  Jet j;
  if (order_ == EquationOrder::Fourth) {
    for (int c = 0; c < 4; ++c) j[c] = interp(c, 0);
    j[4] = interp(3, 1);
  } else {
    j[0] = interp(0, 0);
    j[1] = interp(1, 0);
    j[2] = interp(1, 1);
    j[3] = interp(1, 2);
    j[4] = 0.0;
  }
  return j;
}

// --- integration ------------------------------------------------------------

Trajectory integrate(const DimensionlessProblem& problem, double energy,
                     const StateVector& initial, double from, double to,
                     const OracleOptions& options) {
  if (!(options.rel_tol >= 1e-14 && options.rel_tol <= 1e-6))
    throw Error(ErrorKind::Precondition,
                fmt::format("integration tolerance {} outside [1e-14, 1e-6]", options.rel_tol));
  if (options.order == EquationOrder::Fourth && !(problem.epsilon() > 0.0))
    throw Error(ErrorKind::Unsupported, "fourth-order integration needs eps > 0");
  const Interval& dom = problem.domain();
  if (!dom.contains(from) || !dom.contains(to))
    throw Error(ErrorKind::Domain,
                fmt::format("integration range [{}, {}] leaves the domain", from, to));
  for (const auto& v : initial)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw Error(ErrorKind::Domain, "non-finite initial state");

  const EquationOrder order = options.order;
  const int dim = order == EquationOrder::Fourth ? 4 : 2;
  Trajectory traj(order, options.rel_tol);

  std::vector<double> xs;
  std::vector<StateVector> ss;
  auto record = [&](double x, const StateVector& s) {
    xs.push_back(x);
    ss.push_back(s);
  };

  auto system = [&](const Raw& y, Raw& dy, double x) {
    const StateVector d = companion_apply(problem, energy, x, unpack(y), order);
    for (int i = 0; i < dim; ++i) {
      dy[2 * i] = d[i].real();
      dy[2 * i + 1] = d[i].imag();
    }
  };

  record(from, initial);
  if (from != to) {
    auto stepper = odeint::make_controlled(options.abs_tol, options.rel_tol,
                                           odeint::runge_kutta_dopri5<Raw>());
    Raw y = pack(initial, dim);
    double x = from;
    const double dir = to > from ? 1.0 : -1.0;
    const double span = std::abs(to - from);
    // first guess from the stiffest local rate
    double rate = 1.0;
    if (order == EquationOrder::Fourth) rate = 1.0 / std::sqrt(problem.epsilon());
    double dt = dir * std::min(span, 0.05 / rate);
    const double min_step = 1e-14 * std::max(1.0, std::abs(from) + std::abs(to));
    int fails = 0;
    while (dir * (to - x) > 0.0) {
      if (dir * (x + dt - to) > 0.0) dt = to - x;
      const double before = x;
      auto res = stepper.try_step(system, y, x, dt);
      if (res == odeint::fail) {
        if (++fails > 500 || std::abs(dt) < min_step)
          throw Error(ErrorKind::Numerical,
                      fmt::format("step size underflow near x~ = {}", before));
        continue;
      }
      fails = 0;
      if (dir * (to - x) < 1e-13 * std::max(1.0, std::abs(to))) x = to;
      const StateVector s = unpack(y);
      if (!finite(s) || magnitude(s) > options.blowup) {
        traj.mark_blowup();
        break;
      }
      record(x, s);
    }
  }

  if (from > to) {
    std::reverse(xs.begin(), xs.end());
    std::reverse(ss.begin(), ss.end());
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    traj.push(xs[i], ss[i], companion_apply(problem, energy, xs[i], ss[i], order),
              second_derivative(problem, energy, xs[i], ss[i], order));
  }
  return traj;
}

cplx wronskian(std::span<const Trajectory> trajectories, double x) {
  if (trajectories.empty()) throw Error(ErrorKind::Arity, "no trajectories");
  const int dim = trajectories.front().dimension();
  if (static_cast<int>(trajectories.size()) != dim)
    throw Error(ErrorKind::Arity,
                fmt::format("Wronskian needs {} trajectories, got {}", dim, trajectories.size()));
  Eigen::MatrixXcd m(dim, dim);
  for (int c = 0; c < dim; ++c) {
    const StateVector s = trajectories[c].at(x);
    for (int r = 0; r < dim; ++r) m(r, c) = s[r];
  }
  return m.determinant();
}

std::vector<Trajectory> canonical_trajectories(const DimensionlessProblem& problem, double energy,
                                               double anchor, double to,
                                               const OracleOptions& options) {
  const int dim = options.order == EquationOrder::Fourth ? 4 : 2;
  std::vector<Trajectory> out;
  for (int i = 0; i < dim; ++i) {
    StateVector e{};
    e[i] = 1.0;
    out.push_back(integrate(problem, energy, e, anchor, to, options));
  }
  return out;
}

std::vector<WronskianSample> wronskian_profile(const DimensionlessProblem& problem, double energy,
                                              double from, double to, int samples,
                                              const OracleOptions& options, double growth) {
  if (samples < 2) throw Error(ErrorKind::Precondition, "need at least two samples");
  if (!(growth > 0.0)) throw Error(ErrorKind::Precondition, "growth per segment must be positive");
  const double eps = problem.epsilon();
  const bool fourth = options.order == EquationOrder::Fourth;
  // fastest local rate over the range
  double rate = 1.0;
  for (int i = 0; i <= 200; ++i) {
    const double x = from + (to - from) * i / 200.0;
    const double d = std::abs(problem.potential_jet(x)[0] - energy);
    rate = std::max(rate, fourth ? std::sqrt((1.0 + std::sqrt(1.0 + 4.0 * eps * d)) / (2.0 * eps))
                                 : std::sqrt(d));
  }
  const double len = std::abs(to - from);
  const int segments = std::max(1, static_cast<int>(std::ceil(len * rate / growth)));
  const double dir = to >= from ? 1.0 : -1.0;

  std::vector<WronskianSample> out;
  for (int i = 0; i < samples; ++i) out.push_back({from + (to - from) * i / (samples - 1), 0.0});
  cplx carried = 1.0;
  std::size_t next = 0;
  for (int k = 0; k < segments; ++k) {
    const double a = from + (to - from) * k / segments;
    const double b = k + 1 == segments ? to : from + (to - from) * (k + 1) / segments;
    const auto trajs = canonical_trajectories(problem, energy, a, b, options);
    for (const auto& t : trajs)
      if (t.blew_up()) throw Error(ErrorKind::Numerical, "overflow inside a Wronskian segment");
    for (; next < out.size() && dir * (out[next].x - b) <= 0.0; ++next)
      out[next].value = carried * wronskian(trajs, out[next].x);
    carried *= wronskian(trajs, b);
  }
  for (; next < out.size(); ++next) out[next].value = carried;
  return out;
}

double residual(const std::function<Jet(double)>& wavefunction,
                const DimensionlessProblem& problem, double energy,
                std::span<const double> grid) {
  const double eps = problem.epsilon();
  double worst = 0.0;
  for (double x : grid) {
    const Jet j = wavefunction(x);
    const double q = problem.potential_jet(x)[0] - energy;
    const cplx t4 = eps * j[4], t2 = -j[2], t0 = q * j[0];
    const double denom = std::max(std::abs(t4) + std::abs(t2) + std::abs(t0), 1e-300);
    worst = std::max(worst, std::abs(t4 + t2 + t0) / denom);
  }
  return worst;
}

double scaled_residual(const std::function<Jet(double)>& wavefunction,
                       const DimensionlessProblem& problem, double energy,
                       std::span<const double> grid) {
  const double eps = problem.epsilon();
  double worst = 0.0, scale = 1e-300;
  for (double x : grid) {
    const Jet j = wavefunction(x);
    const double q = problem.potential_jet(x)[0] - energy;
    const cplx t4 = eps * j[4], t2 = -j[2], t0 = q * j[0];
    scale = std::max(scale, std::abs(t4) + std::abs(t2) + std::abs(t0));
    worst = std::max(worst, std::abs(t4 + t2 + t0));
  }
  return worst / scale;
}

// --- decaying subspace --------------------------------------------------------

namespace {

// x~ on the side where V~(x) - E~ = level, searching outward from the minimum side.
double forbidden_point(const DimensionlessProblem& problem, double energy, Side side,
                       double level) {
  const double dir = side == Side::PlusInfinity ? 1.0 : -1.0;
  const Interval& dom = problem.domain();
  const double edge = side == Side::PlusInfinity ? dom.hi : dom.lo;
  if (std::isfinite(edge))
    throw Error(ErrorKind::Precondition, "domain is bounded toward the requested side");
  double start = 0.0;
  if (!dom.contains(start)) start = side == Side::PlusInfinity ? dom.lo : dom.hi;
  auto g = [&](double t) { return problem.potential_jet(start + dir * t)[0] - energy - level; };
  double lo = 0.0, hi = 1.0;
  while (g(hi) <= 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) throw Error(ErrorKind::Precondition, "potential does not grow toward the side");
  }
  if (g(lo) >= 0.0) return start + dir * lo;
  boost::uintmax_t iters = 100;
  auto r = boost::math::tools::toms748_solve(g, lo, hi,
                                             boost::math::tools::eps_tolerance<double>(50), iters);
  return start + dir * 0.5 * (r.first + r.second);
}

}  // namespace

int decaying_subspace_dimension(const DimensionlessProblem& problem, double energy, Side side,
                                const OracleOptions& options) {
  const double launch = forbidden_point(problem, energy, side, 36.0);
  const double anchor = forbidden_point(problem, energy, side, 4.0);
  return decaying_subspace_dimension(problem, energy, launch, anchor, options);
}

int decaying_subspace_dimension(const DimensionlessProblem& problem, double energy,
                                double launch, double anchor, const OracleOptions& options) {
  constexpr double kForbidden = 4.0;
  for (double x : {launch, anchor}) {
    const double b = problem.potential_value(x) - energy;
    if (b < kForbidden * (1.0 - 1e-12))
      throw Error(ErrorKind::Precondition,
                  fmt::format("x~ = {} is not deep in the forbidden region (V~ - E~ = {:.4g} < {})",
                              x, b, kForbidden));
  }
  const int dim = options.order == EquationOrder::Fourth ? 4 : 2;
  // segment length from the fastest local rate
  double b_max = 0.0;
  for (int i = 0; i <= 64; ++i) {
    const double x = launch + (anchor - launch) * i / 64.0;
    b_max = std::max(b_max, problem.potential_value(x) - energy);
  }
  double rate = std::sqrt(b_max);
  if (options.order == EquationOrder::Fourth) {
    const double eps = problem.epsilon();
    rate = std::max(1.0 / std::sqrt(eps), std::pow(b_max / eps, 0.25));
  }
  const double seg = 20.0 / rate;
  const int n = std::max(1, static_cast<int>(std::ceil(std::abs(anchor - launch) / seg)));

  Eigen::MatrixXcd frame = Eigen::MatrixXcd::Identity(dim, dim);
  std::vector<double> growth(dim, 0.0);
  for (int k = 0; k < n; ++k) {
    const double a = launch + (anchor - launch) * k / n;
    const double b = (k + 1 == n) ? anchor : launch + (anchor - launch) * (k + 1) / n;
    Eigen::MatrixXcd next(dim, dim);
    for (int c = 0; c < dim; ++c) {
      StateVector s{};
      for (int r = 0; r < dim; ++r) s[r] = frame(r, c);
      const Trajectory t = integrate(problem, energy, s, a, b, options);
      if (t.blew_up())
        throw Error(ErrorKind::Numerical, "renormalized march overflowed inside one segment");
      const StateVector e = t.at(b);
      for (int r = 0; r < dim; ++r) next(r, c) = e[r];
    }
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(next);
    const Eigen::MatrixXcd R = qr.matrixQR().triangularView<Eigen::Upper>();
    Eigen::MatrixXcd Q = qr.householderQ() * Eigen::MatrixXcd::Identity(dim, dim);
    for (int i = 0; i < dim; ++i) {
      // keep a positive diagonal so the frame evolves continuously
      const cplx d = R(i, i);
      const double mag = std::abs(d);
      if (mag == 0.0) throw Error(ErrorKind::Numerical, "trajectory frame lost rank");
      growth[i] += std::log(mag);
      Q.col(i) *= d / mag;
    }
    frame = Q;
  }
  const double ln10 = std::log(10.0);
  int count = 0;
  for (double g : growth) {
    if (std::abs(g) < ln10)
      throw Error(ErrorKind::Numerical,
                  fmt::format("ambiguous growth exponent {:.3g} between launch {} and anchor {}; "
                              "move the launch point further out",
                              g, launch, anchor));
    if (g > 0) ++count;
  }
  return count;
}

double two_sided_mismatch(const DimensionlessProblem& problem, double energy,
                          const OracleOptions& options) {
  OracleOptions opt = options;
  opt.order = EquationOrder::Second;
  auto decaying = [&](Side side) {
    const double x = forbidden_point(problem, energy, side, 36.0);
    const double dir = side == Side::PlusInfinity ? 1.0 : -1.0;
    const double k = std::sqrt(problem.potential_value(x) - energy);
    const StateVector init{1.0, -dir * k, 0.0, 0.0};
    const Trajectory t = integrate(problem, energy, init, x, 0.0, opt);
    if (t.blew_up()) throw Error(ErrorKind::Numerical, "decaying solution overflowed");
    return t.at(0.0);
  };
  const StateVector r = decaying(Side::PlusInfinity);
  const StateVector l = decaying(Side::MinusInfinity);
  const cplx w = r[0] * l[1] - r[1] * l[0];
  const double nr = std::hypot(std::abs(r[0]), std::abs(r[1]));
  const double nl = std::hypot(std::abs(l[0]), std::abs(l[1]));
  return w.real() / (nr * nl);
}

// --- momentum representation ------------------------------------------------

namespace {

// u - atan(u) without cancellation for small u
double u_minus_atan(double u) {
  if (std::abs(u) > 0.1) return u - std::atan(u);
  const double u2 = u * u;
  double term = u * u2, sum = 0.0;
  for (int k = 1; k < 30; ++k) {
    sum += (k % 2 ? 1.0 : -1.0) * term / (2 * k + 1);
    term *= u2;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

}  // namespace

double MomentumSolution::phase(double q) const {
  if (gamma == 0.0) return q * q * q / 3.0 - energy * q;
  const double rg = std::sqrt(gamma);
  const double u = rg * q;
  // q/g - (1/g + E) atan(u)/sqrt(g)
  return u_minus_atan(u) / (gamma * rg) - energy * std::atan(u) / rg;
}

cplx MomentumSolution::operator()(double q) const {
  return c0 * std::exp(cplx(0.0, phase(q)));
}

MomentumSolution momentum_rep_linear(const PhysicalSetup& setup, double energy_si) {
  const auto* ramp = std::get_if<LinearRamp>(&setup.potential());
  if (!ramp) throw Error(ErrorKind::WrongPotential, "momentum check needs a linear potential");
  const double lc = canonical_length_scale(setup);
  const double ec = setup.hbar() * setup.hbar() / (2.0 * setup.mass() * lc * lc);
  MomentumSolution s;
  s.momentum_scale = setup.hbar() / lc;
  s.gamma = setup.beta() * s.momentum_scale * s.momentum_scale;
  s.energy = energy_si / ec;
  if (!std::isfinite(s.gamma) || !std::isfinite(s.energy))
    throw Error(ErrorKind::InvalidSetup, "non-finite momentum scaling");
  return s;
}

double momentum_residual(const MomentumSolution& solution, std::span<const double> probe) {
  double worst = 0.0;
  for (double q : probe) {
    // differentiate log C in a local variable q + s d, so that the stencil
    // spans a small phase change and arg never wraps
    const cplx c = solution(q);
    const double d = 0.01 / (1.0 + std::abs(q * q - solution.energy));
    auto f_re = [&](double t) { return std::log(std::abs(solution(q + t * d))); };
    auto f_im = [&](double t) { return std::arg(solution(q + t * d) / c); };
    const cplx dlog =
        cplx(boost::math::differentiation::finite_difference_derivative<decltype(f_re), double, 8>(
                 f_re, 0.0),
             boost::math::differentiation::finite_difference_derivative<decltype(f_im), double, 8>(
                 f_im, 0.0)) /
        d;
    const cplx dc = c * dlog;
    const double g = 1.0 + solution.gamma * q * q;
    const cplx t1 = cplx(0.0, g) * dc;
    const cplx t2 = (q * q - solution.energy) * c;
    const double denom = std::max(std::abs(t1) + std::abs(t2), 1e-300);
    worst = std::max(worst, std::abs(t1 + t2) / denom);
  }
  return worst;
}

int momentum_solution_space_dimension(const MomentumSolution& solution, double q_lo,
                                      double q_hi) {
  // C' = i (q^2 - E~) / (1 + g q^2) C, as two real components
  auto rhs = [&](const Raw& y, Raw& dy, double q) {
    const double w = (q * q - solution.energy) / (1.0 + solution.gamma * q * q);
    dy[0] = -w * y[1];
    dy[1] = w * y[0];
  };
  const std::array<cplx, 2> starts{cplx(1.0, 0.0), cplx(0.3, -2.0)};
  constexpr int samples = 64;
  Eigen::MatrixXcd m(samples, 2);
  for (int c = 0; c < 2; ++c) {
    Raw y{starts[c].real(), starts[c].imag()};
    double q = q_lo;
    m(0, c) = starts[c];
    for (int i = 1; i < samples; ++i) {
      const double next = q_lo + (q_hi - q_lo) * i / (samples - 1);
      odeint::integrate_adaptive(
          odeint::make_controlled(1e-13, 1e-12, odeint::runge_kutta_dopri5<Raw>()), rhs, y, q,
          next, (next - q) / 16);
      q = next;
      m(i, c) = cplx(y[0], y[1]);
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-8 * sv(0)) ++rank;
  return rank;
}

void write_trajectory_csv(const Trajectory& t, std::ostream& out) {
  out << "x,re_phi,im_phi,re_d1,im_d1,re_d2,im_d2,re_d3,im_d3\n";
  for (std::size_t i = 0; i < t.grid().size(); ++i) {
    const auto& s = t.states()[i];
    out << fmt::format("{:.16e}", t.grid()[i]);
    for (const auto& v : s) out << fmt::format(",{:.16e},{:.16e}", v.real(), v.imag());
    out << '\n';
  }
}

}  // namespace gupbic
