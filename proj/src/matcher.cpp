#include "gupbic/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>

#include <fmt/format.h>

#include "gupbic/error.hpp"
#include "gupbic/quadrature.hpp"

namespace gupbic {

std::string describe(const BoundaryCondition& c) {
  switch (c.kind) {
    case ConditionKind::PointZero:
      return fmt::format("phi({:.6g}) = 0{}", c.x, c.is_key ? "" : " [non-key]");
    case ConditionKind::DecayAtPlusInfinity: return "decay at +inf";
    case ConditionKind::DecayAtMinusInfinity: return "decay at -inf";
    case ConditionKind::VanishOnRay:
      return fmt::format("phi = 0 for x {} {:.6g}", c.side == Side::PlusInfinity ? ">=" : "<=",
                         c.x);
    case ConditionKind::PointDerivativeZero:
      return fmt::format("phi^({})({:.6g}) = 0 [non-key]", c.order, c.x);
  }
  return "?";
}

std::string_view to_string(BoundCase c) {
  switch (c) {
    case BoundCase::I: return "I";
    case BoundCase::II: return "II";
    case BoundCase::III: return "III";
    case BoundCase::Unbound: return "Unbound";
  }
  return "?";
}

CaseClassification classify(const std::vector<BoundaryCondition>& conditions) {
  if (conditions.empty()) throw Error(ErrorKind::Precondition, "no boundary conditions given");
  std::vector<double> points, left_cuts, right_cuts;
  bool decay_plus = false, decay_minus = false;
  CaseClassification out;
  for (const auto& c : conditions) {
    if (!c.is_key || c.kind == ConditionKind::PointDerivativeZero) {
      ++out.non_kbc_count;
      continue;
    }
    switch (c.kind) {
      case ConditionKind::PointZero: points.push_back(c.x); break;
      case ConditionKind::VanishOnRay:
        (c.side == Side::PlusInfinity ? right_cuts : left_cuts).push_back(c.x);
        break;
      case ConditionKind::DecayAtPlusInfinity: decay_plus = true; break;
      case ConditionKind::DecayAtMinusInfinity: decay_minus = true; break;
      default: break;
    }
  }
  if (!left_cuts.empty() && !right_cuts.empty() &&
      *std::min_element(right_cuts.begin(), right_cuts.end()) <=
          *std::max_element(left_cuts.begin(), left_cuts.end()))
    throw Error(ErrorKind::InvalidConditions, "ray conditions leave an empty interior");
  if ((decay_plus && !right_cuts.empty()) || (decay_minus && !left_cuts.empty()))
    throw Error(ErrorKind::InvalidConditions, "decay imposed on a side that is already cut off");
  std::sort(points.begin(), points.end());
  for (std::size_t i = 1; i < points.size(); ++i)
    if (points[i] == points[i - 1])
      throw Error(ErrorKind::InvalidConditions, "repeated point condition");

  const int walls = static_cast<int>(points.size() + left_cuts.size() + right_cuts.size());
  const int decays = (decay_plus ? 1 : 0) + (decay_minus ? 1 : 0);
  if (walls > 2)
    throw Error(ErrorKind::InvalidConditions,
                fmt::format("{} key walls; at most two bound a region", walls));
  out.kbc_count = walls + decays;

  if (walls == 2 && decays > 0)
    throw Error(ErrorKind::InvalidConditions, "decay condition outside a two-wall region");
  if (walls == 1 && decays == 2)
    throw Error(ErrorKind::InvalidConditions, "a single wall between two decaying sides");
  if (walls == 2) {
    out.bound_case = BoundCase::I;
    out.predicted_dof = 2 - out.non_kbc_count;
  } else if (walls == 1 && decays == 1) {
    // the wall must sit on the side opposite to the decay
    if ((decay_plus && !right_cuts.empty()) || (decay_minus && !left_cuts.empty()))
      throw Error(ErrorKind::InvalidConditions, "wall and decay on the same side");
    out.bound_case = BoundCase::II;
    out.predicted_dof = 1 - out.non_kbc_count;
  } else if (walls == 0 && decays == 2) {
    out.bound_case = BoundCase::III;
    out.predicted_dof = 2 - out.non_kbc_count;
  } else {
    out.bound_case = BoundCase::Unbound;
    out.predicted_dof = 0;
  }
  out.predicted_dof = std::max(0, out.predicted_dof);
  return out;
}

std::vector<BoundaryCondition> default_conditions(const DimensionlessProblem& problem) {
  const Interval& d = problem.domain();
  switch (problem.kind()) {
    case PotentialKind::InfiniteWell:
    case PotentialKind::TabulatedCustom:
      return {BoundaryCondition::point_zero(d.lo), BoundaryCondition::point_zero(d.hi)};
    case PotentialKind::Linear:
      return {BoundaryCondition::point_zero(d.lo), BoundaryCondition::decay(Side::PlusInfinity)};
    case PotentialKind::Harmonic:
      return {BoundaryCondition::decay(Side::PlusInfinity),
              BoundaryCondition::decay(Side::MinusInfinity)};
  }
  return {};
}

// --- fundamental systems -------------------------------------------------------

namespace {

struct HalfLine {
  std::array<BasisFunction, 4> wkb;
  std::array<std::function<Jet(double)>, 4> eval;  // x <= seed
  std::array<std::function<cplx(double)>, 4> log_eval;
  double lower = 0.0;
  double seed = 0.0;
  double tail_end = 0.0;
};

// The decaying pair marched inward with QR at checkpoints. On segment k
// (cuts[k] >= x >= cuts[k+1]) the pair is Y_k(x) N_k, where Y_k starts from
// Q_{k-1} and N_k = (R_{K-1} ... R_k)^-1, so the exposed members are O(1) and
// orthonormal at the inner end. Unmarched, the slow member is swamped by the
// fast one (growth ~e^40 across the allowed region at E~ ~ 10).
struct DecayingPair {
  std::vector<double> cuts;
  std::vector<std::array<std::shared_ptr<const Trajectory>, 2>> seg;
  std::vector<Eigen::Matrix2cd> n;  // per segment; n[0] also maps the WKB pair beyond the seed

  std::size_t segment(double x) const {
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
      if (x >= cuts[k + 1]) return k;
    return seg.size() - 1;
  }
  Jet jet(double x, int col) const {
    const std::size_t k = segment(x);
    const Jet a = seg[k][0]->jet(x), b = seg[k][1]->jet(x);
    Jet out;
    for (int d = 0; d < 5; ++d) out[d] = a[d] * n[k](0, col) + b[d] * n[k](1, col);
    return out;
  }
};

std::shared_ptr<const DecayingPair> march_pair(const DimensionlessProblem& problem, double energy,
                                               const Jet& w2, const Jet& w4, double seed,
                                               double inner_edge, const OracleOptions& options) {
  auto pair = std::make_shared<DecayingPair>();
  double mu = 0.0;
  for (int i = 0; i <= 64; ++i) {
    const double x = inner_edge + (seed - inner_edge) * i / 64.0;
    const double ev = energy - problem.potential_jet(x)[0];
    const double disc = std::max(1.0 + 4.0 * problem.epsilon() * ev, 0.0);
    mu = std::max(mu, std::sqrt((1.0 + std::sqrt(disc)) / (2.0 * problem.epsilon())));
  }
  const int nseg = std::max(1, static_cast<int>(std::ceil((seed - inner_edge) * mu / 2.0)));
  for (int k = 0; k <= nseg; ++k) pair->cuts.push_back(seed - (seed - inner_edge) * k / nseg);
  pair->cuts.back() = inner_edge;

  Eigen::Matrix<cplx, 4, 2> y;
  for (int d = 0; d < 4; ++d) {
    y(d, 0) = w2[d];
    y(d, 1) = w4[d];
  }
  std::vector<Eigen::Matrix2cd> r;
  for (int k = 0; k < nseg; ++k) {
    std::array<std::shared_ptr<const Trajectory>, 2> tr;
    Eigen::Matrix<cplx, 4, 2> end;
    for (int c = 0; c < 2; ++c) {
      const StateVector init{y(0, c), y(1, c), y(2, c), y(3, c)};
      tr[c] = std::make_shared<const Trajectory>(
          integrate(problem, energy, init, pair->cuts[k], pair->cuts[k + 1], options));
      if (tr[c]->blew_up())
        throw Error(ErrorKind::Numerical, "decaying pair overflowed during continuation");
      const StateVector e = tr[c]->at(pair->cuts[k + 1]);
      for (int d = 0; d < 4; ++d) end(d, c) = e[d];
    }
    pair->seg.push_back(tr);
    Eigen::HouseholderQR<Eigen::Matrix<cplx, 4, 2>> qr(end);
    Eigen::Matrix2cd rk = qr.matrixQR().topLeftCorner<2, 2>().triangularView<Eigen::Upper>();
    Eigen::Matrix<cplx, 4, 2> q = qr.householderQ() * Eigen::Matrix<cplx, 4, 2>::Identity();
    for (int c = 0; c < 2; ++c) {  // positive diagonal
      const cplx ph = rk(c, c) == 0.0 ? 1.0 : rk(c, c) / std::abs(rk(c, c));
      q.col(c) *= ph;
      rk.row(c) /= ph;
    }
    r.push_back(rk);
    y = q;
  }
  pair->n.assign(nseg, Eigen::Matrix2cd::Identity());
  Eigen::Matrix2cd acc = Eigen::Matrix2cd::Identity();
  for (int k = nseg - 1; k >= 0; --k) {
    acc = r[k].triangularView<Eigen::Upper>().solve(acc);
    pair->n[k] = acc;
  }
  return pair;
}

cplx log_sum(cplx a, cplx b) {
  if (std::real(a) < std::real(b)) std::swap(a, b);
  if (!std::isfinite(std::real(b))) return a;
  return a + std::log(1.0 + std::exp(b - a));
}

// WKB in the far field toward +inf, continued by the oracle from `seed` down
// to `inner_edge`.
HalfLine right_half_line(const DimensionlessProblem& problem, double energy, double inner_edge,
                         const OracleOptions& options) {
  const Interval ff = far_field_validity(problem, energy, Side::PlusInfinity, 0.0);
  const double t = ff.lo;
  auto params = wkb_parameters(problem, energy, t);
  const double layer =
      turning_layer_width(params, TurningPoint{t, TurningPoint::Type::RootCoalescence});
  const double seed = t + 5.0 * layer;
  params.x0 = seed;
  const Interval validity{t + kTurningWindow, kInf};
  HalfLine h{wkb_basis(params, validity), {}, {}, inner_edge, seed, seed};

  for (int j : {0, 2}) {
    const Jet jt = h.wkb[j].evaluate(seed);
    const StateVector init{jt[0], jt[1], jt[2], jt[3]};
    auto traj = std::make_shared<const Trajectory>(
        integrate(problem, energy, init, seed, inner_edge, options));
    if (traj->blew_up())
      throw Error(ErrorKind::Numerical,
                  fmt::format("continuation of w{} overflowed before x~ = {}", j + 1, inner_edge));
    const BasisFunction wkb = h.wkb[j];
    h.eval[j] = [traj, wkb, seed](double x) { return x <= seed ? traj->jet(x) : wkb.evaluate(x); };
    h.log_eval[j] = [traj, wkb, seed](double x) {
      return x <= seed ? std::log(traj->at(x)[0]) : wkb.log_value(x);
    };
  }

  const auto pair = march_pair(problem, energy, h.wkb[1].evaluate(seed), h.wkb[3].evaluate(seed),
                               seed, inner_edge, options);
  for (int col = 0; col < 2; ++col) {
    const int j = 2 * col + 1;
    const BasisFunction w2 = h.wkb[1], w4 = h.wkb[3];
    const cplx c2 = pair->n[0](0, col), c4 = pair->n[0](1, col);
    h.eval[j] = [pair, w2, w4, c2, c4, seed, col](double x) {
      if (x <= seed) return pair->jet(x, col);
      const Jet a = w2.evaluate(x), b = w4.evaluate(x);
      Jet out;
      for (int d = 0; d < 5; ++d) out[d] = c2 * a[d] + c4 * b[d];
      out.overflow = a.overflow || b.overflow;
      return out;
    };
    h.log_eval[j] = [pair, w2, w4, c2, c4, seed, col](double x) {
      if (x <= seed) return std::log(pair->jet(x, col)[0]);
      const cplx la = c2 == 0.0 ? cplx(-kInf) : std::log(c2) + w2.log_value(x);
      const cplx lb = c4 == 0.0 ? cplx(-kInf) : std::log(c4) + w4.log_value(x);
      return log_sum(la, lb);
    };
  }

  // tail: go out until the decaying members dropped by e^-40 below their inner peak
  double peak = -kInf;
  for (int j : {1, 3})
    for (int i = 0; i <= 200; ++i) {
      const double x = inner_edge + (seed - inner_edge) * i / 200.0;
      peak = std::max(peak, std::log(std::abs(h.eval[j](x)[0])));
    }
  // log|w| falls monotonically out here: double the step, then bisect
  auto above = [&](double x) {
    return std::max(h.log_eval[1](x).real(), h.log_eval[3](x).real()) >= peak - 40.0;
  };
  double lo = seed, step = layer;
  while (above(lo + step) && step < 1e4 * layer) {
    lo += step;
    step *= 2.0;
  }
  double hi = lo + step;
  while (hi - lo > 0.25 * layer) {
    const double mid = 0.5 * (lo + hi);
    (above(mid) ? lo : hi) = mid;
  }
  h.tail_end = hi;
  return h;
}

BasisFunction continued(const HalfLine& h, int j, bool mirrored) {
  auto half = h.eval[j];
  auto half_log = h.log_eval[j];
  const BasisFunction& wkb = h.wkb[j];
  Interval validity{h.lower, kInf};
  if (!mirrored) {
    BasisFunction f(j + 1, Method::Continued, validity, half, half_log);
    f.set_asymptotic_class(Side::PlusInfinity, wkb.asymptotic_class(Side::PlusInfinity));
    return f;
  }
  auto eval = [half](double x) {
    if (x >= 0.0) return half(x);
    Jet jt = half(-x);
    jt[1] = -jt[1];
    jt[3] = -jt[3];
    return jt;
  };
  auto log_eval = [half_log](double x) { return half_log(std::abs(x)); };
  BasisFunction f(j + 1, Method::Continued, Interval{-kInf, kInf}, eval, log_eval);
  const auto cls = wkb.asymptotic_class(Side::PlusInfinity);
  f.set_asymptotic_class(Side::PlusInfinity, cls);
  f.set_asymptotic_class(Side::MinusInfinity, cls);
  f.set_junction(0.0);
  return f;
}

}  // namespace

FundamentalSystem build_fundamental_system(const DimensionlessProblem& problem, double energy,
                                           const OracleOptions& options) {
  if (!(problem.epsilon() > 0.0))
    throw Error(ErrorKind::Unsupported,
                "the four-member fundamental system needs eps > 0; use the oracle's "
                "second-order mode for beta = 0");
  const Interval& dom = problem.domain();
  switch (problem.kind()) {
    case PotentialKind::InfiniteWell: {
      const auto roots = characteristic_roots(problem.epsilon(), energy);
      return {exact_constant_basis(roots), dom, {}, std::nullopt};
    }
    case PotentialKind::Linear: {
      const HalfLine h = right_half_line(problem, energy, dom.lo, options);
      return {{continued(h, 0, false), continued(h, 1, false), continued(h, 2, false),
               continued(h, 3, false)},
              Interval{dom.lo, h.tail_end},
              {h.seed},
              std::nullopt};
    }
    case PotentialKind::Harmonic: {
      const HalfLine h = right_half_line(problem, energy, 0.0, options);
      std::array<double, 4> jump{};
      for (int j = 0; j < 4; ++j) {
        const Jet s = h.eval[j](0.0);
        jump[j] = std::max(std::abs(s[1]), std::abs(s[3])) /
                  std::max(std::abs(s[0]), std::abs(s[2]));
      }
      return {{continued(h, 0, true), continued(h, 1, true), continued(h, 2, true),
               continued(h, 3, true)},
              Interval{-h.tail_end, h.tail_end},
              {-h.seed, 0.0, h.seed},
              jump};
    }
    case PotentialKind::TabulatedCustom: {
      auto make = [&](int j) {
        StateVector e{};
        e[j] = 1.0;
        auto traj = std::make_shared<const Trajectory>(
            integrate(problem, energy, e, dom.lo, dom.hi, options));
        if (traj->blew_up())
          throw Error(ErrorKind::Numerical, "canonical solution overflowed on the custom domain");
        return BasisFunction(
            j + 1, Method::Continued, dom, [traj](double x) { return traj->jet(x); },
            [traj](double x) { return std::log(traj->at(x)[0]); });
      };
      return {{make(0), make(1), make(2), make(3)}, dom, {}, std::nullopt};
    }
  }
  throw Error(ErrorKind::Unsupported, "unknown potential kind");
}

// --- constraint system ----------------------------------------------------------

ConstraintSystem assemble(const FundamentalSet& basis,
                          const std::vector<BoundaryCondition>& conditions, double energy) {
  ConstraintSystem sys;
  sys.energy = energy;
  std::vector<Eigen::RowVector4cd> rows;
  for (const auto& c : conditions) {
    switch (c.kind) {
      case ConditionKind::PointZero:
      case ConditionKind::VanishOnRay:
      case ConditionKind::PointDerivativeZero: {
        const int order = c.kind == ConditionKind::PointDerivativeZero ? c.order : 0;
        if (order < 0 || order > 4)
          throw Error(ErrorKind::InvalidConditions, "derivative order must be 0..4");
        Eigen::RowVector4cd r;
        for (int j = 0; j < 4; ++j) r(j) = basis[j].evaluate(c.x)[order];
        rows.push_back(r);
        sys.row_labels.push_back(describe(c));
        break;
      }
      case ConditionKind::DecayAtPlusInfinity:
      case ConditionKind::DecayAtMinusInfinity: {
        for (int j = 0; j < 4; ++j) {
          const auto cls = basis[j].asymptotic_class(c.side);
          if (cls == AsymptoticClass::Undefined)
            throw Error(ErrorKind::ClassificationNeeded,
                        fmt::format("w{} has no asymptotic class toward {}", j + 1,
                                    to_string(c.side)));
          if (cls == AsymptoticClass::Growing) {
            Eigen::RowVector4cd r = Eigen::RowVector4cd::Zero();
            r(j) = 1.0;
            rows.push_back(r);
            sys.row_labels.push_back(fmt::format("{}: C{} = 0", describe(c), j + 1));
          }
        }
        break;
      }
    }
  }
  sys.matrix.resize(static_cast<Eigen::Index>(rows.size()), 4);
  for (std::size_t i = 0; i < rows.size(); ++i) sys.matrix.row(i) = rows[i];
  if (!sys.matrix.allFinite())
    throw Error(ErrorKind::Numerical, "non-finite basis value in the constraint matrix");
  return sys;
}

namespace {

std::vector<Eigen::Vector4cd> orthonormal(const std::vector<Eigen::Vector4cd>& v) {
  if (v.empty()) return {};
  Eigen::MatrixXcd m(4, static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) m.col(i) = v[i];
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(m);
  const Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(4, m.cols());
  std::vector<Eigen::Vector4cd> out;
  for (Eigen::Index i = 0; i < q.cols(); ++i) out.push_back(q.col(i));
  return out;
}

// Column echelon form by complete pivoting. Unscaled null vectors can differ
// in size by many orders; eliminating on ratios first keeps the small
// components intact through the orthonormalization that follows.
Eigen::MatrixXcd echelon(Eigen::MatrixXcd m) {
  const Eigen::Index rows = m.rows(), cols = m.cols();
  std::vector<bool> used(rows, false);
  for (Eigen::Index p = 0; p < cols; ++p) {
    double best = -1.0;
    Eigen::Index bi = 0, bj = p;
    for (Eigen::Index j = p; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i)
        if (!used[i] && std::abs(m(i, j)) > best) {
          best = std::abs(m(i, j));
          bi = i;
          bj = j;
        }
    if (!(best > 0.0)) break;
    m.col(p).swap(m.col(bj));
    used[bi] = true;
    for (Eigen::Index j = p + 1; j < cols; ++j) {
      const cplx f = m(bi, j) / m(bi, p);
      m.col(j) -= f * m.col(p);
      m(bi, j) = 0.0;
    }
  }
  return m;
}

}  // namespace

Nullspace nullspace(const ConstraintSystem& system, double rank_tol) {
  const Eigen::MatrixXcd& m = system.matrix;
  Nullspace out;
  if (!m.allFinite()) throw Error(ErrorKind::Numerical, "non-finite constraint matrix");

  // rows with a single nonzero entry pin that coefficient to zero
  std::array<bool, 4> pinned{};
  std::vector<Eigen::Index> general;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    int nonzero = 0;
    Eigen::Index at = 0;
    for (Eigen::Index c = 0; c < 4; ++c)
      if (m(r, c) != cplx(0.0)) {
        ++nonzero;
        at = c;
      }
    if (nonzero == 1)
      pinned[at] = true;
    else if (nonzero > 1)
      general.push_back(r);
  }
  std::vector<Eigen::Index> free;
  for (Eigen::Index c = 0; c < 4; ++c)
    if (!pinned[c]) free.push_back(c);
  const auto nf = static_cast<Eigen::Index>(free.size());

  Eigen::MatrixXcd sub(static_cast<Eigen::Index>(general.size()), nf);
  for (std::size_t r = 0; r < general.size(); ++r)
    for (Eigen::Index c = 0; c < nf; ++c) sub(r, c) = m(general[r], free[c]);

  auto embed = [&](const Eigen::MatrixXcd& local) {
    for (Eigen::Index k = 0; k < local.cols(); ++k) {
      Eigen::Vector4cd v = Eigen::Vector4cd::Zero();
      for (Eigen::Index c = 0; c < nf; ++c) v(free[c]) = local(c, k);
      out.vectors.push_back(v);
    }
  };

  if (nf == 0) {
    out.nullity = 0;
    out.singular_values = Eigen::VectorXd::Ones(std::min<Eigen::Index>(m.rows(), 4));
    return out;
  }
  if (sub.rows() == 0 || sub.cwiseAbs().maxCoeff() == 0.0) {
    out.nullity = static_cast<int>(nf);
    out.singular_values = Eigen::VectorXd::Zero(0);
    embed(Eigen::MatrixXcd::Identity(nf, nf));
    return out;
  }

  // unit max per column; columns negligible against the largest stay negligible
  const double top_col = sub.cwiseAbs().maxCoeff();
  Eigen::VectorXd scale(nf);
  for (Eigen::Index c = 0; c < nf; ++c) {
    const double s = sub.col(c).cwiseAbs().maxCoeff();
    scale(c) = s > rank_tol * top_col ? s : top_col;
  }
  const Eigen::MatrixXcd scaled = sub * scale.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(scaled, Eigen::ComputeFullV);
  out.singular_values = svd.singularValues();
  const double top = out.singular_values(0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < out.singular_values.size(); ++i)
    if (out.singular_values(i) > rank_tol * top) ++rank;
  out.nullity = static_cast<int>(nf - rank);
  if (out.nullity == 0) return out;

  const Eigen::MatrixXcd raw =
      scale.cwiseInverse().asDiagonal() * svd.matrixV().rightCols(nf - rank);
  const Eigen::MatrixXcd ech = echelon(raw);
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(ech);
  embed(qr.householderQ() * Eigen::MatrixXcd::Identity(nf, ech.cols()));
  return out;
}

std::array<cplx, 3> well_coefficients(const BasisFunction& w1, const BasisFunction& w2,
                                      const BasisFunction& w3, double left, double right) {
  const std::array<cplx, 3> l{w1.evaluate(left)[0], w2.evaluate(left)[0], w3.evaluate(left)[0]};
  const std::array<cplx, 3> r{w1.evaluate(right)[0], w2.evaluate(right)[0],
                              w3.evaluate(right)[0]};
  const std::array<cplx, 3> d{l[1] * r[2] - l[2] * r[1], l[2] * r[0] - l[0] * r[2],
                              l[0] * r[1] - l[1] * r[0]};
  auto norm = [](const std::array<cplx, 3>& v) {
    return std::sqrt(std::norm(v[0]) + std::norm(v[1]) + std::norm(v[2]));
  };
  if (norm(d) <= 1e-13 * norm(l) * norm(r))
    throw Error(ErrorKind::DegenerateConfiguration,
                "boundary rows are parallel; the determinant form has no unique direction");
  return d;
}

std::vector<Eigen::Vector4cd> reference_pair(const FundamentalSet& basis, double left,
                                         double right) {
  std::vector<Eigen::Vector4cd> out;
  for (const auto& idx : {std::array<int, 3>{0, 1, 2}, std::array<int, 3>{1, 2, 3}}) {
    try {
      const auto d =
          well_coefficients(basis[idx[0]], basis[idx[1]], basis[idx[2]], left, right);
      Eigen::Vector4cd v = Eigen::Vector4cd::Zero();
      for (int k = 0; k < 3; ++k) v(idx[k]) = d[k];
      out.push_back(v);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateConfiguration) throw;
    }
  }
  return out;
}

double principal_angle(const std::vector<Eigen::Vector4cd>& a,
                       const std::vector<Eigen::Vector4cd>& b) {
  if (a.empty() || b.empty()) throw Error(ErrorKind::Precondition, "empty span");
  const auto qa = orthonormal(a), qb = orthonormal(b);
  auto gap = [](const std::vector<Eigen::Vector4cd>& p, const std::vector<Eigen::Vector4cd>& q) {
    Eigen::MatrixXcd qp(4, static_cast<Eigen::Index>(p.size()));
    for (std::size_t i = 0; i < p.size(); ++i) qp.col(i) = p[i];
    Eigen::MatrixXcd rest(4, static_cast<Eigen::Index>(q.size()));
    for (std::size_t i = 0; i < q.size(); ++i) rest.col(i) = q[i] - qp * (qp.adjoint() * q[i]);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(rest);
    return svd.singularValues()(0);
  };
  const double s = std::max(gap(qa, qb), gap(qb, qa));
  return std::asin(std::min(1.0, s));
}

// --- normalization ---------------------------------------------------------------

Jet BoundState::evaluate(double x) const {
  Jet out;
  for (int j = 0; j < 4; ++j) {
    if (coefficients(j) == cplx(0.0)) continue;
    const Jet b = basis[j].evaluate(x);
    for (int k = 0; k < 5; ++k) out[k] += coefficients(j) * b[k];
    out.overflow = out.overflow || b.overflow;
  }
  return out;
}

namespace {

bool integrable(const BasisFunction& f, const Interval& domain) {
  if (std::isfinite(domain.hi) &&
      std::isfinite(domain.lo))
    return true;
  if (!std::isfinite(domain.hi) &&
      f.asymptotic_class(Side::PlusInfinity) != AsymptoticClass::Decaying)
    return false;
  if (!std::isfinite(domain.lo) &&
      f.asymptotic_class(Side::MinusInfinity) != AsymptoticClass::Decaying)
    return false;
  return true;
}

bool exponential(const BasisFunction& f) {
  for (Side s : {Side::PlusInfinity, Side::MinusInfinity}) {
    const auto c = f.asymptotic_class(s);
    if (c == AsymptoticClass::Growing || c == AsymptoticClass::Decaying) return true;
  }
  return false;
}

}  // namespace

BoundStateSolution normalize(const std::vector<Eigen::Vector4cd>& vectors,
                             const FundamentalSystem& system, const DimensionlessProblem& problem,
                             double energy, const NormalizeOptions& options) {
  BoundStateSolution sol;
  sol.energy = energy;
  sol.energy_si = problem.to_si_energy(energy);
  sol.extent = system.extent;
  sol.breakpoints = system.breakpoints;
  if (!sol.extent.finite()) throw Error(ErrorKind::Normalization, "integration extent is not finite");
  const auto& basis = system.basis;

  std::vector<Eigen::Vector4cd> work;
  for (auto v : vectors) {
    const double n = v.norm();
    if (!(n > 0.0) || !v.allFinite())
      throw Error(ErrorKind::Normalization, "zero or non-finite coefficient vector");
    for (int j = 0; j < 4; ++j) {
      if (std::abs(v(j)) <= 1e-12 * n) {
        v(j) = 0.0;
        continue;
      }
      if (!integrable(basis[j], problem.domain()))
        throw Error(ErrorKind::Normalization,
                    fmt::format("coefficient of non-integrable w{} is {:.3g} (relative)", j + 1,
                                std::abs(v(j)) / n));
    }
    work.push_back(v / v.norm());
  }

  for (int j = 0; j < 4; ++j)
    if (integrable(basis[j], problem.domain())) sol.gram_indices.push_back(j);
  const int k = static_cast<int>(sol.gram_indices.size());
  sol.gram = Eigen::MatrixXcd::Zero(k, k);
  std::vector<double> cuts{sol.extent.lo};
  for (double b : system.breakpoints)
    if (b > sol.extent.lo && b < sol.extent.hi) cuts.push_back(b);
  cuts.push_back(sol.extent.hi);
  for (int r = 0; r < k; ++r) {
    for (int c = r; c < k; ++c) {
      const auto& fi = basis[sol.gram_indices[r]];
      const auto& fj = basis[sol.gram_indices[c]];
      cplx total = 0.0;
      for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
        const auto res = quad::integrate(
            [&](double x) { return fi.evaluate(x)[0] * std::conj(fj.evaluate(x)[0]); }, cuts[p],
            cuts[p + 1], options.rel_tol, 15);
        total += res.value;
      }
      sol.gram(r, c) = total;
      sol.gram(c, r) = std::conj(total);
    }
    sol.gram(r, r) = sol.gram(r, r).real();
  }

  // <u, v> from the combined functions. c^H F c cancels catastrophically when
  // continued members are ~1e16 and nearly parallel near the inner end.
  auto combine = [&](const Eigen::Vector4cd& u, double x) {
    cplx s = 0.0;
    for (int j = 0; j < 4; ++j)
      if (u(j) != 0.0) s += u(j) * basis[j].evaluate(x)[0];
    return s;
  };
  auto inner = [&](const Eigen::Vector4cd& u, const Eigen::Vector4cd& v) {
    cplx s = 0.0;
    for (std::size_t p = 0; p + 1 < cuts.size(); ++p)
      s += quad::integrate([&](double x) { return combine(u, x) * std::conj(combine(v, x)); },
                           cuts[p], cuts[p + 1], options.rel_tol, 15)
               .value;
    return s;
  };

  if (options.oscillatory_first && work.size() > 1) {
    const int n = static_cast<int>(work.size());
    Eigen::MatrixXcd span(4, n);
    for (int i = 0; i < n; ++i) span.col(i) = work[i];
    const auto q = orthonormal(work);
    for (int i = 0; i < n; ++i) span.col(i) = q[i];
    Eigen::Vector4d weight;
    for (int j = 0; j < 4; ++j) weight(j) = exponential(basis[j]) ? 1.0 : 0.0;
    const Eigen::MatrixXcd w = span.adjoint() * weight.asDiagonal() * span;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(w);
    const Eigen::MatrixXcd rotated = span * es.eigenvectors();  // ascending weight
    for (int i = 0; i < n; ++i) work[i] = rotated.col(i);
  }

  for (std::size_t i = 0; i < work.size(); ++i) {
    Eigen::Vector4cd v = work[i];
    if (options.orthogonalize)
      for (std::size_t p = 0; p < i; ++p) v -= inner(v, work[p]) * work[p];
    const double n2 = inner(v, v).real();
    if (!(n2 > 0.0) || !std::isfinite(n2))
      throw Error(ErrorKind::Normalization,
                  fmt::format("state {} has non-positive norm {:.3g}", i + 1, n2));
    v /= std::sqrt(n2);
    // global phase: largest coefficient real and positive
    Eigen::Index big = 0;
    v.cwiseAbs().maxCoeff(&big);
    v *= std::conj(v(big)) / std::abs(v(big));
    work[i] = v;
  }
  for (const auto& v : work) sol.states.push_back({v, basis});
  sol.degeneracy = static_cast<int>(sol.states.size());
  return sol;
}

BoundStateSolution solve_bound_states(const DimensionlessProblem& problem, double energy,
                                      const std::vector<BoundaryCondition>& conditions,
                                      const NormalizeOptions& options,
                                      const OracleOptions& oracle) {
  const FundamentalSystem system = build_fundamental_system(problem, energy, oracle);
  const ConstraintSystem cs = assemble(system.basis, conditions, energy);
  const Nullspace ns = nullspace(cs);
  return normalize(ns.vectors, system, problem, energy, options);
}

BoundStateSolution solve_bound_states(const DimensionlessProblem& problem, double energy) {
  return solve_bound_states(problem, energy, default_conditions(problem));
}

int degrees_of_freedom(const DimensionlessProblem& problem, double energy,
                       const std::vector<BoundaryCondition>& conditions,
                       const OracleOptions& oracle) {
  const FundamentalSystem system = build_fundamental_system(problem, energy, oracle);
  return nullspace(assemble(system.basis, conditions, energy)).nullity;
}

}  // namespace gupbic
