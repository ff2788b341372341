#include "gupbic/core.hpp"

#include <boost/math/special_functions/fpclassify.hpp>  // pchip.hpp uses isnan unqualified
#include <boost/math/interpolators/pchip.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gupbic/error.hpp"

namespace gupbic {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidSetup: return "invalid-setup";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::ComplexQuartet: return "complex-quartet";
    case ErrorKind::DegenerateBasis: return "degenerate-basis";
    case ErrorKind::Validity: return "validity";
    case ErrorKind::ClassificationNeeded: return "classification-needed";
    case ErrorKind::InvalidConditions: return "invalid-conditions";
    case ErrorKind::DegenerateConfiguration: return "degenerate-configuration";
    case ErrorKind::Normalization: return "normalization";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::Arity: return "arity";
    case ErrorKind::WrongPotential: return "wrong-potential";
    case ErrorKind::UndefinedExponent: return "undefined-exponent";
    case ErrorKind::Numerical: return "numerical";
  }
  return "unknown";
}

PotentialKind kind_of(const PotentialSpec& spec) {
  switch (spec.index()) {
    case 0: return PotentialKind::InfiniteWell;
    case 1: return PotentialKind::Linear;
    case 2: return PotentialKind::Harmonic;
    default: return PotentialKind::TabulatedCustom;
  }
}

std::string_view to_string(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::InfiniteWell: return "well";
    case PotentialKind::Linear: return "linear";
    case PotentialKind::Harmonic: return "harmonic";
    case PotentialKind::TabulatedCustom: return "custom";
  }
  return "unknown";
}

namespace {

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

void validate_potential(const PotentialSpec& spec) {
  std::visit(
      [](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, InfiniteWell>) {
          if (!finite_positive(p.half_width))
            throw Error(ErrorKind::InvalidSetup, "well half-width a must be > 0");
        } else if constexpr (std::is_same_v<T, LinearRamp>) {
          if (!finite_positive(p.slope))
            throw Error(ErrorKind::InvalidSetup, "linear slope L must be > 0");
        } else if constexpr (std::is_same_v<T, HarmonicTrap>) {
          if (!finite_positive(p.omega))
            throw Error(ErrorKind::InvalidSetup, "oscillator omega must be > 0");
        } else {
          if (p.x.size() != p.v.size())
            throw Error(ErrorKind::InvalidSetup, "custom potential: x and V lengths differ");
          if (p.x.size() < 4)
            throw Error(ErrorKind::InvalidSetup, "custom potential needs at least 4 samples");
          for (std::size_t i = 0; i < p.x.size(); ++i) {
            if (!std::isfinite(p.x[i]) || !std::isfinite(p.v[i]))
              throw Error(ErrorKind::InvalidSetup, "custom potential: non-finite sample");
            if (i > 0 && !(p.x[i] > p.x[i - 1]))
              throw Error(ErrorKind::InvalidSetup,
                          "custom potential: x must be strictly increasing (row " +
                              std::to_string(i + 1) + ")");
          }
        }
      },
      spec);
}

class ZeroShape final : public PotentialShape {
 public:
  std::array<double, 5> jet(double) const override { return {0, 0, 0, 0, 0}; }
};

class RampShape final : public PotentialShape {
 public:
  explicit RampShape(double c) : c_(c) {}
  std::array<double, 5> jet(double x) const override { return {c_ * x, c_, 0, 0, 0}; }

 private:
  double c_;
};

class QuadraticShape final : public PotentialShape {
 public:
  explicit QuadraticShape(double c) : c_(c) {}
  std::array<double, 5> jet(double x) const override {
    return {c_ * x * x, 2 * c_ * x, 2 * c_, 0, 0};
  }

 private:
  double c_;
};

class TabulatedShape final : public PotentialShape {
 public:
  TabulatedShape(std::vector<double> x, std::vector<double> v)
      : lo_(x.front()), hi_(x.back()), spline_(std::move(x), std::move(v)) {}

  std::array<double, 5> jet(double x) const override {
    const double xc = std::clamp(x, lo_, hi_);
    const double h = 1e-5 * (hi_ - lo_);
    const double a = std::max(lo_, xc - h);
    const double b = std::min(hi_, xc + h);
    const double second = (spline_.prime(b) - spline_.prime(a)) / (b - a);
    return {spline_(xc), spline_.prime(xc), second, 0, 0};
  }

 private:
  double lo_, hi_;
  boost::math::interpolators::pchip<std::vector<double>> spline_;
};

}  // namespace

PhysicalSetup::PhysicalSetup(double mass, double beta, PotentialSpec potential, double hbar)
    : mass_(mass), beta_(beta), hbar_(hbar), potential_(std::move(potential)) {
  if (!finite_positive(mass_)) throw Error(ErrorKind::InvalidSetup, "mass must be > 0");
  if (!std::isfinite(beta_) || beta_ < 0.0)
    throw Error(ErrorKind::InvalidSetup, "beta must be finite and >= 0");
  if (!finite_positive(hbar_)) throw Error(ErrorKind::InvalidSetup, "hbar must be > 0");
  validate_potential(potential_);
}

PhysicalSetup PhysicalSetup::with_beta(double beta) const {
  return PhysicalSetup(mass_, beta, potential_, hbar_);
}

DimensionlessProblem::DimensionlessProblem(double epsilon, double length_scale,
                                           double energy_scale, Interval domain,
                                           PotentialKind kind,
                                           std::shared_ptr<const PotentialShape> shape)
    : epsilon_(epsilon),
      length_scale_(length_scale),
      energy_scale_(energy_scale),
      domain_(domain),
      kind_(kind),
      shape_(std::move(shape)) {
  if (!std::isfinite(epsilon_) || epsilon_ < 0.0)
    throw Error(ErrorKind::InvalidSetup, "epsilon must be finite and >= 0");
  if (!finite_positive(length_scale_) || !finite_positive(energy_scale_))
    throw Error(ErrorKind::InvalidSetup, "scale factors must be finite and > 0");
}

DimensionlessProblem DimensionlessProblem::well(double epsilon) {
  return {epsilon, 1.0, 1.0, {-1.0, 1.0}, PotentialKind::InfiniteWell,
          std::make_shared<ZeroShape>()};
}

DimensionlessProblem DimensionlessProblem::linear(double epsilon) {
  return {epsilon, 1.0, 1.0, {0.0, kInf}, PotentialKind::Linear,
          std::make_shared<RampShape>(1.0)};
}

DimensionlessProblem DimensionlessProblem::harmonic(double epsilon) {
  return {epsilon, 1.0, 1.0, {-kInf, kInf}, PotentialKind::Harmonic,
          std::make_shared<QuadraticShape>(1.0)};
}

DimensionlessProblem DimensionlessProblem::with_epsilon(double epsilon) const {
  return {epsilon, length_scale_, energy_scale_, domain_, kind_, shape_};
}

double DimensionlessProblem::potential_value(double x) const {
  if (!domain_.contains(x))
    throw Error(ErrorKind::Domain, "x~ = " + std::to_string(x) + " is outside the domain");
  return shape_->jet(x)[0];
}

double canonical_length_scale(const PhysicalSetup& s) {
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, InfiniteWell>) {
          return p.half_width;
        } else if constexpr (std::is_same_v<T, LinearRamp>) {
          return std::cbrt(s.hbar() * s.hbar() / (2.0 * s.mass() * p.slope));
        } else if constexpr (std::is_same_v<T, HarmonicTrap>) {
          return std::sqrt(s.hbar() / (s.mass() * p.omega));
        } else {
          return 0.5 * (p.x.back() - p.x.front());
        }
      },
      s.potential());
}

DimensionlessProblem nondimensionalize(const PhysicalSetup& s, double length_scale) {
  if (!finite_positive(length_scale))
    throw Error(ErrorKind::InvalidSetup, "length scale must be finite and > 0");
  const double hbar2 = s.hbar() * s.hbar();
  const double energy_scale = hbar2 / (2.0 * s.mass() * length_scale * length_scale);
  const double epsilon = 2.0 * s.beta_prime() * hbar2 / (length_scale * length_scale);
  if (!std::isfinite(energy_scale) || !std::isfinite(epsilon) || energy_scale <= 0.0)
    throw Error(ErrorKind::InvalidSetup, "non-finite scaled coefficients");

  return std::visit(
      [&](const auto& p) -> DimensionlessProblem {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, InfiniteWell>) {
          const double edge = p.half_width / length_scale;
          return {epsilon, length_scale, energy_scale, {-edge, edge},
                  PotentialKind::InfiniteWell, std::make_shared<ZeroShape>()};
        } else if constexpr (std::is_same_v<T, LinearRamp>) {
          return {epsilon, length_scale, energy_scale, {0.0, kInf}, PotentialKind::Linear,
                  std::make_shared<RampShape>(p.slope * length_scale / energy_scale)};
        } else if constexpr (std::is_same_v<T, HarmonicTrap>) {
          const double c =
              0.5 * s.mass() * p.omega * p.omega * length_scale * length_scale / energy_scale;
          return {epsilon, length_scale, energy_scale, {-kInf, kInf},
                  PotentialKind::Harmonic, std::make_shared<QuadraticShape>(c)};
        } else {
          std::vector<double> x(p.x.size()), v(p.v.size());
          for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = p.x[i] / length_scale;
            v[i] = p.v[i] / energy_scale;
          }
          Interval dom{x.front(), x.back()};
          return {epsilon, length_scale, energy_scale, dom, PotentialKind::TabulatedCustom,
                  std::make_shared<TabulatedShape>(std::move(x), std::move(v))};
        }
      },
      s.potential());
}

DimensionlessProblem nondimensionalize(const PhysicalSetup& setup) {
  return nondimensionalize(setup, canonical_length_scale(setup));
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_number(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw Error(ErrorKind::InvalidSetup, what + ": not a number: '" + text + "'");
  }
  if (used != text.size())
    throw Error(ErrorKind::InvalidSetup, what + ": trailing characters in '" + text + "'");
  return v;
}

}  // namespace

TabulatedPotential read_potential_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidSetup, "cannot open custom potential file " + path.string());
  TabulatedPotential out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto comma = t.find(',');
    if (comma == std::string::npos)
      throw Error(ErrorKind::InvalidSetup, path.string() + ":" + std::to_string(row) +
                                               ": expected two comma-separated columns");
    const std::string xs = trim(std::string_view(t).substr(0, comma));
    const std::string vs = trim(std::string_view(t).substr(comma + 1));
    if (out.x.empty() && row == 1) {
      // header row, e.g. "x,V"
      char* end = nullptr;
      std::strtod(xs.c_str(), &end);
      if (end == xs.c_str()) continue;
    }
    const std::string where = path.string() + ":" + std::to_string(row);
    out.x.push_back(parse_number(xs, where));
    out.v.push_back(parse_number(vs, where));
  }
  return out;
}

PhysicalSetup parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  double mass = kElectronMass;
  double beta = 0.0;
  std::string potential = "well";
  double a = 1e-10;
  double slope = -1.0;
  double omega = -1.0;
  std::string custom_file;

  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::InvalidSetup,
                  "config line " + std::to_string(row) + ": expected key = value");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    const std::string where = "config key '" + key + "'";
    if (key == "mass") mass = parse_number(value, where);
    else if (key == "beta") beta = parse_number(value, where);
    else if (key == "potential") potential = value;
    else if (key == "a") a = parse_number(value, where);
    else if (key == "L") slope = parse_number(value, where);
    else if (key == "omega") omega = parse_number(value, where);
    else if (key == "custom_file") custom_file = value;
    else throw Error(ErrorKind::InvalidSetup, "unknown config key '" + key + "'");
  }

  PotentialSpec spec;
  if (potential == "well") {
    spec = InfiniteWell{a};
  } else if (potential == "linear") {
    if (slope < 0) throw Error(ErrorKind::InvalidSetup, "potential = linear requires L");
    spec = LinearRamp{slope};
  } else if (potential == "harmonic") {
    if (omega < 0) throw Error(ErrorKind::InvalidSetup, "potential = harmonic requires omega");
    spec = HarmonicTrap{omega};
  } else if (potential == "custom") {
    if (custom_file.empty())
      throw Error(ErrorKind::InvalidSetup, "potential = custom requires custom_file");
    std::filesystem::path p(custom_file);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    spec = read_potential_csv(p);
  } else {
    throw Error(ErrorKind::InvalidSetup, "unknown potential '" + potential + "'");
  }
  return PhysicalSetup(mass, beta, std::move(spec));
}

PhysicalSetup load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::InvalidSetup, "cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

PhysicalSetup reference_well_setup() {
  return PhysicalSetup(kElectronMass, 1e47, InfiniteWell{1e-10});
}

}  // namespace gupbic
