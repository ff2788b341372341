#include "gupbic/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>
#include <boost/math/special_functions/airy.hpp>
#include <fmt/format.h>
#include <openssl/evp.h>

#include "gupbic/error.hpp"
#include "gupbic/matcher.hpp"
#include "gupbic/oracle.hpp"
#include "gupbic/spectrum.hpp"

namespace gupbic::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidSetup:
    case ErrorKind::Domain:
    case ErrorKind::InvalidConditions:
    case ErrorKind::Precondition:
    case ErrorKind::Arity:
    case ErrorKind::WrongPotential:
      return kUsage;
    default:
      return kNumerical;
  }
}

std::string fmt_num(double v) { return fmt::format("{:.16e}", v); }

PotentialKind parse_kind(const std::string& s) {
  if (s == "well") return PotentialKind::InfiniteWell;
  if (s == "linear") return PotentialKind::Linear;
  if (s == "harmonic") return PotentialKind::Harmonic;
  if (s == "custom")
    throw UsageError("--potential custom needs --config with custom_file");
  throw UsageError("--potential must be one of well, linear, harmonic");
}

struct Globals {
  std::string config;
  std::string out = "out";
  unsigned threads = 0;
  double tol = 1e-11;
  std::string potential;
};

struct Context {
  PhysicalSetup setup;
  DimensionlessProblem problem;
  OracleOptions oracle;
  unsigned threads;
  fs::path out_dir;
  std::vector<std::string> outputs;

  void write(const std::string& name, std::string_view content) {
    write_atomic(out_dir / name, content);
    outputs.push_back(name);
  }
};

Context make_context(const Globals& g) {
  if (!(g.tol >= 1e-14 && g.tol <= 1e-6)) throw UsageError("--tol must lie in [1e-14, 1e-6]");
  std::optional<PhysicalSetup> setup;
  if (!g.config.empty()) {
    setup = load_config(g.config);
    if (!g.potential.empty() && parse_kind(g.potential) != setup->kind())
      throw UsageError("--potential " + g.potential + " contradicts the potential in --config");
  } else {
    setup = default_setup(parse_kind(g.potential.empty() ? "well" : g.potential));
  }
  OracleOptions oracle;
  oracle.rel_tol = g.tol;
  oracle.abs_tol = g.tol * 1e-2;
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  return Context{*setup, nondimensionalize(*setup), oracle, g.threads == 0 ? hw : g.threads,
                 fs::path(g.out), {}};
}

// Reference level k (1-based) in scaled units.
double level(const Context& c, int k) {
  if (k < 1) throw UsageError("--k must be at least 1");
  switch (c.setup.kind()) {
    case PotentialKind::InfiniteWell: return well_special_energies(c.setup, k).back().energy;
    case PotentialKind::Harmonic: return 2.0 * k - 1.0;
    case PotentialKind::Linear: return -boost::math::airy_ai_zero<double>(k);
    case PotentialKind::TabulatedCustom: break;
  }
  throw UsageError("--k has no meaning for a tabulated potential; use --E");
}

// --- commands ---------------------------------------------------------------------

int cmd_wavefunction(Context& c, std::optional<int> k, std::optional<double> e_si, int grid_n,
                     std::ostream& out) {
  if (grid_n < 2) throw UsageError("--grid-n must be at least 2");
  if (k.has_value() == e_si.has_value()) throw UsageError("give exactly one of --k and --E");
  double energy;
  if (k) {
    energy = level(c, *k);
  } else {
    if (!(*e_si > 0.0)) throw UsageError("--E must be positive");
    energy = c.problem.to_dimensionless_energy(*e_si);
  }
  const auto sol = solve_bound_states(c.problem, energy, default_conditions(c.problem), {},
                                      c.oracle);
  const double lc = c.problem.length_scale();
  const double amp = 1.0 / std::sqrt(lc);
  std::string csv = "x_SI,x_tilde,state_index,re_phi,im_phi\n";
  for (std::size_t s = 0; s < sol.states.size(); ++s) {
    for (int i = 0; i < grid_n; ++i) {
      const double x = sol.extent.lo + sol.extent.width() * i / (grid_n - 1);
      const cplx phi = sol.states[s].evaluate(x)[0] * amp;
      csv += fmt::format("{},{},{},{},{}\n", fmt_num(x * lc), fmt_num(x), s + 1,
                         fmt_num(phi.real()), fmt_num(phi.imag()));
    }
  }
  c.write("wavefunctions.csv", csv);
  out << json{{"energy_SI", sol.energy_si},
              {"energy_dimensionless", sol.energy},
              {"degeneracy", sol.degeneracy}}
             .dump()
      << "\n";
  return kOk;
}

int cmd_dof_scan(Context& c, std::optional<double> e_min, double e_max, int n, std::ostream& out) {
  if (n < 2) throw UsageError("--n must be at least 2");
  if (!(e_max > 0.0)) throw UsageError("--E-max must be positive");
  if (e_min && !(*e_min > 0.0 && *e_min < e_max))
    throw UsageError("--E-min must satisfy 0 < E-min < E-max");
  std::vector<double> grid;
  for (int i = 0; i < n; ++i) {
    const double e = e_min ? *e_min + (e_max - *e_min) * i / (n - 1) : e_max * (i + 1) / n;
    grid.push_back(c.problem.to_dimensionless_energy(e));
  }
  ScanOptions opts;
  opts.threads = c.threads;
  opts.oracle = c.oracle;
  const SpectrumScan scan = dof_scan(c.setup, grid, opts);
  c.write("scan.csv", scan_csv(scan));
  c.write("scan.json", scan_json(scan).dump(2) + "\n");
  int failed = 0;
  for (const auto& e : scan.errors) failed += e.empty() ? 0 : 1;
  out << json{{"points", n}, {"failed", failed}, {"special_marks", scan.special_marks.size()}}.dump()
      << "\n";
  return failed == 0 ? kOk : kNumerical;
}

int cmd_spectrum(Context& c, int k_max, double e_max, std::ostream& out) {
  json levels = json::array();
  if (c.setup.kind() == PotentialKind::InfiniteWell) {
    const auto plain = well_special_energies(c.setup.with_beta(0.0), k_max);
    const auto gup = well_special_energies(c.setup, k_max);
    for (int i = 0; i < k_max; ++i)
      levels.push_back({{"k", gup[i].k},
                        {"E_SI", gup[i].energy_si},
                        {"E_dimensionless", gup[i].energy},
                        {"E_beta0_SI", plain[i].energy_si},
                        {"shift_SI", gup[i].energy_si - plain[i].energy_si}});
  } else {
    for (const auto& l :
         reference_levels(c.setup, c.problem, c.problem.to_dimensionless_energy(e_max)))
      levels.push_back({{"k", l.k}, {"E_SI", l.energy_si}, {"E_dimensionless", l.energy}});
  }
  const json doc{{"potential", to_string(c.setup.kind())},
                 {"epsilon", c.problem.epsilon()},
                 {"energy_scale_J", c.problem.energy_scale()},
                 {"length_scale_m", c.problem.length_scale()},
                 {"levels", levels}};
  c.write("spectrum.json", doc.dump(2) + "\n");
  out << doc["levels"].size() << " levels\n";
  return kOk;
}

int cmd_observability(Context& c, double threshold, std::ostream& out) {
  const MomentumMoments m =
      momentum_moments(ground_state(c.setup, c.problem), c.problem, c.setup);
  const Observability o = observability(m, threshold);
  const CriticalExponent ce = critical_beta_exponent(c.setup);
  json doc{{"beta", c.setup.beta()},
           {"ratio", o.ratio},
           {"ratio_full", o.ratio_full},
           {"threshold", o.threshold},
           {"verdict", to_string(o.verdict)},
           {"moments",
            {{"mean_p", m.mean_p},
             {"mean_p2", m.mean_p2},
             {"delta_p", m.delta_p},
             {"mean_P", m.mean_P},
             {"mean_P2", m.mean_P2},
             {"delta_P", m.delta_P}}},
           {"critical_exponent",
            {{"leading", ce.leading}, {"refined", ce.refined}, {"discrepancy", ce.discrepancy}}}};
  if (ce.published_value) doc["critical_exponent"]["published_value"] = *ce.published_value;
  c.write("observability.json", doc.dump(2) + "\n");
  out << fmt::format("r = {:.6g} ({}), critical exponent {:.4f}\n", o.ratio, to_string(o.verdict),
                     ce.leading);
  return kOk;
}

json momentum_report(const Context& c, double energy) {
  const MomentumSolution ms = momentum_rep_linear(c.setup, c.problem.to_si_energy(energy));
  std::vector<double> probe;
  for (int i = 0; i <= 40; ++i) probe.push_back(-5.0 + 0.25 * i);
  const double res = momentum_residual(ms, probe);
  const int dim = momentum_solution_space_dimension(ms, -5.0, 5.0);
  OracleOptions o = c.oracle;
  if (!(c.problem.epsilon() > 0.0)) o.order = EquationOrder::Second;
  const double span = c.problem.epsilon() > 0.0 ? 3.0 * std::sqrt(c.problem.epsilon()) : 1.0;
  const auto trajs = canonical_trajectories(c.problem, energy, 0.0, span, o);
  const double w = std::abs(wronskian(trajs, span));
  const int position_dim = w > 0.0 ? static_cast<int>(trajs.size()) : 0;
  return {{"energy_dimensionless", energy},
          {"momentum_residual", res},
          {"momentum_dimension", dim},
          {"position_wronskian", w},
          {"position_dimension", position_dim},
          {"mismatch", position_dim != dim}};
}

int cmd_momentum_check(Context& c, std::optional<double> e_si, std::ostream& out) {
  if (c.setup.kind() != PotentialKind::Linear)
    throw Error(ErrorKind::WrongPotential, "momentum-check needs a linear potential");
  const double energy = e_si ? c.problem.to_dimensionless_energy(*e_si) : level(c, 1);
  const json doc = momentum_report(c, energy);
  c.write("momentum.json", doc.dump(2) + "\n");
  out << doc.dump() << "\n";
  return kOk;
}

// --- verify --------------------------------------------------------------------

struct Check {
  std::string name;
  bool pass;
  double value;
  double threshold;
  std::string note;
};

double wronskian_drift(const DimensionlessProblem& p, double energy, double from, double to,
                       const OracleOptions& o) {
  double worst = 0.0;
  for (const auto& s : wronskian_profile(p, energy, from, to, 41, o))
    worst = std::max(worst, std::abs(s.value - 1.0));
  return worst;
}

// A stretch of the domain where the oracle and the state are both trusted.
Interval working_range(const DimensionlessProblem& p, const BoundStateSolution& sol) {
  if (p.kind() == PotentialKind::InfiniteWell || p.kind() == PotentialKind::TabulatedCustom)
    return sol.extent;
  const double seed = *std::max_element(sol.breakpoints.begin(), sol.breakpoints.end());
  return p.kind() == PotentialKind::Linear ? Interval{p.domain().lo, seed} : Interval{0.0, seed};
}

std::vector<Check> verify_checks(const Context& c) {
  const DimensionlessProblem& p = c.problem;
  const double eps = p.epsilon();
  std::vector<Check> checks;
  auto add = [&](std::string name, double value, double threshold, bool below = true,
                 std::string note = {}) {
    const bool pass = below ? value <= threshold : value >= threshold;
    checks.push_back({std::move(name), pass, value, threshold, std::move(note)});
  };
  const PotentialKind kind = p.kind();

  // a representative energy away from the reference levels
  double energy = kind == PotentialKind::TabulatedCustom ? 1.0 : 1.37 * level(c, 1);
  if (kind == PotentialKind::TabulatedCustom) {
    const Interval& d = p.domain();
    double vmin = kInf;
    for (int i = 0; i <= 200; ++i) vmin = std::min(vmin, p.potential_value(d.lo + d.width() * i / 200));
    energy = vmin + 1.0;
  }

  if (eps > 0.0) {
    // the domain, or the stretch out to where V~ - E~ = 4
    const Interval d = p.domain();
    double from = d.lo, to = d.hi;
    if (kind == PotentialKind::Linear) to = energy + 4.0;
    if (kind == PotentialKind::Harmonic) from = -(to = std::sqrt(energy + 4.0));
    add("wronskian_constancy", wronskian_drift(p, energy, from, to, c.oracle), 1e-8);

    const auto sol =
        solve_bound_states(p, energy, default_conditions(p), {}, c.oracle);
    add("degeneracy", sol.degeneracy, classify(default_conditions(p)).predicted_dof, false,
        "at least the predicted count");
    const Interval w = working_range(p, sol);
    std::vector<double> grid;
    for (int i = 0; i < 200; ++i) grid.push_back(w.lo + w.width() * (i + 0.5) / 200);
    double res = 0.0, wall = 0.0, agree = 0.0;
    for (const auto& s : sol.states) {
      res = std::max(res, scaled_residual([&](double x) { return s.evaluate(x); }, p, energy, grid));
      double peak = 0.0;
      for (double x : grid) peak = std::max(peak, std::abs(s.evaluate(x)[0]));
      for (const auto& bc : default_conditions(p))
        if (bc.kind == ConditionKind::PointZero)
          wall = std::max(wall, std::abs(s.evaluate(bc.x)[0]) / peak);
      // the state's data at the inner end, carried out by the oracle over a
      // stretch short enough that the fast modes stay below ~e^6
      const double hi = std::min(w.hi, w.lo + 6.0 * std::sqrt(eps));
      const Jet j0 = s.evaluate(w.lo);
      const Trajectory t =
          integrate(p, energy, StateVector{j0[0], j0[1], j0[2], j0[3]}, w.lo, hi, c.oracle);
      for (int i = 0; i <= 100; ++i) {
        const double x = w.lo + (hi - w.lo) * i / 100.0;
        agree = std::max(agree, std::abs(t.at(x)[0] - s.evaluate(x)[0]) / peak);
      }
    }
    add("state_residual", res, 1e-6);
    add("wall_values", wall, 1e-8);
    add("oracle_agreement", agree, 1e-6);
  }

  OracleOptions o = c.oracle;
  if (!(eps > 0.0)) o.order = EquationOrder::Second;
  const int expect = eps > 0.0 ? 2 : 1;
  if (kind == PotentialKind::Linear || kind == PotentialKind::Harmonic) {
    add("decaying_subspace_dimension_plus",
        decaying_subspace_dimension(p, energy, Side::PlusInfinity, o), expect, false,
        fmt::format("expected {}", expect));
    checks.back().pass = checks.back().value == expect;
  }
  if (kind == PotentialKind::Harmonic) {
    add("decaying_subspace_dimension_minus",
        decaying_subspace_dimension(p, energy, Side::MinusInfinity, o), expect, false,
        fmt::format("expected {}", expect));
    checks.back().pass = checks.back().value == expect;
  }
  if (!(eps > 0.0) && kind == PotentialKind::Harmonic) {
    // standard levels are zeros of the two-sided mismatch
    double worst = 0.0;
    for (double e : {1.0, 3.0, 5.0})
      worst = std::max(worst, std::abs(two_sided_mismatch(p, e, o)));
    add("classical_levels_mismatch", worst, 1e-6);
  }

  // momentum picture of the ramp, with this setup's mass and beta
  const PhysicalSetup ramp = c.setup.kind() == PotentialKind::Linear
                                 ? c.setup
                                 : PhysicalSetup(c.setup.mass(), c.setup.beta(), LinearRamp{1e-8});
  Context rc{ramp, nondimensionalize(ramp), c.oracle, c.threads, c.out_dir, {}};
  const json m = momentum_report(rc, level(rc, 1));
  add("momentum_residual", m["momentum_residual"].get<double>(), 1e-10);
  add("momentum_dimension", m["momentum_dimension"].get<int>(), 1, false, "expected 1");
  checks.back().pass = m["momentum_dimension"].get<int>() == 1;
  const int pd = m["position_dimension"].get<int>();
  add("position_dimension", pd, eps > 0.0 ? 4 : 2, false);
  checks.back().pass = pd == (rc.problem.epsilon() > 0.0 ? 4 : 2);
  return checks;
}

int cmd_verify(Context& c, std::ostream& out) {
  const auto checks = verify_checks(c);
  json arr = json::array();
  bool all = true;
  for (const auto& ch : checks) {
    json j{{"name", ch.name}, {"pass", ch.pass}, {"value", ch.value}, {"threshold", ch.threshold}};
    if (!ch.note.empty()) j["note"] = ch.note;
    arr.push_back(std::move(j));
    all = all && ch.pass;
    out << fmt::format("{} {} = {:.3e}\n", ch.pass ? "PASS" : "FAIL", ch.name, ch.value);
  }
  c.write("verify.json", json{{"pass", all}, {"checks", arr}}.dump(2) + "\n");
  return all ? kOk : kVerifyFailed;
}

void write_manifest(Context& c, const std::string& command, const std::vector<std::string>& args,
                    double wall) {
  std::string cfg = config_text(c.setup);
  if (const auto* t = std::get_if<TabulatedPotential>(&c.setup.potential())) {
    std::string csv = "x,V\n";
    for (std::size_t i = 0; i < t->x.size(); ++i)
      csv += fmt::format("{:.17g},{:.17g}\n", t->x[i], t->v[i]);
    c.write("potential.csv", csv);
  }
  c.write("config.txt", cfg);
  const json manifest{{"command", command},
                      {"arguments", args},
                      {"config_file", "config.txt"},
                      {"config_digest", sha256_hex(cfg)},
                      {"tool_version", kVersion},
                      {"outputs", c.outputs},
                      {"wall_time", wall}};
  write_atomic(c.out_dir / "manifest.json", manifest.dump(2) + "\n");
}

void report_error(std::ostream& err, int code, std::string_view kind, std::string_view message) {
  err << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << "\n";
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorKind::Numerical, "SHA-256 failed");
  std::string out;
  for (unsigned i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

void write_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorKind::InvalidSetup, "cannot write " + tmp.string());
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw Error(ErrorKind::InvalidSetup, "short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string config_text(const PhysicalSetup& setup) {
  std::string s = fmt::format("mass = {:.17g}\nbeta = {:.17g}\n", setup.mass(), setup.beta());
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, InfiniteWell>)
          s += fmt::format("potential = well\na = {:.17g}\n", p.half_width);
        else if constexpr (std::is_same_v<T, LinearRamp>)
          s += fmt::format("potential = linear\nL = {:.17g}\n", p.slope);
        else if constexpr (std::is_same_v<T, HarmonicTrap>)
          s += fmt::format("potential = harmonic\nomega = {:.17g}\n", p.omega);
        else
          s += "potential = custom\ncustom_file = potential.csv\n";
      },
      setup.potential());
  return s;
}

PhysicalSetup default_setup(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::InfiniteWell: return reference_well_setup();
    case PotentialKind::Linear: return PhysicalSetup(kElectronMass, 1e47, LinearRamp{1e-8});
    case PotentialKind::Harmonic: return PhysicalSetup(kElectronMass, 1e47, HarmonicTrap{2e16});
    case PotentialKind::TabulatedCustom: break;
  }
  throw UsageError("tabulated potentials come from a config file");
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bound states of a particle with a minimal length"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "key = value setup file");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--threads", g.threads, "worker threads (0 = all cores)");
  app.add_option("--tol", g.tol, "oracle relative tolerance");
  app.add_option("--potential", g.potential, "well | linear | harmonic");
  app.set_version_flag("--version", std::string(kVersion));

  std::optional<int> k;
  std::optional<double> e_si, e_min;
  int grid_n = 401, n = 200, k_max = 5;
  double e_max = 2e-17, threshold = 0.1;

  auto* wf = app.add_subcommand("wavefunction", "bound states at one energy");
  wf->add_option("--k", k, "reference level index");
  wf->add_option("--E", e_si, "energy in J");
  wf->add_option("--grid-n", grid_n, "samples per state");
  auto* scan = app.add_subcommand("dof-scan", "degrees of freedom over an energy grid");
  scan->add_option("--E-min", e_min, "lowest energy in J (default E-max/n)");
  scan->add_option("--E-max", e_max, "highest energy in J");
  scan->add_option("--n", n, "grid size");
  auto* spec = app.add_subcommand("spectrum", "special and reference energies");
  spec->add_option("--k-max", k_max, "number of well levels");
  spec->add_option("--E-max", e_max, "upper energy for reference levels, J");
  auto* obs = app.add_subcommand("observability", "minimal-length ratio and critical beta");
  obs->add_option("--threshold", threshold, "ratio marking an obvious effect");
  auto* mom = app.add_subcommand("momentum-check", "momentum picture of the ramp");
  mom->add_option("--E", e_si, "energy in J");
  auto* ver = app.add_subcommand("verify", "self-checks; exit 1 on failure");

  const auto t0 = std::chrono::steady_clock::now();
  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
      app.parse(rev);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return kOk;
    } catch (const CLI::CallForVersion&) {
      out << kVersion << "\n";
      return kOk;
    } catch (const CLI::ParseError& e) {
      report_error(err, kUsage, "usage", e.what());
      return kUsage;
    }
    if (g.threads > 4096) throw UsageError("--threads is out of range");
    if (wf->parsed() && grid_n <= 0) throw UsageError("--grid-n must be positive");
    if (spec->parsed() && k_max < 1) throw UsageError("--k-max must be at least 1");

    Context c = make_context(g);
    std::string command;
    int code = kOk;
    if (wf->parsed()) {
      command = "wavefunction";
      code = cmd_wavefunction(c, k, e_si, grid_n, out);
    } else if (scan->parsed()) {
      command = "dof-scan";
      code = cmd_dof_scan(c, e_min, e_max, n, out);
    } else if (spec->parsed()) {
      command = "spectrum";
      code = cmd_spectrum(c, k_max, e_max, out);
    } else if (obs->parsed()) {
      command = "observability";
      code = cmd_observability(c, threshold, out);
    } else if (mom->parsed()) {
      command = "momentum-check";
      code = cmd_momentum_check(c, e_si, out);
    } else if (ver->parsed()) {
      command = "verify";
      code = cmd_verify(c, out);
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(c, command, args, wall);
    if (code == kVerifyFailed) report_error(err, code, "verification", "one or more checks failed");
    return code;
  } catch (const UsageError& e) {
    report_error(err, kUsage, "usage", e.what());
    return kUsage;
  } catch (const Error& e) {
    const int code = exit_code_for(e.kind());
    report_error(err, code, to_string(e.kind()), e.what());
    return code;
  } catch (const fs::filesystem_error& e) {
    report_error(err, kUsage, "filesystem", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    report_error(err, kNumerical, "numerical", e.what());
    return kNumerical;
  }
}

}  // namespace gupbic::cli
