#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gen.hpp"
#include "gupbic/cli.hpp"

using namespace gupbic;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream o, e;
  const int code = cli::run(args, o, e);
  return {code, o.str(), e.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("gupbic_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& s) const { return (path / s).string(); }
};

}  // namespace

TEST_CASE("sha256 of known strings") {
  CHECK(cli::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(cli::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("property: config text round trip") {
  Gen g(51);
  for (int i = 0; i < 100; ++i) {
    PotentialSpec spec;
    switch (g.integer(0, 2)) {
      case 0: spec = InfiniteWell{g.log_uniform(1e-12, 1e-6)}; break;
      case 1: spec = LinearRamp{g.log_uniform(1e-30, 1e-5)}; break;
      default: spec = HarmonicTrap{g.log_uniform(1e10, 1e32)}; break;
    }
    const PhysicalSetup s(g.log_uniform(1e-31, 1e-25), g.log_uniform(1e20, 1e50), spec);
    const std::string text = cli::config_text(s);
    const PhysicalSetup back = parse_config(text);
    CHECK(back.mass() == s.mass());
    CHECK(back.beta() == s.beta());
    CHECK(back.kind() == s.kind());
    CHECK(cli::config_text(back) == text);
  }
}

TEST_CASE("usage errors exit 2 and name the flag") {
  TempDir d("usage");
  const Run r = run({"--out", d.path.string(), "wavefunction", "--k", "1", "--grid-n", "0"});
  CHECK(r.code == 2);
  const json e = json::parse(r.err);
  CHECK(e["exit_code"] == 2);
  CHECK(e["message"].get<std::string>().find("--grid-n") != std::string::npos);

  CHECK(run({"--out", d.path.string()}).code == 2);  // no command
  CHECK(run({"--out", d.path.string(), "frobnicate"}).code == 2);
  CHECK(run({"--out", d.path.string(), "spectrum", "--k-max", "0"}).code == 2);
  CHECK(run({"--out", d.path.string(), "dof-scan", "--n", "1"}).code == 2);
  CHECK(run({"--out", d.path.string(), "--potential", "bowl", "spectrum"}).code == 2);
}

TEST_CASE("config errors exit 2") {
  TempDir d("config");
  {
    std::ofstream f(d / "bad.txt");
    f << "mass = 9.1e-31\ncolour = red\n";
    std::ofstream c(d / "pot.csv");
    c << "x,V\n0,0\n1e-10,1e-20\n5e-11,1e-20\n2e-10,3e-20\n";
    std::ofstream g(d / "custom.txt");
    g << "mass = 9.1e-31\nbeta = 0\npotential = custom\ncustom_file = " << (d / "pot.csv") << "\n";
  }
  const Run a = run({"--config", d / "bad.txt", "--out", d / "o1", "spectrum"});
  CHECK(a.code == 2);
  CHECK(json::parse(a.err).contains("message"));
  const Run b = run({"--config", d / "custom.txt", "--out", d / "o2", "verify"});
  CHECK(b.code == 2);
  CHECK(run({"--config", d / "missing.txt", "--out", d / "o3", "spectrum"}).code == 2);
}

TEST_CASE("CSV output is byte identical across runs") {
  TempDir d("repeat");
  for (const char* dir : {"a", "b"}) {
    const Run r = run({"--out", d / dir, "--potential", "harmonic", "dof-scan", "--n", "6"});
    REQUIRE(r.code == 0);
    const Run w = run({"--out", d / dir, "wavefunction", "--k", "2", "--grid-n", "51"});
    REQUIRE(w.code == 0);
  }
  const std::string s1 = slurp(d.path / "a" / "scan.csv"), s2 = slurp(d.path / "b" / "scan.csv");
  CHECK(!s1.empty());
  CHECK(s1 == s2);
  CHECK(s1.find('\r') == std::string::npos);
  CHECK(s1.rfind("E_SI,E_dimensionless,dof,label\n", 0) == 0);
  const std::string w1 = slurp(d.path / "a" / "wavefunctions.csv");
  CHECK(!w1.empty());
  CHECK(w1 == slurp(d.path / "b" / "wavefunctions.csv"));
}

TEST_CASE("manifest digest matches the written config") {
  TempDir d("manifest");
  REQUIRE(run({"--out", d.path.string(), "--potential", "linear", "spectrum"}).code == 0);
  const json m = json::parse(slurp(d.path / "manifest.json"));
  CHECK(m["command"] == "spectrum");
  CHECK(m["tool_version"] == std::string(cli::kVersion));
  CHECK(m["wall_time"].get<double>() >= 0.0);
  const std::string cfg = slurp(d.path / m["config_file"].get<std::string>());
  CHECK(cli::sha256_hex(cfg) == m["config_digest"].get<std::string>());
  for (const auto& f : m["outputs"]) CHECK(fs::exists(d.path / f.get<std::string>()));
  // the written config reproduces the run
  const Run again = run({"--config", (d.path / "config.txt").string(), "--out", d / "again", "spectrum"});
  CHECK(again.code == 0);
  CHECK(slurp(d.path / "spectrum.json") == slurp(d.path / "again" / "spectrum.json"));
}

TEST_CASE("write_atomic replaces content") {
  TempDir d("atomic");
  cli::write_atomic(d.path / "f.txt", "one");
  cli::write_atomic(d.path / "f.txt", "two");
  CHECK(slurp(d.path / "f.txt") == "two");
  int files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(d.path)) ++files;
  CHECK(files == 1);
}

TEST_CASE("verify passes on the default well") {
  TempDir d("verify");
  const Run r = run({"--out", d.path.string(), "verify"});
  CHECK(r.code == 0);
  const json v = json::parse(slurp(d.path / "verify.json"));
  CHECK(v["pass"] == true);
  for (const auto& c : v["checks"]) {
    CAPTURE(c.dump());
    CHECK(c["pass"] == true);
  }
}

TEST_CASE("verify in the classical harmonic limit") {
  TempDir d("classical");
  {
    std::ofstream f(d / "h.txt");
    f << "mass = 9.10956e-31\nbeta = 0\npotential = harmonic\nomega = 2e16\n";
  }
  const Run r = run({"--config", d / "h.txt", "--out", d / "o", "verify"});
  CHECK(r.code == 0);
  const json v = json::parse(slurp(d.path / "o" / "verify.json"));
  int seen = 0;
  for (const auto& c : v["checks"]) {
    const std::string name = c["name"];
    if (name.rfind("decaying_subspace_dimension", 0) == 0) {
      ++seen;
      CHECK(c["value"].get<double>() == 1.0);
    }
  }
  CHECK(seen == 2);
}

TEST_CASE("observability and momentum outputs") {
  TempDir d("obs");
  REQUIRE(run({"--out", d.path.string(), "observability"}).code == 0);
  const json o = json::parse(slurp(d.path / "observability.json"));
  CHECK(o.dump().find("Obvious") != std::string::npos);
  REQUIRE(run({"--out", d.path.string(), "--potential", "linear", "momentum-check"}).code == 0);
  CHECK(fs::exists(d.path / "momentum.json"));
}
