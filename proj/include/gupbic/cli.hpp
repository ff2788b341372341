#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "gupbic/core.hpp"

namespace gupbic::cli {

inline constexpr std::string_view kVersion = "0.1.0";

enum ExitCode { kOk = 0, kVerifyFailed = 1, kUsage = 2, kNumerical = 3 };

/// Runs one command. `args` excludes the program name. Errors are reported
/// as a JSON object on `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

/// Writes through a sibling temp file and renames it into place.
void write_atomic(const std::filesystem::path& path, std::string_view content);

/// Config text that parse_config reads back into the same setup.
std::string config_text(const PhysicalSetup& setup);

/// Built-in setups selected by --potential: the reference well, a ramp with
/// L = 1e-8 J/m and a trap with w = 2e16 rad/s, all electrons with beta = 1e47.
PhysicalSetup default_setup(PotentialKind kind);

}  // namespace gupbic::cli
