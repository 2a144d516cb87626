#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include <nlohmann/json.hpp>

#include "pmc/config.hpp"

namespace pmc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitRejected = 2;
inline constexpr int kExitNotConverged = 3;

inline constexpr std::uint64_t kDefaultSeed = 0x5eed;

struct Options {
  std::filesystem::path config;
  std::optional<RunMode> mode;
  int threads = 0;
  std::optional<std::filesystem::path> trace;
  std::optional<std::filesystem::path> out;
  std::uint64_t seed = kDefaultSeed;
};

struct Outcome {
  int exit_code = kExitOk;
  nlohmann::json report;
  std::filesystem::path directory;
};

/// Runs check, solve or oracle-compare for one configuration and writes the
/// report (and field files when a solve happened) into the output directory.
Outcome run(const Options& options, std::ostream& log);

/// Parses SOLVER_SEED; nothing when unset. Throws ConfigInvalid when malformed.
std::optional<std::uint64_t> seed_from_environment();

struct OracleOptions {
  int dimension = 3;
  double inner_radius = 1.0;
  double value = 0.3;
  double outer_radius = std::numeric_limits<double>::infinity();
  double r_max = 12.0;
  int samples = 256;
  std::filesystem::path out = "oracle.csv";
};

/// Writes (r, u(r), u'(r)) for the radial maximal graph with u(r0) = value.
void oracle_table(const OracleOptions& options);

}  // namespace pmc::cli
