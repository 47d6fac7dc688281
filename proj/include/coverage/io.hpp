#pragma once

// Data ingestion, configuration, and serialization for the command-line tool.
//
// Counts files come in two formats, detected from the first data line:
//   raw      one nonnegative per-species count per line
//   profile  "j<TAB>F_j" lines, optionally preceded by an "n=<int>" header
// Blank lines and lines starting with '#' are ignored in both.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "coverage/estimator.hpp"
#include "coverage/population.hpp"
#include "coverage/simulation.hpp"

namespace coverage {

inline constexpr const char* kVersion = "0.1.0";

/// A profile file carries an explicit n header -> declared mode, otherwise
/// strict; `mode_override` replaces that choice. Errors name the line.
FrequencyProfile parse_counts(std::istream& in, const std::string& source,
                              std::optional<ProfileMode> mode_override = std::nullopt);
FrequencyProfile parse_counts_file(const std::filesystem::path& path,
                                   std::optional<ProfileMode> mode_override = std::nullopt);

/// Tomato flower EST frequency profile (n = 2568), in profile format.
const std::string& tomato_profile_text();
FrequencyProfile tomato_profile();
inline constexpr double kTomatoPublishedLow = 0.5391;
inline constexpr double kTomatoPublishedHigh = 0.5777;

/// Family syntax "name:key=value,...":
///   pareto:b=3[,a=1]   exponential:a=100 | exponential:scale=1,power=0.5
///   uniform:k=100      two-step:w1=0.9,a1=50,a2=200
///   two-step-case:case=1|2|3[,rate=0.1]   explicit:0.5,0.3,0.2
FamilySpec parse_family(const std::string& text);

/// Comma-separated sample sizes; accepts "1e5" style values when integral.
std::vector<std::int64_t> parse_n_list(const std::string& text);
std::vector<double> parse_double_list(const std::string& text);

/// "%.17g"
std::string format_double(double x);

enum class Command { estimate, simulate, conditions, reproduce_tomato, model };
enum class OutputFormat { json, csv };

struct RunConfig {
  Command command = Command::estimate;
  std::string family;
  std::string input;
  std::int64_t n = 0;
  std::string n_grid;
  std::string epsilons;
  std::int64_t replicates = 1000;
  std::uint64_t seed = 1;
  double level = 0.95;
  std::string variance_mode = "esty";
  std::string format = "json";
  std::string out;
  std::string qq_out;
  std::optional<ProfileMode> profile_mode;
  bool coupled = false;
  std::optional<double> truncation_tolerance;
  std::string thresholds;
  unsigned threads = 0;
};

/// Runs one subcommand. Artifacts go to config.out (or `out` when empty);
/// failures are written to `err` as a JSON object. Returns 0 on success,
/// 1 for configuration errors, 2 for computation errors.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace coverage
