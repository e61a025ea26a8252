#ifndef COVBAL_TOOLS_CLI_H_
#define COVBAL_TOOLS_CLI_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "covbal/balance.h"
#include "covbal/matchbal.h"

namespace covbal::cli {

// Input CSV: comma separated, header row naming at least `id`, `group` and
// the requested covariate columns; group is exactly "treatment" or
// "control". Fields are trimmed; quoting is not supported.
Dataset IngestCsv(const std::string& path,
                  const std::vector<std::string>& covariates);
Dataset ParseDatasetCsv(std::string_view text,
                        const std::vector<std::string>& covariates);
void WriteDatasetCsv(const Dataset& dataset, std::ostream& out);

// Decimal string to fixed point with three fractional digits, rounding half
// up: "1.2345" -> 1235.
inline constexpr int64_t kDistanceScale = 1000;
int64_t ParseFixedPoint(std::string_view text);

// Header row: a corner cell then control ids; each further row: a treatment
// id then one distance per control.
matchbal::DistanceMatrix ReadDistanceCsv(const std::string& path);
matchbal::DistanceMatrix ParseDistanceCsv(std::string_view text);

enum class Command { kSolve, kOracle, kGen, kMatch, kVerify };
enum class SolveMethod { kMcnf, kMaxFlow, kOracle };
enum class GenKind { kRandom, k3dm };

struct RunConfig {
  Command command = Command::kSolve;
  std::string input;
  std::vector<std::string> covariates;
  std::optional<int64_t> q;
  int64_t kappa = 1;
  SolveMethod method = SolveMethod::kMcnf;
  uint64_t seed = 0;
  std::string output;     // empty: standard output
  std::string distances;  // match
  std::string selection;  // verify, match: a solve report

  // gen
  GenKind kind = GenKind::kRandom;
  int covariate_count = 2;
  int64_t n = 4;
  int64_t n_control = 8;
  std::vector<int> levels;  // defaults to 3 per covariate
  int x_size = 3;
  int triples = 6;
  bool plant = true;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitCertificateFailure = 2;

struct RunResult {
  int exit_code = kExitOk;
  std::string payload;  // JSON report, or CSV for gen
};

// Executes one subcommand. Errors become a JSON {"error": {...}} payload with
// exit code 1, or 2 for failed internal certificates.
RunResult Run(const RunConfig& config);

// Parses argv (CLI11) and runs; writes the payload to --output or `out`,
// error messages to `err`.
int Main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace covbal::cli

#endif  // COVBAL_TOOLS_CLI_H_
