#pragma once

#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rflow/config.hpp"

namespace rflow {

/// Process exit codes of the command-line front end.
enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitBlowUp = 3, kExitNumerical = 4 };

/// Maps a library error onto an exit code (unknown errors count as numerical).
int exit_code_for(const std::exception& e);
/// Short kind name recorded in manifests: validation, blow-up, numerical.
std::string error_kind(const std::exception& e);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

struct StageError {
  std::string stage;
  std::optional<double> beta;
  std::string kind;
  std::string message;
  int exit_code = kExitNumerical;
};

struct RunResult {
  std::filesystem::path dir;
  bool complete = false;
  std::optional<StageError> error;
  int exit_code = kExitOk;
};

/// Runs the experiment described by `config_text` into `dir` (created, must
/// be empty or absent). A ValidationError from the config itself propagates;
/// errors of later stages are caught, recorded in manifest.json with stage and
/// beta, and the outputs written so far are kept and marked partial.
RunResult run_experiment(const std::string& config_text, const std::filesystem::path& dir);
RunResult run_experiment_file(const std::filesystem::path& config, const std::filesystem::path& dir);

struct ReplayResult {
  enum class Status { Pass, Mismatch, ConfigMismatch, Incomplete };
  Status status = Status::Pass;
  std::string file; // first divergent file
  long row = 0;     // 1-based line in that file (0 when not row-based)
  std::string detail;

  bool pass() const { return status == Status::Pass; }
};

std::string to_string(ReplayResult::Status s);

/// Re-runs the stored config into a scratch directory and compares every CSV
/// the run produced byte for byte, then the checksums of the remaining files.
ReplayResult replay_check(const std::filesystem::path& dir);

/// Plot-ready merge of the per-beta CSVs: one row per stored snapshot with the
/// trajectory, coupling and backreaction columns side by side.
void write_report(const std::filesystem::path& dir, std::ostream& os);

/// Trajectory rebuilt from the stored snapshots of a grid experiment.
FlowTrajectory load_trajectory(const std::filesystem::path& dir);

/// Computes a kernel from a stored experiment, writes its slices under
/// kernels/ and lists them (with checksums) in the manifest.
KernelField kernel_command(const std::filesystem::path& dir, const Node& y, const std::vector<double>& etas,
                           KernelRank rank, double eta0 = 0.0);

} // namespace rflow
