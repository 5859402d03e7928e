#pragma once

// Subcommand implementations behind the ncfm executable. Each returns the
// process exit code and reports diagnostics on `err`.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

namespace ncfm::cli {

enum ExitCode : int { kSuccess = 0, kConfigFailure = 1, kNumericFailure = 2, kIoFailure = 3 };

// Exit code for an exception escaping a subcommand.
int exit_code_for(const std::exception& e);

// Writes checkpoint.ncfm, train_log.csv, config_echo.json and run_info_distill.txt.
int cmd_distill(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err);

// Writes eval.csv comparing distilled, random-subset and full-data training.
int cmd_eval(const std::filesystem::path& checkpoint_path, const std::filesystem::path& config_path,
             std::ostream& out, std::ostream& err);

struct VerifyFlags {
  bool axioms = false;
  bool decomposition = false;
  bool gradients = false;
  bool levy = false;
  bool correspondence = false;
  std::uint64_t seed = 0;
  double epsilon_sqrt = 1e-12;  // gradient suite only
  bool coinciding = false;      // gradient suite only
  std::filesystem::path output_dir = "ncfm_verify";
  std::string echo;  // command line, written as the config echo

  bool any() const { return axioms || decomposition || gradients || levy || correspondence; }
};

// Exit 0 iff every selected suite passes; writes verify_summary.csv.
int cmd_verify(const VerifyFlags& flags, std::ostream& out, std::ostream& err);

// Writes bench_cfd.csv and bench_mmd.csv.
int cmd_bench(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err);

}  // namespace ncfm::cli
