#include "ncfm/cli.hpp"
#include "ncfm/common.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <string>

int main(int argc, char** argv) {
  CLI::App app{"Characteristic-function distribution matching for dataset distillation"};
  app.set_version_flag("--version", ncfm::kVersion);
  app.require_subcommand(1);

  std::string distill_config;
  CLI::App* distill = app.add_subcommand("distill", "Distill a synthetic set from a run config");
  distill->add_option("config", distill_config, "JSON run config")->required();

  std::string eval_checkpoint;
  std::string eval_config;
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint against random-subset and full-data training");
  eval->add_option("checkpoint", eval_checkpoint, "checkpoint.ncfm written by distill")->required();
  eval->add_option("config", eval_config, "JSON run config")->required();

  ncfm::cli::VerifyFlags flags;
  bool all = false;
  std::string verify_out = flags.output_dir.string();
  CLI::App* verify = app.add_subcommand("verify", "Run verification suites");
  verify->add_flag("--axioms", flags.axioms, "metric axioms");
  verify->add_flag("--decomposition", flags.decomposition, "amplitude/phase decomposition identity");
  verify->add_flag("--gradients", flags.gradients, "analytic gradients vs finite differences");
  verify->add_flag("--levy", flags.levy, "empirical CF convergence rate");
  verify->add_flag("--correspondence", flags.correspondence, "CFD vs gaussian-kernel MMD");
  verify->add_flag("--all", all, "every suite");
  verify->add_option("--seed", flags.seed, "suite seed")->capture_default_str();
  verify->add_option("--epsilon-sqrt", flags.epsilon_sqrt, "sqrt guard for the gradient suite")->capture_default_str();
  verify->add_flag("--coinciding", flags.coinciding, "identical real and synthetic inputs in the gradient suite");
  verify->add_option("--out", verify_out, "output directory")->capture_default_str();

  std::string bench_config;
  CLI::App* bench = app.add_subcommand("bench", "Time CFD and MMD against sample count");
  bench->add_option("config", bench_config, "JSON run config")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ncfm::cli::kConfigFailure;
  }

  if (distill->parsed()) return ncfm::cli::cmd_distill(distill_config, std::cout, std::cerr);
  if (eval->parsed()) return ncfm::cli::cmd_eval(eval_checkpoint, eval_config, std::cout, std::cerr);
  if (bench->parsed()) return ncfm::cli::cmd_bench(bench_config, std::cout, std::cerr);

  if (all) flags.axioms = flags.decomposition = flags.gradients = flags.levy = flags.correspondence = true;
  flags.output_dir = verify_out;
  for (int i = 0; i < argc; ++i) flags.echo += (i ? " " : "") + std::string(argv[i]);
  return ncfm::cli::cmd_verify(flags, std::cout, std::cerr);
}
