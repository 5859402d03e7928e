#include "ncfm/cli.hpp"

#include "ncfm/config.hpp"
#include "ncfm/distill.hpp"
#include "ncfm/eval.hpp"

#include <fstream>
#include <functional>
#include <ostream>
#include <vector>

namespace ncfm::cli {

namespace fs = std::filesystem;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const NumericError*>(&e)) return kNumericFailure;
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
      dynamic_cast<const fs::filesystem_error*>(&e)) {
    return kIoFailure;
  }
  return kConfigFailure;
}

namespace {

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

fs::path prepare_output(const fs::path& configured, const std::string& echo, const std::string& echo_name,
                        const std::string& command, std::uint64_t seed) {
  const fs::path dir = config::resolve_output_dir(configured);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  write_file(dir / echo_name, echo);
  write_file(dir / ("run_info_" + command + ".txt"),
             "version=" + std::string(kVersion) + "\ncommand=" + command + "\nseed=" + std::to_string(seed) + "\n");
  return dir;
}

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

}  // namespace

int cmd_distill(const fs::path& config_path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const std::string text = config::read_text_file(config_path);
    const config::RunConfig cfg = config::parse_run_config(text);
    const data::DataMatrix real = config::training_data(cfg);
    const fs::path dir = prepare_output(cfg.output_dir, text, "config_echo.json", "distill", cfg.distill.seed);
    const distill::RunResult result = distill::run(real, cfg.distill, cfg.features);
    distill::save_checkpoint(dir / "checkpoint.ncfm", result.state, cfg.distill.seed, text);
    distill::write_train_log_csv(dir / "train_log.csv", result.log);
    const std::vector<double> per_iter = distill::per_iteration_cfd(result.log);
    out << "distill: " << cfg.distill.iterations << " iterations, final mean cfd "
        << (per_iter.empty() ? 0.0 : per_iter.back()) << ", checkpoint " << (dir / "checkpoint.ncfm").string()
        << '\n';
    return static_cast<int>(kSuccess);
  });
}

int cmd_eval(const fs::path& checkpoint_path, const fs::path& config_path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const distill::Checkpoint ckpt = distill::load_checkpoint(checkpoint_path);
    const std::string text = config::read_text_file(config_path);
    const config::RunConfig cfg = config::parse_run_config(text);
    const data::DataMatrix real = config::training_data(cfg);
    const data::DataMatrix test = config::test_data(cfg);
    const data::DataMatrix distilled = ckpt.synth.as_data();
    if (distilled.d() != real.d()) {
      throw ArgumentError("checkpoint has " + std::to_string(distilled.d()) + " columns, dataset has " +
                          std::to_string(real.d()));
    }
    const fs::path dir = prepare_output(cfg.output_dir, text, "config_echo.json", "eval", ckpt.seed);
    const std::vector<eval::EvalReport> reports = eval::compare_sources(
        real, test, distilled, ckpt.synth.ipc, cfg.eval.classifier, cfg.eval.seeds, cfg.eval.logistic);
    eval::write_eval_csv(dir / "eval.csv", reports);
    for (const eval::EvalReport& r : reports) {
      out << "eval: " << eval::to_string(r.train_source) << " mean " << r.mean << " std " << r.stddev << '\n';
    }
    return static_cast<int>(kSuccess);
  });
}

int cmd_verify(const VerifyFlags& flags, std::ostream& out, std::ostream& err) {
  if (!flags.any()) {
    out << "verify: no suites selected, nothing to do\n";
    return kSuccess;
  }
  return guarded(err, [&] {
    const fs::path dir = prepare_output(flags.output_dir, flags.echo + "\n", "config_echo.txt", "verify", flags.seed);
    std::vector<eval::SuiteResult> results;

    if (flags.axioms) {
      const eval::AxiomReport a = eval::metric_axiom_suite(eval::default_dataset_sampler(), 1000, flags.seed);
      eval::SuiteResult r;
      r.name = "axioms";
      r.passed = a.passed();
      r.worst = std::max(a.worst_symmetry, a.worst_triangle);
      r.detail = "nonneg " + std::to_string(a.nonneg_violations) + ", symmetry " +
                 std::to_string(a.symmetry_violations) + ", triangle " + std::to_string(a.triangle_violations) +
                 " violations over " + std::to_string(a.trials) + " trials";
      results.push_back(r);
    }
    if (flags.decomposition) results.push_back(eval::decomposition_suite(10000, flags.seed));
    if (flags.gradients) {
      eval::GradientOptions opt;
      opt.epsilon_sqrt = flags.epsilon_sqrt;
      opt.coinciding = flags.coinciding;
      results.push_back(eval::gradient_suite(100, flags.seed, opt));
    }
    if (flags.levy) {
      const eval::LevyResult l = eval::levy_convergence({100, 1000, 10000, 100000}, 20, flags.seed);
      eval::SuiteResult r;
      r.name = "levy";
      r.worst = l.slope;
      r.passed = std::abs(l.slope + 0.5) <= 0.15;
      r.detail = "log-log slope of max CF error vs N";
      results.push_back(r);
    }
    if (flags.correspondence) {
      const eval::CorrespondenceResult c = eval::cfd_mmd_correspondence(20, 10000, flags.seed);
      eval::SuiteResult r;
      r.name = "correspondence";
      r.worst = c.worst_z;
      r.passed = c.failures == 0;
      r.detail = std::to_string(c.failures) + " of " + std::to_string(c.pairs) + " pairs beyond 3 standard errors";
      results.push_back(r);
    }

    std::ofstream csv(dir / "verify_summary.csv");
    if (!csv) throw IoError("cannot write '" + (dir / "verify_summary.csv").string() + "'");
    csv.precision(10);
    csv << "suite,status,worst,detail\n";
    bool all_passed = true;
    for (const eval::SuiteResult& r : results) {
      all_passed = all_passed && r.passed;
      const char* status = r.passed ? "pass" : "fail";
      csv << r.name << ',' << status << ',' << r.worst << ",\"" << r.detail << "\"\n";
      out << "verify: " << r.name << ' ' << status << " (worst " << r.worst << "; " << r.detail << ")\n";
    }
    if (!csv) throw IoError("failed writing verify_summary.csv");
    return static_cast<int>(all_passed ? kSuccess : kNumericFailure);
  });
}

int cmd_bench(const fs::path& config_path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const std::string text = config::read_text_file(config_path);
    const config::RunConfig cfg = config::parse_run_config(text);
    const fs::path dir = prepare_output(cfg.output_dir, text, "config_echo.json", "bench", cfg.bench.options.seed);
    const eval::BenchReport cfd = eval::complexity_bench(eval::BenchMethod::Cfd, cfg.bench.cfd_sizes, cfg.bench.options);
    const eval::BenchReport mmd =
        eval::complexity_bench(eval::BenchMethod::MmdQuadratic, cfg.bench.mmd_sizes, cfg.bench.options);
    eval::write_bench_csv(dir / "bench_cfd.csv", cfd);
    eval::write_bench_csv(dir / "bench_mmd.csv", mmd);
    for (const eval::BenchReport* r : {&cfd, &mmd}) {
      for (const std::string& w : r->warnings) err << "warning: " << eval::to_string(r->method) << ": " << w << '\n';
      out << "bench: " << eval::to_string(r->method) << " slope " << r->slope << '\n';
    }
    return static_cast<int>(kSuccess);
  });
}

}  // namespace ncfm::cli
