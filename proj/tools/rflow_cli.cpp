#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "rflow/csv.hpp"
#include "rflow/pipeline.hpp"

using namespace rflow;

namespace {

int report_error(const std::exception& e) {
  std::cerr << "rflow: " << error_kind(e) << " error: " << e.what() << '\n';
  return exit_code_for(e);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ricci-flow deformation laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  auto* run = app.add_subcommand("run", "run an experiment from a config file");
  run->add_option("config", config_path, "experiment config (INI)")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--out", out_dir, "experiment directory (default: <config stem>.run)");

  std::string dir;
  auto* replay = app.add_subcommand("replay-check", "re-run a stored experiment and compare its outputs");
  replay->add_option("dir", dir, "experiment directory")->required()->check(CLI::ExistingDirectory);

  std::string model = "round-sphere", normalization = "plain", out_file;
  std::vector<double> coefficients{1.0};
  double beta = 0.0, step = 1e-3;
  auto* reduce = app.add_subcommand("reduce", "integrate a homogeneous model and print its trajectory CSV");
  reduce->add_option("--model", model, "flat-torus, round-sphere or berger-sphere")->capture_default_str();
  reduce->add_option("--coefficients", coefficients, "initial metric coefficients")->capture_default_str();
  reduce->add_option("--beta", beta, "final flow time")->required();
  reduce->add_option("--step", step, "RK4 step")->capture_default_str();
  reduce->add_option("--normalization", normalization, "plain or volume-normalized")->capture_default_str();
  reduce->add_option("-o,--out", out_file, "write the CSV here instead of stdout");

  std::vector<int> source;
  std::vector<double> etas;
  std::string rank = "scalar";
  double eta0 = 0.0;
  auto* kernel = app.add_subcommand("kernel", "compute a conjugate heat kernel from a stored experiment");
  kernel->add_option("dir", dir, "experiment directory")->required()->check(CLI::ExistingDirectory);
  kernel->add_option("--y", source, "source node i j k")->required()->expected(3);
  kernel->add_option("--eta", etas, "evaluation times")->required();
  kernel->add_option("--rank", rank, "scalar or tensor")->capture_default_str();
  kernel->add_option("--eta0", eta0, "mollification scale (default 4 max h^2)");

  auto* report = app.add_subcommand("report", "merged plot-ready CSV of a stored experiment");
  report->add_option("dir", dir, "experiment directory")->required()->check(CLI::ExistingDirectory);
  report->add_option("-o,--out", out_file, "write the CSV here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      if (out_dir.empty()) out_dir = std::filesystem::path(config_path).stem().string() + ".run";
      const auto r = run_experiment_file(config_path, out_dir);
      if (r.error) {
        const auto& e = *r.error;
        std::cerr << "rflow: stage " << e.stage << " failed";
        if (e.beta) std::cerr << " at beta=" << format_number(*e.beta);
        std::cerr << " (" << e.kind << "): " << e.message << '\n';
      }
      std::cout << r.dir.string() << '\n';
      return r.exit_code;
    }
    if (*replay) {
      const auto r = replay_check(dir);
      std::cout << to_string(r.status);
      if (!r.pass()) {
        std::cout << ' ' << r.file;
        if (r.row > 0) std::cout << " row " << r.row;
        std::cout << ": " << r.detail;
      }
      std::cout << '\n';
      return r.pass() ? kExitOk : kExitValidation;
    }
    if (*reduce) {
      HomogeneousState s;
      s.model = parse_model_kind(model);
      s.coefficients = coefficients;
      ModelRunOptions opt;
      opt.step = step;
      if (normalization == "volume-normalized") opt.normalization = FlowNormalization::VolumeNormalized;
      else if (normalization != "plain") throw ValidationError("unknown normalization '" + normalization + "'");
      validate(s);
      std::vector<ModelSample> samples;
      int code = kExitOk;
      try {
        integrate_model_into(samples, s, beta, opt);
      } catch (const Error& e) {
        code = report_error(e);
      }
      if (out_file.empty()) {
        write_model_csv(std::cout, samples);
      } else {
        std::ofstream os(out_file);
        write_model_csv(os, samples);
      }
      return code;
    }
    if (*kernel) {
      const auto k = kernel_command(dir, {source[0], source[1], source[2]}, etas, parse_kernel_rank(rank), eta0);
      std::cout << "eta,beta,mass\n";
      for (const auto& sl : k.slices)
        std::cout << format_number(sl.eta) << ',' << format_number(sl.beta) << ','
                  << (k.rank == KernelRank::Scalar ? format_number(k.mass(sl.eta)) : "") << '\n';
      return kExitOk;
    }
    if (*report) {
      if (out_file.empty()) {
        write_report(dir, std::cout);
      } else {
        std::ofstream os(out_file);
        write_report(dir, os);
      }
      return kExitOk;
    }
  } catch (const std::exception& e) {
    return report_error(e);
  }
  return kExitOk;
}
