#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "npg/checks.hpp"
#include "npg/harness.hpp"
#include "npg/net.hpp"

namespace {

std::string resolve_output_dir(const std::string& configured, const std::string& flag) {
  // Precedence: environment override, then flag, then config file.
  if (const char* env = std::getenv("NPG_OUTPUT_DIR"); env && *env) return env;
  if (!flag.empty()) return flag;
  return configured;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"neural policy gradient methods on tabular MDPs"};
  app.require_subcommand(1);

  // run
  auto* run_cmd = app.add_subcommand("run", "run one experiment configuration over its seeds");
  std::string config_path, algo_flag, out_flag;
  std::vector<std::uint64_t> seed_flags;
  bool dump_batches = false;
  run_cmd->add_option("--config", config_path, "experiment config file")->required();
  run_cmd->add_option("--seed", seed_flags, "override the seed list");
  run_cmd->add_option("--algo", algo_flag, "override the algorithm: pg | npg | pgfree");
  run_cmd->add_option("--out", out_flag, "override the output directory");
  run_cmd->add_flag("--dump-batches", dump_batches, "dump sampled batches to CSV");

  // check
  auto* check_cmd = app.add_subcommand("check", "run the exact-identity oracle suite");
  std::uint64_t check_seed = 1;
  std::string check_out;
  check_cmd->add_option("--seed", check_seed, "suite seed");
  check_cmd->add_option("--out", check_out, "write the JSON report here instead of stdout");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "width-scaling study");
  std::string sweep_param = "m=64,256,1024,4096";
  std::string sweep_config_path, sweep_out;
  sweep_cmd->add_option("--param", sweep_param, "grid, e.g. m=64,256,1024");
  sweep_cmd->add_option("--config", sweep_config_path, "experiment config file");
  sweep_cmd->add_option("--out", sweep_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      npg::ExperimentConfig config = npg::load_config_file(config_path);
      if (!algo_flag.empty()) config.algorithm = npg::parse_algorithm(algo_flag);
      if (!seed_flags.empty()) config.seeds = seed_flags;
      config.output_dir = resolve_output_dir(config.output_dir, out_flag);
      if (dump_batches) config.dump_batches = true;

      for (std::uint64_t seed : config.seeds) {
        const npg::RunRecord record = npg::run_experiment(config, seed);
        if (!config.output_dir.empty()) {
          npg::emit_report(record, npg::ReportFormat::kCsv, config.output_dir);
          npg::emit_report(record, npg::ReportFormat::kJson, config.output_dir);
          npg::emit_report(record, npg::ReportFormat::kSvg, config.output_dir);
          // final policy checkpoint: parameters plus temperature
          npg::save_params_file(record.final_theta, config.width, config.embed_dim, seed,
                                record.final_tau,
                                config.output_dir + "/policy_seed" + std::to_string(seed) +
                                    ".txt");
        }
        std::cout << "seed " << seed << ": best gap " << record.summary.best_gap
                  << " at iteration " << record.summary.best_gap_iteration
                  << ", min ||rho|| " << record.summary.min_grad_mapping_norm << "\n";
      }
      return 0;
    }

    if (*check_cmd) {
      const std::string report = npg::run_check_suite(check_seed);
      if (check_out.empty()) {
        std::cout << report << "\n";
      } else {
        std::ofstream out(check_out);
        if (!out) throw std::runtime_error("cannot write report: " + check_out);
        out << report << "\n";
        std::cout << "report written to " << check_out << "\n";
      }
      return npg::check_suite_all_pass(report) ? 0 : 1;
    }

    if (*sweep_cmd) {
      npg::ExperimentConfig config =
          sweep_config_path.empty() ? npg::ExperimentConfig{} : npg::load_config_file(sweep_config_path);
      config.output_dir = resolve_output_dir(config.output_dir, sweep_out);
      if (sweep_param.rfind("m=", 0) != 0)
        throw std::invalid_argument("sweep: only the m= grid is supported, got " + sweep_param);
      std::vector<int> widths;
      std::stringstream ss(sweep_param.substr(2));
      std::string tok;
      while (std::getline(ss, tok, ',')) widths.push_back(std::stoi(tok));
      const auto rows = npg::sweep_widths(config, widths);
      std::cout << "m,median_linearization_rms,median_compat_error\n";
      for (const auto& row : rows)
        std::cout << row.width << "," << row.median_linearization_rms << ","
                  << row.median_compat_error << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
