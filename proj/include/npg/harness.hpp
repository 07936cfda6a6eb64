#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "npg/mdp.hpp"
#include "npg/net.hpp"

namespace npg {

enum class Algorithm { kPg, kNpg, kPgProjectionFree };
enum class CriticMode { kNeuralTd, kExactOracle };

Algorithm parse_algorithm(const std::string& name);
std::string algorithm_name(Algorithm algo);
CriticMode parse_critic_mode(const std::string& name);
std::string critic_mode_name(CriticMode mode);

// Full run specification. eta = 0 and eta_td = 0 select the named
// schedules: eta = 1/sqrt(T) (both algorithms), eta_td = min{(1-gamma)/8,
// 1/sqrt(T_td)}. t_td = 0 selects max(m, 10000). Temperatures follow the
// algorithm: tau_i = 1 for pg and the projection-free variant,
// tau_i = (i-1) eta for npg.
struct ExperimentConfig {
  Algorithm algorithm = Algorithm::kPg;
  std::string env = "chain:S=4";
  int iterations = 200;        // T
  long t_td = 0;               // critic iterations per actor step
  double eta = 0.0;            // actor rate
  double eta_td = 0.0;         // critic rate
  long batch_size = 2000;      // B
  int width = 512;             // m
  int embed_dim = 8;           // d
  double radius = 10.0;        // R
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  CriticMode critic_mode = CriticMode::kNeuralTd;
  std::string output_dir;
  bool dump_batches = false;
  bool critic_diag = false;  // per-iteration TD diagnostic CSVs under output_dir

  double effective_eta() const;
  long effective_t_td() const;
  double tau_at(int iteration) const;  // 1-based
  void validate() const;
  std::string echo() const;  // flat key = value listing of the effective config
};

// key = value config file, '#' comments, optional [section] headers which
// are ignored. Unknown keys are an error.
ExperimentConfig load_config(std::istream& in);
ExperimentConfig load_config_file(const std::string& path);

struct MetricsRow {
  int iteration = 0;         // i, 1-based
  double tau = 0.0;
  double j_exact = 0.0;      // J(pi_i)
  double gap = 0.0;          // J(pi*) - J(pi_i)
  double grad_mapping_norm = 0.0;
  double npg_residual = 0.0;
  double critic_error = 0.0;
  double compat_error = 0.0;
  double dist_to_init = 0.0;
};

struct RunSummary {
  double best_gap = 0.0;
  int best_gap_iteration = 0;
  double min_grad_mapping_norm = 0.0;
  double j_star = 0.0;
  double j_uniform = 0.0;
  double kl_uniform_bound = 0.0;  // max_s KL(pi* || pi_1) when tau_1 = 0
  int npg_descent_violations = 0; // solver residual above warm-start residual
};

struct RunRecord {
  std::vector<MetricsRow> rows;
  RunSummary summary;
  std::string config_echo;
  std::uint64_t seed = 0;
  ParamVector final_theta;  // theta_{T+1}
  double final_tau = 0.0;   // temperature of pi_{T+1}
};

struct EnvBundle {
  TabularMdp mdp;
  Embedding embedding;
};

// Environment generators:
//   chain:S=4[,gamma=0.8]    deterministic two-action chain, advance/back,
//                            reward q_max on the terminal self-loop arc,
//                            uniform start distribution
//   garnet:S=10,A=4,branching=3[,gamma=0.9]
//                            random MDP, fixed branching factor, U[0,1)
//                            rewards, uniform start
//   gridworld:4x4[,gamma=0.9]
//                            deterministic four-action grid, goal reward in
//                            the last cell, uniform start
EnvBundle generate_env(const std::string& spec, std::uint64_t seed, int embed_dim = 8);

// One full actor-critic run at one seed. Metric rows are streamed to
// <output_dir>/run_seed<seed>.csv as they are produced when output_dir is
// set, so a failed run leaves a partial record behind.
RunRecord run_experiment(const ExperimentConfig& config, std::uint64_t seed);

// CSV (pinned column order), JSON summary, or SVG line plots (gap and
// gradient-mapping norm against iteration).
enum class ReportFormat { kCsv, kJson, kSvg };
std::vector<std::string> emit_report(const RunRecord& record, ReportFormat format,
                                     const std::string& directory);

std::string metrics_csv_header();
std::string metrics_csv(const RunRecord& record);
RunRecord parse_metrics_csv(std::istream& in);

// Width-scaling study: per width in `widths`, the median over seeds of the
// full-space linearization error and of the compatibility error at random
// ball parameters. Writes sweep.csv / sweep.json / sweep.svg under
// output_dir when set.
struct SweepRow {
  int width = 0;
  double median_linearization_rms = 0.0;
  double median_compat_error = 0.0;
};
std::vector<SweepRow> sweep_widths(const ExperimentConfig& config,
                                   const std::vector<int>& widths, double ball_radius = 2.0);

}  // namespace npg
