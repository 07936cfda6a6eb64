#include "npg/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "npg/actor.hpp"
#include "npg/critic.hpp"
#include "npg/oracles.hpp"
#include "npg/policy.hpp"
#include "npg/rng.hpp"
#include "npg/sampling.hpp"

namespace npg {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt(double x) {
  std::ostringstream out;
  out << std::setprecision(17) << x;
  return out.str();
}

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty list");
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::map<std::string, std::string> parse_spec_keys(const std::string& body) {
  std::map<std::string, std::string> keys;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("env spec: expected key=value, got '" + item + "'");
    keys[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return keys;
}

double key_or(const std::map<std::string, std::string>& keys, const std::string& name,
              double fallback) {
  auto it = keys.find(name);
  return it == keys.end() ? fallback : std::stod(it->second);
}

TabularMdp make_chain(int n_states, double gamma) {
  if (n_states < 2) throw std::invalid_argument("chain: need at least 2 states");
  constexpr double kChainReward = 20.0;
  TabularMdp mdp;
  mdp.n_states = n_states;
  mdp.n_actions = 2;  // 0 = back, 1 = advance
  mdp.discount = gamma;
  mdp.q_max = kChainReward;
  mdp.transition = MatrixXd::Zero(mdp.n_pairs(), n_states);
  mdp.reward = MatrixXd::Zero(n_states, 2);
  for (int s = 0; s < n_states; ++s) {
    mdp.transition(mdp.pair_index(s, 0), std::max(s - 1, 0)) = 1.0;
    mdp.transition(mdp.pair_index(s, 1), std::min(s + 1, n_states - 1)) = 1.0;
  }
  mdp.reward(n_states - 1, 1) = kChainReward;  // terminal self-loop arc
  mdp.init_dist = VectorXd::Constant(n_states, 1.0 / n_states);
  mdp.validate();
  return mdp;
}

TabularMdp make_garnet(int n_states, int n_actions, int branching, double gamma,
                       std::uint64_t seed) {
  if (branching < 1 || branching > n_states)
    throw std::invalid_argument("garnet: branching must lie in [1, n_states]");
  TabularMdp mdp;
  mdp.n_states = n_states;
  mdp.n_actions = n_actions;
  mdp.discount = gamma;
  mdp.q_max = 1.0;
  mdp.transition = MatrixXd::Zero(mdp.n_pairs(), n_states);
  mdp.reward = MatrixXd::Zero(n_states, n_actions);
  mdp.init_dist = VectorXd::Constant(n_states, 1.0 / n_states);

  RngStream rng = RngStream::derive(seed, "garnet");
  std::vector<int> order(n_states);
  for (int p = 0; p < mdp.n_pairs(); ++p) {
    // successor support: partial Fisher-Yates for `branching` distinct states
    std::iota(order.begin(), order.end(), 0);
    for (int k = 0; k < branching; ++k) {
      const int j = k + rng.next_int(n_states - k);
      std::swap(order[k], order[j]);
    }
    // probabilities: sorted-uniform spacings over the support
    std::vector<double> cuts(branching - 1);
    for (auto& c : cuts) c = rng.next_double();
    std::sort(cuts.begin(), cuts.end());
    double prev = 0.0;
    for (int k = 0; k < branching; ++k) {
      const double next = k + 1 < branching ? cuts[k] : 1.0;
      mdp.transition(p, order[k]) = next - prev;
      prev = next;
    }
  }
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a) mdp.reward(s, a) = rng.next_double();
  mdp.validate();
  return mdp;
}

TabularMdp make_gridworld(int width, int height, double gamma) {
  TabularMdp mdp;
  mdp.n_states = width * height;
  mdp.n_actions = 4;  // up, right, down, left
  mdp.discount = gamma;
  mdp.q_max = 1.0;
  mdp.transition = MatrixXd::Zero(mdp.n_pairs(), mdp.n_states);
  mdp.reward = MatrixXd::Zero(mdp.n_states, 4);
  const int goal = mdp.n_states - 1;
  for (int s = 0; s < mdp.n_states; ++s) {
    const int row = s / width, col = s % width;
    const int dest[4] = {
        row > 0 ? s - width : s,
        col + 1 < width ? s + 1 : s,
        row + 1 < height ? s + width : s,
        col > 0 ? s - 1 : s,
    };
    for (int a = 0; a < 4; ++a) {
      mdp.transition(mdp.pair_index(s, a), dest[a]) = 1.0;
      if (s == goal) mdp.reward(s, a) = 1.0;
    }
  }
  mdp.init_dist = VectorXd::Constant(mdp.n_states, 1.0 / mdp.n_states);
  mdp.validate();
  return mdp;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
}

void svg_line_plot(const std::vector<double>& ys, const std::string& title,
                   const std::string& path) {
  if (ys.empty()) throw std::invalid_argument("svg plot: no data");
  const double w = 720, h = 420, ml = 70, mr = 20, mt = 40, mb = 50;
  double lo = *std::min_element(ys.begin(), ys.end());
  double hi = *std::max_element(ys.begin(), ys.end());
  if (hi - lo < 1e-300) hi = lo + 1.0;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write plot: " + path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";
  out << "<text x='" << w / 2 << "' y='24' text-anchor='middle' font-family='sans-serif' "
      << "font-size='16'>" << title << "</text>\n";
  out << "<line x1='" << ml << "' y1='" << h - mb << "' x2='" << w - mr << "' y2='" << h - mb
      << "' stroke='black'/>\n";
  out << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << h - mb
      << "' stroke='black'/>\n";
  auto xpix = [&](size_t i) {
    return ml + (w - ml - mr) * (ys.size() == 1 ? 0.5 : double(i) / double(ys.size() - 1));
  };
  auto ypix = [&](double y) { return h - mb - (h - mt - mb) * (y - lo) / (hi - lo); };
  out << "<polyline fill='none' stroke='#1f77b4' stroke-width='1.5' points='";
  for (size_t i = 0; i < ys.size(); ++i) out << xpix(i) << "," << ypix(ys[i]) << " ";
  out << "'/>\n";
  out << "<text x='" << ml - 8 << "' y='" << ypix(lo) << "' text-anchor='end' "
      << "font-family='sans-serif' font-size='11'>" << std::setprecision(4) << lo << "</text>\n";
  out << "<text x='" << ml - 8 << "' y='" << ypix(hi) + 10 << "' text-anchor='end' "
      << "font-family='sans-serif' font-size='11'>" << std::setprecision(4) << hi << "</text>\n";
  out << "<text x='" << ml << "' y='" << h - mb + 16 << "' font-family='sans-serif' "
      << "font-size='11'>1</text>\n";
  out << "<text x='" << w - mr << "' y='" << h - mb + 16 << "' text-anchor='end' "
      << "font-family='sans-serif' font-size='11'>" << ys.size() << "</text>\n";
  out << "</svg>\n";
}

}  // namespace

Algorithm parse_algorithm(const std::string& name) {
  if (name == "pg") return Algorithm::kPg;
  if (name == "npg") return Algorithm::kNpg;
  if (name == "pgfree" || name == "pg_projection_free") return Algorithm::kPgProjectionFree;
  throw std::invalid_argument("unknown algorithm: " + name);
}

std::string algorithm_name(Algorithm algo) {
  switch (algo) {
    case Algorithm::kPg: return "pg";
    case Algorithm::kNpg: return "npg";
    case Algorithm::kPgProjectionFree: return "pg_projection_free";
  }
  return "?";
}

CriticMode parse_critic_mode(const std::string& name) {
  if (name == "neural_td") return CriticMode::kNeuralTd;
  if (name == "exact_oracle") return CriticMode::kExactOracle;
  throw std::invalid_argument("unknown critic mode: " + name);
}

std::string critic_mode_name(CriticMode mode) {
  return mode == CriticMode::kNeuralTd ? "neural_td" : "exact_oracle";
}

double ExperimentConfig::effective_eta() const {
  return eta > 0.0 ? eta : 1.0 / std::sqrt(static_cast<double>(iterations));
}

long ExperimentConfig::effective_t_td() const {
  return t_td > 0 ? t_td : std::max<long>(width, 10000);
}

double ExperimentConfig::tau_at(int iteration) const {
  if (algorithm == Algorithm::kNpg) return static_cast<double>(iteration - 1) * effective_eta();
  return 1.0;
}

void ExperimentConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("config: T must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("config: B must be >= 1");
  if (width < 1) throw std::invalid_argument("config: m must be >= 1");
  if (embed_dim < 2) throw std::invalid_argument("config: d must be >= 2");
  if (radius <= 1.0) throw std::invalid_argument("config: R must exceed 1");
  if (eta < 0.0 || eta_td < 0.0) throw std::invalid_argument("config: negative learning rate");
  if (seeds.empty()) throw std::invalid_argument("config: seeds must be nonempty");
}

std::string ExperimentConfig::echo() const {
  std::ostringstream out;
  out << "algorithm = " << algorithm_name(algorithm) << "\n";
  out << "env = " << env << "\n";
  out << "T = " << iterations << "\n";
  out << "T_td = " << effective_t_td() << "\n";
  out << "eta = " << fmt(effective_eta()) << "\n";
  out << "eta_td = " << (eta_td > 0.0 ? fmt(eta_td) : std::string("auto")) << "\n";
  out << "B = " << batch_size << "\n";
  out << "m = " << width << "\n";
  out << "d = " << embed_dim << "\n";
  out << "R = " << fmt(radius) << "\n";
  out << "critic_mode = " << critic_mode_name(critic_mode) << "\n";
  out << "seeds =";
  for (auto s : seeds) out << " " << s;
  out << "\n";
  out << "output_dir = " << output_dir << "\n";
  return out.str();
}

ExperimentConfig load_config(std::istream& in) {
  ExperimentConfig config;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r\n");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r\n");
      return s.substr(b, e - b + 1);
    };
    line = strip(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') continue;  // section headers are cosmetic
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected key = value, got '" + line + "'");
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));

    if (key == "algorithm" || key == "algo") config.algorithm = parse_algorithm(value);
    else if (key == "env") config.env = value;
    else if (key == "T" || key == "iterations") config.iterations = std::stoi(value);
    else if (key == "T_td" || key == "t_td") config.t_td = std::stol(value);
    else if (key == "eta") config.eta = std::stod(value);
    else if (key == "eta_td") config.eta_td = std::stod(value);
    else if (key == "B" || key == "batch_size") config.batch_size = std::stol(value);
    else if (key == "m" || key == "width") config.width = std::stoi(value);
    else if (key == "d" || key == "embed_dim") config.embed_dim = std::stoi(value);
    else if (key == "R" || key == "radius") config.radius = std::stod(value);
    else if (key == "critic_mode") config.critic_mode = parse_critic_mode(value);
    else if (key == "output_dir" || key == "out") config.output_dir = value;
    else if (key == "dump_batches") config.dump_batches = (value == "1" || value == "true");
    else if (key == "critic_diag") config.critic_diag = (value == "1" || value == "true");
    else if (key == "seeds") {
      config.seeds.clear();
      std::stringstream ss(value);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        tok = strip(tok);
        if (!tok.empty()) config.seeds.push_back(std::stoull(tok));
      }
    } else {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
  config.validate();
  return config;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  return load_config(in);
}

EnvBundle generate_env(const std::string& spec, std::uint64_t seed, int embed_dim) {
  const auto colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  const std::string body = colon == std::string::npos ? "" : spec.substr(colon + 1);

  TabularMdp mdp;
  if (name == "chain") {
    const auto keys = parse_spec_keys(body);
    mdp = make_chain(static_cast<int>(key_or(keys, "S", 4)), key_or(keys, "gamma", 0.8));
  } else if (name == "garnet") {
    const auto keys = parse_spec_keys(body);
    mdp = make_garnet(static_cast<int>(key_or(keys, "S", 10)),
                      static_cast<int>(key_or(keys, "A", 4)),
                      static_cast<int>(key_or(keys, "branching", 3)),
                      key_or(keys, "gamma", 0.9), seed);
  } else if (name == "gridworld") {
    // gridworld:4x4[,gamma=...]
    std::string dims = body;
    std::map<std::string, std::string> keys;
    const auto comma = body.find(',');
    if (comma != std::string::npos) {
      dims = body.substr(0, comma);
      keys = parse_spec_keys(body.substr(comma + 1));
    }
    const auto x = dims.find('x');
    if (x == std::string::npos)
      throw std::invalid_argument("gridworld spec: expected WxH, got '" + dims + "'");
    mdp = make_gridworld(std::stoi(dims.substr(0, x)), std::stoi(dims.substr(x + 1)),
                         key_or(keys, "gamma", 0.9));
  } else {
    throw std::invalid_argument("unknown environment spec: " + spec);
  }
  Embedding embedding = build_embedding(mdp, embed_dim, seed);
  return {std::move(mdp), std::move(embedding)};
}

std::string metrics_csv_header() {
  return "i,tau,J,gap,grad_mapping_norm,npg_residual,critic_error,compat_error,dist_to_init";
}

namespace {
std::string row_csv(const MetricsRow& r) {
  std::ostringstream out;
  out << r.iteration << "," << fmt(r.tau) << "," << fmt(r.j_exact) << "," << fmt(r.gap) << ","
      << fmt(r.grad_mapping_norm) << "," << fmt(r.npg_residual) << "," << fmt(r.critic_error)
      << "," << fmt(r.compat_error) << "," << fmt(r.dist_to_init);
  return out.str();
}
}  // namespace

std::string metrics_csv(const RunRecord& record) {
  std::ostringstream out;
  out << metrics_csv_header() << "\n";
  for (const auto& row : record.rows) out << row_csv(row) << "\n";
  return out.str();
}

RunRecord parse_metrics_csv(std::istream& in) {
  RunRecord record;
  std::string line;
  if (!std::getline(in, line) || line != metrics_csv_header())
    throw std::runtime_error("metrics csv: bad header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    MetricsRow row;
    std::stringstream ss(line);
    std::string tok;
    auto next = [&]() {
      if (!std::getline(ss, tok, ',')) throw std::runtime_error("metrics csv: short row");
      return tok;
    };
    row.iteration = std::stoi(next());
    row.tau = std::stod(next());
    row.j_exact = std::stod(next());
    row.gap = std::stod(next());
    row.grad_mapping_norm = std::stod(next());
    row.npg_residual = std::stod(next());
    row.critic_error = std::stod(next());
    row.compat_error = std::stod(next());
    row.dist_to_init = std::stod(next());
    record.rows.push_back(row);
  }
  return record;
}

RunRecord run_experiment(const ExperimentConfig& config, std::uint64_t seed) {
  config.validate();
  EnvBundle env = generate_env(config.env, seed, config.embed_dim);
  const TabularMdp& mdp = env.mdp;
  auto embed = std::make_shared<const Embedding>(std::move(env.embedding));
  NetShape shape{config.width, config.embed_dim, config.radius};
  auto init = std::make_shared<const NetInit>(init_net(shape, seed));

  const double eta = config.effective_eta();
  const double eta_td =
      config.eta_td > 0.0 ? config.eta_td : default_eta_td(mdp.discount, config.effective_t_td());
  const double radius = config.radius;

  const TabularPolicy pi_star = optimal_policy(mdp);
  RunRecord record;
  record.seed = seed;
  record.config_echo = config.echo();
  record.summary.j_star = expected_total_reward(mdp, pi_star);
  record.summary.j_uniform = expected_total_reward(mdp, uniform_policy(mdp));

  std::ofstream csv;
  if (!config.output_dir.empty()) {
    ensure_dir(config.output_dir);
    const std::string path =
        (fs::path(config.output_dir) / ("run_seed" + std::to_string(seed) + ".csv")).string();
    csv.open(path);
    if (!csv) throw std::runtime_error("cannot write metrics csv: " + path);
    csv << metrics_csv_header() << "\n";
  }

  ParamVector theta = init->w_init;
  for (int i = 1; i <= config.iterations; ++i) {
    const double tau_i = config.tau_at(i);
    const EnergyPolicy policy(init, embed, theta, tau_i);
    const TabularPolicy tab = policy.to_tabular();

    const ValueTables values = exact_values(mdp, tab);
    const MeasureSet meas = visitation_measures(mdp, tab);
    const double j_exact = mdp.init_dist.dot(values.v);

    if (i == 1 && tau_i == 0.0) {
      // KL to the uniform first policy, worst state.
      double worst = 0.0;
      for (int s = 0; s < mdp.n_states; ++s) {
        double kl = 0.0;
        for (int a = 0; a < mdp.n_actions; ++a) {
          const double p = pi_star.probs(s, a);
          if (p > 0.0) kl += p * std::log(p / policy.prob_table()(s, a));
        }
        worst = std::max(worst, kl);
      }
      record.summary.kl_uniform_bound = worst;
    }

    const ParamVector exact_grad = exact_policy_gradient_with_critic(
        mdp, policy, [&](int s, int a) { return values.q(s, a); });

    MetricsRow row;
    row.iteration = i;
    row.tau = tau_i;
    row.j_exact = j_exact;
    row.gap = record.summary.j_star - j_exact;
    row.grad_mapping_norm =
        config.algorithm == Algorithm::kPgProjectionFree
            ? exact_grad.norm()
            : gradient_mapping(theta, exact_grad, eta, *init, radius).norm();
    row.dist_to_init = dist_to_init(theta, *init);

    // Critic for this iteration.
    ParamVector omega;
    CriticEval critic;
    if (config.critic_mode == CriticMode::kExactOracle) {
      critic = [&values](int s, int a) { return values.q(s, a); };
      row.critic_error = 0.0;
      row.compat_error = 0.0;
    } else {
      const std::uint64_t critic_seed = RngStream::derive(seed, "critic-run", i).next_u64();
      CriticTrainOptions critic_options;
      if (config.critic_diag && !config.output_dir.empty())
        critic_options.diag_csv_path =
            (fs::path(config.output_dir) /
             ("critic_seed" + std::to_string(seed) + "_iter" + std::to_string(i) + ".csv"))
                .string();
      omega = train_critic(mdp, policy, *init, config.effective_t_td(), eta_td, radius,
                           critic_seed, critic_options);
      critic = [&, omega](int s, int a) {
        return forward(*init, omega,
                       embed->table.row(embed->pair_index(s, a)).transpose());
      };
      row.critic_error = critic_error(mdp, policy, omega);
      row.compat_error = compatibility_error(theta, omega, policy, meas);
    }

    const std::uint64_t batch_seed = RngStream::derive(seed, "actor-batch", i).next_u64();
    const Batch batch =
        sample_visitation(mdp, tab, config.batch_size, default_burn_in(mdp), batch_seed);
    if (config.dump_batches && !config.output_dir.empty()) {
      dump_batch_csv(batch, (fs::path(config.output_dir) /
                             ("batch_seed" + std::to_string(seed) + "_iter" + std::to_string(i) +
                              ".csv"))
                                .string());
    }

    switch (config.algorithm) {
      case Algorithm::kPg: {
        const GradientEstimate est = estimate_policy_gradient(policy, critic, batch, mdp.discount);
        theta = vanilla_pg_update(theta, est.ghat, eta, *init, radius);
        row.npg_residual = 0.0;
        break;
      }
      case Algorithm::kNpg: {
        const GradientEstimate est = estimate_policy_gradient(policy, critic, batch, mdp.discount);
        const FisherOperator fisher(policy, batch);
        const ParamVector target = tau_i * est.ghat;
        const ParamVector warm =
            config.critic_mode == CriticMode::kNeuralTd ? omega : init->w_init;
        const double warm_residual = (fisher.apply(warm) - target).norm();
        const NpgDirection dir = npg_solve(fisher, target, *init, radius, warm);
        if (dir.residual > warm_residual + 1e-12) ++record.summary.npg_descent_violations;
        theta = npg_combine(tau_i, theta, dir.delta, eta, config.tau_at(i + 1));
        row.npg_residual = dir.residual;
        break;
      }
      case Algorithm::kPgProjectionFree: {
        CriticEval clipped = [&, critic](int s, int a) {
          return std::clamp(critic(s, a), -mdp.q_max, mdp.q_max);
        };
        theta = projection_free_update(theta, policy, clipped, batch, eta, mdp.discount);
        row.npg_residual = 0.0;
        break;
      }
    }

    record.rows.push_back(row);
    if (csv.is_open()) {
      csv << row_csv(row) << "\n";
      csv.flush();  // partial records survive failures downstream
    }
  }

  record.final_theta = theta;
  record.final_tau = config.tau_at(config.iterations + 1);

  // Summary over the completed rows.
  record.summary.best_gap = std::numeric_limits<double>::infinity();
  record.summary.min_grad_mapping_norm = std::numeric_limits<double>::infinity();
  for (const auto& row : record.rows) {
    if (row.gap < record.summary.best_gap) {
      record.summary.best_gap = row.gap;
      record.summary.best_gap_iteration = row.iteration;
    }
    record.summary.min_grad_mapping_norm =
        std::min(record.summary.min_grad_mapping_norm, row.grad_mapping_norm);
  }
  return record;
}

std::vector<std::string> emit_report(const RunRecord& record, ReportFormat format,
                                     const std::string& directory) {
  ensure_dir(directory);
  const std::string tag = "seed" + std::to_string(record.seed);
  std::vector<std::string> written;
  if (format == ReportFormat::kCsv) {
    const std::string path = (fs::path(directory) / ("run_" + tag + ".csv")).string();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report: " + path);
    out << metrics_csv(record);
    written.push_back(path);
  } else if (format == ReportFormat::kJson) {
    json j;
    j["seed"] = record.seed;
    j["config"] = record.config_echo;
    j["rows"] = record.rows.size();
    j["summary"] = {
        {"best_gap", record.summary.best_gap},
        {"best_gap_iteration", record.summary.best_gap_iteration},
        {"min_grad_mapping_norm", record.summary.min_grad_mapping_norm},
        {"j_star", record.summary.j_star},
        {"j_uniform", record.summary.j_uniform},
        {"kl_uniform_bound", record.summary.kl_uniform_bound},
        {"npg_descent_violations", record.summary.npg_descent_violations},
    };
    const std::string path = (fs::path(directory) / ("run_" + tag + ".json")).string();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report: " + path);
    out << j.dump(2) << "\n";
    written.push_back(path);
  } else {
    if (record.rows.empty()) throw std::invalid_argument("svg report: empty record");
    std::vector<double> gaps, rhos;
    for (const auto& row : record.rows) {
      gaps.push_back(row.gap);
      rhos.push_back(row.grad_mapping_norm);
    }
    const std::string gap_path = (fs::path(directory) / ("gap_" + tag + ".svg")).string();
    const std::string rho_path =
        (fs::path(directory) / ("grad_mapping_" + tag + ".svg")).string();
    svg_line_plot(gaps, "optimality gap vs iteration", gap_path);
    svg_line_plot(rhos, "gradient-mapping norm vs iteration", rho_path);
    written.push_back(gap_path);
    written.push_back(rho_path);
  }
  return written;
}

std::vector<SweepRow> sweep_widths(const ExperimentConfig& config, const std::vector<int>& widths,
                                   double ball_radius) {
  if (widths.empty()) throw std::invalid_argument("sweep: need at least one width");
  EnvBundle env = generate_env(config.env, config.seeds.front(), config.embed_dim);
  auto embed = std::make_shared<const Embedding>(std::move(env.embedding));
  const MeasureSet meas = visitation_measures(env.mdp, uniform_policy(env.mdp));

  std::vector<SweepRow> rows;
  for (int m : widths) {
    std::vector<double> lin, compat;
    for (std::uint64_t seed : config.seeds) {
      NetShape shape{m, config.embed_dim, std::max(ball_radius, 1.0 + 1e-9)};
      auto init = std::make_shared<const NetInit>(init_net(shape, seed));
      RngStream dir_rng = RngStream::derive(seed, "sweep-directions", m);
      auto ball_point = [&]() {
        ParamVector v(init->param_count());
        for (long k = 0; k < v.size(); ++k) v[k] = dir_rng.next_gaussian();
        return ParamVector(init->w_init + (ball_radius / v.norm()) * v);
      };
      const ParamVector theta = ball_point();
      const ParamVector omega = ball_point();
      lin.push_back(linearization_error(*init, theta, theta, meas, *embed));
      const EnergyPolicy policy(init, embed, theta, 1.0);
      compat.push_back(compatibility_error(theta, omega, policy, meas));
    }
    rows.push_back({m, median(lin), median(compat)});
  }

  if (!config.output_dir.empty()) {
    ensure_dir(config.output_dir);
    const std::string csv_path = (fs::path(config.output_dir) / "sweep.csv").string();
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("cannot write sweep csv: " + csv_path);
    out << "m,median_linearization_rms,median_compat_error\n";
    for (const auto& row : rows)
      out << row.width << "," << fmt(row.median_linearization_rms) << ","
          << fmt(row.median_compat_error) << "\n";
    json j = json::array();
    for (const auto& row : rows)
      j.push_back({{"m", row.width},
                   {"median_linearization_rms", row.median_linearization_rms},
                   {"median_compat_error", row.median_compat_error}});
    std::ofstream jout((fs::path(config.output_dir) / "sweep.json").string());
    jout << j.dump(2) << "\n";
    std::vector<double> lin_curve;
    for (const auto& row : rows) lin_curve.push_back(row.median_linearization_rms);
    svg_line_plot(lin_curve, "linearization error vs width index",
                  (fs::path(config.output_dir) / "sweep.svg").string());
  }
  return rows;
}

}  // namespace npg
