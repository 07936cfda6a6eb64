#include "npg/checks.hpp"

#include <cmath>
#include <memory>

#include <json.hpp>

#include "npg/actor.hpp"
#include "npg/harness.hpp"
#include "npg/mdp.hpp"
#include "npg/net.hpp"
#include "npg/oracles.hpp"
#include "npg/policy.hpp"
#include "npg/rng.hpp"
#include "npg/sampling.hpp"

namespace npg {

namespace {

using nlohmann::json;

TabularPolicy random_policy(const TabularMdp& mdp, RngStream& rng) {
  TabularPolicy policy;
  policy.probs.resize(mdp.n_states, mdp.n_actions);
  for (int s = 0; s < mdp.n_states; ++s) {
    double total = 0.0;
    for (int a = 0; a < mdp.n_actions; ++a) {
      policy.probs(s, a) = -std::log(1.0 - rng.next_double());
      total += policy.probs(s, a);
    }
    policy.probs.row(s) /= total;
  }
  return policy;
}

ParamVector random_ball_point(const NetInit& init, double radius, RngStream& rng) {
  ParamVector v(init.param_count());
  for (long i = 0; i < v.size(); ++i) v[i] = rng.next_gaussian();
  return init.w_init + (radius * rng.next_double() / v.norm()) * v;
}

// Central finite differences of the exact J(pi_theta) in every coordinate.
// Independent of the closed-form gradient path.
ParamVector fd_policy_gradient(const TabularMdp& mdp, const EnergyPolicy& policy, double eps) {
  ParamVector grad(policy.theta().size());
  for (long k = 0; k < grad.size(); ++k) {
    ParamVector up = policy.theta(), down = policy.theta();
    up[k] += eps;
    down[k] -= eps;
    const EnergyPolicy pol_up(policy.init_ptr(), policy.embed_ptr(), up, policy.tau());
    const EnergyPolicy pol_down(policy.init_ptr(), policy.embed_ptr(), down, policy.tau());
    grad[k] = (expected_total_reward(mdp, pol_up.to_tabular()) -
               expected_total_reward(mdp, pol_down.to_tabular())) /
              (2.0 * eps);
  }
  return grad;
}

// Smallest |pre-activation| over the embedded pairs; the finite-difference
// checks only run where no indicator sits within 10 eps of flipping.
double kink_margin(const NetInit& init, const Embedding& embed, const ParamVector& theta) {
  double margin = std::numeric_limits<double>::infinity();
  for (int p = 0; p < embed.table.rows(); ++p) {
    const VectorXd x = embed.table.row(p).transpose();
    for (int r = 0; r < init.width; ++r) {
      const double pre = theta.segment(static_cast<long>(r) * init.input_dim, init.input_dim)
                             .dot(x);
      margin = std::min(margin, std::abs(pre));
    }
  }
  return margin;
}

double tv_distance(const MatrixXd& p, const MatrixXd& q) {
  return 0.5 * (p - q).cwiseAbs().sum();
}

}  // namespace

std::string run_check_suite(std::uint64_t seed) {
  json checks = json::array();
  auto record = [&](const std::string& name, bool pass, json details) {
    details["name"] = name;
    details["pass"] = pass;
    checks.push_back(details);
  };

  RngStream rng = RngStream::derive(seed, "check-suite");

  // Fixtures shared across checks.
  const EnvBundle env = generate_env("garnet:S=5,A=3,branching=3,gamma=0.9", seed, 8);
  const TabularMdp& mdp = env.mdp;
  auto embed = std::make_shared<const Embedding>(env.embedding);
  const TabularPolicy pi = random_policy(mdp, rng);

  {  // Bellman consistency and the two J routes
    const ValueTables values = exact_values(mdp, pi);
    double bellman = 0.0;
    for (int s = 0; s < mdp.n_states; ++s)
      for (int a = 0; a < mdp.n_actions; ++a) {
        double rhs = (1.0 - mdp.discount) * mdp.reward(s, a);
        const auto row = mdp.transition.row(mdp.pair_index(s, a));
        for (int s2 = 0; s2 < mdp.n_states; ++s2)
          rhs += mdp.discount * row[s2] * values.v[s2];
        bellman = std::max(bellman, std::abs(values.q(s, a) - rhs));
      }
    const VectorXd v_from_q = (values.q.array() * pi.probs.array()).rowwise().sum();
    const double v_dot = (v_from_q - values.v).cwiseAbs().maxCoeff();
    const double j_direct = expected_total_reward(mdp, pi);
    const double j_occ = expected_total_reward_occupancy(mdp, pi);
    record("bellman_and_total_reward", bellman <= 1e-10 && v_dot <= 1e-10 &&
                                           std::abs(j_direct - j_occ) <= 1e-10,
           {{"bellman_residual", bellman},
            {"v_q_consistency", v_dot},
            {"j_route_difference", std::abs(j_direct - j_occ)}});
  }

  {  // Performance-difference identity over random pairs
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const TabularPolicy a = random_policy(mdp, rng);
      const TabularPolicy b = random_policy(mdp, rng);
      const auto [lhs, rhs] = performance_difference_check(mdp, a, b);
      worst = std::max(worst, std::abs(lhs - rhs));
    }
    record("performance_difference", worst <= 1e-9, {{"max_abs_difference", worst}});
  }

  auto init = std::make_shared<const NetInit>(init_net({32, 8, 2.0}, seed));
  {  // Score identity and uniformity at tau = 0
    const EnergyPolicy policy(init, embed, random_ball_point(*init, 1.5, rng), 1.0);
    double score_norm = 0.0;
    for (int s = 0; s < mdp.n_states; ++s) {
      ParamVector acc = ParamVector::Zero(init->param_count());
      for (int a = 0; a < mdp.n_actions; ++a)
        acc += policy.prob_table()(s, a) * policy.log_prob_grad(s, a);
      score_norm = std::max(score_norm, acc.norm());
    }
    const EnergyPolicy cold(init, embed, policy.theta(), 0.0);
    const double uniform_dev =
        (cold.prob_table().array() - 1.0 / mdp.n_actions).abs().maxCoeff();
    record("score_identity_and_tau0",
           score_norm <= 1e-10 && uniform_dev <= 1e-12,
           {{"max_score_norm", score_norm}, {"tau0_uniform_deviation", uniform_dev}});
  }

  {  // Closed-form policy gradient against central finite differences
    constexpr double kEps = 1e-5;
    ParamVector theta;
    double margin = 0.0;
    for (int attempt = 0; attempt < 50; ++attempt) {
      theta = random_ball_point(*init, 1.5, rng);
      margin = kink_margin(*init, *embed, theta);
      if (margin > 10.0 * kEps) break;
    }
    const EnergyPolicy policy(init, embed, theta, 1.0);
    const ParamVector exact = exact_policy_gradient(mdp, policy);
    const ParamVector fd = fd_policy_gradient(mdp, policy, kEps);
    const double rel = (exact - fd).norm() / std::max(fd.norm(), 1e-30);
    record("policy_gradient_fd", rel <= 1e-4,
           {{"relative_l2_error", rel}, {"kink_margin", margin}});
  }

  {  // Fisher: matrix-free apply vs dense oracle, PSD probes
    auto small_init = std::make_shared<const NetInit>(init_net({16, 8, 2.0}, seed + 1));
    const EnergyPolicy policy(small_init, embed, random_ball_point(*small_init, 1.5, rng), 1.0);
    const Batch batch = sample_visitation(mdp, policy.to_tabular(), 2000,
                                          default_burn_in(mdp), seed + 7);
    const FisherOperator fisher(policy, batch);
    // Dense counterpart straight from the batch definition.
    const long n = small_init->param_count();
    MatrixXd dense = MatrixXd::Zero(n, n);
    for (const auto& [s, a] : batch.pairs) {
      const ParamVector u = policy.centered_feature(s, a, policy.theta());
      dense.noalias() += u * u.transpose();
    }
    dense *= policy.tau() * policy.tau() / static_cast<double>(batch.pairs.size());
    double apply_err = 0.0, min_quad = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
      ParamVector v(n);
      for (long k = 0; k < n; ++k) v[k] = rng.next_gaussian();
      apply_err = std::max(apply_err, (fisher.apply(v) - dense * v).norm());
      min_quad = std::min(min_quad, v.dot(fisher.apply(v)));
    }
    record("fisher_apply_and_psd", apply_err <= 1e-10 && min_quad >= -1e-10,
           {{"max_apply_error", apply_err}, {"min_quadratic_form", min_quad}});
  }

  {  // Visitation sampler fidelity
    const MeasureSet meas = visitation_measures(mdp, pi);
    const Batch batch = sample_visitation(mdp, pi, 100000, default_burn_in(mdp), seed + 13);
    const double tv =
        tv_distance(batch.empirical_pair_distribution(mdp.n_states, mdp.n_actions), meas.sigma);
    const double restart_rate =
        static_cast<double>(batch.n_restarts) / static_cast<double>(batch.n_steps);
    const double se = std::sqrt(mdp.discount * (1.0 - mdp.discount) /
                                static_cast<double>(batch.n_steps));
    const double restart_dev = std::abs(restart_rate - (1.0 - mdp.discount));
    record("visitation_sampler", tv <= 0.05 && restart_dev <= 3.0 * se,
           {{"tv_distance", tv},
            {"restart_rate", restart_rate},
            {"restart_tolerance_3se", 3.0 * se}});
  }

  {  // Linearization error shrinks with width
    const MeasureSet meas = visitation_measures(mdp, uniform_policy(mdp));
    std::vector<double> errs;
    for (int m : {64, 256, 1024}) {
      auto wide = init_net({m, 8, 2.0}, seed + m);
      RngStream dir_rng = RngStream::derive(seed, "check-lin", m);
      ParamVector v(wide.param_count());
      for (long k = 0; k < v.size(); ++k) v[k] = dir_rng.next_gaussian();
      const ParamVector theta = wide.w_init + (2.0 / v.norm()) * v;
      errs.push_back(linearization_error(wide, theta, theta, meas, *embed));
    }
    record("linearization_width_trend", errs[0] > errs[1] && errs[1] > errs[2],
           {{"errors", errs}});
  }

  {  // Concentrability: self-comparison coefficients are exactly 1
    const EnergyPolicy policy(init, embed, random_ball_point(*init, 1.5, rng), 1.0);
    const ConcentrabilityReport rep = concentrability(mdp, policy, policy.to_tabular());
    const double self_dev = std::max(std::abs(rep.phi - 1.0), std::abs(rep.psi - 1.0));
    record("concentrability_self_unit", self_dev <= 1e-9 && rep.kappa >= 1.0 - 1e-9,
           {{"max_self_deviation", self_dev}, {"kappa", rep.kappa}});
  }

  {  // Compatibility error: zero at shared parameters, positive apart
    const MeasureSet meas = visitation_measures(mdp, uniform_policy(mdp));
    const ParamVector theta = random_ball_point(*init, 1.8, rng);
    const ParamVector omega = random_ball_point(*init, 1.8, rng);
    const EnergyPolicy policy(init, embed, theta, 1.0);
    const double at_self = compatibility_error(theta, theta, policy, meas);
    const double apart = compatibility_error(theta, omega, policy, meas);
    record("compatibility_error_basics", at_self == 0.0 && apart > 0.0,
           {{"at_shared_params", at_self}, {"at_distinct_params", apart}});
  }

  {  // Stationarity audit agrees with the gradient mapping
    const ParamVector theta = random_ball_point(*init, 1.0, rng);
    const ParamVector zero = ParamVector::Zero(init->param_count());
    const double flat = stationarity_audit(theta, zero, *init, 2.0, 500, seed + 31);
    ParamVector grad(init->param_count());
    for (long k = 0; k < grad.size(); ++k) grad[k] = rng.next_gaussian();
    grad.normalize();
    const double ascent = stationarity_audit(theta, grad, *init, 2.0, 500, seed + 32);
    const double rho = gradient_mapping(theta, grad, 0.1, *init, 2.0).norm();
    record("stationarity_audit", flat <= 1e-12 && ascent > 0.05 && rho > 0.05,
           {{"flat_audit", flat}, {"ascent_audit", ascent}, {"grad_mapping_norm", rho}});
  }

  json report;
  report["seed"] = seed;
  report["checks"] = checks;
  bool all = true;
  for (const auto& c : checks) all = all && c["pass"].get<bool>();
  report["all_pass"] = all;
  return report.dump(2);
}

bool check_suite_all_pass(const std::string& report_json) {
  return nlohmann::json::parse(report_json)["all_pass"].get<bool>();
}

}  // namespace npg
