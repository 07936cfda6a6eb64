#include "npg/oracles.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "npg/rng.hpp"

namespace npg {

namespace {

constexpr double kSupportFloor = 1e-14;

// d num / d den over a finite space; throws when num puts mass where den
// has (numerically) none.
double density_ratio(double num, double den, const char* what, int s, int a) {
  if (den > kSupportFloor) return num / den;
  if (num <= kSupportFloor) return 0.0;
  std::ostringstream msg;
  msg << what << ": support violation at (s=" << s << ", a=" << a << "): numerator " << num
      << " over denominator " << den;
  throw std::runtime_error(msg.str());
}

ParamVector weighted_centered_sum(const EnergyPolicy& policy, const VectorXd& coefs) {
  const VectorXd plain = policy.feature_table().center_weights(coefs, policy.prob_table());
  ParamVector out = ParamVector::Zero(policy.init().param_count());
  policy.feature_table().add_weighted(plain, out);
  return out;
}

}  // namespace

ParamVector exact_policy_gradient(const TabularMdp& mdp, const EnergyPolicy& policy) {
  const ValueTables values = exact_values(mdp, policy.to_tabular());
  return exact_policy_gradient_with_critic(
      mdp, policy, [&](int s, int a) { return values.q(s, a); });
}

ParamVector exact_policy_gradient_with_critic(const TabularMdp& mdp, const EnergyPolicy& policy,
                                              const CriticEval& critic) {
  const MeasureSet meas = visitation_measures(mdp, policy.to_tabular());
  // Scaled value convention: sigma and Q each carry a (1-gamma), so the
  // true gradient of J needs one of them put back. Verified against
  // central finite differences of the exact J.
  const double scale = policy.tau() / (1.0 - mdp.discount);
  VectorXd coefs(mdp.n_pairs());
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a)
      coefs[mdp.pair_index(s, a)] = scale * meas.sigma(s, a) * critic(s, a);
  return weighted_centered_sum(policy, coefs);
}

MatrixXd exact_fisher(const TabularMdp& mdp, const EnergyPolicy& policy) {
  const long n = policy.init().param_count();
  if (n > 500)
    throw std::invalid_argument("exact_fisher: dense Fisher restricted to m*d <= 500");
  const MeasureSet meas = visitation_measures(mdp, policy.to_tabular());
  const double tau_sq = policy.tau() * policy.tau();
  MatrixXd fisher = MatrixXd::Zero(n, n);
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) {
      const double w = tau_sq * meas.sigma(s, a);
      if (w == 0.0) continue;
      const ParamVector u = policy.centered_feature(s, a, policy.theta());
      fisher.noalias() += w * u * u.transpose();
    }
  return fisher;
}

ParamVector gradient_mapping(const ParamVector& theta, const ParamVector& exact_grad, double eta,
                             const NetInit& init, double radius) {
  if (eta <= 0.0) throw std::invalid_argument("gradient_mapping: eta must be positive");
  return (project_ball(theta + eta * exact_grad, init, radius) - theta) / eta;
}

std::pair<double, double> performance_difference_check(const TabularMdp& mdp,
                                                       const TabularPolicy& pi,
                                                       const TabularPolicy& pi_tilde) {
  const double lhs = expected_total_reward(mdp, pi_tilde) - expected_total_reward(mdp, pi);
  const ValueTables values = exact_values(mdp, pi);
  const MeasureSet meas_tilde = visitation_measures(mdp, pi_tilde);
  const double rhs =
      (meas_tilde.sigma.array() * values.adv.array()).sum() / (1.0 - mdp.discount);
  return {lhs, rhs};
}

ConcentrabilityReport concentrability(const TabularMdp& mdp, const EnergyPolicy& policy,
                                      const TabularPolicy& pi_star) {
  const TabularPolicy tab = policy.to_tabular();
  const MeasureSet own = all_measures(mdp, tab);
  const MeasureSet star = visitation_measures(mdp, pi_star);

  ConcentrabilityReport rep;
  double kappa_sq = 0.0, phi_sq = 0.0, phi_p_sq = 0.0;
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) {
      const double sig = own.sigma(s, a);
      const double var = own.varsigma(s, a);
      const double sig_star = star.sigma(s, a);
      kappa_sq += var * std::pow(density_ratio(sig, var, "kappa", s, a), 2);
      phi_sq += sig * std::pow(density_ratio(sig_star, sig, "phi", s, a), 2);
      phi_p_sq += var * std::pow(density_ratio(sig_star, var, "phi_prime", s, a), 2);
    }
  double psi_sq = 0.0, psi_p_sq = 0.0;
  for (int s = 0; s < mdp.n_states; ++s) {
    psi_sq += own.nu[s] * std::pow(density_ratio(star.nu[s], own.nu[s], "psi", s, -1), 2);
    psi_p_sq += own.rho[s] * std::pow(density_ratio(star.nu[s], own.rho[s], "psi_prime", s, -1), 2);
  }
  rep.kappa = std::sqrt(kappa_sq);
  rep.phi = std::sqrt(phi_sq);
  rep.psi = std::sqrt(psi_sq);
  rep.phi_prime = std::sqrt(phi_p_sq);
  rep.psi_prime = std::sqrt(psi_p_sq);
  return rep;
}

double compatibility_error(const ParamVector& theta, const ParamVector& omega,
                           const EnergyPolicy& policy, const MeasureSet& measure) {
  if (measure.sigma.size() == 0)
    throw std::invalid_argument("compatibility_error: measure must carry sigma");
  const FeatureTable at_theta(policy.init(), policy.embedding(), theta);
  const FeatureTable at_omega(policy.init(), policy.embedding(), omega);
  const VectorXd vals_theta = at_theta.values(omega);
  const VectorXd vals_omega = at_omega.values(omega);
  const int a_count = policy.n_actions();

  double sq = 0.0;
  for (int s = 0; s < policy.n_states(); ++s) {
    double mean_theta = 0.0, mean_omega = 0.0;
    for (int a = 0; a < a_count; ++a) {
      const int p = s * a_count + a;
      mean_theta += policy.prob_table()(s, a) * vals_theta[p];
      mean_omega += policy.prob_table()(s, a) * vals_omega[p];
    }
    for (int a = 0; a < a_count; ++a) {
      const int p = s * a_count + a;
      const double diff = (vals_theta[p] - mean_theta) - (vals_omega[p] - mean_omega);
      sq += measure.sigma(s, a) * diff * diff;
    }
  }
  return std::sqrt(sq);
}

OptimalityCertificate optimality_certificate(const TabularMdp& mdp, const EnergyPolicy& policy,
                                             const TabularPolicy& pi_star, double radius,
                                             double eta, int solver_max_iters,
                                             double solver_tol) {
  const TabularPolicy tab = policy.to_tabular();
  const MeasureSet own = visitation_measures(mdp, tab);
  const MeasureSet star = visitation_measures(mdp, pi_star);

  // u over the state-action space.
  VectorXd u(mdp.n_pairs());
  const VectorXd f_vals = policy.energies();
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) {
      const int p = mdp.pair_index(s, a);
      u[p] = density_ratio(star.sigma(s, a), own.sigma(s, a), "u (sigma part)", s, a) -
             density_ratio(star.nu[s], own.nu[s], "u (nu part)", s, -1) + f_vals[p];
    }

  // Ball-constrained least squares: minimize 0.5 || u - phi^T theta ||^2 in
  // L2(sigma_hat), gradient M theta - b with M = sum sigma phi phi^T.
  VectorXd sigma_flat(mdp.n_pairs());
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a)
      sigma_flat[mdp.pair_index(s, a)] = own.sigma(s, a);
  const FeatureTable& table = policy.feature_table();

  auto fit_values = [&](const ParamVector& th) { return table.values(th); };
  auto objective = [&](const ParamVector& th) {
    const VectorXd resid = fit_values(th) - u;
    return 0.5 * (sigma_flat.array() * resid.array().square()).sum();
  };
  auto gradient = [&](const ParamVector& th) {
    const VectorXd resid = fit_values(th) - u;
    ParamVector g = ParamVector::Zero(th.size());
    table.add_weighted(sigma_flat.cwiseProduct(resid), g);
    return g;
  };
  // Operator norm of M by power iteration through the callbacks.
  double lambda = 0.0;
  {
    RngStream rng(0x0B5E55ED);
    ParamVector v(policy.init().param_count());
    for (long i = 0; i < v.size(); ++i) v[i] = rng.next_gaussian();
    v /= v.norm();
    for (int it = 0; it < 20; ++it) {
      ParamVector mv = ParamVector::Zero(v.size());
      table.add_weighted(sigma_flat.cwiseProduct(fit_values(v)), mv);
      lambda = mv.norm();
      if (lambda <= 0.0) break;
      v = mv / lambda;
    }
  }

  const BallPgdResult pgd = ball_pgd(objective, gradient, lambda, policy.theta(), policy.init(),
                                     radius, solver_max_iters, solver_tol);

  OptimalityCertificate cert;
  cert.u_residual = std::sqrt(std::max(0.0, 2.0 * pgd.objective));
  cert.bound = 2.0 * mdp.q_max * cert.u_residual;
  cert.gap = expected_total_reward(mdp, pi_star) - expected_total_reward(mdp, tab);
  cert.solver_grad_mapping_norm = pgd.grad_mapping_norm;

  const ParamVector grad = exact_policy_gradient(mdp, policy);
  const double rho_norm =
      gradient_mapping(policy.theta(), grad, eta, policy.init(), radius).norm();
  cert.stationarity_slack = (2.0 * radius + 2.0 * eta * mdp.q_max) * rho_norm;
  cert.inequality_holds =
      (1.0 - mdp.discount) * cert.gap <= cert.bound + cert.stationarity_slack + 1e-9;
  return cert;
}

double stationarity_audit(const ParamVector& theta, const ParamVector& exact_grad,
                          const NetInit& init, double radius, int n_probes, std::uint64_t seed) {
  RngStream rng = RngStream::derive(seed, "stationarity-audit");
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_probes; ++i) {
    ParamVector dir(theta.size());
    for (long k = 0; k < dir.size(); ++k) dir[k] = rng.next_gaussian();
    dir /= dir.norm();
    const double len = radius * std::pow(rng.next_double(), 1.0 / 3.0);  // interior probes too
    const ParamVector probe = project_ball(init.w_init + len * dir, init, radius);
    const double dist = (probe - theta).norm();
    if (dist < 1e-12) continue;
    worst = std::max(worst, exact_grad.dot(probe - theta) / dist);
  }
  return worst;
}

}  // namespace npg
