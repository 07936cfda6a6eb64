#pragma once

#include <utility>

#include "npg/actor.hpp"
#include "npg/mdp.hpp"
#include "npg/net.hpp"
#include "npg/policy.hpp"

namespace npg {

// Exact policy gradient on a tabular MDP:
//   tau * sum_{s,a} sigma(s,a) Q(s,a) (phi_theta(s,a) - E_pi[phi_theta(s,.)])
// with Q and sigma from the dense solvers.
ParamVector exact_policy_gradient(const TabularMdp& mdp, const EnergyPolicy& policy);

// Same weighting with an arbitrary critic in place of the exact Q.
ParamVector exact_policy_gradient_with_critic(const TabularMdp& mdp, const EnergyPolicy& policy,
                                              const CriticEval& critic);

// Dense Fisher information tau^2 E_sigma[centered centered^T]. Guarded to
// m*d <= 500: the matrix is only ever materialized at oracle scale.
MatrixXd exact_fisher(const TabularMdp& mdp, const EnergyPolicy& policy);

// rho = eta^{-1} [Pi_ball(theta + eta grad) - theta]; zero exactly at
// constrained stationary points, equal to grad while the step stays
// interior.
ParamVector gradient_mapping(const ParamVector& theta, const ParamVector& exact_grad, double eta,
                             const NetInit& init, double radius);

// Both sides of the performance-difference identity
//   J(pi_tilde) - J(pi)  vs  (1-gamma)^{-1} E_{sigma_tilde}[A^pi(s,a)],
// each from independent exact solves.
std::pair<double, double> performance_difference_check(const TabularMdp& mdp,
                                                       const TabularPolicy& pi,
                                                       const TabularPolicy& pi_tilde);

// L2 Radon-Nikodym moments between the policy's measures and the optimal
// policy's visitation measures. All coefficients equal 1 exactly when the
// compared measures coincide.
struct ConcentrabilityReport {
  double kappa = 0.0;      // E_varsigma[(d sigma / d varsigma)^2]^(1/2)
  double phi = 0.0;        // E_sigma[(d sigma* / d sigma)^2]^(1/2)
  double psi = 0.0;        // E_nu[(d nu* / d nu)^2]^(1/2)
  double phi_prime = 0.0;  // E_varsigma[(d sigma* / d varsigma)^2]^(1/2)
  double psi_prime = 0.0;  // E_rho[(d nu* / d rho)^2]^(1/2)
};
ConcentrabilityReport concentrability(const TabularMdp& mdp, const EnergyPolicy& policy,
                                      const TabularPolicy& pi_star);

// || (centered_theta - centered_omega)^T omega ||_{L2(sigma)}: how far the
// critic's advantage direction drifts from the actor's score direction
// under a shared initialization. Zero when theta = omega.
double compatibility_error(const ParamVector& theta, const ParamVector& omega,
                           const EnergyPolicy& policy, const MeasureSet& measure);

// Suboptimality certificate at theta_hat:
//   u(s,a) = d sigma*/d sigma_hat - d nu*/d nu_hat + f((s,a); theta_hat)
// and the ball-constrained least-squares fit of u by phi_theta_hat^T theta.
// bound = 2 q_max * u_residual. The certificate only binds when theta_hat
// is (numerically) stationary; stationarity_slack = (2R + 2 eta q_max) *
// ||gradient mapping|| absorbs the distance from exact stationarity.
struct OptimalityCertificate {
  double gap = 0.0;         // J(pi*) - J(pi_hat)
  double bound = 0.0;       // 2 q_max * u_residual
  double u_residual = 0.0;  // || u - phi^T theta_opt ||_{L2(sigma_hat)}
  double solver_grad_mapping_norm = 0.0;
  double stationarity_slack = 0.0;
  bool inequality_holds = false;  // (1-gamma) gap <= bound + stationarity_slack
};
OptimalityCertificate optimality_certificate(const TabularMdp& mdp, const EnergyPolicy& policy,
                                             const TabularPolicy& pi_star, double radius,
                                             double eta, int solver_max_iters = 2000,
                                             double solver_tol = 1e-8);

// Variational-inequality audit: max over random ball probes of
// grad^T (theta_probe - theta) / ||theta_probe - theta||. Near zero (below
// epsilon) exactly when the gradient mapping vanishes.
double stationarity_audit(const ParamVector& theta, const ParamVector& exact_grad,
                          const NetInit& init, double radius, int n_probes,
                          std::uint64_t seed);

}  // namespace npg
