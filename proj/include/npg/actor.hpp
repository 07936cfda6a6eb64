#pragma once

#include <functional>
#include <vector>

#include "npg/mdp.hpp"
#include "npg/net.hpp"
#include "npg/policy.hpp"
#include "npg/sampling.hpp"

namespace npg {

using CriticEval = std::function<double(int s, int a)>;

struct GradientEstimate {
  ParamVector ghat;
  long batch_size = 0;
};

// Matrix-free estimator of the Fisher information at the policy's
// parameters, built from a batch sampled from the visitation measure:
//   apply(v) = (tau^2 / B) sum_l u_l (u_l^T v),  u_l = centered feature of
// the l-th sample. Samples sharing a state-action pair share their centered
// feature, so the operator aggregates the batch by distinct pair with
// multiplicities; the sum above is unchanged.
//
// Centered features are cached as dense vectors while pairs * m * d stays
// under the memory budget, otherwise they are re-expanded from the policy's
// activation table on every apply. Both paths run the same per-pair
// arithmetic in the same order and agree bitwise.
//
// Keeps a reference to the policy; the operator must not outlive it.
class FisherOperator {
 public:
  FisherOperator(const EnergyPolicy& policy, const Batch& batch,
                 double memory_budget_reals = 2e8);

  ParamVector apply(const ParamVector& v) const;
  double tau() const { return tau_; }
  long batch_size() const { return batch_size_; }
  bool materialized() const { return materialized_; }
  int distinct_pairs() const { return static_cast<int>(pair_ids_.size()); }

  // Largest eigenvalue estimate by power iteration (deterministic start).
  double op_norm_estimate(int iters = 20) const;

 private:
  ParamVector centered(int id) const;  // expand the centered feature of pair_ids_[id]

  const EnergyPolicy* policy_;
  double tau_ = 0.0;
  long batch_size_ = 0;
  std::vector<int> pair_ids_;     // distinct flattened pairs, ascending
  std::vector<double> weights_;   // multiplicity / B per pair
  bool materialized_ = false;
  std::vector<ParamVector> cache_;
};

// Sample-mean policy-gradient estimator
//   ghat = 1/((1-gamma) B) sum_l Q(s_l, a_l) * tau * centered_feature(s_l, a_l),
// aggregated over distinct pairs exactly as the Fisher operator.
//
// The 1/(1-gamma) prefactor makes the estimator unbiased for the true
// gradient of J under the scaled value convention, where both Q and the
// visitation measure already carry a (1-gamma) normalization; finite
// differences of the exact J confirm the constant.
GradientEstimate estimate_policy_gradient(const EnergyPolicy& policy, const CriticEval& critic,
                                          const Batch& batch, double discount);

// Same estimator with explicit nonnegative pair weights over the flattened
// state-action space in place of empirical frequencies. An exhaustive
// weighting by the exact visitation measure reproduces the closed-form
// gradient.
GradientEstimate weighted_policy_gradient(const EnergyPolicy& policy, const CriticEval& critic,
                                          const VectorXd& pair_weights, double discount);

// Noise diagnostic for the gradient estimator: the sample variance
// E ||ghat_k - mean(ghat)||^2 across freshly resampled batches of the given
// size. Purely observational; nothing in the updates consumes it.
double gradient_noise_estimate(const TabularMdp& mdp, const EnergyPolicy& policy,
                               const CriticEval& critic, long batch_size, int n_batches,
                               std::uint64_t seed);

// Projected ascent step theta <- Pi_ball(theta + eta ghat).
ParamVector vanilla_pg_update(const ParamVector& theta, const ParamVector& ghat, double eta,
                              const NetInit& init, double radius);

// Free-function form of FisherOperator::apply.
ParamVector fisher_apply(const FisherOperator& op, const ParamVector& v);

struct NpgDirection {
  ParamVector delta;
  double residual = 0.0;    // ||F delta - target||_2 at the returned point
  int solver_iters = 0;
  bool converged = false;   // gradient-mapping tolerance reached
};

// Ball-constrained least squares min_{alpha in ball} ||F alpha - target||_2
// by projected gradient descent with step 1/lambda_hat^2, warm-started at
// warm_start (the critic parameters in the actor loop). The returned point
// never has larger residual than the warm start; if the iteration budget
// runs out the best iterate so far is returned with converged = false.
NpgDirection npg_solve(const FisherOperator& op, const ParamVector& target, const NetInit& init,
                       double radius, const ParamVector& warm_start, int max_iters = 200,
                       double tol = 1e-8);

// Natural-gradient actor update:
//   tau_next = tau + eta,  theta_next = (tau theta + eta delta) / tau_next.
// theta_next is a convex combination of ball points, hence stays in the
// ball. tau = 0 returns delta itself (the first update forgets theta).
std::pair<double, ParamVector> npg_update(double tau_i, const ParamVector& theta_i,
                                          const ParamVector& delta, double eta);

// Same combination with the next temperature supplied explicitly, for
// schedules that pin tau_i = (i-1) eta exactly.
ParamVector npg_combine(double tau_i, const ParamVector& theta_i, const ParamVector& delta,
                        double eta, double tau_next);

// Unconstrained ascent step with a clipped critic; the clipping bounds the
// step by eta * 2 tau q_max / (1-gamma).
ParamVector projection_free_update(const ParamVector& theta, const EnergyPolicy& policy,
                                   const CriticEval& clipped_critic, const Batch& batch,
                                   double eta, double discount);

// Shared ball-constrained PGD core: minimizes a smooth convex objective
// given by (objective, gradient) callbacks over the ball of radius R around
// init.w_init. Used by npg_solve and the optimality certificate.
struct BallPgdResult {
  ParamVector x;
  double objective = 0.0;
  double grad_mapping_norm = 0.0;
  int iters = 0;
  bool converged = false;
};
BallPgdResult ball_pgd(const std::function<double(const ParamVector&)>& objective,
                       const std::function<ParamVector(const ParamVector&)>& gradient,
                       double lipschitz, const ParamVector& start, const NetInit& init,
                       double radius, int max_iters, double tol);

}  // namespace npg
