#include "npg/actor.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "npg/rng.hpp"

namespace npg {

namespace {

// Distinct pairs with multiplicity / batch size, ascending pair order.
std::pair<std::vector<int>, std::vector<double>> aggregate_batch(const Batch& batch,
                                                                 int n_actions) {
  if (batch.pairs.empty()) throw std::invalid_argument("empty batch");
  std::map<int, long> counts;
  for (const auto& [s, a] : batch.pairs) ++counts[s * n_actions + a];
  std::vector<int> ids;
  std::vector<double> weights;
  ids.reserve(counts.size());
  weights.reserve(counts.size());
  const double inv_b = 1.0 / static_cast<double>(batch.pairs.size());
  for (const auto& [pair, count] : counts) {
    ids.push_back(pair);
    weights.push_back(static_cast<double>(count) * inv_b);
  }
  return {std::move(ids), std::move(weights)};
}

}  // namespace

FisherOperator::FisherOperator(const EnergyPolicy& policy, const Batch& batch,
                               double memory_budget_reals)
    : policy_(&policy), tau_(policy.tau()), batch_size_(static_cast<long>(batch.pairs.size())) {
  auto [ids, weights] = aggregate_batch(batch, policy.n_actions());
  pair_ids_ = std::move(ids);
  weights_ = std::move(weights);
  const double cache_cost = static_cast<double>(pair_ids_.size()) *
                            static_cast<double>(policy.init().param_count());
  materialized_ = cache_cost <= memory_budget_reals;
  if (materialized_) {
    cache_.reserve(pair_ids_.size());
    for (size_t i = 0; i < pair_ids_.size(); ++i) cache_.push_back(centered(static_cast<int>(i)));
  }
}

ParamVector FisherOperator::centered(int id) const {
  const int pair = pair_ids_[id];
  const int s = pair / policy_->n_actions();
  const int a = pair % policy_->n_actions();
  return policy_->centered_feature(s, a, policy_->theta());
}

ParamVector FisherOperator::apply(const ParamVector& v) const {
  if (v.size() != policy_->init().param_count())
    throw std::invalid_argument("fisher apply: dimension mismatch");
  ParamVector out = ParamVector::Zero(v.size());
  const double tau_sq = tau_ * tau_;
  for (size_t i = 0; i < pair_ids_.size(); ++i) {
    if (materialized_) {
      const ParamVector& u = cache_[i];
      out += (tau_sq * weights_[i] * u.dot(v)) * u;
    } else {
      const ParamVector u = centered(static_cast<int>(i));
      out += (tau_sq * weights_[i] * u.dot(v)) * u;
    }
  }
  return out;
}

double FisherOperator::op_norm_estimate(int iters) const {
  const long n = policy_->init().param_count();
  RngStream rng(0x5EEDF15E);  // fixed key: the estimate must not depend on run seeds
  ParamVector v(n);
  for (long i = 0; i < n; ++i) v[i] = rng.next_gaussian();
  double norm = v.norm();
  if (norm == 0.0) return 0.0;
  v /= norm;
  double lambda = 0.0;
  for (int it = 0; it < iters; ++it) {
    ParamVector fv = apply(v);
    lambda = fv.norm();
    if (lambda <= 0.0) return 0.0;
    v = fv / lambda;
  }
  return lambda;
}

ParamVector fisher_apply(const FisherOperator& op, const ParamVector& v) { return op.apply(v); }

GradientEstimate estimate_policy_gradient(const EnergyPolicy& policy, const CriticEval& critic,
                                          const Batch& batch, double discount) {
  auto [ids, weights] = aggregate_batch(batch, policy.n_actions());
  VectorXd pair_weights =
      VectorXd::Zero(static_cast<long>(policy.n_states()) * policy.n_actions());
  for (size_t i = 0; i < ids.size(); ++i) pair_weights[ids[i]] = weights[i];
  GradientEstimate est = weighted_policy_gradient(policy, critic, pair_weights, discount);
  est.batch_size = static_cast<long>(batch.pairs.size());
  return est;
}

GradientEstimate weighted_policy_gradient(const EnergyPolicy& policy, const CriticEval& critic,
                                          const VectorXd& pair_weights, double discount) {
  if (pair_weights.size() != static_cast<long>(policy.n_states()) * policy.n_actions())
    throw std::invalid_argument("weighted_policy_gradient: weight count != pair count");
  if (discount <= 0.0 || discount >= 1.0)
    throw std::invalid_argument("weighted_policy_gradient: discount must lie in (0, 1)");
  const double scale = policy.tau() / (1.0 - discount);
  ParamVector ghat = ParamVector::Zero(policy.init().param_count());
  for (long p = 0; p < pair_weights.size(); ++p) {
    if (pair_weights[p] == 0.0) continue;
    const int s = static_cast<int>(p) / policy.n_actions();
    const int a = static_cast<int>(p) % policy.n_actions();
    const ParamVector u = policy.centered_feature(s, a, policy.theta());
    ghat += (pair_weights[p] * critic(s, a) * scale) * u;
  }
  return {std::move(ghat), 0};
}

ParamVector vanilla_pg_update(const ParamVector& theta, const ParamVector& ghat, double eta,
                              const NetInit& init, double radius) {
  return project_ball(theta + eta * ghat, init, radius);
}

BallPgdResult ball_pgd(const std::function<double(const ParamVector&)>& objective,
                       const std::function<ParamVector(const ParamVector&)>& gradient,
                       double lipschitz, const ParamVector& start, const NetInit& init,
                       double radius, int max_iters, double tol) {
  BallPgdResult result;
  result.x = project_ball(start, init, radius);
  result.objective = objective(result.x);

  if (!(lipschitz > 0.0) || !std::isfinite(lipschitz)) {
    // Degenerate curvature (zero operator): the objective is constant in
    // every feasible direction that matters; the start point stands.
    result.converged = true;
    return result;
  }
  const double step = 1.0 / lipschitz;

  ParamVector x = result.x;
  double best_obj = result.objective;
  ParamVector best_x = x;
  for (int it = 0; it < max_iters; ++it) {
    const ParamVector g = gradient(x);
    const ParamVector next = project_ball(x - step * g, init, radius);
    const double gm_norm = (x - next).norm() / step;
    x = next;
    const double obj = objective(x);
    if (obj < best_obj) {
      best_obj = obj;
      best_x = x;
    }
    result.iters = it + 1;
    result.grad_mapping_norm = gm_norm;
    if (gm_norm <= tol) {
      result.converged = true;
      break;
    }
  }
  result.x = std::move(best_x);
  result.objective = best_obj;
  return result;
}

NpgDirection npg_solve(const FisherOperator& op, const ParamVector& target, const NetInit& init,
                       double radius, const ParamVector& warm_start, int max_iters, double tol) {
  if (target.size() != init.param_count())
    throw std::invalid_argument("npg_solve: target dimension mismatch");

  auto residual_vec = [&](const ParamVector& alpha) -> ParamVector {
    return op.apply(alpha) - target;
  };
  auto objective = [&](const ParamVector& alpha) {
    return 0.5 * residual_vec(alpha).squaredNorm();
  };
  auto gradient = [&](const ParamVector& alpha) -> ParamVector {
    return op.apply(residual_vec(alpha));
  };

  const double lambda_hat = op.op_norm_estimate();
  const BallPgdResult pgd = ball_pgd(objective, gradient, lambda_hat * lambda_hat, warm_start,
                                     init, radius, max_iters, tol);

  NpgDirection dir;
  dir.delta = pgd.x;
  dir.residual = residual_vec(pgd.x).norm();
  dir.solver_iters = pgd.iters;
  dir.converged = pgd.converged;
  return dir;
}

std::pair<double, ParamVector> npg_update(double tau_i, const ParamVector& theta_i,
                                          const ParamVector& delta, double eta) {
  if (eta <= 0.0) throw std::invalid_argument("npg_update: eta must be positive");
  const double tau_next = tau_i + eta;
  return {tau_next, npg_combine(tau_i, theta_i, delta, eta, tau_next)};
}

ParamVector npg_combine(double tau_i, const ParamVector& theta_i, const ParamVector& delta,
                        double eta, double tau_next) {
  if (tau_i == 0.0) return delta;  // (0 * theta + eta * delta) / eta, exactly
  return (tau_i * theta_i + eta * delta) / tau_next;
}

ParamVector projection_free_update(const ParamVector& theta, const EnergyPolicy& policy,
                                   const CriticEval& clipped_critic, const Batch& batch,
                                   double eta, double discount) {
  const GradientEstimate est = estimate_policy_gradient(policy, clipped_critic, batch, discount);
  return theta + eta * est.ghat;
}

double gradient_noise_estimate(const TabularMdp& mdp, const EnergyPolicy& policy,
                               const CriticEval& critic, long batch_size, int n_batches,
                               std::uint64_t seed) {
  if (n_batches < 2)
    throw std::invalid_argument("gradient_noise_estimate: need at least 2 batches");
  const TabularPolicy tab = policy.to_tabular();
  std::vector<ParamVector> estimates;
  estimates.reserve(n_batches);
  ParamVector mean = ParamVector::Zero(policy.init().param_count());
  for (int k = 0; k < n_batches; ++k) {
    const std::uint64_t batch_seed = RngStream::derive(seed, "noise-batch", k).next_u64();
    const Batch batch =
        sample_visitation(mdp, tab, batch_size, default_burn_in(mdp), batch_seed);
    estimates.push_back(
        estimate_policy_gradient(policy, critic, batch, mdp.discount).ghat);
    mean += estimates.back();
  }
  mean /= static_cast<double>(n_batches);
  double variance = 0.0;
  for (const auto& g : estimates) variance += (g - mean).squaredNorm();
  return variance / static_cast<double>(n_batches - 1);
}

}  // namespace npg
