#pragma once

#include <memory>

#include "npg/mdp.hpp"
#include "npg/net.hpp"

namespace npg {

// Softmax policy over network energies, pi(a|s) proportional to
// exp(tau * f((s,a); theta)). Instances are immutable snapshots: energies,
// probabilities, and the activation table at theta are computed once at
// construction, so concurrent readers are safe.
//
// tau lives next to theta rather than inside it because the natural-gradient
// update advances the two on different schedules. tau = 0 is allowed and
// yields the uniform policy.
class EnergyPolicy {
 public:
  EnergyPolicy(std::shared_ptr<const NetInit> init, std::shared_ptr<const Embedding> embed,
               ParamVector theta, double tau);

  const ParamVector& theta() const { return theta_; }
  double tau() const { return tau_; }
  const NetInit& init() const { return *init_; }
  const Embedding& embedding() const { return *embed_; }
  std::shared_ptr<const NetInit> init_ptr() const { return init_; }
  std::shared_ptr<const Embedding> embed_ptr() const { return embed_; }
  const FeatureTable& feature_table() const { return table_; }

  int n_states() const { return embed_->n_states; }
  int n_actions() const { return embed_->n_actions; }

  // Action distribution at one state; rows of prob_table() sum to 1 within
  // 1e-12 (max-shifted exponentials, safe for |tau * f| up to hundreds).
  VectorXd action_probs(int s) const { return probs_.row(s).transpose(); }
  const MatrixXd& prob_table() const { return probs_; }
  const VectorXd& energies() const { return energies_; }  // f((s,a); theta) per pair

  TabularPolicy to_tabular() const { return TabularPolicy{probs_}; }

  // phi_at(s,a) - E_{a' ~ pi_theta(.|s)}[phi_at(s,a')], expanded. With
  // at_params = theta this is the direction of the score function; with
  // at_params = w_init it is the centered feature at the initialization.
  ParamVector centered_feature(int s, int a, const ParamVector& at_params) const;

  // Score function: tau * centered_feature(s, a, theta).
  ParamVector log_prob_grad(int s, int a) const;

 private:
  std::shared_ptr<const NetInit> init_;
  std::shared_ptr<const Embedding> embed_;
  ParamVector theta_;
  double tau_;
  FeatureTable table_;
  VectorXd energies_;
  MatrixXd probs_;
};

}  // namespace npg
