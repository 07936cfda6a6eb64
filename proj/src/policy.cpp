#include "npg/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace npg {

EnergyPolicy::EnergyPolicy(std::shared_ptr<const NetInit> init,
                           std::shared_ptr<const Embedding> embed, ParamVector theta,
                           double tau)
    : init_(std::move(init)),
      embed_(std::move(embed)),
      theta_(std::move(theta)),
      tau_(tau),
      table_(*init_, *embed_, theta_) {
  if (tau_ < 0.0) throw std::invalid_argument("energy policy: tau must be >= 0");
  energies_ = table_.values(theta_);

  const int s_count = embed_->n_states;
  const int a_count = embed_->n_actions;
  probs_.resize(s_count, a_count);
  for (int s = 0; s < s_count; ++s) {
    double max_logit = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < a_count; ++a)
      max_logit = std::max(max_logit, tau_ * energies_[embed_->pair_index(s, a)]);
    double norm = 0.0;
    for (int a = 0; a < a_count; ++a) {
      const double e = std::exp(tau_ * energies_[embed_->pair_index(s, a)] - max_logit);
      probs_(s, a) = e;
      norm += e;
    }
    probs_.row(s) /= norm;
  }
}

ParamVector EnergyPolicy::centered_feature(int s, int a, const ParamVector& at_params) const {
  const int a_count = embed_->n_actions;
  if (s < 0 || s >= embed_->n_states || a < 0 || a >= a_count)
    throw std::invalid_argument("centered_feature: state or action out of range");
  ParamVector mean = ParamVector::Zero(init_->param_count());
  for (int a2 = 0; a2 < a_count; ++a2) {
    const ParamVector phi =
        feature_map(at_params, embed_->table.row(embed_->pair_index(s, a2)).transpose(), *init_);
    mean += probs_(s, a2) * phi;
  }
  ParamVector result =
      feature_map(at_params, embed_->table.row(embed_->pair_index(s, a)).transpose(), *init_);
  result -= mean;
  return result;
}

ParamVector EnergyPolicy::log_prob_grad(int s, int a) const {
  return tau_ * centered_feature(s, a, theta_);
}

}  // namespace npg
