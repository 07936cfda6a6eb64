#pragma once

#include <cmath>
#include <cstdint>

#include "npg/mdp.hpp"
#include "npg/net.hpp"
#include "npg/rng.hpp"

namespace npg::test {

// Dense random MDP: every transition row is a full-support random simplex
// point, rewards uniform in [0, 1). Ergodic by construction.
inline TabularMdp random_mdp(int n_states, int n_actions, double gamma, std::uint64_t seed) {
  TabularMdp mdp;
  mdp.n_states = n_states;
  mdp.n_actions = n_actions;
  mdp.discount = gamma;
  mdp.q_max = 1.0;
  mdp.transition.resize(mdp.n_pairs(), n_states);
  mdp.reward.resize(n_states, n_actions);
  mdp.init_dist.resize(n_states);
  RngStream rng = RngStream::derive(seed, "test-mdp");
  for (int p = 0; p < mdp.n_pairs(); ++p) {
    double total = 0.0;
    for (int s2 = 0; s2 < n_states; ++s2) {
      mdp.transition(p, s2) = -std::log(1.0 - rng.next_double());
      total += mdp.transition(p, s2);
    }
    mdp.transition.row(p) /= total;
  }
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a) mdp.reward(s, a) = rng.next_double();
  double total = 0.0;
  for (int s = 0; s < n_states; ++s) {
    mdp.init_dist[s] = -std::log(1.0 - rng.next_double());
    total += mdp.init_dist[s];
  }
  mdp.init_dist /= total;
  mdp.validate();
  return mdp;
}

inline TabularPolicy random_policy(const TabularMdp& mdp, std::uint64_t seed) {
  TabularPolicy policy;
  policy.probs.resize(mdp.n_states, mdp.n_actions);
  RngStream rng = RngStream::derive(seed, "test-policy");
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

inline ParamVector random_ball_point(const NetInit& init, double radius, std::uint64_t seed,
                                     bool on_sphere = false) {
  RngStream rng = RngStream::derive(seed, "test-ball-point");
  ParamVector v(init.param_count());
  for (long i = 0; i < v.size(); ++i) v[i] = rng.next_gaussian();
  const double len = on_sphere ? radius : radius * std::cbrt(rng.next_double());
  return init.w_init + (len / v.norm()) * v;
}

}  // namespace npg::test
