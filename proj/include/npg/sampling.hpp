#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "npg/mdp.hpp"

namespace npg {

struct Transition {
  int s = 0;
  int a = 0;
  double r = 0.0;
  int s2 = 0;
  int a2 = 0;
};

// A batch of state-action pairs, optionally with full transition tuples.
// Pairs come from one continued chain, so successive samples are only
// approximately independent; the marginal is what the samplers control.
struct Batch {
  std::vector<std::pair<int, int>> pairs;
  std::vector<Transition> transitions;  // filled by the stationary sampler

  // Restart bookkeeping for the visitation sampler: over long runs the
  // restart fraction tends to 1 - gamma.
  long n_restarts = 0;
  long n_steps = 0;

  MatrixXd empirical_pair_distribution(int n_states, int n_actions) const;
};

// Default burn-in: ten horizons of the restart chain.
int default_burn_in(const TabularMdp& mdp);

// Samples from the discounted state-action visitation measure by running
// the restart kernel gamma P + (1-gamma) zeta: at every transition the
// chain restarts from the initial distribution with probability 1 - gamma.
// One chain is burned in and then emits B consecutive pairs.
Batch sample_visitation(const TabularMdp& mdp, const TabularPolicy& policy, long batch_size,
                        int burn_in, std::uint64_t seed);

// Samples (s, a, r, s', a') tuples with (s, a) approximately from the
// stationary state-action distribution: the original chain is run past
// burn_in, then each step emits its transition. r is the table reward,
// s' ~ P(.|s,a), a' ~ pi(.|s').
Batch sample_stationary_transitions(const TabularMdp& mdp, const TabularPolicy& policy,
                                    long batch_size, int burn_in, std::uint64_t seed);

// Debug dump: one line per sample, "s,a" or "s,a,r,s2,a2".
void dump_batch_csv(const Batch& batch, const std::string& path);

}  // namespace npg
