#pragma once

#include <cstdint>
#include <utility>

#include <Eigen/Dense>

namespace npg {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Finite discounted MDP. Transition rows are indexed by the flattened
// state-action pair s*n_actions + a; reward is a dense S x A table. Values
// follow the scaled convention: V and Q carry a (1-gamma) prefactor, so
// |V|, |Q| <= q_max and |A| <= 2*q_max whenever |r| <= q_max.
struct TabularMdp {
  int n_states = 0;
  int n_actions = 0;
  MatrixXd transition;  // (S*A) x S, each row a probability vector
  MatrixXd reward;      // S x A
  double discount = 0.9;
  VectorXd init_dist;   // S
  double q_max = 1.0;

  int pair_index(int s, int a) const { return s * n_actions + a; }
  int n_pairs() const { return n_states * n_actions; }

  // Throws std::invalid_argument on any violated invariant (row sums,
  // negative probabilities, |r| > q_max, discount range).
  void validate() const;
};

struct TabularPolicy {
  MatrixXd probs;  // S x A, rows sum to 1

  void validate(const TabularMdp& mdp) const;
};

// V, Q and the advantage A = Q - V for one policy.
struct ValueTables {
  VectorXd v;   // S
  MatrixXd q;   // S x A
  MatrixXd adv; // S x A
};

// Occupancy measures of one policy. The discounted visitation parts
// (nu, sigma) and the stationary parts (rho, varsigma) are filled by
// visitation_measures and stationary_measures respectively; all_measures
// fills all four. Unfilled parts have size zero.
struct MeasureSet {
  VectorXd nu;       // S, discounted state visitation
  MatrixXd sigma;    // S x A, discounted state-action visitation
  VectorXd rho;      // S, stationary state distribution
  MatrixXd varsigma; // S x A, stationary state-action distribution
};

// Unit-norm input vector per state-action pair. Pairs are embedded as
// seeded Gaussian directions on the sphere, which keeps distinct pairs in
// generic position.
struct Embedding {
  int n_states = 0;
  int n_actions = 0;
  int dim = 0;
  MatrixXd table;  // (S*A) x dim, unit rows

  int pair_index(int s, int a) const { return s * n_actions + a; }
};

Embedding build_embedding(const TabularMdp& mdp, int dim, std::uint64_t seed);

// State-to-state kernel of the chain induced by the policy.
MatrixXd policy_transition(const TabularMdp& mdp, const TabularPolicy& policy);

// Exact Q from the linear Bellman system Q = (1-gamma) r + gamma P Pi Q,
// solved by dense LU. V is the policy average of Q, adv = Q - V.
ValueTables exact_values(const TabularMdp& mdp, const TabularPolicy& policy);

// Discounted visitation: nu = (1-gamma) (I - gamma P_pi^T)^{-1} zeta and
// sigma(s,a) = pi(a|s) nu(s). Only nu/sigma are filled.
MeasureSet visitation_measures(const TabularMdp& mdp, const TabularPolicy& policy);

// Stationary distribution of the induced chain by power iteration
// (cap 1e5 sweeps, residual tolerance 1e-10 in l1). Throws std::runtime_error
// with the final residual if the chain fails to mix. Only rho/varsigma are
// filled.
MeasureSet stationary_measures(const TabularMdp& mdp, const TabularPolicy& policy);

MeasureSet all_measures(const TabularMdp& mdp, const TabularPolicy& policy);

// J(pi) = E_zeta[V^pi].
double expected_total_reward(const TabularMdp& mdp, const TabularPolicy& policy);

// Independent second route: J(pi) = E_sigma[r]. Kept separate from
// expected_total_reward so the two can cross-check each other.
double expected_total_reward_occupancy(const TabularMdp& mdp, const TabularPolicy& policy);

// Greedy policy from value iteration on Q*, sup-norm tolerance 1e-12,
// ties broken toward the lowest action index. Throws std::runtime_error if
// the iteration cap is exceeded.
TabularPolicy optimal_policy(const TabularMdp& mdp);

TabularPolicy uniform_policy(const TabularMdp& mdp);

}  // namespace npg
