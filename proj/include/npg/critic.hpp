#pragma once

#include <cstdint>
#include <string>

#include "npg/mdp.hpp"
#include "npg/net.hpp"
#include "npg/policy.hpp"
#include "npg/sampling.hpp"

namespace npg {

// State of projected TD(0) with Polyak averaging. omega stays inside the
// ball of radius R around w_init (projection every step); omega_bar follows
// the running-mean recursion bar <- (t+1)/(t+2) bar + 1/(t+2) omega(t+1),
// starting from omega(0) = w_init, so after T steps it is the mean of the
// T+1 projected iterates.
struct CriticState {
  ParamVector omega;
  ParamVector omega_bar;
  long t = 0;
};

CriticState init_critic(const NetInit& init);

// eta_TD default per the analysis of the critic update.
double default_eta_td(double gamma, long t_td);

// One stochastic semigradient step on one transition tuple:
//   delta = Q(s,a) - (1-gamma) r - gamma Q(s',a')
//   omega <- Pi_ball(omega - eta delta phi_omega(s,a))
// The bootstrap target is treated as a constant (no gradient flows through
// it), and the (1-gamma) reward scaling of the value convention is kept.
void td_step(CriticState& state, const Transition& tuple, double eta_td, const NetInit& init,
             const Embedding& embed, double gamma, double radius);

struct CriticTrainOptions {
  std::string diag_csv_path;  // when nonempty: rows (t, td_error, dist_to_init, exact_critic_error)
  int diag_every = 100;
};

// Exact L2(varsigma) critic error || Q_omega - Q^pi ||, computed from the
// dense solver and the stationary distribution of the policy's chain.
double critic_error(const TabularMdp& mdp, const EnergyPolicy& policy, const ParamVector& omega);

// Full neural TD run: omega(0) = w_init (shared initialization with the
// actor), one fresh transition per iteration from the stationary sampler,
// projection and averaging every step. Returns omega_bar.
ParamVector train_critic(const TabularMdp& mdp, const EnergyPolicy& policy, const NetInit& init,
                         long t_td, double eta_td, double radius, std::uint64_t seed,
                         const CriticTrainOptions& options = {});

// Critic value clamped into [-q_max, q_max]; passes Q_omega through
// unchanged on the interior.
double clipped_critic_eval(const ParamVector& omega, int s, int a, double q_max,
                           const NetInit& init, const Embedding& embed);

}  // namespace npg
