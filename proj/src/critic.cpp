#include "npg/critic.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace npg {

CriticState init_critic(const NetInit& init) {
  CriticState state;
  state.omega = init.w_init;
  state.omega_bar = init.w_init;
  state.t = 0;
  return state;
}

double default_eta_td(double gamma, long t_td) {
  return std::min((1.0 - gamma) / 8.0, 1.0 / std::sqrt(static_cast<double>(t_td)));
}

void td_step(CriticState& state, const Transition& tuple, double eta_td, const NetInit& init,
             const Embedding& embed, double gamma, double radius) {
  const auto x = embed.table.row(embed.pair_index(tuple.s, tuple.a)).transpose();
  const auto x2 = embed.table.row(embed.pair_index(tuple.s2, tuple.a2)).transpose();
  const double q = forward(init, state.omega, x);
  const double q2 = forward(init, state.omega, x2);
  const double delta = q - (1.0 - gamma) * tuple.r - gamma * q2;

  // Semigradient: phi_omega(s,a) shares its pre-activations with q above.
  state.omega -= (eta_td * delta) * feature_map(state.omega, x, init);
  state.omega = project_ball(state.omega, init, radius);
  state.omega_bar = (static_cast<double>(state.t + 1) / static_cast<double>(state.t + 2)) *
                        state.omega_bar +
                    (1.0 / static_cast<double>(state.t + 2)) * state.omega;
  ++state.t;
}

double critic_error(const TabularMdp& mdp, const EnergyPolicy& policy, const ParamVector& omega) {
  const TabularPolicy tab = policy.to_tabular();
  const ValueTables values = exact_values(mdp, tab);
  const MeasureSet stat = stationary_measures(mdp, tab);
  const FeatureTable table(policy.init(), policy.embedding(), omega);
  const VectorXd q_omega = table.values(omega);
  double sq = 0.0;
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) {
      const double diff = q_omega[mdp.pair_index(s, a)] - values.q(s, a);
      sq += stat.varsigma(s, a) * diff * diff;
    }
  return std::sqrt(sq);
}

ParamVector train_critic(const TabularMdp& mdp, const EnergyPolicy& policy, const NetInit& init,
                         long t_td, double eta_td, double radius, std::uint64_t seed,
                         const CriticTrainOptions& options) {
  if (t_td < 1) throw std::invalid_argument("train_critic: t_td must be >= 1");
  const TabularPolicy tab = policy.to_tabular();
  const Batch batch =
      sample_stationary_transitions(mdp, tab, t_td, default_burn_in(mdp), seed);

  std::ofstream diag;
  if (!options.diag_csv_path.empty()) {
    diag.open(options.diag_csv_path);
    if (!diag) throw std::runtime_error("cannot write critic diagnostics: " + options.diag_csv_path);
    diag << "t,td_error,dist_to_init,exact_critic_error\n";
  }

  CriticState state = init_critic(init);
  for (long t = 0; t < t_td; ++t) {
    const Transition& tuple = batch.transitions[t];
    if (diag.is_open() && t % options.diag_every == 0) {
      const auto x = policy.embedding().table.row(mdp.pair_index(tuple.s, tuple.a)).transpose();
      const auto x2 =
          policy.embedding().table.row(mdp.pair_index(tuple.s2, tuple.a2)).transpose();
      const double delta = forward(init, state.omega, x) - (1.0 - mdp.discount) * tuple.r -
                           mdp.discount * forward(init, state.omega, x2);
      diag << t << "," << delta * delta << "," << dist_to_init(state.omega, init) << ","
           << critic_error(mdp, policy, state.omega_bar) << "\n";
    }
    td_step(state, tuple, eta_td, init, policy.embedding(), mdp.discount, radius);
  }
  return state.omega_bar;
}

double clipped_critic_eval(const ParamVector& omega, int s, int a, double q_max,
                           const NetInit& init, const Embedding& embed) {
  const double q = forward(init, omega, embed.table.row(embed.pair_index(s, a)).transpose());
  return std::clamp(q, -q_max, q_max);
}

}  // namespace npg
