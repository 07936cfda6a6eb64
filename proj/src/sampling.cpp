#include "npg/sampling.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "npg/rng.hpp"

namespace npg {

MatrixXd Batch::empirical_pair_distribution(int n_states, int n_actions) const {
  MatrixXd counts = MatrixXd::Zero(n_states, n_actions);
  for (const auto& [s, a] : pairs) counts(s, a) += 1.0;
  if (!pairs.empty()) counts /= static_cast<double>(pairs.size());
  return counts;
}

int default_burn_in(const TabularMdp& mdp) {
  return 10 * static_cast<int>(std::ceil(1.0 / (1.0 - mdp.discount)));
}

Batch sample_visitation(const TabularMdp& mdp, const TabularPolicy& policy, long batch_size,
                        int burn_in, std::uint64_t seed) {
  if (batch_size < 1) throw std::invalid_argument("sample_visitation: batch size must be >= 1");
  mdp.validate();
  policy.validate(mdp);

  RngStream rng = RngStream::derive(seed, "visitation-sampler");
  Batch out;
  out.pairs.reserve(batch_size);

  int s = rng.next_categorical(mdp.init_dist);
  int a = rng.next_categorical(policy.probs.row(s).transpose());
  for (long step = 0; step < burn_in + batch_size; ++step) {
    if (step >= burn_in) out.pairs.emplace_back(s, a);
    // Restart kernel: continue with probability gamma, restart from the
    // initial distribution otherwise.
    if (rng.next_double() < mdp.discount) {
      s = rng.next_categorical(mdp.transition.row(mdp.pair_index(s, a)).transpose());
    } else {
      s = rng.next_categorical(mdp.init_dist);
      ++out.n_restarts;
    }
    a = rng.next_categorical(policy.probs.row(s).transpose());
    ++out.n_steps;
  }
  return out;
}

Batch sample_stationary_transitions(const TabularMdp& mdp, const TabularPolicy& policy,
                                    long batch_size, int burn_in, std::uint64_t seed) {
  if (batch_size < 1)
    throw std::invalid_argument("sample_stationary_transitions: batch size must be >= 1");
  mdp.validate();
  policy.validate(mdp);

  RngStream rng = RngStream::derive(seed, "stationary-sampler");
  Batch out;
  out.pairs.reserve(batch_size);
  out.transitions.reserve(batch_size);

  int s = rng.next_categorical(mdp.init_dist);
  int a = rng.next_categorical(policy.probs.row(s).transpose());
  for (long step = 0; step < burn_in + batch_size; ++step) {
    const int s2 = rng.next_categorical(mdp.transition.row(mdp.pair_index(s, a)).transpose());
    const int a2 = rng.next_categorical(policy.probs.row(s2).transpose());
    if (step >= burn_in) {
      out.pairs.emplace_back(s, a);
      out.transitions.push_back({s, a, mdp.reward(s, a), s2, a2});
    }
    s = s2;
    a = a2;
    ++out.n_steps;
  }
  return out;
}

void dump_batch_csv(const Batch& batch, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write batch dump: " + path);
  if (batch.transitions.empty()) {
    out << "s,a\n";
    for (const auto& [s, a] : batch.pairs) out << s << "," << a << "\n";
  } else {
    out << "s,a,r,s2,a2\n";
    for (const auto& t : batch.transitions)
      out << t.s << "," << t.a << "," << t.r << "," << t.s2 << "," << t.a2 << "\n";
  }
}

}  // namespace npg
