#include "npg/mdp.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "npg/rng.hpp"

namespace npg {

namespace {
constexpr double kRowSumTol = 1e-12;
constexpr double kStationaryTol = 1e-10;
constexpr int kPowerIterCap = 100000;
constexpr double kValueIterTol = 1e-12;
constexpr long kValueIterCap = 2000000;
}  // namespace

void TabularMdp::validate() const {
  if (n_states <= 0 || n_actions <= 0)
    throw std::invalid_argument("mdp: n_states and n_actions must be positive");
  if (discount <= 0.0 || discount >= 1.0)
    throw std::invalid_argument("mdp: discount must lie in (0, 1)");
  if (transition.rows() != n_pairs() || transition.cols() != n_states)
    throw std::invalid_argument("mdp: transition must be (S*A) x S");
  if (reward.rows() != n_states || reward.cols() != n_actions)
    throw std::invalid_argument("mdp: reward must be S x A");
  if (init_dist.size() != n_states)
    throw std::invalid_argument("mdp: init_dist must have S entries");
  if (q_max <= 0.0) throw std::invalid_argument("mdp: q_max must be positive");

  for (int p = 0; p < n_pairs(); ++p) {
    if (transition.row(p).minCoeff() < 0.0)
      throw std::invalid_argument("mdp: negative transition probability");
    if (std::abs(transition.row(p).sum() - 1.0) > kRowSumTol) {
      std::ostringstream msg;
      msg << "mdp: transition row " << p << " sums to " << transition.row(p).sum();
      throw std::invalid_argument(msg.str());
    }
  }
  if (reward.cwiseAbs().maxCoeff() > q_max + 1e-12)
    throw std::invalid_argument("mdp: |reward| exceeds q_max");
  if (init_dist.minCoeff() < 0.0)
    throw std::invalid_argument("mdp: negative init_dist entry");
  if (std::abs(init_dist.sum() - 1.0) > kRowSumTol)
    throw std::invalid_argument("mdp: init_dist does not sum to 1");
}

void TabularPolicy::validate(const TabularMdp& mdp) const {
  if (probs.rows() != mdp.n_states || probs.cols() != mdp.n_actions)
    throw std::invalid_argument("policy: probs must be S x A");
  for (int s = 0; s < mdp.n_states; ++s) {
    if (probs.row(s).minCoeff() < 0.0)
      throw std::invalid_argument("policy: negative probability");
    if (std::abs(probs.row(s).sum() - 1.0) > kRowSumTol)
      throw std::invalid_argument("policy: row does not sum to 1");
  }
}

Embedding build_embedding(const TabularMdp& mdp, int dim, std::uint64_t seed) {
  if (dim < 2) throw std::invalid_argument("build_embedding: dim must be >= 2");
  Embedding emb;
  emb.n_states = mdp.n_states;
  emb.n_actions = mdp.n_actions;
  emb.dim = dim;
  emb.table.resize(mdp.n_pairs(), dim);
  RngStream rng = RngStream::derive(seed, "embedding");
  for (int p = 0; p < mdp.n_pairs(); ++p) {
    for (int k = 0; k < dim; ++k) emb.table(p, k) = rng.next_gaussian();
    const double norm = emb.table.row(p).norm();
    if (norm == 0.0) {  // measure-zero; fall back to a coordinate direction
      emb.table(p, 0) = 1.0;
    } else {
      emb.table.row(p) /= norm;
    }
  }
  return emb;
}

MatrixXd policy_transition(const TabularMdp& mdp, const TabularPolicy& policy) {
  MatrixXd p_pi = MatrixXd::Zero(mdp.n_states, mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a)
      p_pi.row(s) += policy.probs(s, a) * mdp.transition.row(mdp.pair_index(s, a));
  return p_pi;
}

ValueTables exact_values(const TabularMdp& mdp, const TabularPolicy& policy) {
  mdp.validate();
  policy.validate(mdp);
  const int n = mdp.n_pairs();
  // M Q = (1-gamma) r with M = I - gamma P Pi.
  MatrixXd m_sys = MatrixXd::Identity(n, n);
  for (int p = 0; p < n; ++p)
    for (int s2 = 0; s2 < mdp.n_states; ++s2) {
      const double pr = mdp.transition(p, s2);
      if (pr == 0.0) continue;
      for (int a2 = 0; a2 < mdp.n_actions; ++a2)
        m_sys(p, mdp.pair_index(s2, a2)) -= mdp.discount * pr * policy.probs(s2, a2);
    }
  VectorXd r_flat(n);
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a)
      r_flat[mdp.pair_index(s, a)] = mdp.reward(s, a);
  VectorXd q_flat = m_sys.partialPivLu().solve((1.0 - mdp.discount) * r_flat);

  ValueTables out;
  out.q.resize(mdp.n_states, mdp.n_actions);
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a)
      out.q(s, a) = q_flat[mdp.pair_index(s, a)];
  out.v = (out.q.array() * policy.probs.array()).rowwise().sum();
  out.adv = out.q.colwise() - out.v;
  return out;
}

MeasureSet visitation_measures(const TabularMdp& mdp, const TabularPolicy& policy) {
  mdp.validate();
  policy.validate(mdp);
  const MatrixXd p_pi = policy_transition(mdp, policy);
  const int n = mdp.n_states;
  MatrixXd m_sys = MatrixXd::Identity(n, n) - mdp.discount * p_pi.transpose();
  VectorXd nu = m_sys.partialPivLu().solve((1.0 - mdp.discount) * mdp.init_dist);

  MeasureSet out;
  out.nu = nu;
  out.sigma = policy.probs.array().colwise() * nu.array();
  return out;
}

MeasureSet stationary_measures(const TabularMdp& mdp, const TabularPolicy& policy) {
  mdp.validate();
  policy.validate(mdp);
  const MatrixXd p_pi = policy_transition(mdp, policy);
  VectorXd rho = VectorXd::Constant(mdp.n_states, 1.0 / mdp.n_states);
  double residual = 0.0;
  bool converged = false;
  for (int it = 0; it < kPowerIterCap; ++it) {
    VectorXd next = p_pi.transpose() * rho;
    next /= next.sum();  // guard against drift
    residual = (next - rho).lpNorm<1>();
    rho = next;
    if (residual <= kStationaryTol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "stationary_measures: power iteration did not mix within " << kPowerIterCap
        << " sweeps (final l1 residual " << residual << ")";
    throw std::runtime_error(msg.str());
  }

  MeasureSet out;
  out.rho = rho;
  out.varsigma = policy.probs.array().colwise() * rho.array();
  return out;
}

MeasureSet all_measures(const TabularMdp& mdp, const TabularPolicy& policy) {
  MeasureSet vis = visitation_measures(mdp, policy);
  MeasureSet sta = stationary_measures(mdp, policy);
  vis.rho = std::move(sta.rho);
  vis.varsigma = std::move(sta.varsigma);
  return vis;
}

double expected_total_reward(const TabularMdp& mdp, const TabularPolicy& policy) {
  return mdp.init_dist.dot(exact_values(mdp, policy).v);
}

double expected_total_reward_occupancy(const TabularMdp& mdp, const TabularPolicy& policy) {
  const MeasureSet meas = visitation_measures(mdp, policy);
  return (meas.sigma.array() * mdp.reward.array()).sum();
}

TabularPolicy optimal_policy(const TabularMdp& mdp) {
  mdp.validate();
  MatrixXd q = MatrixXd::Zero(mdp.n_states, mdp.n_actions);
  bool converged = false;
  for (long it = 0; it < kValueIterCap; ++it) {
    VectorXd v_max = q.rowwise().maxCoeff();
    MatrixXd q_next(mdp.n_states, mdp.n_actions);
    for (int s = 0; s < mdp.n_states; ++s)
      for (int a = 0; a < mdp.n_actions; ++a)
        q_next(s, a) = (1.0 - mdp.discount) * mdp.reward(s, a) +
                       mdp.discount * mdp.transition.row(mdp.pair_index(s, a)).dot(v_max);
    const double delta = (q_next - q).cwiseAbs().maxCoeff();
    q = q_next;
    if (delta <= kValueIterTol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw std::runtime_error("optimal_policy: value iteration exceeded its iteration cap");

  TabularPolicy greedy;
  greedy.probs = MatrixXd::Zero(mdp.n_states, mdp.n_actions);
  for (int s = 0; s < mdp.n_states; ++s) {
    int best = 0;
    for (int a = 1; a < mdp.n_actions; ++a)
      if (q(s, a) > q(s, best)) best = a;  // strict: ties keep the lowest index
    greedy.probs(s, best) = 1.0;
  }
  return greedy;
}

TabularPolicy uniform_policy(const TabularMdp& mdp) {
  TabularPolicy out;
  out.probs = MatrixXd::Constant(mdp.n_states, mdp.n_actions, 1.0 / mdp.n_actions);
  return out;
}

}  // namespace npg
