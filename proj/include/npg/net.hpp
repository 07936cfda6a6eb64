#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include <Eigen/Dense>

#include "npg/mdp.hpp"

namespace npg {

// Flattened parameters of a width-m two-layer ReLU network: m blocks of
// input_dim reals, block r at segment(r*input_dim, input_dim).
using ParamVector = Eigen::VectorXd;

struct NetShape {
  int width = 0;      // m
  int input_dim = 0;  // d
  double radius = 2.0;  // R, parameter-ball radius around the initialization

  void validate() const;
};

// Frozen initialization: blocks of w_init are i.i.d. N(0, I/d), signs are
// +-1 and never change after construction.
struct NetInit {
  int width = 0;
  int input_dim = 0;
  ParamVector w_init;      // m*d
  Eigen::VectorXd signs;   // m, entries exactly +-1

  int param_count() const { return width * input_dim; }
};

NetInit init_net(const NetShape& shape, std::uint64_t seed);

// f(x; theta) = (1/sqrt(m)) sum_r b_r ReLU(x^T theta_r).
double forward(const NetInit& init, const ParamVector& theta,
               const Eigen::Ref<const VectorXd>& x);

// Blockwise a.e. gradient of forward: block r is (b_r/sqrt(m)) 1{x^T theta_r > 0} x.
// The indicator is strict, so a zero pre-activation contributes nothing.
ParamVector feature_map(const ParamVector& theta, const Eigen::Ref<const VectorXd>& x,
                        const NetInit& init);

// Network linearized at the initialization: indicators frozen at w_init,
// linear in theta. Coincides with forward at theta = w_init.
double linearized_forward(const NetInit& init, const ParamVector& theta,
                          const Eigen::Ref<const VectorXd>& x);

// Euclidean projection onto the ball of radius R around w_init (radial,
// closed form). Inputs already inside the ball pass through unchanged.
ParamVector project_ball(const ParamVector& theta, const NetInit& init, double R);

double dist_to_init(const ParamVector& theta, const NetInit& init);

// Activation pattern of one parameter vector over every embedded (s, a)
// pair. Features are kept factored as (masked signs) x (embedding row)
// instead of dense m*d vectors; values, dots and weighted sums against the
// whole state-action space then cost O(P m d) with no large intermediates.
class FeatureTable {
 public:
  FeatureTable(const NetInit& init, const Embedding& embed, const ParamVector& w);

  int n_pairs() const { return static_cast<int>(masked_signs_.cols()); }
  const NetInit& init() const { return *init_; }
  const Embedding& embedding() const { return *embed_; }

  // phi_p^T w for an arbitrary parameter vector w (indicators stay fixed
  // at the table's own w). With w = the table's w this is the network value.
  double value(int pair, const ParamVector& w) const;
  VectorXd values(const ParamVector& w) const;  // all pairs at once

  // out += c * phi_p.
  void add_scaled(int pair, double c, ParamVector& out) const;
  // out += sum_p coefs[p] * phi_p (single matrix product).
  void add_weighted(const VectorXd& coefs, ParamVector& out) const;

  // Expanded centered feature phi_p - sum_a' probs[a'] phi_(s(p), a'), with
  // the action average taken under the given per-state action distribution.
  ParamVector centered_feature(int pair, const Eigen::Ref<const VectorXd>& action_probs) const;

  // Turns centered-combination weights into plain feature weights:
  // sum_p c_p (phi_p - E_pi phi) = sum_p [c_p - pi(p) * C_s(p)] phi_p.
  VectorXd center_weights(const VectorXd& coefs, const MatrixXd& prob_table) const;

 private:
  const NetInit* init_;
  const Embedding* embed_;
  MatrixXd masked_signs_;  // m x P, entry (r, p) = b_r/sqrt(m) * 1{x_p^T w_r > 0}
};

// Exact L2(sigma) distance between the network's feature image and the
// image under the initialization's indicators:
// || phi_theta(.,.)^T theta_prime - phi_0(.,.)^T theta_prime ||_sigma,
// summed over the finite state-action space with weights measure.sigma.
double linearization_error(const NetInit& init, const ParamVector& theta,
                           const ParamVector& theta_prime, const MeasureSet& measure,
                           const Embedding& embed);

// Parameter checkpoint: text header "width input_dim seed tau" followed by
// one coefficient per line at full precision. tau is carried for policy
// checkpoints and is 0 for plain parameter dumps.
void save_params(const ParamVector& w, int width, int input_dim, std::uint64_t seed,
                 double tau, std::ostream& out);
void save_params_file(const ParamVector& w, int width, int input_dim, std::uint64_t seed,
                      double tau, const std::string& path);
struct ParamCheckpoint {
  int width = 0;
  int input_dim = 0;
  std::uint64_t seed = 0;
  double tau = 0.0;
  ParamVector params;
};
ParamCheckpoint load_params(std::istream& in);
ParamCheckpoint load_params_file(const std::string& path);

}  // namespace npg
