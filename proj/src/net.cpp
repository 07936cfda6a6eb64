#include "npg/net.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "npg/rng.hpp"

namespace npg {

namespace {

using BlockMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// View of a flat parameter vector as an m x d matrix of blocks.
Eigen::Map<const BlockMatrix> as_blocks(const ParamVector& w, int m, int d) {
  if (w.size() != static_cast<long>(m) * d)
    throw std::invalid_argument("parameter vector has wrong length for this network shape");
  return Eigen::Map<const BlockMatrix>(w.data(), m, d);
}

Eigen::Map<BlockMatrix> as_blocks_mut(ParamVector& w, int m, int d) {
  return Eigen::Map<BlockMatrix>(w.data(), m, d);
}

}  // namespace

void NetShape::validate() const {
  if (width < 1) throw std::invalid_argument("net shape: width must be >= 1");
  if (input_dim < 2) throw std::invalid_argument("net shape: input_dim must be >= 2");
  if (radius <= 1.0) throw std::invalid_argument("net shape: radius must exceed 1");
}

NetInit init_net(const NetShape& shape, std::uint64_t seed) {
  shape.validate();
  NetInit init;
  init.width = shape.width;
  init.input_dim = shape.input_dim;
  init.w_init.resize(static_cast<long>(shape.width) * shape.input_dim);
  init.signs.resize(shape.width);

  RngStream weight_rng = RngStream::derive(seed, "net-weights");
  const double scale = 1.0 / std::sqrt(static_cast<double>(shape.input_dim));
  for (long i = 0; i < init.w_init.size(); ++i)
    init.w_init[i] = scale * weight_rng.next_gaussian();

  RngStream sign_rng = RngStream::derive(seed, "net-signs");
  for (int r = 0; r < shape.width; ++r)
    init.signs[r] = (sign_rng.next_u64() & 1ULL) ? 1.0 : -1.0;
  return init;
}

double forward(const NetInit& init, const ParamVector& theta,
               const Eigen::Ref<const VectorXd>& x) {
  if (x.size() != init.input_dim)
    throw std::invalid_argument("forward: input dimension mismatch");
  const auto blocks = as_blocks(theta, init.width, init.input_dim);
  const VectorXd pre = blocks * x;
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(init.width));
  double sum = 0.0;
  for (int r = 0; r < init.width; ++r)
    if (pre[r] > 0.0) sum += init.signs[r] * pre[r];
  return inv_sqrt_m * sum;
}

ParamVector feature_map(const ParamVector& theta, const Eigen::Ref<const VectorXd>& x,
                        const NetInit& init) {
  if (x.size() != init.input_dim)
    throw std::invalid_argument("feature_map: input dimension mismatch");
  const auto blocks = as_blocks(theta, init.width, init.input_dim);
  const VectorXd pre = blocks * x;
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(init.width));
  ParamVector phi = ParamVector::Zero(theta.size());
  auto phi_blocks = as_blocks_mut(phi, init.width, init.input_dim);
  for (int r = 0; r < init.width; ++r)
    if (pre[r] > 0.0) phi_blocks.row(r) = (init.signs[r] * inv_sqrt_m) * x.transpose();
  return phi;
}

double linearized_forward(const NetInit& init, const ParamVector& theta,
                          const Eigen::Ref<const VectorXd>& x) {
  if (x.size() != init.input_dim)
    throw std::invalid_argument("linearized_forward: input dimension mismatch");
  const auto init_blocks = as_blocks(init.w_init, init.width, init.input_dim);
  const auto theta_blocks = as_blocks(theta, init.width, init.input_dim);
  const VectorXd pre_init = init_blocks * x;
  const VectorXd pre_theta = theta_blocks * x;
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(init.width));
  double sum = 0.0;
  for (int r = 0; r < init.width; ++r)
    if (pre_init[r] > 0.0) sum += init.signs[r] * pre_theta[r];
  return inv_sqrt_m * sum;
}

ParamVector project_ball(const ParamVector& theta, const NetInit& init, double R) {
  if (R <= 0.0) throw std::invalid_argument("project_ball: radius must be positive");
  const ParamVector diff = theta - init.w_init;
  const double dist = diff.norm();
  if (dist <= R) return theta;
  return init.w_init + (R / dist) * diff;
}

double dist_to_init(const ParamVector& theta, const NetInit& init) {
  return (theta - init.w_init).norm();
}

FeatureTable::FeatureTable(const NetInit& init, const Embedding& embed, const ParamVector& w)
    : init_(&init), embed_(&embed) {
  if (embed.dim != init.input_dim)
    throw std::invalid_argument("feature table: embedding dim != network input dim");
  const int m = init.width;
  const int pairs = static_cast<int>(embed.table.rows());
  const auto blocks = as_blocks(w, m, init.input_dim);
  // Pre-activations for all pairs in one product, then fold sign and scale
  // into the mask.
  const MatrixXd pre = blocks * embed.table.transpose();  // m x P
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(m));
  masked_signs_.resize(m, pairs);
  for (int p = 0; p < pairs; ++p)
    for (int r = 0; r < m; ++r)
      masked_signs_(r, p) = pre(r, p) > 0.0 ? init.signs[r] * inv_sqrt_m : 0.0;
}

double FeatureTable::value(int pair, const ParamVector& w) const {
  const auto blocks = as_blocks(w, init_->width, init_->input_dim);
  const VectorXd pre = blocks * embed_->table.row(pair).transpose();
  return masked_signs_.col(pair).dot(pre);
}

VectorXd FeatureTable::values(const ParamVector& w) const {
  const auto blocks = as_blocks(w, init_->width, init_->input_dim);
  const MatrixXd pre = blocks * embed_->table.transpose();  // m x P
  return (masked_signs_.array() * pre.array()).colwise().sum();
}

void FeatureTable::add_scaled(int pair, double c, ParamVector& out) const {
  auto out_blocks = as_blocks_mut(out, init_->width, init_->input_dim);
  out_blocks.noalias() += c * masked_signs_.col(pair) * embed_->table.row(pair);
}

void FeatureTable::add_weighted(const VectorXd& coefs, ParamVector& out) const {
  if (coefs.size() != masked_signs_.cols())
    throw std::invalid_argument("add_weighted: coefficient count != pair count");
  auto out_blocks = as_blocks_mut(out, init_->width, init_->input_dim);
  out_blocks.noalias() += masked_signs_ * coefs.asDiagonal() * embed_->table;
}

ParamVector FeatureTable::centered_feature(int pair,
                                           const Eigen::Ref<const VectorXd>& action_probs) const {
  const int a_count = embed_->n_actions;
  if (action_probs.size() != a_count)
    throw std::invalid_argument("centered_feature: action distribution size mismatch");
  const int s = pair / a_count;
  ParamVector mean = ParamVector::Zero(init_->param_count());
  for (int a2 = 0; a2 < a_count; ++a2)
    add_scaled(s * a_count + a2, action_probs[a2], mean);
  ParamVector result = ParamVector::Zero(init_->param_count());
  add_scaled(pair, 1.0, result);
  result -= mean;
  return result;
}

VectorXd FeatureTable::center_weights(const VectorXd& coefs, const MatrixXd& prob_table) const {
  const int a_count = embed_->n_actions;
  const int s_count = embed_->n_states;
  if (coefs.size() != static_cast<long>(s_count) * a_count)
    throw std::invalid_argument("center_weights: coefficient count != pair count");
  VectorXd adjusted(coefs.size());
  for (int s = 0; s < s_count; ++s) {
    const double state_total = coefs.segment(s * a_count, a_count).sum();
    for (int a = 0; a < a_count; ++a)
      adjusted[s * a_count + a] = coefs[s * a_count + a] - prob_table(s, a) * state_total;
  }
  return adjusted;
}

double linearization_error(const NetInit& init, const ParamVector& theta,
                           const ParamVector& theta_prime, const MeasureSet& measure,
                           const Embedding& embed) {
  if (measure.sigma.size() == 0)
    throw std::invalid_argument("linearization_error: measure must carry sigma");
  const FeatureTable at_theta(init, embed, theta);
  const FeatureTable at_init(init, embed, init.w_init);
  const VectorXd vals_theta = at_theta.values(theta_prime);
  const VectorXd vals_init = at_init.values(theta_prime);
  double sq = 0.0;
  for (int s = 0; s < embed.n_states; ++s)
    for (int a = 0; a < embed.n_actions; ++a) {
      const int p = embed.pair_index(s, a);
      const double diff = vals_theta[p] - vals_init[p];
      sq += measure.sigma(s, a) * diff * diff;
    }
  return std::sqrt(sq);
}

void save_params(const ParamVector& w, int width, int input_dim, std::uint64_t seed,
                 double tau, std::ostream& out) {
  out << width << " " << input_dim << " " << seed << " " << std::setprecision(17) << tau
      << "\n";
  out << std::setprecision(17);
  for (long i = 0; i < w.size(); ++i) out << w[i] << "\n";
}

void save_params_file(const ParamVector& w, int width, int input_dim, std::uint64_t seed,
                      double tau, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  save_params(w, width, input_dim, seed, tau, out);
}

ParamCheckpoint load_params(std::istream& in) {
  ParamCheckpoint ck;
  if (!(in >> ck.width >> ck.input_dim >> ck.seed >> ck.tau))
    throw std::runtime_error("checkpoint: bad header");
  const long n = static_cast<long>(ck.width) * ck.input_dim;
  ck.params.resize(n);
  for (long i = 0; i < n; ++i)
    if (!(in >> ck.params[i])) throw std::runtime_error("checkpoint: truncated parameter list");
  return ck;
}

ParamCheckpoint load_params_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  return load_params(in);
}

}  // namespace npg
