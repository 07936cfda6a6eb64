#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <vector>

#include "helpers.hpp"
#include "npg/actor.hpp"
#include "npg/mdp.hpp"
#include "npg/oracles.hpp"
#include "npg/policy.hpp"
#include "npg/rng.hpp"
#include "npg/sampling.hpp"

using namespace npg;
using namespace npg::test;

namespace {

struct Fixture {
  TabularMdp mdp;
  std::shared_ptr<const Embedding> embed;
  std::shared_ptr<const NetInit> init;

  Fixture(int n_states, int n_actions, int width, std::uint64_t seed, double gamma = 0.9)
      : mdp(random_mdp(n_states, n_actions, gamma, seed)),
        embed(std::make_shared<const Embedding>(build_embedding(mdp, 8, seed + 1))),
        init(std::make_shared<const NetInit>(init_net({width, 8, 2.0}, seed + 2))) {}
};

// Independent finite-difference oracle for the exact policy gradient.
ParamVector fd_policy_gradient(const TabularMdp& mdp, const EnergyPolicy& policy, double eps) {
  ParamVector grad(policy.theta().size());
  for (long k = 0; k < grad.size(); ++k) {
    ParamVector up = policy.theta(), down = policy.theta();
    up[k] += eps;
    down[k] -= eps;
    const EnergyPolicy pol_up(policy.init_ptr(), policy.embed_ptr(), up, policy.tau());
    const EnergyPolicy pol_down(policy.init_ptr(), policy.embed_ptr(), down, policy.tau());
    grad[k] = (expected_total_reward(mdp, pol_up.to_tabular()) -
               expected_total_reward(mdp, pol_down.to_tabular())) /
              (2.0 * eps);
  }
  return grad;
}

double kink_margin(const NetInit& init, const Embedding& embed, const ParamVector& theta) {
  double margin = std::numeric_limits<double>::infinity();
  for (int p = 0; p < embed.table.rows(); ++p) {
    const VectorXd x = embed.table.row(p).transpose();
    for (int r = 0; r < init.width; ++r)
      margin = std::min(margin,
                        std::abs(theta.segment(static_cast<long>(r) * init.input_dim,
                                               init.input_dim)
                                     .dot(x)));
  }
  return margin;
}

ParamVector kink_free_ball_point(const Fixture& fx, double radius, double eps,
                                 std::uint64_t seed) {
  for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
    const ParamVector theta = random_ball_point(*fx.init, radius, seed + attempt);
    if (kink_margin(*fx.init, *fx.embed, theta) > 10.0 * eps) return theta;
  }
  throw std::runtime_error("no kink-free point found");
}

}  // namespace

TEST_CASE("exact policy gradient") {
  Fixture fx(5, 3, 32, 1);

  SUBCASE("tau = 0 gives the zero vector") {
    const EnergyPolicy policy(fx.init, fx.embed, random_ball_point(*fx.init, 1.5, 3), 0.0);
    CHECK(exact_policy_gradient(fx.mdp, policy).norm() == 0.0);
  }

  SUBCASE("constant reward gives the zero vector") {
    TabularMdp flat = fx.mdp;
    flat.reward.setConstant(0.6);
    const EnergyPolicy policy(fx.init, fx.embed, random_ball_point(*fx.init, 1.5, 4), 1.2);
    CHECK(exact_policy_gradient(flat, policy).norm() <= 1e-12);
  }

  SUBCASE("matches central finite differences at a kink-free point") {
    constexpr double kEps = 1e-5;
    const ParamVector theta = kink_free_ball_point(fx, 1.5, kEps, 10);
    const EnergyPolicy policy(fx.init, fx.embed, theta, 1.0);
    const ParamVector exact = exact_policy_gradient(fx.mdp, policy);
    const ParamVector fd = fd_policy_gradient(fx.mdp, policy, kEps);
    CHECK((exact - fd).norm() / fd.norm() <= 1e-4);
  }

  SUBCASE("two enumeration routes agree to 1e-12") {
    const ParamVector theta = random_ball_point(*fx.init, 1.7, 20);
    const EnergyPolicy policy(fx.init, fx.embed, theta, 1.3);
    const ParamVector route_a = exact_policy_gradient(fx.mdp, policy);

    // Independent route: per-pair centered features accumulated in a
    // shuffled enumeration order.
    const ValueTables values = exact_values(fx.mdp, policy.to_tabular());
    const MeasureSet meas = visitation_measures(fx.mdp, policy.to_tabular());
    std::vector<int> order(fx.mdp.n_pairs());
    std::iota(order.begin(), order.end(), 0);
    RngStream rng = RngStream::derive(21, "shuffle");
    for (int k = fx.mdp.n_pairs() - 1; k > 0; --k)
      std::swap(order[k], order[rng.next_int(k + 1)]);
    ParamVector route_b = ParamVector::Zero(fx.init->param_count());
    for (int p : order) {
      const int s = p / fx.mdp.n_actions;
      const int a = p % fx.mdp.n_actions;
      route_b += (policy.tau() / (1.0 - fx.mdp.discount) * meas.sigma(s, a) * values.q(s, a)) *
                 policy.centered_feature(s, a, policy.theta());
    }
    CHECK((route_a - route_b).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("exact Fisher information") {
  Fixture fx(4, 3, 16, 31);  // m*d = 128

  SUBCASE("tau = 0 and single-action MDPs give the zero matrix") {
    const EnergyPolicy policy(fx.init, fx.embed, random_ball_point(*fx.init, 1.5, 33), 0.0);
    CHECK(exact_fisher(fx.mdp, policy).cwiseAbs().maxCoeff() == 0.0);

    Fixture solo(4, 1, 16, 34);
    const EnergyPolicy lone(solo.init, solo.embed, random_ball_point(*solo.init, 1.5, 35), 1.4);
    CHECK(exact_fisher(solo.mdp, lone).cwiseAbs().maxCoeff() <= 1e-15);
  }

  SUBCASE("symmetric and positive semidefinite") {
    const EnergyPolicy policy(fx.init, fx.embed, random_ball_point(*fx.init, 1.8, 36), 1.1);
    const MatrixXd fisher = exact_fisher(fx.mdp, policy);
    CHECK((fisher - fisher.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(fisher);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-10);
  }

  SUBCASE("sampled estimator concentrates in operator norm") {
    const EnergyPolicy policy(fx.init, fx.embed, random_ball_point(*fx.init, 1.5, 37), 1.2);
    const MatrixXd exact = exact_fisher(fx.mdp, policy);
    const Batch batch = sample_visitation(fx.mdp, policy.to_tabular(), 100000,
                                          default_burn_in(fx.mdp), 38);
    const FisherOperator sampled(policy, batch);
    const long n = fx.init->param_count();
    MatrixXd dense(n, n);
    for (long k = 0; k < n; ++k) {
      ParamVector e = ParamVector::Zero(n);
      e[k] = 1.0;
      dense.col(k) = sampled.apply(e);
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> diff(0.5 * (dense + dense.transpose()) - exact);
    Eigen::SelfAdjointEigenSolver<MatrixXd> base(exact);
    const double rel = diff.eigenvalues().cwiseAbs().maxCoeff() /
                       base.eigenvalues().cwiseAbs().maxCoeff();
    CHECK(rel <= 0.05);
  }

  SUBCASE("size guard") {
    Fixture big(3, 2, 256, 39);  // m*d = 2048 > 500
    const EnergyPolicy policy(big.init, big.embed, big.init->w_init, 1.0);
    CHECK_THROWS_AS(exact_fisher(big.mdp, policy), std::invalid_argument);
  }
}

TEST_CASE("gradient mapping") {
  Fixture fx(3, 2, 16, 41);
  const double radius = 2.0;
  const ParamVector theta = random_ball_point(*fx.init, 1.0, 43);

  SUBCASE("zero gradient maps to zero") {
    CHECK(gradient_mapping(theta, ParamVector::Zero(theta.size()), 0.1, *fx.init, radius)
              .norm() == 0.0);
  }

  SUBCASE("interior step returns the gradient") {
    ParamVector grad = random_ball_point(*fx.init, 1.0, 44) - fx.init->w_init;
    grad *= 0.1;  // keep theta + eta grad interior
    const ParamVector rho = gradient_mapping(theta, grad, 1e-3, *fx.init, radius);
    CHECK((rho - grad).norm() <= 1e-9 * std::max(1.0, grad.norm()));
  }

  SUBCASE("boundary point with an outward gradient shortens the step") {
    const ParamVector boundary = random_ball_point(*fx.init, radius, 45, /*on_sphere=*/true);
    const ParamVector outward = boundary - fx.init->w_init;  // points away from the center
    const double eta = 0.5;
    const ParamVector rho = gradient_mapping(boundary, outward, eta, *fx.init, radius);
    // hand projection: theta + eta g has distance (1 + eta) R, scaled back to R
    const ParamVector stepped = boundary + eta * outward;
    const ParamVector projected =
        fx.init->w_init + (radius / dist_to_init(stepped, *fx.init)) * (stepped - fx.init->w_init);
    CHECK((rho - (projected - boundary) / eta).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(rho.norm() < outward.norm());
  }
}

TEST_CASE("performance difference via the oracle interface") {
  const TabularMdp mdp = random_mdp(5, 3, 0.9, 51);

  SUBCASE("identical policies give (0, 0)") {
    const TabularPolicy pi = random_policy(mdp, 52);
    const auto [lhs, rhs] = performance_difference_check(mdp, pi, pi);
    CHECK(lhs == 0.0);
    CHECK(std::abs(rhs) <= 1e-12);
  }

  SUBCASE("random pairs agree within 1e-9") {
    for (std::uint64_t k = 0; k < 20; ++k) {
      const auto [lhs, rhs] = performance_difference_check(mdp, random_policy(mdp, 100 + k),
                                                           random_policy(mdp, 200 + k));
      CHECK(std::abs(lhs - rhs) <= 1e-9);
    }
  }

  SUBCASE("optimal versus uniform is nonnegative") {
    const auto [lhs, rhs] =
        performance_difference_check(mdp, uniform_policy(mdp), optimal_policy(mdp));
    CHECK(lhs >= -1e-12);
    CHECK(std::abs(lhs - rhs) <= 1e-9);
  }

  SUBCASE("inner-product form against the optimal policy") {
    // J(pi*) - J(pi) = (1-gamma)^{-1} E_{nu*}[<Q^pi(s,.), pi*(.|s) - pi(.|s)>],
    // the one-point-convexity form of the same identity.
    const TabularPolicy pi_star = optimal_policy(mdp);
    const MeasureSet star_meas = visitation_measures(mdp, pi_star);
    for (std::uint64_t k = 0; k < 10; ++k) {
      const TabularPolicy pi = random_policy(mdp, 300 + k);
      const ValueTables values = exact_values(mdp, pi);
      double rhs = 0.0;
      for (int s = 0; s < mdp.n_states; ++s)
        for (int a = 0; a < mdp.n_actions; ++a)
          rhs += star_meas.nu[s] * values.q(s, a) * (pi_star.probs(s, a) - pi.probs(s, a));
      rhs /= 1.0 - mdp.discount;
      const double lhs =
          expected_total_reward(mdp, pi_star) - expected_total_reward(mdp, pi);
      CHECK(std::abs(lhs - rhs) <= 1e-9);
    }
  }
}

TEST_CASE("concentrability coefficients") {
  SUBCASE("one-state MDP: every coefficient is 1") {
    Fixture fx(1, 3, 16, 62, 0.7);
    const EnergyPolicy policy(fx.init, fx.embed, random_ball_point(*fx.init, 1.5, 63), 1.0);
    // pi* over the same single state
    const ConcentrabilityReport rep = concentrability(fx.mdp, policy, policy.to_tabular());
    CHECK(rep.kappa == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rep.phi == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rep.psi == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rep.phi_prime == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rep.psi_prime == doctest::Approx(1.0).epsilon(1e-9));
  }

  SUBCASE("measure compared to itself gives exactly 1") {
    Fixture fx(4, 2, 16, 64);
    const EnergyPolicy policy(fx.init, fx.embed, random_ball_point(*fx.init, 1.5, 65), 1.1);
    const ConcentrabilityReport rep = concentrability(fx.mdp, policy, policy.to_tabular());
    // phi and psi compare the policy's visitation measure with itself.
    CHECK(rep.phi == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rep.psi == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rep.kappa >= 1.0 - 1e-9);
  }

  SUBCASE("matches a brute-force double sum") {
    Fixture fx(5, 3, 16, 66);
    const EnergyPolicy policy(fx.init, fx.embed, random_ball_point(*fx.init, 1.6, 67), 1.3);
    const TabularPolicy pi_star = optimal_policy(fx.mdp);
    const ConcentrabilityReport rep = concentrability(fx.mdp, policy, pi_star);

    const TabularPolicy tab = policy.to_tabular();
    const MeasureSet own = all_measures(fx.mdp, tab);
    const MeasureSet star = visitation_measures(fx.mdp, pi_star);
    double kappa_sq = 0.0, phi_sq = 0.0, psi_sq = 0.0, phi_p_sq = 0.0, psi_p_sq = 0.0;
    for (int s = 0; s < 5; ++s) {
      for (int a = 0; a < 3; ++a) {
        kappa_sq += own.varsigma(s, a) * std::pow(own.sigma(s, a) / own.varsigma(s, a), 2);
        phi_sq += own.sigma(s, a) * std::pow(star.sigma(s, a) / own.sigma(s, a), 2);
        phi_p_sq += own.varsigma(s, a) * std::pow(star.sigma(s, a) / own.varsigma(s, a), 2);
      }
      psi_sq += own.nu[s] * std::pow(star.nu[s] / own.nu[s], 2);
      psi_p_sq += own.rho[s] * std::pow(star.nu[s] / own.rho[s], 2);
    }
    CHECK(rep.kappa == doctest::Approx(std::sqrt(kappa_sq)).epsilon(1e-10));
    CHECK(rep.phi == doctest::Approx(std::sqrt(phi_sq)).epsilon(1e-10));
    CHECK(rep.psi == doctest::Approx(std::sqrt(psi_sq)).epsilon(1e-10));
    CHECK(rep.phi_prime == doctest::Approx(std::sqrt(phi_p_sq)).epsilon(1e-10));
    CHECK(rep.psi_prime == doctest::Approx(std::sqrt(psi_p_sq)).epsilon(1e-10));
    CHECK(rep.phi >= 1.0 - 1e-10);  // Cauchy-Schwarz floor
    CHECK(rep.psi >= 1.0 - 1e-10);
  }

  SUBCASE("support violation names the offending pair") {
    // Both actions funnel into state 1 which self-loops: state 0 is
    // transient, the stationary law has no mass there, but the visitation
    // measure does (it starts at 0).
    TabularMdp trap;
    trap.n_states = 2;
    trap.n_actions = 1;
    trap.discount = 0.9;
    trap.q_max = 1.0;
    trap.transition = MatrixXd::Zero(2, 2);
    trap.transition(0, 1) = 1.0;
    trap.transition(1, 1) = 1.0;
    trap.reward = MatrixXd::Zero(2, 1);
    trap.init_dist = VectorXd::Zero(2);
    trap.init_dist[0] = 1.0;

    Embedding emb = build_embedding(trap, 8, 68);
    auto embed = std::make_shared<const Embedding>(emb);
    auto init = std::make_shared<const NetInit>(init_net({16, 8, 2.0}, 69));
    const EnergyPolicy policy(init, embed, init->w_init, 1.0);
    TabularPolicy pi_star;
    pi_star.probs = MatrixXd::Ones(2, 1);
    CHECK_THROWS_WITH_AS(concentrability(trap, policy, pi_star),
                         doctest::Contains("support violation"), std::runtime_error);
  }
}

TEST_CASE("compatibility error") {
  Fixture fx(4, 3, 32, 71);
  const MeasureSet meas = visitation_measures(fx.mdp, uniform_policy(fx.mdp));

  SUBCASE("zero when theta equals omega") {
    const ParamVector theta = random_ball_point(*fx.init, 1.5, 73);
    const EnergyPolicy policy(fx.init, fx.embed, theta, 1.0);
    CHECK(compatibility_error(theta, theta, policy, meas) == 0.0);
    CHECK(compatibility_error(fx.init->w_init, fx.init->w_init, policy, meas) == 0.0);
  }

  SUBCASE("positive for distinct parameters and shrinking with width") {
    std::vector<double> medians;
    for (int m : {64, 512}) {
      std::vector<double> errs;
      for (std::uint64_t seed = 0; seed < 9; ++seed) {
        auto init = std::make_shared<const NetInit>(init_net({m, 8, 2.0}, 700 + seed));
        const ParamVector theta = random_ball_point(*init, 2.0, 800 + seed, true);
        const ParamVector omega = random_ball_point(*init, 2.0, 900 + seed, true);
        const EnergyPolicy policy(init, fx.embed, theta, 1.0);
        const double err = compatibility_error(theta, omega, policy, meas);
        CHECK(err > 0.0);
        errs.push_back(err);
      }
      std::sort(errs.begin(), errs.end());
      medians.push_back(errs[4]);
    }
    CHECK(medians[1] < medians[0]);
  }
}

TEST_CASE("optimality certificate") {
  SUBCASE("single-action MDP: the policy is optimal and the bound holds") {
    Fixture fx(4, 1, 16, 81);
    const EnergyPolicy policy(fx.init, fx.embed, random_ball_point(*fx.init, 1.5, 83), 1.0);
    const OptimalityCertificate cert =
        optimality_certificate(fx.mdp, policy, optimal_policy(fx.mdp), 2.0, 0.1);
    CHECK(std::abs(cert.gap) <= 1e-12);
    CHECK(cert.inequality_holds);
  }

  SUBCASE("random non-stationary parameters: fields finite, no assertion") {
    Fixture fx(4, 2, 16, 84);
    const EnergyPolicy policy(fx.init, fx.embed, random_ball_point(*fx.init, 1.5, 85), 1.2);
    const OptimalityCertificate cert =
        optimality_certificate(fx.mdp, policy, optimal_policy(fx.mdp), 2.0, 0.1);
    CHECK(std::isfinite(cert.gap));
    CHECK(std::isfinite(cert.bound));
    CHECK(std::isfinite(cert.u_residual));
    CHECK(cert.u_residual >= 0.0);
    CHECK(cert.bound == doctest::Approx(2.0 * fx.mdp.q_max * cert.u_residual).epsilon(1e-12));
  }
}

TEST_CASE("stationarity audit") {
  Fixture fx(3, 2, 16, 91);
  const ParamVector theta = random_ball_point(*fx.init, 1.0, 93);

  // zero gradient mapping <=> the variational inequality holds on probes
  CHECK(stationarity_audit(theta, ParamVector::Zero(theta.size()), *fx.init, 2.0, 1000, 94) <=
        1e-15);
  CHECK(gradient_mapping(theta, ParamVector::Zero(theta.size()), 0.1, *fx.init, 2.0).norm() ==
        0.0);

  // a visible gradient at an interior point: some probe aligns with it and
  // the gradient mapping is nonzero
  ParamVector grad = random_ball_point(*fx.init, 1.0, 95) - fx.init->w_init;
  grad.normalize();
  CHECK(stationarity_audit(theta, grad, *fx.init, 2.0, 1000, 96) > 0.1);
  CHECK(gradient_mapping(theta, grad, 0.1, *fx.init, 2.0).norm() > 0.1);
}
