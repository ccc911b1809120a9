#pragma once

/**
 * @file
 * @brief Finite-horizon Tsallis-entropy-regularized control on finite state and action sets.
 *
 * Minimizes E[l_T(x_T)] + sum_k E[l_k(x_k, u_k) - lambda H_q(pi_k(. | x_k))]
 * by backward recursion. Each stage solves an ent-max per state, and
 *   V(k, x) = (1-q)/(2-q) E_pi[Q_k(x, .)] + lambda/(2-q) (C_k(x) - 1).
 */

#include "qctl/qcore.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <vector>

namespace qctl {

/// policy[k][x] is the action distribution at stage k in state x.
using MarkovPolicy = std::vector<std::vector<DiscreteDistribution>>;

struct FiniteTrocInstance
{
  /// transitions[u](x, x') = p(x' | x, u); rows sum to one.
  std::vector<Eigen::MatrixXd> transitions;
  /// Either one n x m matrix (time-invariant) or one per stage.
  std::vector<Eigen::MatrixXd> stage_costs;
  Eigen::VectorXd terminal_cost;
  std::size_t horizon{1};
  double lambda{1.0};
  DeformationParameter q{0.5};

  [[nodiscard]] std::size_t num_states() const noexcept { return static_cast<std::size_t>(terminal_cost.size()); }
  [[nodiscard]] std::size_t num_actions() const noexcept { return transitions.size(); }
  [[nodiscard]] double cost(std::size_t k, std::size_t x, std::size_t u) const
  {
    const auto & c = stage_costs.size() == 1 ? stage_costs.front() : stage_costs[k];
    return c(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(u));
  }
  [[nodiscard]] double transition(std::size_t x, std::size_t u, std::size_t next) const
  {
    return transitions[u](static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(next));
  }

  /// Throws std::invalid_argument describing the first violated invariant.
  void validate() const;
};

struct TrocSolution
{
  /// (T+1) x n, row k holds V*(k, .).
  Eigen::MatrixXd value;
  /// q_values[k](x, u) = Q*_k(x, u).
  std::vector<Eigen::MatrixXd> q_values;
  MarkovPolicy policy;
  /// T x n normalizers C_k(x).
  Eigen::MatrixXd normalizers;
};

[[nodiscard]] TrocSolution solve_troc(const FiniteTrocInstance & instance);

/// Exact expected regularized cost of a Markov policy via forward marginal propagation.
[[nodiscard]] double evaluate_policy(
  const FiniteTrocInstance & instance, const MarkovPolicy & policy, const DiscreteDistribution & initial);

}  // namespace qctl
