#pragma once

/**
 * @file
 * @brief q-KL control on networks.
 *
 * States live on {0, ..., n-1}. The passive dynamics is a column-stochastic
 * matrix P0 (column j is the next-state distribution from state j). A control
 * replaces column j by any distribution whose support lies inside the support
 * of P0's column, at cost lambda times the q-KL divergence to that column.
 * The optimal columns are weighted ent-max distributions
 *   (P*_k)_{ij} = P0_{ij} exp_q(-V*(k+1)_i / lambda + C_k(j)).
 */

#include "qctl/qcore.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <vector>

namespace qctl {

struct QklInstance
{
  Eigen::MatrixXd passive_matrix;
  Eigen::VectorXd state_cost;
  std::size_t horizon{1};
  double lambda{1.0};
  DeformationParameter q{0.5};
  DiscreteDistribution initial{DiscreteDistribution::uniform(1)};

  [[nodiscard]] std::size_t num_states() const noexcept { return static_cast<std::size_t>(state_cost.size()); }

  /**
   * Throws InfeasibleError if some column of P0 is identically zero and
   * std::invalid_argument for any other violated invariant.
   */
  void validate() const;
};

struct QklSolution
{
  double lambda{1.0};
  /// values[k] = V*(k), k = 0..T.
  std::vector<Eigen::VectorXd> values;
  /// controlled_matrices[k] = P*_k, k = 0..T-1.
  std::vector<Eigen::MatrixXd> controlled_matrices;
  /// T x n, row k holds C_k(.).
  Eigen::MatrixXd normalizers;

  [[nodiscard]] std::size_t horizon() const noexcept { return controlled_matrices.size(); }
};

/// Backward recursion over instance.horizon stages.
[[nodiscard]] QklSolution solve_qkl(const QklInstance & instance);

/**
 * @brief Backward recursion run until the relative values stop changing.
 *
 * Iterates until the sup-norm change of V*(k) - V*(k)_0 between consecutive
 * stages drops below `tolerance`, or `max_horizon` stages have been computed.
 * The returned solution's horizon is the number of stages actually computed;
 * stage 0 is the stationary end.
 */
[[nodiscard]] QklSolution solve_qkl_stationary(
  const QklInstance & instance, double tolerance = 1e-10, std::size_t max_horizon = 10000);

/**
 * @brief Argument offsets of exp_q for one column: C_k(j0) - V*(k+1) / lambda.
 *
 * Entry i is positive-mass exactly when 1 + (1-q) z_i > 0 and P0_{i,j0} > 0.
 * These are horizon-independent once the recursion is stationary.
 */
[[nodiscard]] Eigen::VectorXd relative_values(const QklSolution & solution, std::size_t stage, std::size_t reference);

/// Cost of a (possibly suboptimal) sequence of column-stochastic matrices, evaluated columnwise under the state marginals.
[[nodiscard]] double evaluate_qkl_policy(const QklInstance & instance, const std::vector<Eigen::MatrixXd> & policy);

/// Forward simulation of the controlled chain; returns steps + 1 states starting from a draw of instance.initial.
[[nodiscard]] std::vector<std::size_t> rollout(
  const QklInstance & instance, const QklSolution & solution, std::size_t steps, std::uint64_t seed);

}  // namespace qctl
