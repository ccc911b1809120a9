#pragma once

/**
 * @file
 * @brief Ent-max: minimizers of expected cost minus lambda times deformed q-entropy.
 *
 * For costs Q over a finite set the minimizer is
 *   phi_i = w_i exp_q(-Q_i / lambda + C),
 * where C normalizes phi. With unit weights this is the sparse analogue of
 * soft-max; entries whose cost is too large receive exactly zero mass.
 */

#include "qctl/qcore.hpp"

#include <Eigen/Core>

#include <span>
#include <stdexcept>
#include <vector>

namespace qctl {

/// Raised when a problem has no feasible solution (e.g. all weights zero).
class InfeasibleError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct EntmaxResult
{
  DiscreteDistribution distribution;
  /// Offset C inside exp_q.
  double normalizer_c;
  /// E_phi[Q] + (lambda/(2-q)) (sum phi log_q(phi/w) - 1); equals E[Q] - lambda H_q(phi) for unit weights.
  double objective_value;
};

/// Unique minimizer of E_phi[costs] - lambda H_q(phi) over the simplex.
[[nodiscard]] EntmaxResult entmax_discrete(std::span<const double> costs, double lambda, DeformationParameter q);

/**
 * @brief Weighted ent-max phi_i = weights_i exp_q(-costs_i / lambda + C).
 *
 * Entries with zero weight get exactly zero mass and their cost is ignored
 * (it may be infinite). Throws InfeasibleError if every weight is zero.
 */
[[nodiscard]] EntmaxResult entmax_weighted(
  std::span<const double> costs, std::span<const double> weights, double lambda, DeformationParameter q);

/// Objective value for an arbitrary distribution with unit weights: E_phi[Q] - lambda H_q(phi).
[[nodiscard]] double entmax_objective(
  std::span<const double> costs, const DiscreteDistribution & phi, double lambda, DeformationParameter q);

/// Sorted-threshold sparsemax of scores z; equals ent-max at q = 0 with z = -costs / lambda.
[[nodiscard]] std::vector<double> sparsemax(std::span<const double> scores);

struct QuadraticEntmaxResult
{
  QGaussian gaussian;
  double eta;
};

/// eta for the quadratic case; dimension is r_matrix.rows().
[[nodiscard]] double quadratic_eta(const Eigen::MatrixXd & r_matrix, double lambda, DeformationParameter q);

/**
 * @brief Minimizer of E[(u-mean)' R (u-mean)] - lambda H_q over densities on R^n.
 *
 * The result is N_q(mean, Sigma) with
 *   Sigma^{-1} = ((n+4) - (n+2) q) / lambda * eta * R,
 *   eta = { det(R)^{-1/2} (pi lambda / (1-q))^{n/2} Gamma(a) / Gamma(a + n/2) }^{2(1-q)/((n+2) - n q)},
 * with a = (2-q)/(1-q). Throws std::invalid_argument unless R is symmetric positive definite.
 */
[[nodiscard]] QuadraticEntmaxResult entmax_quadratic(
  const Eigen::MatrixXd & r_matrix, const Eigen::VectorXd & mean, double lambda, DeformationParameter q);

}  // namespace qctl
