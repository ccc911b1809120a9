#pragma once

/**
 * @file
 * @brief Linear-quadratic control with deformed q-entropy regularization.
 *
 * The optimal policy is linear feedback u = K_k x plus q-Gaussian noise
 * w_k ~ N_q(0, Sigma_k). The gains follow the standard Riccati recursion;
 * the noise covariance follows from the quadratic ent-max with R~_k. Because
 * the noise has bounded support, reachable states stay inside an envelope
 * that can be propagated forward.
 */

#include "qctl/qcore.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace qctl {

struct QlqrInstance
{
  // Each list holds one matrix (time-invariant) or one per stage.
  std::vector<Eigen::MatrixXd> A;  ///< n x n
  std::vector<Eigen::MatrixXd> B;  ///< n x m
  std::vector<Eigen::MatrixXd> Q;  ///< n x n, PSD
  std::vector<Eigen::MatrixXd> S;  ///< n x m
  std::vector<Eigen::MatrixXd> R;  ///< m x m, PD
  Eigen::MatrixXd QT;              ///< n x n terminal weight
  std::size_t horizon{1};
  double lambda{1.0};
  DeformationParameter q{0.5};
  Eigen::VectorXd initial_state;
  /// Radius of the ball of initial states around initial_state.
  double initial_set_radius{0.0};

  [[nodiscard]] Eigen::Index state_dim() const { return A.front().rows(); }
  [[nodiscard]] Eigen::Index input_dim() const { return B.front().cols(); }

  [[nodiscard]] const Eigen::MatrixXd & a(std::size_t k) const { return A.size() == 1 ? A.front() : A[k]; }
  [[nodiscard]] const Eigen::MatrixXd & b(std::size_t k) const { return B.size() == 1 ? B.front() : B[k]; }
  [[nodiscard]] const Eigen::MatrixXd & q_weight(std::size_t k) const { return Q.size() == 1 ? Q.front() : Q[k]; }
  [[nodiscard]] const Eigen::MatrixXd & s_weight(std::size_t k) const { return S.size() == 1 ? S.front() : S[k]; }
  [[nodiscard]] const Eigen::MatrixXd & r_weight(std::size_t k) const { return R.size() == 1 ? R.front() : R[k]; }

  /// Throws std::invalid_argument on shape or sign violations.
  void validate() const;
  /// Stages whose block [[Q, S], [S', R]] is not PSD (a warning, not an error).
  [[nodiscard]] std::vector<std::string> cost_block_warnings() const;
};

struct QlqrSolution
{
  double lambda{1.0};
  DeformationParameter q{0.5};
  std::vector<Eigen::MatrixXd> pi_matrices;        ///< T+1, Pi_T = Q_T
  std::vector<Eigen::MatrixXd> gains;              ///< T, m x n
  std::vector<Eigen::MatrixXd> r_tilde;            ///< T, m x m
  std::vector<Eigen::MatrixXd> noise_covariances;  ///< T, m x m
  std::vector<double> etas;                        ///< T
  /// Per stage, support half-widths of w_k along the eigenvectors of Sigma_k (ascending eigenvalue order).
  std::vector<Eigen::VectorXd> support_radii;

  [[nodiscard]] std::size_t horizon() const noexcept { return gains.size(); }
  [[nodiscard]] QGaussian noise(std::size_t k) const;
};

/// Backward Riccati recursion. Throws InfeasibleError if R~_k is not positive definite.
[[nodiscard]] QlqrSolution solve_qlqr(const QlqrInstance & instance);

struct QlqrStationary
{
  Eigen::MatrixXd pi;
  Eigen::MatrixXd gain;
  Eigen::MatrixXd r_tilde;
  Eigen::MatrixXd noise_covariance;
  double eta{0.0};
  Eigen::VectorXd support_radii;
  std::size_t iterations{0};
  bool converged{false};
};

/**
 * @brief Fixed point of the Riccati recursion for the stage-0 matrices.
 *
 * Iterates from Q_T until the sup-norm change of Pi drops below `tolerance`.
 */
[[nodiscard]] QlqrStationary solve_qlqr_stationary(
  const QlqrInstance & instance, double tolerance = 1e-12, std::size_t max_iterations = 100000);

struct TrajectoryEnsemble
{
  /// states[i][k] for k = 0..steps, inputs[i][k] for k = 0..steps-1.
  std::vector<std::vector<Eigen::VectorXd>> states;
  std::vector<std::vector<Eigen::VectorXd>> inputs;
};

/**
 * @brief Samples closed-loop trajectories x_{k+1} = A x + B (K_k x + w_k).
 *
 * Trajectory i uses its own engine seeded with derive_seed(seed, i), so the
 * ensemble is identical however it is partitioned. Initial states are drawn
 * uniformly from the ball of radius instance.initial_set_radius.
 * `steps` defaults to the solution horizon.
 */
[[nodiscard]] TrajectoryEnsemble simulate_closed_loop(
  const QlqrInstance & instance, const QlqrSolution & solution, std::size_t num_trajectories, std::uint64_t seed,
  std::size_t steps = 0);

struct StateBounds
{
  Eigen::VectorXd center;
  /// Outer ellipsoid {x : (x-c)' shape^{-1} (x-c) <= 1}; degenerate shapes allowed.
  Eigen::MatrixXd shape;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

/**
 * @brief Per-stage outer bounds on the reachable states.
 *
 * Scalar systems use exact interval arithmetic; higher dimensions propagate
 * ellipsoids with the trace-minimizing outer approximation of Minkowski sums.
 * Bounds are padded by a relative 1e-12 to absorb rounding.
 */
[[nodiscard]] std::vector<StateBounds> support_envelope(
  const QlqrInstance & instance, const QlqrSolution & solution, double initial_set_radius, std::size_t steps = 0);

struct QSweepRow
{
  double q;
  /// Stationary expected quadratic cost per stage, tr(R~ Sigma).
  double cost;
  /// Deformed q-entropy of the stationary noise distribution.
  double entropy;
  /// Largest principal support half-width of the stationary noise.
  double support_radius;
  /// Largest support half-width of the final-stage noise w_{T-1} of the finite-horizon problem.
  double terminal_support_radius;
  /// Monte Carlo estimate of the stationary stage cost (NaN when not requested).
  double monte_carlo_cost;
};

/**
 * @brief Re-solves the stationary problem for each q in the grid.
 *
 * When `monte_carlo_steps` > 0, also simulates the stationary closed loop for
 * that many stages (after a burn-in) and records the average stage cost.
 */
[[nodiscard]] std::vector<QSweepRow> sweep_q(
  const QlqrInstance & instance_template, const std::vector<double> & q_grid, std::size_t monte_carlo_steps = 0,
  std::uint64_t seed = 0);

}  // namespace qctl
