#pragma once

/**
 * @file
 * @brief q-deformed scalar functions, entropies, divergences and the q-Gaussian family.
 *
 * Every deformed quantity is indexed by a deformation parameter q in [0, 1).
 * As q -> 1 the functions approach their classical counterparts (exp, log,
 * Shannon entropy, KL divergence, Gaussian).
 */

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace qctl {

/// Probability-sum tolerance used by every validated distribution.
inline constexpr double kProbabilityTolerance = 1e-9;

/// Deformation parameter q, validated to lie in [0, 1).
class DeformationParameter
{
public:
  explicit DeformationParameter(double q);

  [[nodiscard]] double value() const noexcept { return q_; }
  /// 1 - q, strictly positive.
  [[nodiscard]] double complement() const noexcept { return 1.0 - q_; }

  friend bool operator==(const DeformationParameter &, const DeformationParameter &) = default;

private:
  double q_;
};

/// q-exponential [1 + (1-q) x]_+^{1/(1-q)}. Total, continuous and nondecreasing in x.
[[nodiscard]] double exp_q(double x, DeformationParameter q) noexcept;

/// q-logarithm (x^{1-q} - 1) / (1-q). Throws std::domain_error for x <= 0.
[[nodiscard]] double log_q(double x, DeformationParameter q);

/**
 * @brief q-logarithm for an arbitrary real index.
 *
 * Tsallis entropies of order outside [0, 1) (e.g. the dual order 2 - q)
 * need the deformed logarithm beyond the validated range. Index 1 gives ln.
 */
[[nodiscard]] double log_q_index(double x, double index);

/// Probability vector on a finite set.
class DiscreteDistribution
{
public:
  /// Throws std::invalid_argument unless entries are >= 0 and sum to 1 within kProbabilityTolerance.
  explicit DiscreteDistribution(std::vector<double> weights);

  static DiscreteDistribution uniform(std::size_t n);
  static DiscreteDistribution point_mass(std::size_t n, std::size_t index);

  [[nodiscard]] std::size_t size() const noexcept { return weights_.size(); }
  [[nodiscard]] double operator[](std::size_t i) const { return weights_[i]; }
  [[nodiscard]] std::span<const double> weights() const noexcept { return weights_; }

  /// Indices with strictly positive mass.
  [[nodiscard]] std::vector<std::size_t> support() const;
  [[nodiscard]] std::size_t support_size() const noexcept;
  [[nodiscard]] bool in_support(std::size_t i) const { return weights_[i] > 0.0; }

  friend bool operator==(const DiscreteDistribution &, const DiscreteDistribution &) = default;

private:
  std::vector<double> weights_;
};

/// Deformed q-entropy H_q(phi) = -(1/(2-q)) (sum phi log_q phi - 1), with 0 log_q 0 = 0.
[[nodiscard]] double deformed_q_entropy(const DiscreteDistribution & phi, DeformationParameter q);

/**
 * @brief Tsallis entropy T_order(phi) = -(1/order)(sum phi^order log_order phi - 1).
 *
 * Satisfies H_q(phi) = T_{2-q}(phi). Throws std::domain_error unless order > 0.
 */
[[nodiscard]] double tsallis_entropy(const DiscreteDistribution & phi, double order);

/**
 * @brief q-KL divergence, shifted so that D(phi || phi) = 0.
 *
 * Returns (1/(2-q)) sum_i phi_i log_q(phi_i / psi_i), which is the literal
 * definition plus 1/(2-q). Returns +infinity when supp(phi) is not contained
 * in supp(psi). Terms with phi_i = 0 contribute 0.
 */
[[nodiscard]] double qkl_divergence(
  const DiscreteDistribution & phi, const DiscreteDistribution & psi, DeformationParameter q);

/// Same divergence on raw, unvalidated weight vectors of equal length.
[[nodiscard]] double qkl_divergence(std::span<const double> phi, std::span<const double> psi, DeformationParameter q);

/**
 * @brief Multivariate q-Gaussian N_q(mu, Sigma).
 *
 * Density (1/Z_q) exp_q(-(x-mu)' Sigma^{-1} (x-mu) / ((n+4) - (n+2) q)) with
 * mean mu and covariance Sigma. The support is the open ellipsoid
 * (x-mu)' Sigma^{-1} (x-mu) < ((n+4) - (n+2) q) / (1-q).
 */
class QGaussian
{
public:
  /// Throws std::invalid_argument if sigma is not symmetric positive definite or shapes disagree.
  QGaussian(Eigen::VectorXd mu, Eigen::MatrixXd sigma, DeformationParameter q);

  [[nodiscard]] Eigen::Index dim() const noexcept { return mu_.size(); }
  [[nodiscard]] const Eigen::VectorXd & mean() const noexcept { return mu_; }
  [[nodiscard]] const Eigen::MatrixXd & covariance() const noexcept { return sigma_; }
  [[nodiscard]] DeformationParameter q() const noexcept { return q_; }

  /// Lower Cholesky factor L with Sigma = L L'.
  [[nodiscard]] Eigen::MatrixXd cholesky_factor() const { return llt_.matrixL(); }

  /// (n+4) - (n+2) q, the scale inside the q-exponential.
  [[nodiscard]] double shape_scale() const noexcept;
  /// ((n+4) - (n+2) q) / (1-q): squared Mahalanobis radius of the support boundary.
  [[nodiscard]] double support_bound() const noexcept;
  /// log Z_q.
  [[nodiscard]] double log_normalizer() const noexcept { return log_z_; }

  [[nodiscard]] double mahalanobis_sq(const Eigen::VectorXd & x) const;
  [[nodiscard]] bool in_support(const Eigen::VectorXd & x) const { return mahalanobis_sq(x) < support_bound(); }

private:
  Eigen::VectorXd mu_;
  Eigen::MatrixXd sigma_;
  DeformationParameter q_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double log_z_{0.0};
};

[[nodiscard]] double qgaussian_density(const QGaussian & g, const Eigen::VectorXd & x);

/// Distance from the mean to the support boundary along a unit direction.
[[nodiscard]] double qgaussian_support_radius(const QGaussian & g, const Eigen::VectorXd & direction);

/// Closed-form deformed q-entropy of the density, using the same q as the distribution.
[[nodiscard]] double qgaussian_entropy(const QGaussian & g);

/// Draws one sample using the caller's engine. Always strictly inside the support.
[[nodiscard]] Eigen::VectorXd qgaussian_draw(const QGaussian & g, std::mt19937_64 & rng);

/// Draws a point uniformly from the unit ball in R^n.
[[nodiscard]] Eigen::VectorXd unit_ball_draw(Eigen::Index n, std::mt19937_64 & rng);

/// Deterministic batch of samples for a given seed.
[[nodiscard]] std::vector<Eigen::VectorXd> qgaussian_sample(const QGaussian & g, std::size_t count, std::uint64_t seed);

/// SplitMix64 finalizer; derives independent stream seeds from a master seed.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept;

}  // namespace qctl
