#include "qctl/qcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace qctl {

DeformationParameter::DeformationParameter(double q) : q_(q)
{
  if (!(q >= 0.0 && q < 1.0)) {
    throw std::invalid_argument("deformation parameter q must lie in [0, 1), got " + std::to_string(q));
  }
}

double exp_q(double x, DeformationParameter q) noexcept
{
  const double c = q.complement();
  const double base = 1.0 + c * x;
  if (base <= 0.0) { return 0.0; }
  if (q.value() == 0.0) { return base; }
  return std::pow(base, 1.0 / c);
}

double log_q(double x, DeformationParameter q)
{
  if (!(x > 0.0)) { throw std::domain_error("log_q requires x > 0"); }
  const double c = q.complement();
  if (q.value() == 0.0) { return x - 1.0; }
  return std::expm1(c * std::log(x)) / c;
}

double log_q_index(double x, double index)
{
  if (!(x > 0.0)) { throw std::domain_error("log_q requires x > 0"); }
  const double c = 1.0 - index;
  if (c == 0.0) { return std::log(x); }
  return std::expm1(c * std::log(x)) / c;
}

// ---------------------------------------------------------------------------
// DiscreteDistribution

DiscreteDistribution::DiscreteDistribution(std::vector<double> weights) : weights_(std::move(weights))
{
  if (weights_.empty()) { throw std::invalid_argument("distribution must be non-empty"); }
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("distribution entries must be finite and non-negative");
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > kProbabilityTolerance) {
    throw std::invalid_argument("distribution entries must sum to 1, got " + std::to_string(sum));
  }
}

DiscreteDistribution DiscreteDistribution::uniform(std::size_t n)
{
  return DiscreteDistribution(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

DiscreteDistribution DiscreteDistribution::point_mass(std::size_t n, std::size_t index)
{
  std::vector<double> w(n, 0.0);
  w.at(index) = 1.0;
  return DiscreteDistribution(std::move(w));
}

std::vector<std::size_t> DiscreteDistribution::support() const
{
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (weights_[i] > 0.0) { out.push_back(i); }
  }
  return out;
}

std::size_t DiscreteDistribution::support_size() const noexcept
{
  return static_cast<std::size_t>(std::ranges::count_if(weights_, [](double w) { return w > 0.0; }));
}

// ---------------------------------------------------------------------------
// Entropies and divergence

double deformed_q_entropy(const DiscreteDistribution & phi, DeformationParameter q)
{
  double s = 0.0;
  for (double p : phi.weights()) {
    if (p > 0.0) { s += p * log_q(p, q); }
  }
  return -(s - 1.0) / (2.0 - q.value());
}

double tsallis_entropy(const DiscreteDistribution & phi, double order)
{
  if (!(order > 0.0)) { throw std::domain_error("Tsallis entropy requires order > 0"); }
  double s = 0.0;
  for (double p : phi.weights()) {
    if (p > 0.0) { s += std::pow(p, order) * log_q_index(p, order); }
  }
  return -(s - 1.0) / order;
}

double qkl_divergence(std::span<const double> phi, std::span<const double> psi, DeformationParameter q)
{
  if (phi.size() != psi.size()) { throw std::invalid_argument("q-KL divergence: length mismatch"); }
  double s = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    if (phi[i] <= 0.0) { continue; }
    if (psi[i] <= 0.0) { return std::numeric_limits<double>::infinity(); }
    s += phi[i] * log_q(phi[i] / psi[i], q);
  }
  // Clamp rounding noise; the exact value is non-negative.
  return std::max(0.0, s / (2.0 - q.value()));
}

double qkl_divergence(const DiscreteDistribution & phi, const DiscreteDistribution & psi, DeformationParameter q)
{
  return qkl_divergence(phi.weights(), psi.weights(), q);
}

// ---------------------------------------------------------------------------
// q-Gaussian

namespace {

double log_gamma_ratio(double q, double half_dim)
{
  // log Gamma((2-q)/(1-q)) - log Gamma((2-q)/(1-q) + n/2)
  const double a = (2.0 - q) / (1.0 - q);
  return std::lgamma(a) - std::lgamma(a + half_dim);
}

}  // namespace

QGaussian::QGaussian(Eigen::VectorXd mu, Eigen::MatrixXd sigma, DeformationParameter q)
    : mu_(std::move(mu)), sigma_(std::move(sigma)), q_(q)
{
  const Eigen::Index n = mu_.size();
  if (n == 0) { throw std::invalid_argument("q-Gaussian: empty mean"); }
  if (sigma_.rows() != n || sigma_.cols() != n) { throw std::invalid_argument("q-Gaussian: covariance shape mismatch"); }
  if (!sigma_.allFinite() || !mu_.allFinite()) { throw std::invalid_argument("q-Gaussian: non-finite parameters"); }
  const double scale = std::max(1.0, sigma_.cwiseAbs().maxCoeff());
  if ((sigma_ - sigma_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("q-Gaussian: covariance is not symmetric");
  }
  sigma_ = 0.5 * (sigma_ + sigma_.transpose()).eval();
  llt_.compute(sigma_);
  if (llt_.info() != Eigen::Success || llt_.matrixLLT().diagonal().minCoeff() <= 0.0) {
    throw std::invalid_argument("q-Gaussian: covariance is not positive definite");
  }
  const double half_n = 0.5 * static_cast<double>(n);
  const double log_det_half = llt_.matrixLLT().diagonal().array().log().sum();
  log_z_ = log_det_half + half_n * std::log(std::numbers::pi * support_bound()) + log_gamma_ratio(q_.value(), half_n);
}

double QGaussian::shape_scale() const noexcept
{
  const auto n = static_cast<double>(dim());
  return (n + 4.0) - (n + 2.0) * q_.value();
}

double QGaussian::support_bound() const noexcept { return shape_scale() / q_.complement(); }

double QGaussian::mahalanobis_sq(const Eigen::VectorXd & x) const
{
  const Eigen::VectorXd y = llt_.matrixL().solve(x - mu_);
  return y.squaredNorm();
}

double qgaussian_density(const QGaussian & g, const Eigen::VectorXd & x)
{
  const double s = g.mahalanobis_sq(x);
  return std::exp(-g.log_normalizer()) * exp_q(-s / g.shape_scale(), g.q());
}

double qgaussian_support_radius(const QGaussian & g, const Eigen::VectorXd & direction)
{
  const double norm = direction.norm();
  if (std::abs(norm - 1.0) > 1e-9) { throw std::invalid_argument("support radius: direction must have unit norm"); }
  const double quad = g.mahalanobis_sq(g.mean() + direction);
  return std::sqrt(g.support_bound() / quad);
}

double qgaussian_entropy(const QGaussian & g)
{
  // Over the support phi^{1-q} = Z^{-(1-q)} (1 - (1-q) s / d) and E[s] = n, so
  // int phi^{2-q} = Z^{-(1-q)} (1 - (1-q) n / d).
  const double q = g.q().value();
  const double c = g.q().complement();
  const auto n = static_cast<double>(g.dim());
  const double int_pow = std::exp(-c * g.log_normalizer()) * (1.0 - c * n / g.shape_scale());
  const double int_phi_log = (int_pow - 1.0) / c;
  return -(int_phi_log - 1.0) / (2.0 - q);
}

Eigen::VectorXd unit_ball_draw(Eigen::Index n, std::mt19937_64 & rng)
{
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::VectorXd dir(n);
  double norm = 0.0;
  do {
    for (Eigen::Index i = 0; i < n; ++i) { dir(i) = normal(rng); }
    norm = dir.norm();
  } while (norm == 0.0);
  const double r = std::pow(unif(rng), 1.0 / static_cast<double>(n));
  return dir * (r / norm);
}

Eigen::VectorXd qgaussian_draw(const QGaussian & g, std::mt19937_64 & rng)
{
  const Eigen::Index n = g.dim();
  // Standardized point t = L^{-1}(x - mu) / sqrt(bound) has density prop. to
  // (1 - |t|^2)^{1/(1-q)} on the unit ball: uniform direction, |t|^2 ~ Beta(n/2, 1/(1-q) + 1).
  std::gamma_distribution<double> radial_a(0.5 * static_cast<double>(n), 1.0);
  std::gamma_distribution<double> radial_b(1.0 / g.q().complement() + 1.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  double r2 = 1.0;
  while (!(r2 < 1.0)) {
    const double a = radial_a(rng);
    const double b = radial_b(rng);
    r2 = a / (a + b);
  }
  Eigen::VectorXd dir(n);
  double norm = 0.0;
  do {
    for (Eigen::Index i = 0; i < n; ++i) { dir(i) = normal(rng); }
    norm = dir.norm();
  } while (norm == 0.0);

  const Eigen::VectorXd t = dir * (std::sqrt(r2 * g.support_bound()) / norm);
  return g.mean() + g.cholesky_factor() * t;
}

std::vector<Eigen::VectorXd> qgaussian_sample(const QGaussian & g, std::size_t count, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::vector<Eigen::VectorXd> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) { out.push_back(qgaussian_draw(g, rng)); }
  return out;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept
{
  std::uint64_t z = master + (stream + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace qctl
