#include "qctl/entmax.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>

namespace qctl {

namespace {

// Entries whose exp_q base falls below this are clipped to zero.
constexpr double kBoundaryTie = 1e-14;

double clipped_exp_q(double x, DeformationParameter q) noexcept
{
  if (1.0 + q.complement() * x <= kBoundaryTie) { return 0.0; }
  return exp_q(x, q);
}

void check_lambda(double lambda)
{
  if (!(lambda > 0.0) || !std::isfinite(lambda)) { throw std::invalid_argument("lambda must be positive and finite"); }
}

}  // namespace

EntmaxResult entmax_weighted(
  std::span<const double> costs, std::span<const double> weights, double lambda, DeformationParameter q)
{
  check_lambda(lambda);
  if (costs.empty()) { throw std::invalid_argument("ent-max: empty cost vector"); }
  if (costs.size() != weights.size()) { throw std::invalid_argument("ent-max: costs and weights differ in length"); }

  const std::size_t n = costs.size();
  double c_min = std::numeric_limits<double>::infinity();
  double c_max = -std::numeric_limits<double>::infinity();
  double weight_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) { throw std::invalid_argument("ent-max: weights must be finite and non-negative"); }
    if (weights[i] == 0.0) { continue; }
    if (!std::isfinite(costs[i])) { throw std::invalid_argument("ent-max: non-finite cost at a positive-weight index"); }
    c_min = std::min(c_min, costs[i]);
    c_max = std::max(c_max, costs[i]);
    weight_sum += weights[i];
  }
  if (weight_sum == 0.0) { throw InfeasibleError("ent-max: all weights are zero"); }

  // Work with costs shifted by their minimum so C stays O(1) for large values.
  std::vector<double> args(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (weights[i] > 0.0) { args[i] = -(costs[i] - c_min) / lambda; }
  }
  auto mass = [&](double c) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (weights[i] > 0.0) { s += weights[i] * clipped_exp_q(args[i] + c, q); }
    }
    return s - 1.0;
  };

  // g is -1 at lo and nondecreasing in C.
  double lo = -1.0 / q.complement() - 1.0;
  double hi = (c_max - c_min) / lambda + 1.0;
  for (int expand = 0; mass(hi) <= 0.0; ++expand) {
    if (expand > 2000 || !std::isfinite(hi)) { throw InfeasibleError("ent-max: cannot bracket the normalizer"); }
    hi += hi - lo;
  }
  assert(mass(lo) < 0.0);

  for (int it = 0; it < 4000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) { break; }
    if (mass(mid) > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  const double c_shifted = std::abs(mass(lo)) <= std::abs(mass(hi)) ? lo : hi;

  std::vector<double> phi(n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (weights[i] > 0.0) { phi[i] = weights[i] * clipped_exp_q(args[i] + c_shifted, q); }
    total += phi[i];
  }
  for (double & p : phi) { p /= total; }

  double expected = 0.0;
  double divergence_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (phi[i] <= 0.0) { continue; }
    expected += phi[i] * costs[i];
    divergence_sum += phi[i] * log_q(phi[i] / weights[i], q);
  }
  const double objective = expected + lambda / (2.0 - q.value()) * (divergence_sum - 1.0);

  return EntmaxResult{DiscreteDistribution(std::move(phi)), c_shifted + c_min / lambda, objective};
}

EntmaxResult entmax_discrete(std::span<const double> costs, double lambda, DeformationParameter q)
{
  const std::vector<double> ones(costs.size(), 1.0);
  EntmaxResult result = entmax_weighted(costs, ones, lambda, q);
#ifndef NDEBUG
  if (q.value() == 0.0) {
    std::vector<double> scores(costs.size());
    std::ranges::transform(costs, scores.begin(), [lambda](double c) { return -c / lambda; });
    const auto reference = sparsemax(scores);
    for (std::size_t i = 0; i < reference.size(); ++i) { assert(std::abs(reference[i] - result.distribution[i]) < 1e-9); }
  }
#endif
  return result;
}

double entmax_objective(
  std::span<const double> costs, const DiscreteDistribution & phi, double lambda, DeformationParameter q)
{
  if (costs.size() != phi.size()) { throw std::invalid_argument("objective: shape mismatch"); }
  double expected = 0.0;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    if (phi[i] > 0.0) { expected += phi[i] * costs[i]; }
  }
  return expected - lambda * deformed_q_entropy(phi, q);
}

std::vector<double> sparsemax(std::span<const double> scores)
{
  std::vector<double> sorted(scores.begin(), scores.end());
  std::ranges::sort(sorted, std::greater<>());
  double cumulative = 0.0;
  double tau = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumulative += sorted[k];
    const double kk = static_cast<double>(k + 1);
    if (1.0 + kk * sorted[k] > cumulative) { tau = (cumulative - 1.0) / kk; }
  }
  std::vector<double> out(scores.size());
  std::ranges::transform(scores, out.begin(), [tau](double z) { return std::max(z - tau, 0.0); });
  return out;
}

double quadratic_eta(const Eigen::MatrixXd & r_matrix, double lambda, DeformationParameter q)
{
  check_lambda(lambda);
  const Eigen::LLT<Eigen::MatrixXd> llt(r_matrix);
  if (llt.info() != Eigen::Success) { throw std::invalid_argument("quadratic ent-max: R is not positive definite"); }
  const auto n = static_cast<double>(r_matrix.rows());
  const double qv = q.value();
  const double c = q.complement();
  const double a = (2.0 - qv) / c;
  const double half_log_det = llt.matrixLLT().diagonal().array().log().sum();
  const double log_base = -half_log_det + 0.5 * n * std::log(std::numbers::pi * lambda / c) + std::lgamma(a) - std::lgamma(a + 0.5 * n);
  const double exponent = 2.0 * c / ((n + 2.0) - n * qv);
  return std::exp(exponent * log_base);
}

QuadraticEntmaxResult entmax_quadratic(
  const Eigen::MatrixXd & r_matrix, const Eigen::VectorXd & mean, double lambda, DeformationParameter q)
{
  const Eigen::Index n = r_matrix.rows();
  if (r_matrix.cols() != n || mean.size() != n) { throw std::invalid_argument("quadratic ent-max: shape mismatch"); }
  const double scale = std::max(1.0, r_matrix.cwiseAbs().maxCoeff());
  if ((r_matrix - r_matrix.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("quadratic ent-max: R is not symmetric");
  }
  const double eta = quadratic_eta(r_matrix, lambda, q);
  const auto nd = static_cast<double>(n);
  const double d = (nd + 4.0) - (nd + 2.0) * q.value();
  const Eigen::MatrixXd r_inv = r_matrix.llt().solve(Eigen::MatrixXd::Identity(n, n));
  Eigen::MatrixXd sigma = (lambda / (d * eta)) * r_inv;
  sigma = 0.5 * (sigma + sigma.transpose()).eval();
  return QuadraticEntmaxResult{QGaussian(mean, std::move(sigma), q), eta};
}

}  // namespace qctl
