#include "qctl/qkl.hpp"

#include "qctl/entmax.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace qctl {

namespace {

struct Stage
{
  Eigen::VectorXd value;
  Eigen::MatrixXd controlled;
  Eigen::VectorXd normalizers;
};

Stage backward_step(const QklInstance & instance, const Eigen::VectorXd & next_value)
{
  const auto n = static_cast<Eigen::Index>(instance.num_states());
  Stage s{Eigen::VectorXd(n), Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd(n)};
  const std::span<const double> costs(next_value.data(), static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::VectorXd column = instance.passive_matrix.col(j);
    const std::span<const double> weights(column.data(), static_cast<std::size_t>(n));
    const EntmaxResult r = entmax_weighted(costs, weights, instance.lambda, instance.q);
    const auto phi = r.distribution.weights();
    double expected = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      s.controlled(i, j) = phi[static_cast<std::size_t>(i)];
      expected += phi[static_cast<std::size_t>(i)] * next_value(i);
    }
    s.normalizers(j) = r.normalizer_c;
    s.value(j) = instance.state_cost(j) + instance.lambda * qkl_divergence(phi, weights, instance.q) + expected;
  }
  return s;
}

QklSolution assemble(const QklInstance & instance, std::vector<Stage> && reversed, Eigen::VectorXd terminal)
{
  // reversed[0] is the stage adjacent to the terminal value.
  QklSolution sol;
  sol.lambda = instance.lambda;
  const std::size_t horizon = reversed.size();
  const auto n = static_cast<Eigen::Index>(instance.num_states());
  sol.values.resize(horizon + 1);
  sol.controlled_matrices.resize(horizon);
  sol.normalizers = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(horizon), n);
  sol.values[horizon] = std::move(terminal);
  for (std::size_t r = 0; r < horizon; ++r) {
    const std::size_t k = horizon - 1 - r;
    sol.values[k] = std::move(reversed[r].value);
    sol.controlled_matrices[k] = std::move(reversed[r].controlled);
    sol.normalizers.row(static_cast<Eigen::Index>(k)) = reversed[r].normalizers.transpose();
  }
  return sol;
}

}  // namespace

void QklInstance::validate() const
{
  const auto n = static_cast<Eigen::Index>(num_states());
  if (n == 0) { throw std::invalid_argument("qkl: empty state cost"); }
  if (passive_matrix.rows() != n || passive_matrix.cols() != n) { throw std::invalid_argument("qkl: passive_matrix must be n x n"); }
  if (!passive_matrix.allFinite() || (passive_matrix.array() < 0.0).any()) { throw std::invalid_argument("qkl: passive_matrix entries must be finite and non-negative"); }
  for (Eigen::Index j = 0; j < n; ++j) {
    if ((passive_matrix.col(j).array() == 0.0).all()) { throw InfeasibleError("qkl: column " + std::to_string(j) + " of passive_matrix is all zero"); }
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (std::abs(passive_matrix.col(j).sum() - 1.0) > kProbabilityTolerance) {
      throw std::invalid_argument("qkl: column " + std::to_string(j) + " of passive_matrix does not sum to 1");
    }
  }
  if (!state_cost.allFinite()) { throw std::invalid_argument("qkl: state_cost must be finite"); }
  if (horizon < 1) { throw std::invalid_argument("qkl: horizon must be >= 1"); }
  if (!(lambda > 0.0) || !std::isfinite(lambda)) { throw std::invalid_argument("qkl: lambda must be positive"); }
  if (initial.size() != num_states()) { throw std::invalid_argument("qkl: initial distribution has wrong length"); }
}

QklSolution solve_qkl(const QklInstance & instance)
{
  instance.validate();
  std::vector<Stage> reversed;
  reversed.reserve(instance.horizon);
  Eigen::VectorXd next = instance.state_cost;
  for (std::size_t r = 0; r < instance.horizon; ++r) {
    reversed.push_back(backward_step(instance, next));
    next = reversed.back().value;
  }
  return assemble(instance, std::move(reversed), instance.state_cost);
}

QklSolution solve_qkl_stationary(const QklInstance & instance, double tolerance, std::size_t max_horizon)
{
  instance.validate();
  std::vector<Stage> reversed;
  Eigen::VectorXd next = instance.state_cost;
  for (std::size_t r = 0; r < max_horizon; ++r) {
    reversed.push_back(backward_step(instance, next));
    const Eigen::VectorXd & cur = reversed.back().value;
    const Eigen::VectorXd delta = (cur.array() - cur(0)) - (next.array() - next(0));
    next = cur;
    if (delta.cwiseAbs().maxCoeff() < tolerance) { break; }
  }
  return assemble(instance, std::move(reversed), instance.state_cost);
}

Eigen::VectorXd relative_values(const QklSolution & solution, std::size_t stage, std::size_t reference)
{
  if (stage >= solution.horizon()) { throw std::out_of_range("relative_values: stage out of range"); }
  const Eigen::VectorXd & next = solution.values[stage + 1];
  if (reference >= static_cast<std::size_t>(next.size())) { throw std::out_of_range("relative_values: reference state out of range"); }
  const double c = solution.normalizers(static_cast<Eigen::Index>(stage), static_cast<Eigen::Index>(reference));
  return (c - next.array() / solution.lambda).matrix();
}

double evaluate_qkl_policy(const QklInstance & instance, const std::vector<Eigen::MatrixXd> & policy)
{
  instance.validate();
  const auto n = static_cast<Eigen::Index>(instance.num_states());
  if (policy.size() != instance.horizon) { throw std::invalid_argument("evaluate_qkl_policy: wrong number of stages"); }
  Eigen::VectorXd marginal(n);
  for (Eigen::Index i = 0; i < n; ++i) { marginal(i) = instance.initial[static_cast<std::size_t>(i)]; }
  double total = 0.0;
  for (const auto & p : policy) {
    if (p.rows() != n || p.cols() != n) { throw std::invalid_argument("evaluate_qkl_policy: matrix is not n x n"); }
    total += instance.state_cost.dot(marginal);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (marginal(j) <= 0.0) { continue; }
      const Eigen::VectorXd col = p.col(j);
      const Eigen::VectorXd ref = instance.passive_matrix.col(j);
      total += marginal(j) * instance.lambda *
               qkl_divergence(std::span<const double>(col.data(), col.size()), std::span<const double>(ref.data(), ref.size()), instance.q);
    }
    marginal = p * marginal;
  }
  return total + instance.state_cost.dot(marginal);
}

std::vector<std::size_t> rollout(
  const QklInstance & instance, const QklSolution & solution, std::size_t steps, std::uint64_t seed)
{
  if (steps > solution.horizon()) { throw std::invalid_argument("rollout: more steps than solution stages"); }
  std::mt19937_64 rng(seed);
  const auto w0 = instance.initial.weights();
  std::discrete_distribution<std::size_t> start(w0.begin(), w0.end());
  std::vector<std::size_t> states;
  states.reserve(steps + 1);
  states.push_back(start(rng));
  for (std::size_t k = 0; k < steps; ++k) {
    const Eigen::VectorXd col = solution.controlled_matrices[k].col(static_cast<Eigen::Index>(states.back()));
    std::discrete_distribution<std::size_t> next(col.data(), col.data() + col.size());
    states.push_back(next(rng));
  }
  return states;
}

}  // namespace qctl
