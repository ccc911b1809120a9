#include "qctl/troc.hpp"

#include "qctl/entmax.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qctl {

void FiniteTrocInstance::validate() const
{
  const auto n = static_cast<Eigen::Index>(num_states());
  const auto m = static_cast<Eigen::Index>(num_actions());
  if (n == 0) { throw std::invalid_argument("troc: no states"); }
  if (m == 0) { throw std::invalid_argument("troc: no actions"); }
  if (horizon < 1) { throw std::invalid_argument("troc: horizon must be >= 1"); }
  if (!(lambda > 0.0) || !std::isfinite(lambda)) { throw std::invalid_argument("troc: lambda must be positive"); }
  if (!terminal_cost.allFinite()) { throw std::invalid_argument("troc: terminal cost must be finite"); }
  for (Eigen::Index u = 0; u < m; ++u) {
    const auto & p = transitions[static_cast<std::size_t>(u)];
    if (p.rows() != n || p.cols() != n) { throw std::invalid_argument("troc: transition matrix for action " + std::to_string(u) + " is not n x n"); }
    if ((p.array() < 0.0).any() || !p.allFinite()) { throw std::invalid_argument("troc: negative transition probability"); }
    for (Eigen::Index x = 0; x < n; ++x) {
      if (std::abs(p.row(x).sum() - 1.0) > kProbabilityTolerance) {
        throw std::invalid_argument("troc: p(. | x=" + std::to_string(x) + ", u=" + std::to_string(u) + ") does not sum to 1");
      }
    }
  }
  if (stage_costs.size() != 1 && stage_costs.size() != horizon) {
    throw std::invalid_argument("troc: stage costs must be time-invariant or one per stage");
  }
  for (const auto & c : stage_costs) {
    if (c.rows() != n || c.cols() != m) { throw std::invalid_argument("troc: stage cost is not n x m"); }
    if (!c.allFinite()) { throw std::invalid_argument("troc: stage cost must be finite"); }
  }
}

TrocSolution solve_troc(const FiniteTrocInstance & instance)
{
  instance.validate();
  const std::size_t n = instance.num_states();
  const std::size_t m = instance.num_actions();
  const std::size_t horizon = instance.horizon;
  const double q = instance.q.value();

  TrocSolution sol;
  sol.value = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(horizon + 1), static_cast<Eigen::Index>(n));
  sol.normalizers = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(horizon), static_cast<Eigen::Index>(n));
  sol.q_values.assign(horizon, Eigen::MatrixXd());
  sol.policy.assign(horizon, {});
  sol.value.row(static_cast<Eigen::Index>(horizon)) = instance.terminal_cost.transpose();

  std::vector<double> costs(m);
  for (std::size_t k = horizon; k-- > 0;) {
    const Eigen::VectorXd next = sol.value.row(static_cast<Eigen::Index>(k + 1)).transpose();
    Eigen::MatrixXd qk(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    for (std::size_t u = 0; u < m; ++u) {
      qk.col(static_cast<Eigen::Index>(u)) = instance.transitions[u] * next;
      for (std::size_t x = 0; x < n; ++x) {
        qk(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(u)) += instance.cost(k, x, u);
      }
    }
    auto & row_policy = sol.policy[k];
    row_policy.reserve(n);
    for (std::size_t x = 0; x < n; ++x) {
      for (std::size_t u = 0; u < m; ++u) { costs[u] = qk(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(u)); }
      EntmaxResult r = entmax_discrete(costs, instance.lambda, instance.q);
      double expected = 0.0;
      for (std::size_t u = 0; u < m; ++u) { expected += r.distribution[u] * costs[u]; }
      const auto kx = static_cast<Eigen::Index>(x);
      sol.normalizers(static_cast<Eigen::Index>(k), kx) = r.normalizer_c;
      sol.value(static_cast<Eigen::Index>(k), kx) =
        (1.0 - q) / (2.0 - q) * expected + instance.lambda / (2.0 - q) * (r.normalizer_c - 1.0);
      row_policy.push_back(std::move(r.distribution));
    }
    sol.q_values[k] = std::move(qk);
  }
  return sol;
}

double evaluate_policy(
  const FiniteTrocInstance & instance, const MarkovPolicy & policy, const DiscreteDistribution & initial)
{
  instance.validate();
  const std::size_t n = instance.num_states();
  const std::size_t m = instance.num_actions();
  if (initial.size() != n) { throw std::invalid_argument("evaluate_policy: initial distribution has wrong length"); }
  if (policy.size() != instance.horizon) { throw std::invalid_argument("evaluate_policy: policy has wrong number of stages"); }

  Eigen::VectorXd marginal(static_cast<Eigen::Index>(n));
  for (std::size_t x = 0; x < n; ++x) { marginal(static_cast<Eigen::Index>(x)) = initial[x]; }

  double total = 0.0;
  for (std::size_t k = 0; k < instance.horizon; ++k) {
    if (policy[k].size() != n) { throw std::invalid_argument("evaluate_policy: stage " + std::to_string(k) + " has wrong number of states"); }
    Eigen::VectorXd next = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t x = 0; x < n; ++x) {
      const auto & pi = policy[k][x];
      if (pi.size() != m) { throw std::invalid_argument("evaluate_policy: action distribution has wrong length"); }
      const double mass = marginal(static_cast<Eigen::Index>(x));
      double stage = -instance.lambda * deformed_q_entropy(pi, instance.q);
      for (std::size_t u = 0; u < m; ++u) {
        if (pi[u] <= 0.0) { continue; }
        stage += pi[u] * instance.cost(k, x, u);
        next += (mass * pi[u]) * instance.transitions[u].row(static_cast<Eigen::Index>(x)).transpose();
      }
      total += mass * stage;
    }
    marginal = next;
  }
  return total + marginal.dot(instance.terminal_cost);
}

}  // namespace qctl
