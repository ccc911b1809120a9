#pragma once

#include "qctl/qkl.hpp"
#include "qctl/qlqr.hpp"
#include "qctl/troc.hpp"

#include <Eigen/Core>

#include <random>
#include <vector>

namespace qctl::testgen {

inline std::vector<double> uniform_vector(std::mt19937_64 & rng, std::size_t n, double lo, double hi)
{
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto & x : v) { x = d(rng); }
  return v;
}

/// Random point of the simplex; each entry is zeroed with probability zero_prob (at least one survives).
inline std::vector<double> simplex_point(std::mt19937_64 & rng, std::size_t n, double zero_prob = 0.0)
{
  std::exponential_distribution<double> e(1.0);
  std::bernoulli_distribution drop(zero_prob);
  std::uniform_int_distribution<std::size_t> keep(0, n - 1);
  const std::size_t kept = keep(rng);
  std::vector<double> v(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = (i != kept && drop(rng)) ? 0.0 : e(rng);
    total += v[i];
  }
  for (auto & x : v) { x /= total; }
  return v;
}

inline FiniteTrocInstance random_troc(
  std::mt19937_64 & rng, std::size_t n, std::size_t m, std::size_t horizon, double lambda, double q, double zero_prob = 0.3)
{
  FiniteTrocInstance inst;
  for (std::size_t u = 0; u < m; ++u) {
    Eigen::MatrixXd p(n, n);
    for (std::size_t x = 0; x < n; ++x) {
      const auto row = simplex_point(rng, n, zero_prob);
      for (std::size_t y = 0; y < n; ++y) { p(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) = row[y]; }
    }
    inst.transitions.push_back(p);
  }
  std::uniform_real_distribution<double> c(0.0, 2.0);
  for (std::size_t k = 0; k < horizon; ++k) {
    Eigen::MatrixXd cost(n, m);
    for (Eigen::Index i = 0; i < cost.size(); ++i) { cost(i) = c(rng); }
    inst.stage_costs.push_back(cost);
  }
  inst.terminal_cost = Eigen::VectorXd::NullaryExpr(static_cast<Eigen::Index>(n), [&]() { return c(rng); });
  inst.horizon = horizon;
  inst.lambda = lambda;
  inst.q = DeformationParameter(q);
  return inst;
}

inline Eigen::MatrixXd random_column_stochastic(std::mt19937_64 & rng, std::size_t n, double zero_prob)
{
  Eigen::MatrixXd p(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto col = simplex_point(rng, n, zero_prob);
    for (std::size_t i = 0; i < n; ++i) { p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i]; }
  }
  return p;
}

inline QklInstance random_qkl(std::mt19937_64 & rng, std::size_t n, std::size_t horizon, double lambda, double q, double zero_prob = 0.3)
{
  QklInstance inst;
  inst.passive_matrix = random_column_stochastic(rng, n, zero_prob);
  const auto cost = uniform_vector(rng, n, 0.0, 3.0);
  inst.state_cost = Eigen::Map<const Eigen::VectorXd>(cost.data(), static_cast<Eigen::Index>(n));
  inst.horizon = horizon;
  inst.lambda = lambda;
  inst.q = DeformationParameter(q);
  inst.initial = DiscreteDistribution(simplex_point(rng, n));
  return inst;
}

inline Eigen::MatrixXd random_spd(std::mt19937_64 & rng, Eigen::Index n, double floor = 0.2)
{
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < g.size(); ++i) { g(i) = z(rng); }
  return g * g.transpose() + floor * Eigen::MatrixXd::Identity(n, n);
}

inline DiscreteDistribution to_distribution(const Eigen::VectorXd & v) { return DiscreteDistribution(std::vector<double>(v.data(), v.data() + v.size())); }

/// Instance of the scalar example: A = B = Q = R = 1, S = 0, no terminal cost.
inline QlqrInstance scalar_lqr(double q, double lambda, std::size_t horizon = 50)
{
  QlqrInstance inst;
  const Eigen::MatrixXd one = Eigen::MatrixXd::Ones(1, 1);
  inst.A = {one};
  inst.B = {one};
  inst.Q = {one};
  inst.S = {Eigen::MatrixXd::Zero(1, 1)};
  inst.R = {one};
  inst.QT = Eigen::MatrixXd::Zero(1, 1);
  inst.horizon = horizon;
  inst.lambda = lambda;
  inst.q = DeformationParameter(q);
  inst.initial_state = Eigen::VectorXd::Ones(1);
  inst.initial_set_radius = 0.1;
  return inst;
}

}  // namespace qctl::testgen
