#include "generators.hpp"
#include "oracle.hpp"

#include "qctl/entmax.hpp"
#include "qctl/qkl.hpp"

#include <doctest.h>

#include <cmath>
#include <map>

using namespace qctl;

namespace {

QklInstance ring_instance(double lambda = 1.0)
{
  QklInstance inst;
  const double t = 1.0 / 3.0;
  inst.passive_matrix.resize(4, 4);
  inst.passive_matrix << t, t, 0, t, t, t, t, 0, 0, t, t, t, t, 0, t, t;
  inst.state_cost = Eigen::Vector4d(1, 2, 3, 4);
  inst.horizon = 10000;
  inst.lambda = lambda;
  inst.q = DeformationParameter(0.25);
  inst.initial = DiscreteDistribution::uniform(4);
  return inst;
}

std::vector<double> column(const Eigen::MatrixXd & m, Eigen::Index j) { return {m.col(j).data(), m.col(j).data() + m.rows()}; }

Eigen::MatrixXd random_feasible(std::mt19937_64 & rng, const Eigen::MatrixXd & passive)
{
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(passive.rows(), passive.cols());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Eigen::Index j = 0; j < p.cols(); ++j) {
    for (Eigen::Index i = 0; i < p.rows(); ++i) { p(i, j) = passive(i, j) > 0.0 ? -std::log(1.0 - u(rng)) : 0.0; }
    p.col(j) /= p.col(j).sum();
  }
  return p;
}

}  // namespace

TEST_CASE("ring example: sparse column and stationary relative values")
{
  const auto inst = ring_instance();
  const auto sol = solve_qkl_stationary(inst);
  CHECK(sol.horizon() < 10000);
  CHECK(sol.controlled_matrices[0](3, 0) == 0.0);
  const Eigen::VectorXd z = relative_values(sol, 0, 0);
  const double expected_z[] = {0.951, -0.049, -2.293, -2.345};
  for (Eigen::Index i = 0; i < 4; ++i) { CHECK(std::abs(z(i) - expected_z[i]) < 1e-2); }
  CHECK(1.0 + 0.75 * z(3) == doctest::Approx(-0.759).epsilon(2e-3));
  const Eigen::VectorXd & v = sol.values[0];
  CHECK(std::abs(v(1) - v(0) - 1.000) < 1e-2);
  CHECK(std::abs(v(2) - v(0) - 3.244) < 1e-2);
  CHECK(std::abs(v(3) - v(0) - 3.296) < 1e-2);
}

TEST_CASE("relative values converge on the ring example")
{
  auto inst = ring_instance();
  inst.horizon = 400;
  const auto sol = solve_qkl(inst);
  const Eigen::VectorXd a = sol.values[0].array() - sol.values[0](0);
  const Eigen::VectorXd b = sol.values[1].array() - sol.values[1](0);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("large lambda leaves the passive dynamics unchanged")
{
  auto inst = ring_instance(1e6);
  inst.horizon = 5;
  const auto sol = solve_qkl(inst);
  for (const auto & p : sol.controlled_matrices) { CHECK((p - inst.passive_matrix).cwiseAbs().maxCoeff() < 1e-5); }
}

TEST_CASE("Shannon limit matches classical KL control")
{
  std::mt19937_64 rng(51);
  for (int i = 0; i < 20; ++i) {
    // the gap to the limit is first order in 1 - q and grows with lambda, cost spread and horizon
    auto inst = testgen::random_qkl(rng, 4, 3, 0.3 + 0.01 * i, 0.999);
    inst.state_cost /= 3.0;
    const auto sol = solve_qkl(inst);
    const auto ref = oracle::kl_control(inst.passive_matrix, inst.state_cost, inst.lambda, inst.horizon);
    for (std::size_t k = 0; k <= inst.horizon; ++k) { CHECK((sol.values[k] - ref.values[k]).cwiseAbs().maxCoeff() < 1e-3); }
    for (std::size_t k = 0; k < inst.horizon; ++k) {
      CHECK((sol.controlled_matrices[k] - ref.matrices[k]).cwiseAbs().maxCoeff() < 1e-3);
    }
  }
}

TEST_CASE("column stochasticity, exact support containment and Bellman consistency")
{
  std::mt19937_64 rng(52);
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = 2 + static_cast<std::size_t>(i % 5);
    const auto inst = testgen::random_qkl(rng, n, 4, 0.1 + 0.05 * (i % 20), 0.1 * (i % 10));
    const auto sol = solve_qkl(inst);
    CHECK(sol.values[inst.horizon] == inst.state_cost);
    for (std::size_t k = 0; k < inst.horizon; ++k) {
      const Eigen::MatrixXd & p = sol.controlled_matrices[k];
      for (Eigen::Index j = 0; j < p.cols(); ++j) {
        CHECK(std::abs(p.col(j).sum() - 1.0) < 1e-9);
        for (Eigen::Index i2 = 0; i2 < p.rows(); ++i2) {
          if (inst.passive_matrix(i2, j) == 0.0) { CHECK(p(i2, j) == 0.0); }
          CHECK(p(i2, j) >= 0.0);
        }
        const auto col = column(p, j);
        const auto passive = column(inst.passive_matrix, j);
        const double d = qkl_divergence(col, passive, inst.q);
        const double recomputed = inst.state_cost(j) + inst.lambda * d + sol.values[k + 1].dot(p.col(j));
        CHECK(std::abs(recomputed - sol.values[k](j)) < 1e-9);
      }
    }
  }
}

TEST_CASE("symmetric instance has equal relative values")
{
  QklInstance inst;
  inst.passive_matrix = Eigen::MatrixXd::Constant(3, 3, 1.0 / 3.0);
  inst.state_cost = Eigen::Vector3d::Constant(2.0);
  inst.horizon = 20;
  inst.lambda = 0.5;
  inst.q = DeformationParameter(0.4);
  inst.initial = DiscreteDistribution::uniform(3);
  const auto sol = solve_qkl(inst);
  const Eigen::VectorXd z = relative_values(sol, 0, 1);
  CHECK(z.maxCoeff() - z.minCoeff() < 1e-12);
}

TEST_CASE("identity passive dynamics gives a constant trajectory")
{
  QklInstance inst;
  inst.passive_matrix = Eigen::MatrixXd::Identity(3, 3);
  inst.state_cost = Eigen::Vector3d(1, 5, 2);
  inst.horizon = 30;
  inst.lambda = 0.5;
  inst.q = DeformationParameter(0.3);
  inst.initial = DiscreteDistribution::uniform(3);
  const auto sol = solve_qkl(inst);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto path = rollout(inst, sol, 30, seed);
    CHECK(path.size() == 31);
    for (auto s : path) { CHECK(s == path.front()); }
  }
}

TEST_CASE("rollout frequencies follow the stationary matrix and never use a zero edge")
{
  auto inst = ring_instance();
  const auto stationary = solve_qkl_stationary(inst);
  inst.horizon = 100000;
  QklSolution sol = stationary;
  sol.controlled_matrices.assign(inst.horizon, stationary.controlled_matrices[0]);
  const auto path = rollout(inst, sol, inst.horizon, 7);
  CHECK(path == rollout(inst, sol, inst.horizon, 7));
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(4, 4);
  int bad = 0;
  for (std::size_t t = 0; t + 1 < path.size(); ++t) {
    const auto j = static_cast<Eigen::Index>(path[t]);
    const auto i = static_cast<Eigen::Index>(path[t + 1]);
    if (inst.passive_matrix(i, j) == 0.0 || sol.controlled_matrices[0](i, j) == 0.0) { ++bad; }
    counts(i, j) += 1.0;
  }
  CHECK(bad == 0);
  int visited = 0;
  for (Eigen::Index j = 0; j < 4; ++j) {
    // states the controlled chain leaves for good are visited at most once
    const double total = counts.col(j).sum();
    if (total < 1000.0) { continue; }
    ++visited;
    for (Eigen::Index i = 0; i < 4; ++i) { CHECK(std::abs(counts(i, j) / total - sol.controlled_matrices[0](i, j)) < 0.02); }
  }
  CHECK(visited >= 2);
}

TEST_CASE("optimal matrices beat random feasible policies")
{
  std::mt19937_64 rng(53);
  int beaten = 0;
  for (int i = 0; i < 10; ++i) {
    const auto inst = testgen::random_qkl(rng, 4, 3, 0.3 + 0.1 * i, 0.1 * i);
    const auto sol = solve_qkl(inst);
    const double opt = evaluate_qkl_policy(inst, sol.controlled_matrices);
    double expected = 0.0;
    for (std::size_t x = 0; x < 4; ++x) { expected += inst.initial[x] * sol.values[0](static_cast<Eigen::Index>(x)); }
    CHECK(opt == doctest::Approx(expected).epsilon(1e-10));
    for (int t = 0; t < 200; ++t) {
      std::vector<Eigen::MatrixXd> other;
      for (std::size_t k = 0; k < inst.horizon; ++k) { other.push_back(random_feasible(rng, inst.passive_matrix)); }
      if (evaluate_qkl_policy(inst, other) < opt - 1e-12) { ++beaten; }
    }
  }
  CHECK(beaten == 0);
}

TEST_CASE("sparsity shrinks as lambda grows")
{
  std::size_t previous = 100;
  for (double lambda : {0.1, 0.3, 1.0, 3.0, 10.0}) {
    auto inst = ring_instance(lambda);
    const auto sol = solve_qkl_stationary(inst);
    const auto zeros = static_cast<std::size_t>((sol.controlled_matrices[0].array() == 0.0).count());
    CHECK(zeros <= previous);
    previous = zeros;
  }
}

TEST_CASE("invalid instances")
{
  auto inst = ring_instance();
  inst.horizon = 3;
  inst.passive_matrix.col(2).setZero();
  CHECK_THROWS_AS((void)solve_qkl(inst), InfeasibleError);
  inst = ring_instance();
  inst.horizon = 3;
  inst.passive_matrix(0, 0) = 0.5;
  CHECK_THROWS_AS((void)solve_qkl(inst), std::invalid_argument);
  inst = ring_instance(-1.0);
  CHECK_THROWS_AS((void)solve_qkl(inst), std::invalid_argument);
}
