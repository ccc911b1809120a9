#include "qctl/qlqr.hpp"

#include "qctl/entmax.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace qctl {

namespace {

void check_stage_list(const std::vector<Eigen::MatrixXd> & list, std::size_t horizon, Eigen::Index rows, Eigen::Index cols, const char * name)
{
  if (list.size() != 1 && list.size() != horizon) {
    throw std::invalid_argument(std::string("qlqr: ") + name + " must hold one matrix or one per stage");
  }
  for (const auto & m : list) {
    if (m.rows() != rows || m.cols() != cols) {
      throw std::invalid_argument(std::string("qlqr: ") + name + " has shape " + std::to_string(m.rows()) + "x" +
                                  std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
    }
    if (!m.allFinite()) { throw std::invalid_argument(std::string("qlqr: ") + name + " has non-finite entries"); }
  }
}

struct RiccatiStep
{
  Eigen::MatrixXd pi;
  Eigen::MatrixXd gain;
  Eigen::MatrixXd r_tilde;
};

RiccatiStep riccati_step(
  const Eigen::MatrixXd & a, const Eigen::MatrixXd & b, const Eigen::MatrixXd & q, const Eigen::MatrixXd & s,
  const Eigen::MatrixXd & r, const Eigen::MatrixXd & pi_next, std::size_t stage)
{
  Eigen::MatrixXd r_tilde = r + b.transpose() * pi_next * b;
  r_tilde = 0.5 * (r_tilde + r_tilde.transpose()).eval();
  const Eigen::MatrixXd s_tilde = s + a.transpose() * pi_next * b;  // n x m
  const Eigen::MatrixXd q_tilde = q + a.transpose() * pi_next * a;
  const Eigen::LLT<Eigen::MatrixXd> llt(r_tilde);
  if (llt.info() != Eigen::Success) {
    throw InfeasibleError("qlqr: R + B' Pi B is not positive definite at stage " + std::to_string(stage));
  }
  Eigen::MatrixXd gain = -llt.solve(s_tilde.transpose());
  Eigen::MatrixXd pi = q_tilde + s_tilde * gain;
  pi = 0.5 * (pi + pi.transpose()).eval();
  return {std::move(pi), std::move(gain), std::move(r_tilde)};
}

Eigen::VectorXd principal_radii(const QGaussian & noise)
{
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(noise.covariance());
  return (eig.eigenvalues().array().max(0.0) * noise.support_bound()).sqrt().matrix();
}

double pad(double v) { return 1e-12 * (1.0 + std::abs(v)); }

}  // namespace

void QlqrInstance::validate() const
{
  if (A.empty() || B.empty() || Q.empty() || R.empty()) { throw std::invalid_argument("qlqr: A, B, Q and R are required"); }
  if (horizon < 1) { throw std::invalid_argument("qlqr: horizon must be >= 1"); }
  if (!(lambda > 0.0) || !std::isfinite(lambda)) { throw std::invalid_argument("qlqr: lambda must be positive"); }
  const Eigen::Index n = state_dim();
  const Eigen::Index m = input_dim();
  if (n == 0 || m == 0) { throw std::invalid_argument("qlqr: empty system matrices"); }
  check_stage_list(A, horizon, n, n, "A");
  check_stage_list(B, horizon, n, m, "B");
  check_stage_list(Q, horizon, n, n, "Q");
  check_stage_list(R, horizon, m, m, "R");
  if (S.empty()) { throw std::invalid_argument("qlqr: S is required (use zeros)"); }
  check_stage_list(S, horizon, n, m, "S");
  if (QT.rows() != n || QT.cols() != n || !QT.allFinite()) { throw std::invalid_argument("qlqr: Q_T must be a finite n x n matrix"); }
  for (const auto & r : R) {
    const Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (r + r.transpose()));
    if (llt.info() != Eigen::Success) { throw std::invalid_argument("qlqr: R must be positive definite"); }
  }
  if (initial_state.size() != n || !initial_state.allFinite()) { throw std::invalid_argument("qlqr: initial_state must have length n"); }
  if (!(initial_set_radius >= 0.0)) { throw std::invalid_argument("qlqr: initial_set_radius must be non-negative"); }
}

std::vector<std::string> QlqrInstance::cost_block_warnings() const
{
  std::vector<std::string> out;
  const Eigen::Index n = state_dim();
  const Eigen::Index m = input_dim();
  const std::size_t stages = std::max({Q.size(), S.size(), R.size()});
  for (std::size_t k = 0; k < stages; ++k) {
    Eigen::MatrixXd block(n + m, n + m);
    block << q_weight(k), s_weight(k), s_weight(k).transpose(), r_weight(k);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (block + block.transpose()), Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, block.cwiseAbs().maxCoeff())) {
      out.push_back("stage cost block [[Q,S],[S',R]] is not PSD at stage " + std::to_string(k));
    }
  }
  return out;
}

QGaussian QlqrSolution::noise(std::size_t k) const
{
  return QGaussian(Eigen::VectorXd::Zero(noise_covariances.at(k).rows()), noise_covariances[k], q);
}

QlqrSolution solve_qlqr(const QlqrInstance & instance)
{
  instance.validate();
  const std::size_t horizon = instance.horizon;
  const Eigen::Index m = instance.input_dim();

  QlqrSolution sol;
  sol.lambda = instance.lambda;
  sol.q = instance.q;
  sol.pi_matrices.resize(horizon + 1);
  sol.gains.resize(horizon);
  sol.r_tilde.resize(horizon);
  sol.noise_covariances.resize(horizon);
  sol.etas.resize(horizon);
  sol.support_radii.resize(horizon);
  sol.pi_matrices[horizon] = 0.5 * (instance.QT + instance.QT.transpose());

  for (std::size_t k = horizon; k-- > 0;) {
    RiccatiStep step = riccati_step(
      instance.a(k), instance.b(k), instance.q_weight(k), instance.s_weight(k), instance.r_weight(k), sol.pi_matrices[k + 1], k);
    const QuadraticEntmaxResult policy = entmax_quadratic(step.r_tilde, Eigen::VectorXd::Zero(m), instance.lambda, instance.q);
    sol.pi_matrices[k] = std::move(step.pi);
    sol.gains[k] = std::move(step.gain);
    sol.r_tilde[k] = std::move(step.r_tilde);
    sol.noise_covariances[k] = policy.gaussian.covariance();
    sol.etas[k] = policy.eta;
    sol.support_radii[k] = principal_radii(policy.gaussian);
  }
  return sol;
}

QlqrStationary solve_qlqr_stationary(const QlqrInstance & instance, double tolerance, std::size_t max_iterations)
{
  instance.validate();
  const Eigen::Index m = instance.input_dim();
  QlqrStationary out;
  Eigen::MatrixXd pi = 0.5 * (instance.QT + instance.QT.transpose());
  RiccatiStep step;
  for (std::size_t it = 0; it < max_iterations; ++it) {
    step = riccati_step(instance.a(0), instance.b(0), instance.q_weight(0), instance.s_weight(0), instance.r_weight(0), pi, 0);
    const double change = (step.pi - pi).cwiseAbs().maxCoeff();
    pi = step.pi;
    out.iterations = it + 1;
    if (change < tolerance) {
      out.converged = true;
      break;
    }
  }
  // Gain and R~ consistent with the converged Pi.
  step = riccati_step(instance.a(0), instance.b(0), instance.q_weight(0), instance.s_weight(0), instance.r_weight(0), pi, 0);
  const QuadraticEntmaxResult policy = entmax_quadratic(step.r_tilde, Eigen::VectorXd::Zero(m), instance.lambda, instance.q);
  out.pi = pi;
  out.gain = step.gain;
  out.r_tilde = step.r_tilde;
  out.noise_covariance = policy.gaussian.covariance();
  out.eta = policy.eta;
  out.support_radii = principal_radii(policy.gaussian);
  return out;
}

TrajectoryEnsemble simulate_closed_loop(
  const QlqrInstance & instance, const QlqrSolution & solution, std::size_t num_trajectories, std::uint64_t seed,
  std::size_t steps)
{
  if (steps == 0) { steps = solution.horizon(); }
  if (steps > solution.horizon()) { throw std::invalid_argument("simulate: more steps than solution stages"); }
  const Eigen::Index n = instance.state_dim();

  std::vector<QGaussian> noises;
  noises.reserve(steps);
  for (std::size_t k = 0; k < steps; ++k) { noises.push_back(solution.noise(k)); }

  TrajectoryEnsemble ens;
  ens.states.resize(num_trajectories);
  ens.inputs.resize(num_trajectories);
  for (std::size_t i = 0; i < num_trajectories; ++i) {
    std::mt19937_64 rng(derive_seed(seed, i));
    auto & xs = ens.states[i];
    auto & us = ens.inputs[i];
    xs.reserve(steps + 1);
    us.reserve(steps);
    Eigen::VectorXd x = instance.initial_state;
    if (instance.initial_set_radius > 0.0) { x += instance.initial_set_radius * unit_ball_draw(n, rng); }
    xs.push_back(x);
    for (std::size_t k = 0; k < steps; ++k) {
      const Eigen::VectorXd u = solution.gains[k] * x + qgaussian_draw(noises[k], rng);
      x = instance.a(k) * x + instance.b(k) * u;
      us.push_back(u);
      xs.push_back(x);
    }
  }
  return ens;
}

std::vector<StateBounds> support_envelope(
  const QlqrInstance & instance, const QlqrSolution & solution, double initial_set_radius, std::size_t steps)
{
  if (steps == 0) { steps = solution.horizon(); }
  if (steps > solution.horizon()) { throw std::invalid_argument("envelope: more steps than solution stages"); }
  if (!(initial_set_radius >= 0.0)) { throw std::invalid_argument("envelope: radius must be non-negative"); }
  const Eigen::Index n = instance.state_dim();

  std::vector<StateBounds> out;
  out.reserve(steps + 1);
  Eigen::VectorXd center = instance.initial_state;
  Eigen::MatrixXd shape = initial_set_radius * initial_set_radius * Eigen::MatrixXd::Identity(n, n);

  auto emit = [&](const Eigen::VectorXd & lo, const Eigen::VectorXd & hi) {
    StateBounds b{center, shape, lo, hi};
    for (Eigen::Index i = 0; i < n; ++i) {
      b.lower(i) -= pad(b.lower(i));
      b.upper(i) += pad(b.upper(i));
    }
    out.push_back(std::move(b));
  };

  if (n == 1) {
    double lo = instance.initial_state(0) - initial_set_radius;
    double hi = instance.initial_state(0) + initial_set_radius;
    emit(Eigen::VectorXd::Constant(1, lo), Eigen::VectorXd::Constant(1, hi));
    for (std::size_t k = 0; k < steps; ++k) {
      const double f = (instance.a(k) + instance.b(k) * solution.gains[k])(0, 0);
      const QGaussian noise = solution.noise(k);
      const Eigen::MatrixXd spread = instance.b(k) * noise.covariance() * instance.b(k).transpose();
      const double half_width = std::sqrt(noise.support_bound() * spread(0, 0));
      const double a1 = f * lo;
      const double a2 = f * hi;
      lo = std::min(a1, a2) - half_width;
      hi = std::max(a1, a2) + half_width;
      center = Eigen::VectorXd::Constant(1, 0.5 * (lo + hi));
      shape = Eigen::MatrixXd::Constant(1, 1, 0.25 * (hi - lo) * (hi - lo));
      emit(Eigen::VectorXd::Constant(1, lo), Eigen::VectorXd::Constant(1, hi));
    }
    return out;
  }

  auto bounds_of = [&]() {
    const Eigen::VectorXd half = shape.diagonal().cwiseMax(0.0).cwiseSqrt();
    return std::pair<Eigen::VectorXd, Eigen::VectorXd>{center - half, center + half};
  };
  {
    const auto [lo, hi] = bounds_of();
    emit(lo, hi);
  }
  for (std::size_t k = 0; k < steps; ++k) {
    const Eigen::MatrixXd f = instance.a(k) + instance.b(k) * solution.gains[k];
    const QGaussian noise = solution.noise(k);
    const Eigen::MatrixXd noise_shape = noise.support_bound() * instance.b(k) * noise.covariance() * instance.b(k).transpose();
    const Eigen::MatrixXd mapped = f * shape * f.transpose();
    const double t1 = mapped.trace();
    const double t2 = noise_shape.trace();
    center = f * center;
    if (t1 <= 0.0) {
      shape = noise_shape;
    } else if (t2 <= 0.0) {
      shape = mapped;
    } else {
      const double p = std::sqrt(t1 / t2);
      shape = (1.0 + 1.0 / p) * mapped + (1.0 + p) * noise_shape;
    }
    shape = 0.5 * (shape + shape.transpose()).eval();
    const auto [lo, hi] = bounds_of();
    emit(lo, hi);
  }
  return out;
}

std::vector<QSweepRow> sweep_q(
  const QlqrInstance & instance_template, const std::vector<double> & q_grid, std::size_t monte_carlo_steps,
  std::uint64_t seed)
{
  std::vector<QSweepRow> rows;
  rows.reserve(q_grid.size());
  for (std::size_t g = 0; g < q_grid.size(); ++g) {
    QlqrInstance inst = instance_template;
    inst.q = DeformationParameter(q_grid[g]);
    const QlqrStationary st = solve_qlqr_stationary(inst);
    const QGaussian noise(Eigen::VectorXd::Zero(st.noise_covariance.rows()), st.noise_covariance, inst.q);

    QSweepRow row{};
    row.q = q_grid[g];
    row.cost = (st.r_tilde * st.noise_covariance).trace();
    row.entropy = qgaussian_entropy(noise);
    row.support_radius = st.support_radii.maxCoeff();
    row.terminal_support_radius = solve_qlqr(inst).support_radii.back().maxCoeff();
    row.monte_carlo_cost = std::numeric_limits<double>::quiet_NaN();

    if (monte_carlo_steps > 0) {
      constexpr std::size_t kBurnIn = 200;
      std::mt19937_64 rng(derive_seed(seed, g));
      const Eigen::MatrixXd & a = inst.a(0);
      const Eigen::MatrixXd & b = inst.b(0);
      Eigen::VectorXd x = Eigen::VectorXd::Zero(inst.state_dim());
      double acc = 0.0;
      for (std::size_t k = 0; k < kBurnIn + monte_carlo_steps; ++k) {
        const Eigen::VectorXd u = st.gain * x + qgaussian_draw(noise, rng);
        if (k >= kBurnIn) {
          acc += x.dot(inst.q_weight(0) * x) + 2.0 * x.dot(inst.s_weight(0) * u) + u.dot(inst.r_weight(0) * u);
        }
        x = a * x + b * u;
      }
      row.monte_carlo_cost = acc / static_cast<double>(monte_carlo_steps);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace qctl
