#include "generators.hpp"
#include "oracle.hpp"

#include "qctl/qcore.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

using namespace qctl;

namespace {
const DeformationParameter kQuarter{0.25};
}

TEST_CASE("deformation parameter range")
{
  CHECK_NOTHROW(DeformationParameter(0.0));
  CHECK_NOTHROW(DeformationParameter(0.999));
  CHECK_THROWS_AS(DeformationParameter(1.0), std::invalid_argument);
  CHECK_THROWS_AS(DeformationParameter(-0.01), std::invalid_argument);
  CHECK_THROWS_AS(DeformationParameter(std::numeric_limits<double>::quiet_NaN()), std::invalid_argument);
}

TEST_CASE("exp_q point values")
{
  CHECK(exp_q(0.0, DeformationParameter(0.5)) == 1.0);
  CHECK(exp_q(-2.0, DeformationParameter(0.0)) == 0.0);
  CHECK(exp_q(1.0, DeformationParameter(0.5)) == doctest::Approx(2.25).epsilon(1e-15));
  CHECK(exp_q(-1.0 / 0.75, kQuarter) == 0.0);
}

TEST_CASE("log_q point values and domain")
{
  CHECK(log_q(1.0, DeformationParameter(0.3)) == 0.0);
  CHECK(log_q(4.0, DeformationParameter(0.0)) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK_THROWS_AS((void)log_q(0.0, kQuarter), std::domain_error);
  CHECK_THROWS_AS((void)log_q(-1.0, kQuarter), std::domain_error);
  CHECK(log_q_index(std::exp(1.5), 1.0) == doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("exp_q and log_q are inverse on a grid")
{
  for (double q : {0.0, 0.25, 0.5, 0.9}) {
    for (int i = 1; i <= 100; ++i) {
      const double x = 0.1 * i;
      CHECK(std::abs(exp_q(log_q(x, DeformationParameter(q)), DeformationParameter(q)) - x) <= 1e-12);
    }
  }
}

TEST_CASE("exp_q and log_q round trips on random inputs")
{
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uq(0.0, 0.999);
  std::uniform_real_distribution<double> ux(1e-3, 50.0);
  std::uniform_real_distribution<double> uy(-0.999, 1.0);
  int failures = 0;
  for (int i = 0; i < 2000; ++i) {
    const DeformationParameter q(uq(rng));
    const double x = ux(rng);
    if (std::abs(exp_q(log_q(x, q), q) - x) > 1e-12 * std::max(1.0, x)) { ++failures; }
    // y inside the domain where 1 + (1-q) y > 0
    const double y = uy(rng) / q.complement();
    if (std::abs(log_q(exp_q(y, q), q) - y) > 1e-12 * std::max(1.0, std::abs(y))) { ++failures; }
  }
  CHECK(failures == 0);
}

TEST_CASE("exp_q is nondecreasing and continuous in x")
{
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> uq(0.0, 0.999);
  std::uniform_real_distribution<double> ux(-10.0, 10.0);
  int bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const DeformationParameter q(uq(rng));
    double a = ux(rng);
    double b = ux(rng);
    if (a > b) { std::swap(a, b); }
    if (exp_q(a, q) > exp_q(b, q)) { ++bad; }
    const double edge = -1.0 / q.complement();
    if (std::abs(exp_q(edge + 1e-9, q) - exp_q(edge, q)) > 1e-6) { ++bad; }
  }
  CHECK(bad == 0);
}

TEST_CASE("discrete distribution validation")
{
  CHECK_THROWS_AS(DiscreteDistribution({0.5, 0.6}), std::invalid_argument);
  CHECK_THROWS_AS(DiscreteDistribution({-0.1, 1.1}), std::invalid_argument);
  CHECK_THROWS_AS(DiscreteDistribution(std::vector<double>{}), std::invalid_argument);
  const auto d = DiscreteDistribution({0.0, 0.25, 0.75});
  CHECK(d.support_size() == 2);
  CHECK(d.support() == std::vector<std::size_t>{1, 2});
  CHECK(DiscreteDistribution::point_mass(3, 2)[2] == 1.0);
  CHECK(DiscreteDistribution::uniform(4)[0] == 0.25);
}

TEST_CASE("deformed q-entropy values")
{
  const DeformationParameter q0(0.0);
  CHECK(deformed_q_entropy(DiscreteDistribution({1.0, 0.0}), q0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(deformed_q_entropy(DiscreteDistribution({0.5, 0.5}), q0) == doctest::Approx(0.75).epsilon(1e-15));

  std::mt19937_64 rng(13);
  const DeformationParameter near_one(0.999);
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = 2 + static_cast<std::size_t>(i % 5);
    const auto w = testgen::simplex_point(rng, n, 0.2);
    double shannon = 0.0;
    double log_sq = 0.0;
    for (double p : w) {
      if (p > 0.0) {
        shannon -= p * std::log(p);
        log_sq += p * std::log(p) * std::log(p);
      }
    }
    const double gap = std::abs(deformed_q_entropy(DiscreteDistribution(w), near_one) - (shannon + 1.0) / (2.0 - 0.999));
    if (n <= 3) { CHECK(gap < 1e-3); }
    // first-order term (1-q)/2 sum phi log^2 phi, scaled by 1/(2-q)
    CHECK(gap <= 1.01 * 0.0005 * log_sq / 1.001 + 1e-9);
  }
}

TEST_CASE("Tsallis entropy values and additive duality")
{
  // Point mass: sum phi^q log_q phi = 0, so the definition gives 1/q.
  CHECK(tsallis_entropy(DiscreteDistribution::point_mass(3, 0), 0.5) == doctest::Approx(2.0).epsilon(1e-15));
  // Uniform on four outcomes, order 1/2: phi^q = 1/2, log_q(1/4) = -1, so -(1/0.5)(4 * 0.25 * ... ) = 6.
  CHECK(tsallis_entropy(DiscreteDistribution::uniform(4), 0.5) == doctest::Approx(6.0).epsilon(1e-14));
  CHECK_THROWS_AS((void)tsallis_entropy(DiscreteDistribution::uniform(2), 0.0), std::domain_error);

  std::mt19937_64 rng(14);
  int bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const DiscreteDistribution phi(testgen::simplex_point(rng, 2 + static_cast<std::size_t>(i % 6), 0.2));
    for (double q : {0.25, 0.5}) {
      if (std::abs(tsallis_entropy(phi, 2.0 - q) - deformed_q_entropy(phi, DeformationParameter(q))) > 1e-12) { ++bad; }
    }
  }
  CHECK(bad == 0);
}

TEST_CASE("q-KL divergence basic cases")
{
  const auto phi = DiscreteDistribution({0.2, 0.3, 0.5});
  CHECK(qkl_divergence(phi, phi, kQuarter) == 0.0);
  CHECK(std::isinf(qkl_divergence(DiscreteDistribution({1.0, 0.0}), DiscreteDistribution({0.0, 1.0}), kQuarter)));
  CHECK(qkl_divergence(DiscreteDistribution({0.0, 1.0}), DiscreteDistribution({0.5, 0.5}), kQuarter) > 0.0);
}

TEST_CASE("q-KL divergence is non-negative with equality on the diagonal")
{
  std::mt19937_64 rng(15);
  int negative = 0;
  int diagonal = 0;
  int zero_off_diagonal = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 2 + static_cast<std::size_t>(i % 5);
    const DiscreteDistribution psi(testgen::simplex_point(rng, n, 0.2));
    // phi supported inside psi
    std::vector<double> w = testgen::simplex_point(rng, n, 0.3);
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      w[k] *= psi[k] > 0.0 ? 1.0 : 0.0;
      total += w[k];
    }
    if (total == 0.0) { w = std::vector<double>(psi.weights().begin(), psi.weights().end()), total = 1.0; }
    for (auto & v : w) { v /= total; }
    const DiscreteDistribution phi(w);
    for (double q : {0.0, 0.25, 0.5, 0.9}) {
      const double d = qkl_divergence(phi, psi, DeformationParameter(q));
      if (d < 0.0) { ++negative; }
      if (qkl_divergence(psi, psi, DeformationParameter(q)) > 1e-15) { ++diagonal; }
      double gap = 0.0;
      for (std::size_t k = 0; k < n; ++k) { gap = std::max(gap, std::abs(phi[k] - psi[k])); }
      if (gap > 1e-3 && d <= 0.0) { ++zero_off_diagonal; }
    }
  }
  CHECK(negative == 0);
  CHECK(diagonal == 0);
  CHECK(zero_off_diagonal == 0);
}

TEST_CASE("q-Gaussian construction checks")
{
  CHECK_THROWS_AS(QGaussian(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(3, 3), kQuarter), std::invalid_argument);
  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 0.5, 0.0, 1.0;
  CHECK_THROWS_AS(QGaussian(Eigen::VectorXd::Zero(2), asym, kQuarter), std::invalid_argument);
  Eigen::MatrixXd singular(2, 2);
  singular << 1.0, 1.0, 1.0, 1.0;
  CHECK_THROWS_AS(QGaussian(Eigen::VectorXd::Zero(2), singular, kQuarter), std::invalid_argument);
}

TEST_CASE("q-Gaussian density: support, normalization, Gaussian limit")
{
  const QGaussian g(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1), kQuarter);
  const double edge = std::sqrt((5.0 - 3.0 * 0.25) / 0.75);
  CHECK(qgaussian_density(g, Eigen::VectorXd::Constant(1, edge * 1.0001)) == 0.0);
  CHECK(qgaussian_density(g, Eigen::VectorXd::Constant(1, edge * 0.999)) > 0.0);
  CHECK(std::abs(oracle::quadrature_normalization(g) - 1.0) < 1e-8);

  const QGaussian near(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1), DeformationParameter(0.999));
  double worst = 0.0;
  for (int i = -300; i <= 300; ++i) {
    const double x = 0.01 * i;
    const double normal = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    worst = std::max(worst, std::abs(qgaussian_density(near, Eigen::VectorXd::Constant(1, x)) - normal));
  }
  CHECK(worst < 1e-2);
}

TEST_CASE("q-Gaussian density agrees with the radial-quadrature reference")
{
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> uq(0.0, 0.95);
  for (int i = 0; i < 20; ++i) {
    const Eigen::Index n = 1 + i % 2;
    const double q = uq(rng);
    const Eigen::MatrixXd sigma = testgen::random_spd(rng, n);
    const Eigen::VectorXd mu = Eigen::VectorXd::Random(n);
    const QGaussian g(mu, sigma, DeformationParameter(q));
    const oracle::ReferenceQGaussian ref(mu, sigma, q);
    for (int j = 0; j < 20; ++j) {
      const Eigen::VectorXd x = mu + 2.0 * Eigen::VectorXd::Random(n);
      CHECK(qgaussian_density(g, x) == doctest::Approx(ref(x)).epsilon(1e-9));
    }
  }
}

TEST_CASE("q-Gaussian moments and entropy by quadrature in one and two dimensions")
{
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> uq(0.0, 0.95);
  for (int i = 0; i < 6; ++i) {
    const Eigen::Index n = 1 + i % 2;
    const Eigen::MatrixXd sigma = testgen::random_spd(rng, n);
    const Eigen::VectorXd mu = Eigen::VectorXd::Random(n);
    const QGaussian g(mu, sigma, DeformationParameter(uq(rng)));
    CHECK(std::abs(oracle::quadrature_normalization(g) - 1.0) < 1e-8);
    CHECK((oracle::quadrature_mean(g) - mu).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((oracle::quadrature_covariance(g) - sigma).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(qgaussian_entropy(g) == doctest::Approx(oracle::quadrature_q_entropy(g)).epsilon(1e-7));
  }
}

TEST_CASE("q-Gaussian support radius")
{
  const Eigen::VectorXd e1 = Eigen::VectorXd::Ones(1);
  const QGaussian g0(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1), DeformationParameter(0.0));
  CHECK(qgaussian_support_radius(g0, e1) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-15));
  const QGaussian g1(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1), DeformationParameter(0.1));
  const QGaussian g5(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1), DeformationParameter(0.5));
  CHECK(qgaussian_support_radius(g5, e1) > qgaussian_support_radius(g1, e1));
  const QGaussian g2(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2), kQuarter);
  const double r = qgaussian_support_radius(g2, Eigen::Vector2d(0.6, 0.8));
  CHECK(r * r == doctest::Approx((6.0 - 4.0 * 0.25) / 0.75).epsilon(1e-14));
  CHECK_THROWS_AS((void)qgaussian_support_radius(g2, Eigen::Vector2d(1.0, 1.0)), std::invalid_argument);
}

TEST_CASE("q-Gaussian sampling: containment and moments")
{
  const QGaussian g(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1), kQuarter);
  const double bound = (5.0 - 3.0 * 0.25) / 0.75;
  const auto small = qgaussian_sample(g, 100000, 21);
  int outside = 0;
  double mean = 0.0;
  for (const auto & x : small) {
    if (!(x(0) * x(0) < bound)) { ++outside; }
    mean += x(0);
  }
  mean /= static_cast<double>(small.size());
  CHECK(outside == 0);
  CHECK(std::abs(mean) < 4.0 * std::sqrt(1.0 / static_cast<double>(small.size())));

  const auto big = qgaussian_sample(g, 1000000, 22);
  double s1 = 0.0;
  double s2 = 0.0;
  for (const auto & x : big) {
    s1 += x(0);
    s2 += x(0) * x(0);
  }
  const double count = static_cast<double>(big.size());
  const double var = s2 / count - (s1 / count) * (s1 / count);
  CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("q-Gaussian samples stay inside the support ellipsoid")
{
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> uq(0.0, 0.99);
  int outside = 0;
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Index n = 1 + i % 4;
    const QGaussian g(Eigen::VectorXd::Random(n), testgen::random_spd(rng, n, 0.05), DeformationParameter(uq(rng)));
    for (int j = 0; j < 20; ++j) {
      const Eigen::VectorXd x = qgaussian_draw(g, rng);
      if (!g.in_support(x)) { ++outside; }
    }
  }
  CHECK(outside == 0);
}

TEST_CASE("sampling is deterministic per seed")
{
  const QGaussian g(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2), kQuarter);
  const auto a = qgaussian_sample(g, 50, 99);
  const auto b = qgaussian_sample(g, 50, 99);
  const auto c = qgaussian_sample(g, 50, 100);
  CHECK(a == b);
  CHECK(a != c);
  CHECK(derive_seed(7, 0) == derive_seed(7, 0));
  CHECK(derive_seed(7, 0) != derive_seed(7, 1));
  CHECK(derive_seed(7, 0) != derive_seed(8, 0));
}
