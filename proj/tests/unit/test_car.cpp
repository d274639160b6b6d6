#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "carcheck/car.hpp"
#include "carcheck/error.hpp"
#include "doctest.h"
#include "toy.hpp"

using namespace carcheck;
using testing::chain_dataset;
using testing::random_dataset;

namespace {

ModelParams random_theta(std::mt19937_64& gen, const CarStructure& car) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ModelParams t;
  t.alpha = -1.0 + 2.0 * u(gen);
  t.beta = -0.5 + u(gen);
  t.tau2 = 0.1 + 2.0 * u(gen);
  t.phi = car.phi_min() + (0.02 + 0.96 * u(gen)) * (car.phi_max() - car.phi_min());
  return t;
}

std::vector<double> random_field(std::mt19937_64& gen, std::size_t n) {
  std::normal_distribution<double> z;
  std::vector<double> s(n);
  for (auto& v : s) v = z(gen);
  return s;
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

double normal_log_pdf(double x, double mean, double var) {
  return -0.5 * (std::log(2.0 * std::numbers::pi * var) + (x - mean) * (x - mean) / var);
}

}  // namespace

TEST_CASE("three-node chain: path-graph weights, spectrum and phi bounds") {
  const auto d = chain_dataset({1, 1, 1}, {1.0, 1.0, 1.0});
  const auto car = build_car(d);
  const Eigen::MatrixXd c = car.weight_matrix();
  Eigen::Matrix3d path;
  path << 0, 1, 0, 1, 0, 1, 0, 1, 0;
  CHECK((c - path).norm() == 0.0);

  // Independent eigenvalues of the path adjacency: -sqrt 2, 0, sqrt 2.
  const auto sp = car.spectrum();
  std::vector<double> sorted(sp.begin(), sp.end());
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted[0] == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-14));
  CHECK(std::abs(sorted[1]) < 1e-14);
  CHECK(sorted[2] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));

  CHECK(std::abs(car.phi_min() + 1.0 / std::sqrt(2.0)) <= 4e-16);
  CHECK(std::abs(car.phi_max() - 1.0 / std::sqrt(2.0)) <= 4e-16);
  CHECK(car.phi_min() == doctest::Approx(-0.70711).epsilon(1e-5));
}

TEST_CASE("Scotland weights follow sqrt(E_j / E_i)") {
  const auto car = build_car(bundled_dataset());
  double c15 = 0.0;
  double c51 = 0.0;
  for (const auto& w : car.neighbours(0)) if (w.index == 4) c15 = w.weight;
  for (const auto& w : car.neighbours(4)) if (w.index == 0) c51 = w.weight;
  CHECK(c15 == doctest::Approx(1.7570).epsilon(1e-4));
  CHECK(c51 == doctest::Approx(0.5692).epsilon(1e-4));

  const Eigen::MatrixXd c = car.weight_matrix();
  const auto e = car.expected();
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    CHECK(c(i, i) == 0.0);
    for (Eigen::Index j = 0; j < c.cols(); ++j) CHECK(std::abs(e[i] * c(i, j) - e[j] * c(j, i)) < 1e-12);
  }
  for (std::size_t i = 0; i < car.size(); ++i) CHECK(car.m_diag()[i] == doctest::Approx(1.0 / e[i]));
}

TEST_CASE("phi bounds match the dense eigenvalues of C") {
  std::mt19937_64 gen(5);
  for (int rep = 0; rep < 30; ++rep) {
    const auto d = random_dataset(gen, 2 + rep % 5);
    const auto car = build_car(d);
    const auto ref = testing::dense_phi_bounds(d);
    CHECK(car.phi_min() < 0.0);
    CHECK(car.phi_max() > 0.0);
    CHECK(car.phi_min() == doctest::Approx(ref.lower).epsilon(1e-10));
    CHECK(car.phi_max() == doctest::Approx(ref.upper).epsilon(1e-10));
  }
  const auto& scot = bundled_dataset();
  const auto car = build_car(scot);
  const auto ref = testing::dense_phi_bounds(scot);
  CHECK(car.phi_min() == doctest::Approx(ref.lower).epsilon(1e-10));
  CHECK(car.phi_max() == doctest::Approx(ref.upper).epsilon(1e-10));
}

TEST_CASE("log det identity holds on random instances") {
  std::mt19937_64 gen(6);
  for (int rep = 0; rep < 50; ++rep) {
    const auto d = random_dataset(gen, 2 + rep % 6);
    const auto car = build_car(d);
    const auto theta = random_theta(gen, car);
    const auto n = static_cast<Eigen::Index>(d.size());
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - theta.phi * testing::dense_weights(d);
    const double dense = std::log(a.determinant());
    CHECK(car.log_det_i_minus_phi_c(theta.phi) == doctest::Approx(dense).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("precision is symmetric positive definite strictly inside the interval") {
  for (const auto& d : {bundled_dataset(), chain_dataset({1, 2, 3}, {1.0, 2.0, 0.5})}) {
    const auto car = build_car(d);
    for (int k = 1; k <= 50; ++k) {
      const double phi = car.phi_min() + (car.phi_max() - car.phi_min()) * k / 51.0;
      const Eigen::MatrixXd p = car.precision(phi, 0.7);
      CHECK((p - p.transpose()).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(Eigen::LLT<Eigen::MatrixXd>(p).info() == Eigen::Success);
    }
    for (double edge : {car.phi_min(), car.phi_max()}) {
      const Eigen::MatrixXd p = car.precision(edge, 1.0);
      const double smallest = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (p + p.transpose())).eigenvalues()[0];
      CHECK(std::abs(smallest) < 1e-9 * p.norm());
      CHECK_THROWS_AS(log_joint_s(car, std::vector<double>(d.size(), 0.0), {0.0, 0.0, 1.0, edge}), DomainError);
    }
    const double eps = 1e-3;
    for (double outside : {car.phi_min() - eps, car.phi_max() + eps}) {
      CHECK(Eigen::LLT<Eigen::MatrixXd>(car.precision(outside, 1.0)).info() != Eigen::Success);
    }
  }
}

TEST_CASE("log_joint_s matches the dense-covariance density") {
  std::mt19937_64 gen(7);
  for (int rep = 0; rep < 60; ++rep) {
    const auto d = random_dataset(gen, 2 + rep % 5);
    const auto car = build_car(d);
    const auto theta = random_theta(gen, car);
    const auto s = random_field(gen, d.size());
    CHECK(log_joint_s(car, s, theta) == doctest::Approx(testing::dense_log_density(d, to_eigen(s), theta)).epsilon(1e-8));
  }
}

TEST_CASE("phi = 0 factorizes into independent normals") {
  const auto& d = bundled_dataset();
  const auto car = build_car(d);
  std::mt19937_64 gen(8);
  const auto s = random_field(gen, d.size());
  const ModelParams theta{-0.3, 0.05, 0.6, 0.0};
  double sum = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    sum += normal_log_pdf(s[i], theta.alpha + d[i].covariate * theta.beta, theta.tau2 / d[i].expected);
  }
  CHECK(std::abs(log_joint_s(car, s, theta) - sum) < 1e-10);
}

TEST_CASE("log_joint_s domain errors") {
  const auto d = chain_dataset({1, 2}, {1.0, 1.0});
  const auto car = build_car(d);
  const std::vector<double> s{0.1, 0.2};
  CHECK_THROWS_AS(log_joint_s(car, s, {0, 0, 1.0, 1.5}), DomainError);
  CHECK_THROWS_AS(log_joint_s(car, s, {0, 0, 0.0, 0.0}), DomainError);
  CHECK_THROWS_AS(log_joint_s(car, s, {0, 0, -1.0, 0.0}), DomainError);
  CHECK_THROWS_AS(log_joint_s(car, std::vector<double>{0.1, NAN}, {0, 0, 1.0, 0.0}), DomainError);
  CHECK_NOTHROW(log_joint_s(car, s, {0, 0, 1.0, 0.5}));
}

TEST_CASE("conditional_s: zero dependence and the symmetric chain") {
  const auto& d = bundled_dataset();
  const auto car = build_car(d);
  std::mt19937_64 gen(9);
  const auto s = random_field(gen, d.size());
  const ModelParams theta{0.2, 0.03, 0.8, 0.0};
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto m = conditional_s(car, i, s, theta);
    CHECK(m.mean == doctest::Approx(theta.alpha + d[i].covariate * theta.beta));
    CHECK(m.variance == doctest::Approx(theta.tau2 / d[i].expected));
  }

  const auto chain = chain_dataset({0, 0, 0}, {1.0, 1.0, 1.0});
  const auto chain_car = build_car(chain);
  const auto m = conditional_s(chain_car, 1, std::vector<double>{1.0, 123.0, -1.0}, {0.0, 0.0, 0.4, 0.5});
  CHECK(m.mean == 0.0);
  CHECK(m.variance == 0.4);
}

TEST_CASE("conditional_s equals the Schur-complement conditional") {
  std::mt19937_64 gen(10);
  for (int rep = 0; rep < 100; ++rep) {
    const auto d = random_dataset(gen, 2 + rep % 5);
    const auto car = build_car(d);
    const auto theta = random_theta(gen, car);
    const auto s = random_field(gen, d.size());
    const Eigen::MatrixXd cov = testing::dense_covariance(d, theta.phi, theta.tau2);
    const Eigen::VectorXd mean = testing::dense_mean(d, theta);
    const auto n = static_cast<Eigen::Index>(d.size());
    for (Eigen::Index i = 0; i < n; ++i) {
      std::vector<Eigen::Index> rest;
      for (Eigen::Index j = 0; j < n; ++j) if (j != i) rest.push_back(j);
      const auto m = static_cast<Eigen::Index>(rest.size());
      Eigen::MatrixXd s22(m, m);
      Eigen::VectorXd s12(m);
      Eigen::VectorXd r(m);
      for (Eigen::Index a = 0; a < m; ++a) {
        s12[a] = cov(i, rest[a]);
        r[a] = s[rest[a]] - mean[rest[a]];
        for (Eigen::Index b = 0; b < m; ++b) s22(a, b) = cov(rest[a], rest[b]);
      }
      const Eigen::VectorXd w = s22.ldlt().solve(s12);
      const double oracle_mean = mean[i] + w.dot(r);
      const double oracle_var = cov(i, i) - w.dot(s12);
      const auto got = conditional_s(car, static_cast<std::size_t>(i), s, theta);
      CHECK(got.mean == doctest::Approx(oracle_mean).epsilon(1e-8).scale(1.0));
      CHECK(got.variance == doctest::Approx(oracle_var).epsilon(1e-8).scale(1.0));
    }
  }
}

TEST_CASE("sparse kernel products agree with the dense precision") {
  std::mt19937_64 gen(12);
  for (int rep = 0; rep < 20; ++rep) {
    const auto d = random_dataset(gen, 2 + rep % 6);
    const auto car = build_car(d);
    const auto theta = random_theta(gen, car);
    const auto v = random_field(gen, d.size());
    const Eigen::MatrixXd k = car.precision(theta.phi, 1.0);
    const Eigen::VectorXd dense = k * to_eigen(v);
    std::vector<double> out(d.size());
    car.apply_kernel(theta.phi, v, out);
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(out[i] == doctest::Approx(dense[static_cast<Eigen::Index>(i)]));
    CHECK(car.quadratic_form(theta.phi, v) == doctest::Approx(to_eigen(v).dot(dense)));
    const auto parts = car.quadratic_parts(v);
    CHECK(parts.diagonal - theta.phi * parts.cross == doctest::Approx(to_eigen(v).dot(dense)));
  }
}
