#include "carcheck/car.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#include "carcheck/error.hpp"

namespace carcheck {

CarStructure CarStructure::build(const SpatialDataset& dataset) {
  const std::size_t n = dataset.size();
  CarStructure car;
  car.expected_.assign(dataset.expected().begin(), dataset.expected().end());
  car.covariate_.assign(dataset.covariate().begin(), dataset.covariate().end());
  car.m_diag_.resize(n);
  car.offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    car.m_diag_[i] = 1.0 / car.expected_[i];
    car.sum_log_expected_ += std::log(car.expected_[i]);
    for (int id : dataset[i].neighbours) {
      const auto j = static_cast<std::size_t>(id - 1);
      car.entries_.push_back({j, std::sqrt(car.expected_[j] / car.expected_[i])});
    }
    car.offsets_[i + 1] = car.entries_.size();
  }

  // M^{-1/2} C M^{1/2} is symmetric even though C is not.
  Eigen::MatrixXd sym = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& e : car.neighbours(i)) {
      sym(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(e.index)) =
          std::sqrt(car.expected_[i]) * e.weight / std::sqrt(car.expected_[e.index]);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericError("CAR eigen-decomposition failed");
  const auto& ev = solver.eigenvalues();
  car.spectrum_.assign(ev.data(), ev.data() + ev.size());
  for (double v : car.spectrum_) {
    if (!std::isfinite(v)) throw NumericError("CAR spectrum is not finite");
  }
  const double lo = car.spectrum_.front();
  const double hi = car.spectrum_.back();
  if (!(lo < 0.0 && hi > 0.0)) throw NumericError("CAR spectrum does not straddle zero");
  car.bounds_ = {1.0 / lo, 1.0 / hi};
  return car;
}

Eigen::MatrixXd CarStructure::weight_matrix() const {
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < size(); ++i) {
    for (const auto& e : neighbours(i)) c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(e.index)) = e.weight;
  }
  return c;
}

Eigen::MatrixXd CarStructure::precision(double phi, double tau2) const {
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::MatrixXd q = -phi * weight_matrix();
  q.diagonal().array() += 1.0;
  for (Eigen::Index i = 0; i < n; ++i) q.row(i) *= expected_[static_cast<std::size_t>(i)] / tau2;
  return q;
}

double CarStructure::log_det_i_minus_phi_c(double phi) const {
  double sum = 0.0;
  for (double lambda : spectrum_) sum += std::log1p(-phi * lambda);
  return sum;
}

void CarStructure::apply_kernel(double phi, std::span<const double> v, std::span<double> out) const {
  for (std::size_t i = 0; i < size(); ++i) {
    double acc = 0.0;
    for (const auto& e : neighbours(i)) acc += e.weight * v[e.index];
    out[i] = expected_[i] * (v[i] - phi * acc);
  }
}

CarStructure::QuadraticParts CarStructure::quadratic_parts(std::span<const double> v) const {
  QuadraticParts parts{0.0, 0.0};
  for (std::size_t i = 0; i < size(); ++i) {
    double acc = 0.0;
    for (const auto& e : neighbours(i)) acc += e.weight * v[e.index];
    parts.diagonal += expected_[i] * v[i] * v[i];
    parts.cross += expected_[i] * v[i] * acc;
  }
  return parts;
}

double CarStructure::quadratic_form(double phi, std::span<const double> v) const {
  const auto parts = quadratic_parts(v);
  return parts.diagonal - phi * parts.cross;
}

void regression_mean(const CarStructure& car, const ModelParams& theta, std::span<double> out) {
  const auto x = car.covariate();
  for (std::size_t i = 0; i < car.size(); ++i) out[i] = theta.alpha + x[i] * theta.beta;
}

namespace {

void check_theta(const CarStructure& car, const ModelParams& theta) {
  if (!car.admits(theta.phi)) {
    throw DomainError("phi = " + std::to_string(theta.phi) + " outside the admissible interval (" +
                      std::to_string(car.phi_min()) + ", " + std::to_string(car.phi_max()) + ")");
  }
  if (!(theta.tau2 > 0.0) || !std::isfinite(theta.tau2)) throw DomainError("tau2 must be positive and finite");
}

}  // namespace

double log_joint_s(const CarStructure& car, std::span<const double> s, const ModelParams& theta) {
  check_theta(car, theta);
  const std::size_t n = car.size();
  if (s.size() != n) throw DomainError("latent field has wrong length");
  std::vector<double> r(n);
  regression_mean(car, theta, r);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(s[i])) throw DomainError("latent field is not finite");
    r[i] = s[i] - r[i];
  }
  const double quad = car.quadratic_form(theta.phi, r) / theta.tau2;
  // log|Q| = sum log(1 - phi lambda) - sum log m_ii - n log tau2, m_ii = 1/E_i.
  const double log_det = car.log_det_i_minus_phi_c(theta.phi) + car.sum_log_expected() -
                         static_cast<double>(n) * std::log(theta.tau2);
  return -0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi) + 0.5 * log_det - 0.5 * quad;
}

ConditionalMoments conditional_s(const CarStructure& car, std::size_t i, std::span<const double> s,
                                 const ModelParams& theta) {
  check_theta(car, theta);
  const auto x = car.covariate();
  double acc = 0.0;
  for (const auto& e : car.neighbours(i)) acc += e.weight * (s[e.index] - theta.alpha - x[e.index] * theta.beta);
  return {theta.alpha + x[i] * theta.beta + theta.phi * acc, theta.tau2 * car.m_diag()[i]};
}

}  // namespace carcheck
