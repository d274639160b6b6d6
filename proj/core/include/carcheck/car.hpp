#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "carcheck/data.hpp"
#include "carcheck/params.hpp"

namespace carcheck {

/// Sparse entry of the spatial weight matrix C: c_ij for neighbour j of i.
struct WeightEntry {
  std::size_t index;  // 0-based neighbour index j
  double weight;      // c_ij = sqrt(E_j / E_i)
};

/// Proper-CAR structure of a dataset.
///
/// The latent field has precision M^{-1}(I - phi C) / tau2 with
/// c_ij = sqrt(E_j / E_i) on neighbours and m_ii = 1 / E_i. The spectrum is
/// that of the symmetric matrix M^{-1/2} C M^{1/2}; phi is admissible on the
/// open interval (1 / min eigenvalue, 1 / max eigenvalue).
class CarStructure {
 public:
  /// Throws NumericError when the eigen-decomposition fails or yields a
  /// spectrum that does not straddle zero.
  static CarStructure build(const SpatialDataset& dataset);

  [[nodiscard]] std::size_t size() const { return expected_.size(); }
  [[nodiscard]] std::span<const WeightEntry> neighbours(std::size_t i) const {
    return {entries_.data() + offsets_[i], entries_.data() + offsets_[i + 1]};
  }
  [[nodiscard]] std::span<const double> expected() const { return expected_; }
  [[nodiscard]] std::span<const double> m_diag() const { return m_diag_; }
  [[nodiscard]] std::span<const double> covariate() const { return covariate_; }
  [[nodiscard]] std::span<const double> spectrum() const { return spectrum_; }
  [[nodiscard]] double phi_min() const { return bounds_.lower; }
  [[nodiscard]] double phi_max() const { return bounds_.upper; }
  [[nodiscard]] PhiBounds phi_bounds() const { return bounds_; }
  [[nodiscard]] bool admits(double phi) const { return bounds_.contains(phi); }

  /// Dense n x n copy of C.
  [[nodiscard]] Eigen::MatrixXd weight_matrix() const;

  /// Dense precision M^{-1}(I - phi C) / tau2.
  [[nodiscard]] Eigen::MatrixXd precision(double phi, double tau2) const;

  /// sum_k log(1 - phi * spectrum_k) = log det(I - phi C).
  [[nodiscard]] double log_det_i_minus_phi_c(double phi) const;

  /// out = M^{-1}(I - phi C) v, in O(nnz).
  void apply_kernel(double phi, std::span<const double> v, std::span<double> out) const;

  /// v' M^{-1}(I - phi C) v, in O(nnz).
  [[nodiscard]] double quadratic_form(double phi, std::span<const double> v) const;

  /// Split of the quadratic form into the parts that do not depend on phi:
  /// v' K v = diagonal - phi * cross.
  struct QuadraticParts {
    double diagonal;  // sum_i E_i v_i^2
    double cross;     // sum_i sum_{j in N_i} E_i c_ij v_i v_j
  };
  [[nodiscard]] QuadraticParts quadratic_parts(std::span<const double> v) const;

  [[nodiscard]] double sum_log_expected() const { return sum_log_expected_; }

 private:
  CarStructure() = default;

  std::vector<double> expected_;
  std::vector<double> m_diag_;
  std::vector<double> covariate_;
  std::vector<std::size_t> offsets_;
  std::vector<WeightEntry> entries_;
  std::vector<double> spectrum_;
  PhiBounds bounds_;
  double sum_log_expected_ = 0.0;
};

inline CarStructure build_car(const SpatialDataset& dataset) { return CarStructure::build(dataset); }

/// Mean alpha + x_i beta of each latent value.
void regression_mean(const CarStructure& car, const ModelParams& theta, std::span<double> out);

/// Multivariate normal log-density of s under the proper-CAR prior, in
/// precision form with the spectrum-based log-determinant.
/// Throws DomainError when phi is outside the open interval, tau2 <= 0, or s
/// is not finite.
double log_joint_s(const CarStructure& car, std::span<const double> s, const ModelParams& theta);

struct ConditionalMoments {
  double mean;
  double variance;
};

/// Full conditional of s_i given the remaining latent values. `s` is the full
/// field; its i-th entry is ignored.
ConditionalMoments conditional_s(const CarStructure& car, std::size_t i, std::span<const double> s,
                                 const ModelParams& theta);

}  // namespace carcheck
