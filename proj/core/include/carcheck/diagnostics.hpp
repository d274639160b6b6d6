#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "carcheck/mcmc.hpp"

namespace carcheck {

/// Convergence summary of one scalar quantity across chains.
struct QuantityDiagnostics {
  std::string name;
  std::optional<double> r_hat;  // absent with a single chain; +inf when chains do not mix at all
  double ess = 0.0;
  double mean = 0.0;
  double sd = 0.0;

  [[nodiscard]] bool divergent() const { return r_hat && !std::isfinite(*r_hat); }
};

/// Rank-normalized split-R-hat: the larger of the bulk and folded values.
/// Needs at least two chains; returns +inf when within-chain variance is zero
/// but chains differ.
std::optional<double> split_rhat(std::span<const std::vector<double>> chains);

/// Bulk effective sample size of rank-normalized split chains, from the
/// multi-chain autocorrelation with Geyer's initial monotone sequence.
double bulk_ess(std::span<const std::vector<double>> chains);

/// Diagnostics for alpha, beta, tau2, phi and every s_i.
std::vector<QuantityDiagnostics> diagnostics(const PosteriorDraws& draws);

}  // namespace carcheck
