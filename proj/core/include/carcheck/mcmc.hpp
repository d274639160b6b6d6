#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "carcheck/car.hpp"
#include "carcheck/data.hpp"
#include "carcheck/model.hpp"
#include "carcheck/params.hpp"
#include "carcheck/rng.hpp"

namespace carcheck {

/// Parameters held at fixed values instead of being sampled. Used by toy
/// problems with collapsed priors; the production model leaves all unset.
struct FixedParams {
  std::optional<std::array<double, 2>> regression;  // (alpha, beta)
  std::optional<double> tau2;
  std::optional<double> phi;

  [[nodiscard]] bool any() const { return regression || tau2 || phi; }
  friend bool operator==(const FixedParams&, const FixedParams&) = default;
};

struct McmcConfig {
  std::size_t n_chains = 2;
  std::size_t iterations = 15000;  // per chain, burn-in included
  std::size_t burn_in = 5000;
  std::size_t thin = 1;
  std::uint64_t seed = 1;
  bool adapt = true;
  double target_accept_scalar = 0.44;
  HoldoutSpec holdout;
  FixedParams fixed;
  PriorSpec prior;
  unsigned threads = 1;

  /// Throws ConfigError when burn_in >= iterations, thin == 0 or n_chains == 0.
  void validate() const;
  [[nodiscard]] std::size_t draws_per_chain() const { return (iterations - burn_in) / thin; }
};

/// Acceptance rates of the Metropolis blocks of one chain, measured after burn-in.
struct ChainAcceptance {
  double latent_mean = 0.0;  // averaged over the n per-site updates
  double latent_min = 0.0;
  double phi = 0.0;          // 1 when phi is fixed

  friend bool operator==(const ChainAcceptance&, const ChainAcceptance&) = default;
};

/// Retained draws of (theta, s) from one or more chains, stored chain-major.
struct PosteriorDraws {
  std::size_t n_districts = 0;
  std::size_t n_chains = 0;
  std::size_t per_chain = 0;
  HoldoutSpec holdout;
  std::vector<ModelParams> params;
  std::vector<double> latent;  // params.size() rows of n_districts values
  std::vector<ChainAcceptance> acceptance;
  std::vector<std::string> warnings;

  [[nodiscard]] std::size_t size() const { return params.size(); }
  [[nodiscard]] std::span<const double> field(std::size_t t) const {
    return {latent.data() + t * n_districts, n_districts};
  }
  [[nodiscard]] double s(std::size_t t, std::size_t i) const { return latent[t * n_districts + i]; }

  friend bool operator==(const PosteriorDraws&, const PosteriorDraws&) = default;
};

/// Metropolis-within-Gibbs sampler for the full-data or single-holdout
/// posterior. Each sweep updates every s_i by random-walk Metropolis,
/// (alpha, beta) and tau2 by exact Gibbs steps, and phi by random-walk
/// Metropolis on its open interval. Proposal scales adapt by Robbins-Monro
/// during burn-in only. Chain c uses the stream derive_seed(seed, {c}), so the
/// output does not depend on the thread count.
PosteriorDraws run_mcmc(const SpatialDataset& dataset, const CarStructure& car, const McmcConfig& config);

struct RegressionConditional {
  Eigen::Vector2d mean;
  Eigen::Matrix2d covariance;
};

/// Conjugate bivariate normal conditional of (alpha, beta) given s, tau2, phi.
RegressionConditional alpha_beta_conditional(const CarStructure& car, std::span<const double> s,
                                             const ModelParams& theta, const PriorSpec& prior = {});
std::array<double, 2> gibbs_alpha_beta(const CarStructure& car, std::span<const double> s, const ModelParams& theta,
                                       Rng& rng, const PriorSpec& prior = {});

struct InverseGammaParams {
  double shape;
  double scale;
};

/// Conjugate inverse-gamma conditional of tau2: shape a + n/2, scale b + Q/2.
InverseGammaParams tau2_conditional(const CarStructure& car, std::span<const double> s, const ModelParams& theta,
                                    const PriorSpec& prior = {});
double gibbs_tau2(const CarStructure& car, std::span<const double> s, const ModelParams& theta, Rng& rng,
                  const PriorSpec& prior = {});

}  // namespace carcheck
