#pragma once

#include <cstddef>
#include <span>

#include "carcheck/car.hpp"
#include "carcheck/data.hpp"
#include "carcheck/params.hpp"

namespace carcheck {

/// Independent diffuse priors: alpha, beta ~ N(0, coef_sd^2),
/// tau2 ~ Inv-Gamma(shape, scale) with density proportional to
/// tau2^-(shape+1) exp(-scale / tau2), phi ~ Unif(phi_min, phi_max).
struct PriorSpec {
  double coef_sd = 1000.0;
  double tau2_shape = 0.5;
  double tau2_scale = 0.0005;
};

/// Poisson log-likelihood of y given mean E exp(s_i).
double log_lik_i(int y_obs, double expected, double s_i);

/// Sum of the four prior log-densities; -infinity outside the support.
double log_prior(const ModelParams& theta, PhiBounds bounds, const PriorSpec& prior = {});

/// Unnormalized log posterior. With a holdout the likelihood term of that
/// district is dropped; its latent value stays in the CAR density.
double log_posterior(const ModelParams& theta, std::span<const double> s, const SpatialDataset& dataset,
                     const CarStructure& car, const HoldoutSpec& holdout = {}, const PriorSpec& prior = {});

/// Mid-p-value Pr(Y > y) + 0.5 Pr(Y = y), Y ~ Poisson(mu).
double pointwise_pvalue(int y_obs, double mu);

}  // namespace carcheck
