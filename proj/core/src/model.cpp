#include "carcheck/model.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "carcheck/error.hpp"
#include "carcheck/poisson.hpp"

namespace carcheck {

namespace {

double log_normal(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

}  // namespace

double log_lik_i(int y_obs, double expected, double s_i) {
  if (!(expected > 0.0)) throw DomainError("expected count must be positive");
  const double mu = expected * std::exp(s_i);
  if (!std::isfinite(mu) || !std::isfinite(s_i)) throw DomainError("Poisson mean is not finite");
  const double y = static_cast<double>(y_obs);
  return y * (std::log(expected) + s_i) - mu - std::lgamma(y + 1.0);
}

double log_prior(const ModelParams& theta, PhiBounds bounds, const PriorSpec& prior) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (!(theta.tau2 > 0.0) || !bounds.contains(theta.phi)) return kNegInf;
  const double a = prior.tau2_shape;
  const double b = prior.tau2_scale;
  const double log_inv_gamma = a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(theta.tau2) - b / theta.tau2;
  return log_normal(theta.alpha, 0.0, prior.coef_sd) + log_normal(theta.beta, 0.0, prior.coef_sd) + log_inv_gamma -
         std::log(bounds.upper - bounds.lower);
}

double log_posterior(const ModelParams& theta, std::span<const double> s, const SpatialDataset& dataset,
                     const CarStructure& car, const HoldoutSpec& holdout, const PriorSpec& prior) {
  const double lp = log_prior(theta, car.phi_bounds(), prior);
  if (lp == -std::numeric_limits<double>::infinity()) return lp;
  double ll = 0.0;
  for (std::size_t j = 0; j < dataset.size(); ++j) {
    if (holdout.holds_out(j)) continue;
    ll += log_lik_i(dataset.counts()[j], dataset.expected()[j], s[j]);
  }
  return ll + log_joint_s(car, s, theta) + lp;
}

double pointwise_pvalue(int y_obs, double mu) { return mid_p_value(y_obs, mu); }

}  // namespace carcheck
