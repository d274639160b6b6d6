#include "carcheck/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "carcheck/error.hpp"
#include "carcheck/parallel.hpp"

namespace carcheck {

void McmcConfig::validate() const {
  if (n_chains == 0) throw ConfigError("need at least one chain");
  if (thin == 0) throw ConfigError("thin must be >= 1");
  if (burn_in >= iterations) {
    throw ConfigError("burn-in (" + std::to_string(burn_in) + ") must be smaller than iterations (" +
                      std::to_string(iterations) + ")");
  }
  if (draws_per_chain() == 0) throw ConfigError("thinning leaves no retained draws");
  if (!(target_accept_scalar > 0.0 && target_accept_scalar < 1.0)) {
    throw ConfigError("target acceptance rate must lie in (0, 1)");
  }
  if (fixed.tau2 && !(*fixed.tau2 > 0.0)) throw ConfigError("fixed tau2 must be positive");
}

namespace {

/// K v for K = M^{-1}(I - phi C) applied to 1 and x; cached per phi value.
struct RegressionKernel {
  std::vector<double> k_one;
  std::vector<double> k_x;
  double one_k_one = 0.0;
  double one_k_x = 0.0;
  double x_k_x = 0.0;

  void update(const CarStructure& car, double phi) {
    const std::size_t n = car.size();
    k_one.resize(n);
    k_x.resize(n);
    const std::vector<double> ones(n, 1.0);
    car.apply_kernel(phi, ones, k_one);
    car.apply_kernel(phi, car.covariate(), k_x);
    const auto x = car.covariate();
    one_k_one = std::accumulate(k_one.begin(), k_one.end(), 0.0);
    one_k_x = std::accumulate(k_x.begin(), k_x.end(), 0.0);
    x_k_x = std::inner_product(x.begin(), x.end(), k_x.begin(), 0.0);
  }
};

RegressionConditional regression_conditional(const RegressionKernel& kernel, std::span<const double> s, double tau2,
                                             const PriorSpec& prior) {
  // K is symmetric, so A'K s = [(K1)'s, (Kx)'s].
  Eigen::Matrix2d precision;
  precision << kernel.one_k_one, kernel.one_k_x, kernel.one_k_x, kernel.x_k_x;
  precision /= tau2;
  const double prior_precision = 1.0 / (prior.coef_sd * prior.coef_sd);
  precision(0, 0) += prior_precision;
  precision(1, 1) += prior_precision;
  Eigen::Vector2d rhs;
  rhs << std::inner_product(s.begin(), s.end(), kernel.k_one.begin(), 0.0),
      std::inner_product(s.begin(), s.end(), kernel.k_x.begin(), 0.0);
  rhs /= tau2;
  Eigen::LLT<Eigen::Matrix2d> llt(precision);
  if (llt.info() != Eigen::Success) throw NumericError("(alpha, beta) conditional precision is not positive definite");
  RegressionConditional out;
  out.mean = llt.solve(rhs);
  out.covariance = llt.solve(Eigen::Matrix2d::Identity());
  return out;
}

std::array<double, 2> draw_regression(const RegressionConditional& cond, Rng& rng) {
  Eigen::LLT<Eigen::Matrix2d> llt(cond.covariance);
  if (llt.info() != Eigen::Success) throw NumericError("(alpha, beta) conditional covariance is not positive definite");
  std::normal_distribution<double> normal;
  Eigen::Vector2d z;
  z << normal(rng), normal(rng);
  const Eigen::Vector2d draw = cond.mean + llt.matrixL() * z;
  return {draw(0), draw(1)};
}

double draw_inverse_gamma(const InverseGammaParams& p, Rng& rng) {
  std::gamma_distribution<double> gamma(p.shape, 1.0);
  return p.scale / gamma(rng);
}

/// Robbins-Monro update of a log proposal scale with step t^-0.7.
void adapt_scale(double& log_scale, bool accepted, double target, std::size_t t) {
  const double step = std::pow(static_cast<double>(t), -0.7);
  log_scale += step * ((accepted ? 1.0 : 0.0) - target);
}

struct ChainResult {
  std::vector<ModelParams> params;
  std::vector<double> latent;
  ChainAcceptance acceptance;
  std::vector<std::string> warnings;
};

class ChainSampler {
 public:
  ChainSampler(const SpatialDataset& dataset, const CarStructure& car, const McmcConfig& config, std::size_t chain)
      : dataset_(dataset),
        car_(car),
        config_(config),
        chain_(chain),
        n_(dataset.size()),
        rng_(derive_seed(config.seed, {static_cast<std::uint64_t>(chain)})) {}

  ChainResult run() {
    initialize();
    const std::size_t per_chain = config_.draws_per_chain();
    ChainResult out;
    out.params.reserve(per_chain);
    out.latent.reserve(per_chain * n_);

    std::vector<std::size_t> site_accepts(n_, 0), burn_site_accepts(n_, 0);
    std::size_t phi_accepts = 0, burn_phi_accepts = 0;

    for (std::size_t t = 0; t < config_.iterations; ++t) {
      const bool burning = t < config_.burn_in;
      const bool adapting = burning && config_.adapt;
      for (std::size_t i = 0; i < n_; ++i) {
        const bool accepted = update_site(i);
        if (accepted) ++(burning ? burn_site_accepts[i] : site_accepts[i]);
        if (adapting) adapt_scale(site_log_scale_[i], accepted, config_.target_accept_scalar, t + 1);
      }
      update_regression();
      update_tau2();
      if (!config_.fixed.phi) {
        const bool accepted = update_phi();
        if (accepted) ++(burning ? burn_phi_accepts : phi_accepts);
        if (adapting) adapt_scale(phi_log_scale_, accepted, config_.target_accept_scalar, t + 1);
      }
      if (!burning && (t - config_.burn_in + 1) % config_.thin == 0) {
        out.params.push_back(theta_);
        out.latent.insert(out.latent.end(), s_.begin(), s_.end());
      }
    }

    const double sampled = static_cast<double>(config_.iterations - config_.burn_in);
    double sum = 0.0, min_rate = 1.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double rate = static_cast<double>(site_accepts[i]) / sampled;
      sum += rate;
      min_rate = std::min(min_rate, rate);
      if (config_.burn_in > 0 && burn_site_accepts[i] == 0) {
        out.warnings.push_back("chain " + std::to_string(chain_) + ": s[" + std::to_string(i + 1) +
                               "] accepted no proposals during burn-in");
      }
    }
    out.acceptance.latent_mean = sum / static_cast<double>(n_);
    out.acceptance.latent_min = min_rate;
    out.acceptance.phi = config_.fixed.phi ? 1.0 : static_cast<double>(phi_accepts) / sampled;
    if (!config_.fixed.phi && config_.burn_in > 0 && burn_phi_accepts == 0) {
      out.warnings.push_back("chain " + std::to_string(chain_) + ": phi accepted no proposals during burn-in");
    }
    return out;
  }

 private:
  void initialize() {
    const auto y = dataset_.counts();
    const auto e = dataset_.expected();
    const double total_y = std::accumulate(y.begin(), y.end(), 0.0);
    const double total_e = std::accumulate(e.begin(), e.end(), 0.0);
    theta_ = {std::log(std::max(total_y, 0.5) / total_e), 0.0, 0.1, 0.0};
    if (config_.fixed.regression) {
      theta_.alpha = (*config_.fixed.regression)[0];
      theta_.beta = (*config_.fixed.regression)[1];
    }
    if (config_.fixed.tau2) theta_.tau2 = *config_.fixed.tau2;
    if (config_.fixed.phi) theta_.phi = *config_.fixed.phi;
    if (!car_.admits(theta_.phi)) throw ConfigError("fixed phi lies outside the admissible interval");

    s_.resize(n_);
    exp_s_.resize(n_);
    residual_.resize(n_);
    site_log_scale_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      s_[i] = std::log((y[i] + 0.5) / e[i]);
      exp_s_[i] = std::exp(s_[i]);
      site_log_scale_[i] = std::log(1.0 / std::sqrt(y[i] + 1.0));
    }
    refresh_residual();
    phi_log_scale_ = std::log(0.05 * (car_.phi_max() - car_.phi_min()));
    kernel_phi_ = theta_.phi;
    kernel_.update(car_, kernel_phi_);

    const double lp = log_posterior(theta_, s_, dataset_, car_, config_.holdout, config_.prior);
    if (!std::isfinite(lp)) throw NumericError("log posterior is not finite at the initial state");
  }

  void refresh_residual() {
    const auto x = car_.covariate();
    for (std::size_t i = 0; i < n_; ++i) residual_[i] = s_[i] - theta_.alpha - x[i] * theta_.beta;
  }

  bool accept(double log_ratio) {
    if (log_ratio >= 0.0) return true;
    return std::log(uniform01(rng_)) < log_ratio;
  }

  bool update_site(std::size_t i) {
    const auto x = car_.covariate();
    double acc = 0.0;
    for (const auto& e : car_.neighbours(i)) acc += e.weight * residual_[e.index];
    const double base = theta_.alpha + x[i] * theta_.beta;
    const double mean = base + theta_.phi * acc;
    const double precision = car_.expected()[i] / theta_.tau2;

    const double current = s_[i];
    const double proposal = current + std::exp(site_log_scale_[i]) * normal_(rng_);
    const double exp_proposal = std::exp(proposal);
    double log_ratio = -0.5 * precision * ((proposal - mean) * (proposal - mean) - (current - mean) * (current - mean));
    if (!config_.holdout.holds_out(i)) {
      const double y = dataset_.counts()[i];
      const double e = car_.expected()[i];
      log_ratio += y * (proposal - current) - e * (exp_proposal - exp_s_[i]);
    }
    if (!accept(log_ratio)) return false;
    s_[i] = proposal;
    exp_s_[i] = exp_proposal;
    residual_[i] = proposal - base;
    return true;
  }

  void update_regression() {
    if (config_.fixed.regression) return;
    if (kernel_phi_ != theta_.phi) {
      kernel_phi_ = theta_.phi;
      kernel_.update(car_, kernel_phi_);
    }
    const auto draw = draw_regression(regression_conditional(kernel_, s_, theta_.tau2, config_.prior), rng_);
    theta_.alpha = draw[0];
    theta_.beta = draw[1];
    refresh_residual();
  }

  void update_tau2() {
    if (config_.fixed.tau2) return;
    const double q = car_.quadratic_form(theta_.phi, residual_);
    theta_.tau2 = draw_inverse_gamma(
        {config_.prior.tau2_shape + 0.5 * static_cast<double>(n_), config_.prior.tau2_scale + 0.5 * q}, rng_);
  }

  bool update_phi() {
    const double proposal = theta_.phi + std::exp(phi_log_scale_) * normal_(rng_);
    if (!car_.admits(proposal)) return false;
    const auto parts = car_.quadratic_parts(residual_);
    auto log_target = [&](double phi) {
      return 0.5 * car_.log_det_i_minus_phi_c(phi) - 0.5 * (parts.diagonal - phi * parts.cross) / theta_.tau2;
    };
    if (!accept(log_target(proposal) - log_target(theta_.phi))) return false;
    theta_.phi = proposal;
    return true;
  }

  const SpatialDataset& dataset_;
  const CarStructure& car_;
  const McmcConfig& config_;
  std::size_t chain_;
  std::size_t n_;
  Rng rng_;
  std::normal_distribution<double> normal_;

  ModelParams theta_;
  std::vector<double> s_, exp_s_, residual_, site_log_scale_;
  double phi_log_scale_ = 0.0;
  RegressionKernel kernel_;
  double kernel_phi_ = 0.0;
};

}  // namespace

PosteriorDraws run_mcmc(const SpatialDataset& dataset, const CarStructure& car, const McmcConfig& config) {
  config.validate();
  if (dataset.size() != car.size()) throw ConfigError("dataset and CAR structure sizes differ");
  if (config.holdout.district && (*config.holdout.district < 1 || static_cast<std::size_t>(*config.holdout.district) > dataset.size())) {
    throw ConfigError("holdout district " + std::to_string(*config.holdout.district) + " out of range");
  }

  std::vector<ChainResult> chains(config.n_chains);
  parallel_for(config.n_chains, config.threads,
               [&](std::size_t c) { chains[c] = ChainSampler(dataset, car, config, c).run(); });

  PosteriorDraws draws;
  draws.n_districts = dataset.size();
  draws.n_chains = config.n_chains;
  draws.per_chain = config.draws_per_chain();
  draws.holdout = config.holdout;
  draws.params.reserve(draws.n_chains * draws.per_chain);
  draws.latent.reserve(draws.n_chains * draws.per_chain * draws.n_districts);
  for (auto& chain : chains) {
    draws.params.insert(draws.params.end(), chain.params.begin(), chain.params.end());
    draws.latent.insert(draws.latent.end(), chain.latent.begin(), chain.latent.end());
    draws.acceptance.push_back(chain.acceptance);
    draws.warnings.insert(draws.warnings.end(), chain.warnings.begin(), chain.warnings.end());
  }
  return draws;
}

RegressionConditional alpha_beta_conditional(const CarStructure& car, std::span<const double> s,
                                             const ModelParams& theta, const PriorSpec& prior) {
  if (!(theta.tau2 > 0.0)) throw DomainError("tau2 must be positive");
  RegressionKernel kernel;
  kernel.update(car, theta.phi);
  return regression_conditional(kernel, s, theta.tau2, prior);
}

std::array<double, 2> gibbs_alpha_beta(const CarStructure& car, std::span<const double> s, const ModelParams& theta,
                                       Rng& rng, const PriorSpec& prior) {
  return draw_regression(alpha_beta_conditional(car, s, theta, prior), rng);
}

InverseGammaParams tau2_conditional(const CarStructure& car, std::span<const double> s, const ModelParams& theta,
                                    const PriorSpec& prior) {
  std::vector<double> r(car.size());
  regression_mean(car, theta, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = s[i] - r[i];
  const double q = car.quadratic_form(theta.phi, r);
  return {prior.tau2_shape + 0.5 * static_cast<double>(car.size()), prior.tau2_scale + 0.5 * q};
}

double gibbs_tau2(const CarStructure& car, std::span<const double> s, const ModelParams& theta, Rng& rng,
                  const PriorSpec& prior) {
  return draw_inverse_gamma(tau2_conditional(car, s, theta, prior), rng);
}

}  // namespace carcheck
