#include "carcheck/pvalues.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Core>
#include <boost/random/normal_distribution.hpp>

#include "carcheck/error.hpp"
#include "carcheck/parallel.hpp"
#include "carcheck/poisson.hpp"

namespace carcheck {

namespace {

using Clock = std::chrono::steady_clock;
// Ziggurat sampler; the inner loops draw one normal per evaluation.
using Normal = boost::random::normal_distribution<double>;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void require_full_data(const PosteriorDraws& draws, std::string_view what) {
  if (draws.holdout.active()) {
    throw ConfigError(std::string(what) + " needs draws from the full-data posterior, got holdout draws for district " +
                      std::to_string(*draws.holdout.district));
  }
  if (draws.size() == 0) throw ConfigError(std::string(what) + ": no posterior draws");
}

PValueVector make_vector(Method method, std::size_t n, const PosteriorDraws& draws) {
  PValueVector out;
  out.method = method;
  out.values.resize(n);
  out.mc_se.resize(n);
  out.draw_count = draws.size();
  return out;
}

/// Mid-p-values and Poisson densities of y_i at s_i = mean + sd z for K
/// standard normal draws z. Ghosting and iIS share draw_log_means and
/// pvalue_sum so that equal streams give identical averages.
struct InnerIntegrator {
  MidPValueCurve pvalue;
  double y;
  double log_expected;
  double log_factorial;
  Eigen::ArrayXd log_mu;
  Eigen::ArrayXd work;

  InnerIntegrator(int y_obs, double expected)
      : pvalue(y_obs),
        y(static_cast<double>(y_obs)),
        log_expected(std::log(expected)),
        log_factorial(std::lgamma(y + 1.0)) {}

  void draw_log_means(double mean, double sd, std::size_t k, Rng& rng) {
    Normal normal;
    log_mu.resize(static_cast<Eigen::Index>(k));
    const double shift = log_expected + mean;
    for (Eigen::Index j = 0; j < log_mu.size(); ++j) log_mu[j] = shift + sd * normal(rng);
  }

  [[nodiscard]] double pvalue_sum() const {
    return pvalue.sum_at_log_means({log_mu.data(), static_cast<std::size_t>(log_mu.size())});
  }

  /// log of the average of pois(y | exp(log_mu_j)) over the current draws.
  double log_mean_pmf() {
    work = y * log_mu - log_mu.exp() - log_factorial;
    const double max = work.maxCoeff();
    if (!(max > -std::numeric_limits<double>::infinity())) return -std::numeric_limits<double>::infinity();
    return max + std::log((work - max).exp().sum() / static_cast<double>(work.size()));
  }

  double average_pvalue(double mean, double sd, std::size_t k, Rng& rng) {
    draw_log_means(mean, sd, k, rng);
    return pvalue_sum() / static_cast<double>(k);
  }

  IntegratedQuantities integrate(double mean, double sd, std::size_t k, Rng& rng, Rng* density_rng) {
    draw_log_means(mean, sd, k, rng);
    const double a = pvalue_sum() / static_cast<double>(k);
    if (density_rng != nullptr) draw_log_means(mean, sd, k, *density_rng);
    const double log_p = log_mean_pmf();
    if (!(log_p > -std::numeric_limits<double>::infinity())) {
      throw NumericError("integrated predictive density underflowed to zero");
    }
    return {a, std::exp(log_p), log_p};
  }
};

}  // namespace

std::string_view method_label(Method method) {
  switch (method) {
    case Method::loocv: return "loocv";
    case Method::posterior_check: return "post";
    case Method::nis: return "nis";
    case Method::ghost: return "ghost";
    case Method::iis: return "iis";
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view label) {
  for (Method m : kAllMethods) {
    if (method_label(m) == label) return m;
  }
  return std::nullopt;
}

WeightedEstimate self_normalized(std::span<const double> values, std::span<const double> log_weights) {
  if (values.empty() || values.size() != log_weights.size()) throw NumericError("self_normalized: size mismatch");
  const double max = *std::max_element(log_weights.begin(), log_weights.end());
  if (!std::isfinite(max)) throw NumericError("self_normalized: log-weights are not finite");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t t = 0; t < values.size(); ++t) {
    const double w = std::exp(log_weights[t] - max);
    num += w * values[t];
    den += w;
  }
  const double est = num / den;
  double var = 0.0;
  for (std::size_t t = 0; t < values.size(); ++t) {
    const double w = std::exp(log_weights[t] - max) / den;
    var += w * w * (values[t] - est) * (values[t] - est);
  }
  return {est, std::sqrt(var)};
}

WeightedEstimate plain_mean(std::span<const double> values) {
  if (values.empty()) throw NumericError("plain_mean: no values");
  double sum = 0.0;
  for (double v : values) sum += v;
  const double n = static_cast<double>(values.size());
  const double est = sum / n;
  double ss = 0.0;
  for (double v : values) ss += (v - est) * (v - est);
  return {est, values.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0};
}

PValueVector posterior_check(const PosteriorDraws& draws, const SpatialDataset& dataset) {
  require_full_data(draws, "posterior checking");
  const std::size_t n = dataset.size();
  auto out = make_vector(Method::posterior_check, n, draws);
  std::vector<double> p(draws.size());
  for (std::size_t i = 0; i < n; ++i) {
    const MidPValue pvalue(dataset.counts()[i]);
    const double log_e = std::log(dataset.expected()[i]);
    for (std::size_t t = 0; t < draws.size(); ++t) p[t] = pvalue.at_log_mean(log_e + draws.s(t, i)).pvalue;
    const auto est = plain_mean(p);
    out.values[i] = est.value;
    out.mc_se[i] = est.mc_se;
  }
  return out;
}

std::vector<double> predictive_pmf(const PosteriorDraws& draws, const SpatialDataset& dataset, std::size_t i,
                                   std::span<const int> y_grid) {
  if (i >= dataset.size()) throw ConfigError("district index out of range");
  if (draws.size() == 0) throw ConfigError("predictive_pmf: no posterior draws");
  std::vector<double> log_factorial(y_grid.size());
  for (std::size_t g = 0; g < y_grid.size(); ++g) {
    if (y_grid[g] < 0) throw ConfigError("predictive_pmf: negative count in grid");
    log_factorial[g] = std::lgamma(static_cast<double>(y_grid[g]) + 1.0);
  }
  std::vector<double> pmf(y_grid.size(), 0.0);
  const double log_e = std::log(dataset.expected()[i]);
  for (std::size_t t = 0; t < draws.size(); ++t) {
    const double log_mu = log_e + draws.s(t, i);
    const double mu = std::exp(log_mu);
    for (std::size_t g = 0; g < y_grid.size(); ++g) {
      pmf[g] += std::exp(static_cast<double>(y_grid[g]) * log_mu - mu - log_factorial[g]);
    }
  }
  for (double& v : pmf) v /= static_cast<double>(draws.size());
  return pmf;
}

std::uint64_t fold_seed(std::uint64_t master_seed, std::size_t fold) {
  return derive_seed(master_seed, {0x4C4F4F4355ULL, static_cast<std::uint64_t>(fold)});
}

McmcConfig fold_config(const McmcConfig& base, std::size_t fold) {
  McmcConfig config = base;
  config.seed = fold_seed(base.seed, fold);
  config.holdout.district = static_cast<int>(fold + 1);
  config.threads = 1;
  return config;
}

double loocv_fold_pvalue(const PosteriorDraws& holdout_draws, const SpatialDataset& dataset, double* mc_se) {
  if (!holdout_draws.holdout.active()) throw ConfigError("loocv_fold_pvalue needs holdout draws");
  const auto i = static_cast<std::size_t>(*holdout_draws.holdout.district - 1);
  const MidPValue pvalue(dataset.counts()[i]);
  const double log_e = std::log(dataset.expected()[i]);
  std::vector<double> p(holdout_draws.size());
  for (std::size_t t = 0; t < holdout_draws.size(); ++t) p[t] = pvalue.at_log_mean(log_e + holdout_draws.s(t, i)).pvalue;
  const auto est = plain_mean(p);
  if (mc_se != nullptr) *mc_se = est.mc_se;
  return est.value;
}

PValueVector loocv_pvalues(const SpatialDataset& dataset, const CarStructure& car, const McmcConfig& config,
                           LoocvTiming* timing) {
  config.validate();
  const std::size_t n = dataset.size();
  PValueVector out;
  out.method = Method::loocv;
  out.values.resize(n);
  out.mc_se.resize(n);
  out.draw_count = config.n_chains * config.draws_per_chain();
  out.mc.seed = config.seed;
  std::vector<double> mcmc_seconds(n), pvalue_seconds(n);
  parallel_for(n, config.threads, [&](std::size_t fold) {
    const auto start = Clock::now();
    PosteriorDraws draws;
    try {
      draws = run_mcmc(dataset, car, fold_config(config, fold));
    } catch (const NumericError& e) {
      throw NumericError("LOOCV fold " + std::to_string(fold + 1) + ": " + e.what());
    }
    mcmc_seconds[fold] = seconds_since(start);
    const auto mid = Clock::now();
    out.values[fold] = loocv_fold_pvalue(draws, dataset, &out.mc_se[fold]);
    pvalue_seconds[fold] = seconds_since(mid);
  });
  if (timing != nullptr) {
    for (std::size_t f = 0; f < n; ++f) {
      timing->mcmc_seconds += mcmc_seconds[f];
      timing->pvalue_seconds += pvalue_seconds[f];
    }
  }
  return out;
}

PValueVector nis_pvalues(const PosteriorDraws& draws, const SpatialDataset& dataset) {
  require_full_data(draws, "nIS");
  const std::size_t n = dataset.size();
  auto out = make_vector(Method::nis, n, draws);
  std::vector<double> p(draws.size()), log_w(draws.size());
  for (std::size_t i = 0; i < n; ++i) {
    const MidPValue pvalue(dataset.counts()[i]);
    const double log_e = std::log(dataset.expected()[i]);
    for (std::size_t t = 0; t < draws.size(); ++t) {
      const auto r = pvalue.at_log_mean(log_e + draws.s(t, i));
      p[t] = r.pvalue;
      log_w[t] = -r.log_pmf;
    }
    const auto est = self_normalized(p, log_w);
    out.values[i] = est.value;
    out.mc_se[i] = est.mc_se;
  }
  return out;
}

std::uint64_t inner_stream_seed(std::uint64_t master, std::size_t draw, std::size_t district, std::uint64_t purpose) {
  return derive_seed(master, {static_cast<std::uint64_t>(draw), static_cast<std::uint64_t>(district), purpose});
}

PValueVector ghost_pvalues(const PosteriorDraws& draws, const CarStructure& car, const SpatialDataset& dataset,
                           const PValueOptions& options) {
  require_full_data(draws, "ghosting");
  if (options.ghost_draws == 0) throw ConfigError("ghosting needs at least one regenerated draw");
  const std::size_t n = dataset.size();
  auto out = make_vector(Method::ghost, n, draws);
  out.mc = {options.ghost_draws, options.seed, true};
  parallel_for(n, options.threads, [&](std::size_t i) {
    InnerIntegrator inner(dataset.counts()[i], dataset.expected()[i]);
    std::vector<double> p(draws.size());
    for (std::size_t t = 0; t < draws.size(); ++t) {
      const auto cond = conditional_s(car, i, draws.field(t), draws.params[t]);
      Rng rng(inner_stream_seed(options.seed, t, i));
      p[t] = inner.average_pvalue(cond.mean, std::sqrt(cond.variance), options.ghost_draws, rng);
    }
    const auto est = plain_mean(p);
    out.values[i] = est.value;
    out.mc_se[i] = est.mc_se;
  });
  return out;
}

IntegratedQuantities integrated_quantities(const ModelParams& theta, std::span<const double> s, std::size_t i,
                                           const CarStructure& car, const SpatialDataset& dataset, std::size_t k,
                                           Rng& rng, bool shared_streams, Rng* density_rng) {
  if (k == 0) throw ConfigError("integrated quantities need K >= 1");
  if (!shared_streams && density_rng == nullptr) throw ConfigError("independent streams need a density generator");
  const auto cond = conditional_s(car, i, s, theta);
  InnerIntegrator inner(dataset.counts()[i], dataset.expected()[i]);
  return inner.integrate(cond.mean, std::sqrt(cond.variance), k, rng, shared_streams ? nullptr : density_rng);
}

IntegratedColumn integrated_column(const PosteriorDraws& draws, const CarStructure& car, const SpatialDataset& dataset,
                                   std::size_t i, const PValueOptions& options) {
  if (options.iis_draws == 0) throw ConfigError("iIS needs K >= 1");
  IntegratedColumn col;
  col.a.resize(draws.size());
  col.log_p.resize(draws.size());
  InnerIntegrator inner(dataset.counts()[i], dataset.expected()[i]);
  for (std::size_t t = 0; t < draws.size(); ++t) {
    const auto cond = conditional_s(car, i, draws.field(t), draws.params[t]);
    Rng rng(inner_stream_seed(options.seed, t, i));
    Rng density_rng(inner_stream_seed(options.seed, t, i, 1));
    const auto q = inner.integrate(cond.mean, std::sqrt(cond.variance), options.iis_draws, rng,
                                   options.shared_streams ? nullptr : &density_rng);
    col.a[t] = q.a;
    col.log_p[t] = q.log_p;
  }
  return col;
}

PValueVector iis_pvalues(const PosteriorDraws& draws, const CarStructure& car, const SpatialDataset& dataset,
                         const PValueOptions& options) {
  require_full_data(draws, "iIS");
  const std::size_t n = dataset.size();
  auto out = make_vector(Method::iis, n, draws);
  out.mc = {options.iis_draws, options.seed, options.shared_streams};
  parallel_for(n, options.threads, [&](std::size_t i) {
    const auto col = integrated_column(draws, car, dataset, i, options);
    std::vector<double> log_w(col.log_p.size());
    for (std::size_t t = 0; t < log_w.size(); ++t) log_w[t] = -col.log_p[t];
    const auto est = self_normalized(col.a, log_w);
    out.values[i] = est.value;
    out.mc_se[i] = est.mc_se;
  });
  return out;
}

}  // namespace carcheck
