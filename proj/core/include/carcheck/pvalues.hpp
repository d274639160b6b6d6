#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "carcheck/car.hpp"
#include "carcheck/data.hpp"
#include "carcheck/mcmc.hpp"
#include "carcheck/rng.hpp"

namespace carcheck {

enum class Method { loocv, posterior_check, nis, ghost, iis };

inline constexpr Method kAllMethods[] = {Method::loocv, Method::posterior_check, Method::ghost, Method::nis, Method::iis};

/// Short label used on the command line and in reports: loocv, post, nis, ghost, iis.
std::string_view method_label(Method method);
std::optional<Method> parse_method(std::string_view label);

/// Inner Monte Carlo settings an estimator ran with.
struct MonteCarloConfig {
  std::size_t inner_draws = 0;  // K for iIS, K_ghost for ghosting, 0 otherwise
  std::uint64_t seed = 0;
  bool shared_streams = true;

  friend bool operator==(const MonteCarloConfig&, const MonteCarloConfig&) = default;
};

/// One p-value per district with its Monte Carlo standard error.
struct PValueVector {
  Method method = Method::posterior_check;
  std::vector<double> values;
  std::vector<double> mc_se;
  MonteCarloConfig mc;
  std::size_t draw_count = 0;  // posterior draws behind each estimate

  [[nodiscard]] std::size_t size() const { return values.size(); }
};

struct PValueOptions {
  std::size_t iis_draws = 100;   // K
  std::size_t ghost_draws = 1;   // K_ghost
  std::uint64_t seed = 20160401;  // master seed for inner regeneration streams
  bool shared_streams = true;    // same inner draws estimate A and P
  unsigned threads = 1;
};

/// Self-normalized importance-sampling estimate sum w v / sum w with
/// log w given; weights are exponentiated after subtracting their maximum.
struct WeightedEstimate {
  double value;
  double mc_se;  // delta-method standard error, draws treated as independent
};
WeightedEstimate self_normalized(std::span<const double> values, std::span<const double> log_weights);

/// Plain average with the iid standard error.
WeightedEstimate plain_mean(std::span<const double> values);

/// Average over draws of the mid-p-value at mean E_i exp(s_i). Requires
/// full-data draws; throws ConfigError for holdout draws.
PValueVector posterior_check(const PosteriorDraws& draws, const SpatialDataset& dataset);

/// Average over draws of pois(y | E_i exp(s_i)) at each y of the grid.
std::vector<double> predictive_pmf(const PosteriorDraws& draws, const SpatialDataset& dataset, std::size_t i,
                                   std::span<const int> y_grid);

/// Seed of the holdout run for fold i (0-based district index).
std::uint64_t fold_seed(std::uint64_t master_seed, std::size_t fold);
McmcConfig fold_config(const McmcConfig& base, std::size_t fold);

struct LoocvTiming {
  double mcmc_seconds = 0.0;
  double pvalue_seconds = 0.0;
};

/// Actual leave-one-out: one holdout MCMC run per district, then the average
/// of the mid-p-value over that run's draws. Folds run on config.threads
/// workers, each fold with a single sampling thread.
PValueVector loocv_pvalues(const SpatialDataset& dataset, const CarStructure& car, const McmcConfig& config,
                           LoocvTiming* timing = nullptr);

/// Mid-p-value from the holdout draws of one fold.
double loocv_fold_pvalue(const PosteriorDraws& holdout_draws, const SpatialDataset& dataset, double* mc_se = nullptr);

/// Non-integrated importance sampling with weights 1 / pois(y_i | E_i exp(s_i)).
PValueVector nis_pvalues(const PosteriorDraws& draws, const SpatialDataset& dataset);

/// Ghosting: s_i is regenerated from its CAR conditional (K_ghost times per
/// draw) and the mid-p-values are averaged without weights.
PValueVector ghost_pvalues(const PosteriorDraws& draws, const CarStructure& car, const SpatialDataset& dataset,
                           const PValueOptions& options = {});

/// Integrated p-value A and integrated predictive density P of y_i for one
/// posterior draw, by K draws of s_i from its CAR conditional.
struct IntegratedQuantities {
  double a;      // in [0, 1]
  double p;      // in (0, 1]
  double log_p;  // accumulated by log-sum-exp
};
IntegratedQuantities integrated_quantities(const ModelParams& theta, std::span<const double> s, std::size_t i,
                                           const CarStructure& car, const SpatialDataset& dataset, std::size_t k,
                                           Rng& rng, bool shared_streams = true, Rng* density_rng = nullptr);

/// A and log P for every draw of one district, each (draw, district) pair on
/// its own derived stream.
struct IntegratedColumn {
  std::vector<double> a;
  std::vector<double> log_p;
};
IntegratedColumn integrated_column(const PosteriorDraws& draws, const CarStructure& car, const SpatialDataset& dataset,
                                   std::size_t i, const PValueOptions& options);

/// Integrated importance sampling: sum A W / sum W with W = 1 / P.
PValueVector iis_pvalues(const PosteriorDraws& draws, const CarStructure& car, const SpatialDataset& dataset,
                         const PValueOptions& options = {});

/// Stream seeds for inner regeneration; shared by ghosting and iIS so that
/// equal draw counts regenerate identical s_i values.
std::uint64_t inner_stream_seed(std::uint64_t master, std::size_t draw, std::size_t district, std::uint64_t purpose = 0);

}  // namespace carcheck
