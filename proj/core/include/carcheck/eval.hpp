#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "carcheck/car.hpp"
#include "carcheck/data.hpp"
#include "carcheck/mcmc.hpp"
#include "carcheck/pvalues.hpp"

namespace carcheck {

struct RelativeError {
  double value = 0.0;
  std::size_t clamped = 0;  // reference terms at exactly 0 or 1
  std::vector<std::string> warnings;
};

/// (1/n) sum |est_i - ref_i| / min(ref_i, 1 - ref_i) x 100. A reference value
/// of exactly 0 or 1 has its denominator clamped to 1 / (2 reference_draws).
RelativeError relative_error(std::span<const double> estimates, std::span<const double> reference,
                             std::size_t reference_draws);
RelativeError relative_error(const PValueVector& estimates, const PValueVector& reference);

struct RelErrorSummary {
  Method method = Method::iis;
  double mean_rel_error = 0.0;
  std::optional<double> sd_rel_error;  // absent for a single replication
  std::size_t n_reps = 0;
};

/// Wall-clock seconds of the two phases of one method's run.
struct PhaseTimes {
  double mcmc_simulations = 0.0;
  double computing_pvalues = 0.0;
  [[nodiscard]] double total() const { return mcmc_simulations + computing_pvalues; }
};

/// One timed phase of one method.
struct RunRecord {
  Method method;
  enum class Phase { mcmc, pvalues } phase;
  double seconds;
};

struct TimingReport {
  std::vector<std::pair<Method, PhaseTimes>> rows;

  [[nodiscard]] const PhaseTimes* find(Method method) const;
  PhaseTimes& at(Method method);
};

/// Sums run records per method and phase; methods keep first-seen order.
TimingReport timing_report(std::span<const RunRecord> records);

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

/// The long run behind the LOOCV reference: same burn-in, four times the
/// retained draws per chain.
McmcConfig reference_config(const McmcConfig& base);

struct ReplicationOptions {
  std::size_t n_reps = 100;
  std::vector<Method> methods{Method::iis, Method::nis, Method::ghost, Method::posterior_check};
  PValueOptions pvalues;
  unsigned threads = 1;  // replications run concurrently, each single-threaded
};

struct ReplicationResult {
  std::vector<RelErrorSummary> summaries;        // one per method, in options order
  std::vector<std::vector<double>> errors;       // [method][rep]
  std::vector<std::string> warnings;
};

/// Repeats the full-data fit n_reps times with seeds derived from
/// config.seed, computes every requested method's p-values and their
/// relative error against a fixed LOOCV reference.
ReplicationResult replication_study(const SpatialDataset& dataset, const CarStructure& car, const McmcConfig& config,
                                    const PValueVector& reference, const ReplicationOptions& options);

/// Seed of replication r.
std::uint64_t replication_seed(std::uint64_t master, std::size_t rep);

/// Runs one estimator on full-data draws (every method except loocv).
PValueVector compute_method(Method method, const PosteriorDraws& draws, const CarStructure& car,
                            const SpatialDataset& dataset, const PValueOptions& options);

}  // namespace carcheck
