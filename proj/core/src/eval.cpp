#include "carcheck/eval.hpp"

#include <algorithm>
#include <cmath>

#include "carcheck/error.hpp"
#include "carcheck/parallel.hpp"

namespace carcheck {

RelativeError relative_error(std::span<const double> estimates, std::span<const double> reference,
                             std::size_t reference_draws) {
  if (estimates.size() != reference.size() || reference.empty()) {
    throw ConfigError("relative error needs equally sized, non-empty p-value vectors");
  }
  RelativeError out;
  const double floor = 1.0 / (2.0 * static_cast<double>(std::max<std::size_t>(reference_draws, 1)));
  double sum = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    double denom = std::min(reference[i], 1.0 - reference[i]);
    if (denom <= 0.0) {
      denom = floor;
      ++out.clamped;
      out.warnings.push_back("reference p-value of district " + std::to_string(i + 1) +
                             " is degenerate; denominator clamped");
    }
    sum += std::abs(estimates[i] - reference[i]) / denom;
  }
  out.value = sum / static_cast<double>(reference.size()) * 100.0;
  return out;
}

RelativeError relative_error(const PValueVector& estimates, const PValueVector& reference) {
  return relative_error(estimates.values, reference.values, reference.draw_count);
}

const PhaseTimes* TimingReport::find(Method method) const {
  for (const auto& [m, t] : rows) {
    if (m == method) return &t;
  }
  return nullptr;
}

PhaseTimes& TimingReport::at(Method method) {
  for (auto& [m, t] : rows) {
    if (m == method) return t;
  }
  rows.emplace_back(method, PhaseTimes{});
  return rows.back().second;
}

TimingReport timing_report(std::span<const RunRecord> records) {
  TimingReport report;
  for (const auto& r : records) {
    auto& row = report.at(r.method);
    const double secs = std::max(0.0, r.seconds);
    (r.phase == RunRecord::Phase::mcmc ? row.mcmc_simulations : row.computing_pvalues) += secs;
  }
  return report;
}

McmcConfig reference_config(const McmcConfig& base) {
  McmcConfig config = base;
  config.iterations = base.burn_in + 4 * (base.iterations - base.burn_in);
  return config;
}

std::uint64_t replication_seed(std::uint64_t master, std::size_t rep) {
  return derive_seed(master, {0x5245504CULL, static_cast<std::uint64_t>(rep)});
}

PValueVector compute_method(Method method, const PosteriorDraws& draws, const CarStructure& car,
                            const SpatialDataset& dataset, const PValueOptions& options) {
  switch (method) {
    case Method::posterior_check: return posterior_check(draws, dataset);
    case Method::nis: return nis_pvalues(draws, dataset);
    case Method::ghost: return ghost_pvalues(draws, car, dataset, options);
    case Method::iis: return iis_pvalues(draws, car, dataset, options);
    case Method::loocv: break;
  }
  throw ConfigError("actual LOOCV cannot be computed from full-data draws");
}

ReplicationResult replication_study(const SpatialDataset& dataset, const CarStructure& car, const McmcConfig& config,
                                    const PValueVector& reference, const ReplicationOptions& options) {
  if (options.n_reps == 0) throw ConfigError("replication study needs at least one replication");
  if (reference.size() != dataset.size()) throw ConfigError("reference p-values do not match the dataset");
  for (Method m : options.methods) {
    if (m == Method::loocv) throw ConfigError("loocv is the reference, not a replicated method");
  }
  const std::size_t n_methods = options.methods.size();
  ReplicationResult out;
  out.errors.assign(n_methods, std::vector<double>(options.n_reps));
  std::vector<std::vector<std::string>> rep_warnings(options.n_reps);

  parallel_for(options.n_reps, options.threads, [&](std::size_t rep) {
    McmcConfig rep_config = config;
    rep_config.seed = replication_seed(config.seed, rep);
    rep_config.threads = 1;
    const auto draws = run_mcmc(dataset, car, rep_config);
    PValueOptions pv = options.pvalues;
    pv.seed = replication_seed(options.pvalues.seed, rep);
    pv.threads = 1;
    for (std::size_t m = 0; m < n_methods; ++m) {
      const auto est = compute_method(options.methods[m], draws, car, dataset, pv);
      const auto err = relative_error(est, reference);
      out.errors[m][rep] = err.value;
      if (rep == 0) rep_warnings[rep].insert(rep_warnings[rep].end(), err.warnings.begin(), err.warnings.end());
    }
  });

  for (std::size_t m = 0; m < n_methods; ++m) {
    const auto& e = out.errors[m];
    RelErrorSummary s;
    s.method = options.methods[m];
    s.n_reps = e.size();
    double sum = 0.0;
    for (double v : e) sum += v;
    s.mean_rel_error = sum / static_cast<double>(e.size());
    if (e.size() > 1) {
      double ss = 0.0;
      for (double v : e) ss += (v - s.mean_rel_error) * (v - s.mean_rel_error);
      s.sd_rel_error = std::sqrt(ss / static_cast<double>(e.size() - 1));
    }
    out.summaries.push_back(s);
  }
  for (auto& w : rep_warnings) out.warnings.insert(out.warnings.end(), w.begin(), w.end());
  return out;
}

}  // namespace carcheck
