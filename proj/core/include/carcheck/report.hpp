#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "carcheck/diagnostics.hpp"
#include "carcheck/eval.hpp"
#include "carcheck/pvalues.hpp"

namespace carcheck {

/// Long format: district,method,pvalue,mc_se (district is 1-based).
void write_pvalues_csv(std::ostream& out, std::span<const PValueVector> results);
std::string pvalues_json(std::span<const PValueVector> results);

/// Reads the long p-value CSV back. Rows of a method must cover districts
/// 1..n in order; throws DataError otherwise.
std::vector<PValueVector> read_pvalues_csv(std::istream& in, const std::string& source = "<stream>");

/// y,pmf_full,pmf_loocv
void write_pmf_csv(std::ostream& out, std::span<const int> y_grid, std::span<const double> pmf_full,
                   std::span<const double> pmf_loocv);

/// quantity,r_hat,ess,mean,sd (r_hat empty when undefined)
void write_diagnostics_csv(std::ostream& out, std::span<const QuantityDiagnostics> rows);

/// method,mean_rel_error,sd_rel_error,n_reps
void write_relerr_csv(std::ostream& out, std::span<const RelErrorSummary> rows);

/// district,loocv_pvalue,method_pvalue for one method against the reference.
void write_scatter_csv(std::ostream& out, const PValueVector& reference, const PValueVector& estimate);

/// Rows "MCMC simulations", "Computing p-values", "Total"; one column per method.
void write_timing_csv(std::ostream& out, const TimingReport& report);
std::string timing_json(const TimingReport& report);

}  // namespace carcheck
