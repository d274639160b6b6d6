#pragma once

#include <span>
#include <vector>

namespace carcheck {

/// log pois(y | mu) = y log mu - mu - log y!.
double poisson_log_pmf(int y, double mu);
double poisson_pmf(int y, double mu);

/// Pr(Y > y) for Y ~ Poisson(mu), by guarded summation: the upper series
/// from y+1 when mu < y + 1 (stopped once a bound on the remainder falls below
/// 1e-17 of the running sum), otherwise 1 - CDF with compensated summation.
double poisson_upper_tail(int y, double mu);

/// Pr(Y > y) through the regularized incomplete gamma function, P(y+1, mu).
/// Independent route used to cross-check poisson_upper_tail.
double poisson_upper_tail_incomplete_gamma(int y, double mu);

/// Upper-tail mid-p-value Pr(Y > y) + 0.5 Pr(Y = y) for a fixed observation.
/// Precomputes log y! so repeated evaluation at different means is cheap.
class MidPValue {
 public:
  explicit MidPValue(int y_obs);

  struct Result {
    double pvalue;
    double log_pmf;  // log pois(y_obs | mu)
  };

  /// Evaluate at mean exp(log_mu).
  [[nodiscard]] Result at_log_mean(double log_mu) const;
  [[nodiscard]] double operator()(double mu) const;

  [[nodiscard]] int observed() const { return y_; }

 private:
  int y_;
  double log_factorial_;
};

/// The mid-p-value of a fixed observation as a function of log mu,
/// tabulated on a uniform grid around log(y + 1) as piecewise cubic Hermite
/// polynomials with exact slopes 0.5 pois(y | mu) (mu + y). Outside the grid
/// it defers to MidPValue. Absolute error is below 1e-9.
class MidPValueCurve {
 public:
  explicit MidPValueCurve(int y_obs);

  [[nodiscard]] double at_log_mean(double log_mu) const;
  /// Sum of at_log_mean over the values, accumulated left to right.
  [[nodiscard]] double sum_at_log_means(std::span<const double> log_mu) const;
  [[nodiscard]] const MidPValue& exact() const { return exact_; }
  [[nodiscard]] bool tabulated() const { return !coef_.empty(); }

 private:
  MidPValue exact_;
  double lo_ = 0.0;
  double inv_h_ = 0.0;
  double last_ = -1.0;  // largest valid u; u in [0, last_) interpolates
  std::vector<double> coef_;  // four coefficients in t per interval
};

/// Convenience wrapper: mid-p-value of y_obs under Poisson(mu). Throws
/// DomainError unless mu > 0 and finite.
double mid_p_value(int y_obs, double mu);

}  // namespace carcheck
