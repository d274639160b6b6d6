#include "carcheck/poisson.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "carcheck/error.hpp"

namespace carcheck {

namespace {

constexpr double kSeriesTolerance = 1e-17;

void check_mean(double mu) {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw DomainError("Poisson mean must be positive and finite, got " + std::to_string(mu));
}

/// Neumaier-compensated accumulator.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      carry += (sum - t) + v;
    } else {
      carry += (v - t) + sum;
    }
    sum = t;
  }
  [[nodiscard]] double value() const { return sum + carry; }
};

/// Pr(Y <= y) summed downward from the atom at y. Terms k < mu shrink
/// geometrically, so the loop may stop early once they are negligible.
double lower_cdf(int y, double mu, double pmf_y) {
  CompensatedSum acc;
  double term = pmf_y;
  acc.add(term);
  const double inv_mu = 1.0 / mu;
  for (int k = y; k >= 1; --k) {
    term *= static_cast<double>(k) * inv_mu;
    acc.add(term);
    if (k < mu && term < kSeriesTolerance * acc.sum) break;
  }
  return acc.value();
}

/// Pr(Y > y) = pois(y | mu) sum_{k > y} prod_{j=y+1..k} mu / j, for mu < y + 1.
/// Terms decrease with ratio r = mu / (k + 1) < 1, so the remainder after a
/// term is at most term r / (1 - r). The ratio sum is formed before scaling so
/// that a subnormal pmf does not cost relative accuracy in the sum.
double upper_series(int y, double mu, double pmf_y) {
  double term = 1.0;
  double sum = 0.0;
  for (double k = static_cast<double>(y) + 1.0;; k += 1.0) {
    term *= mu / k;
    sum += term;
    const double r = mu / (k + 1.0);
    if (term * r <= kSeriesTolerance * sum * (1.0 - r) || term == 0.0) break;
  }
  return pmf_y * sum;
}

/// Pr(Y > y): the upper series left of the mode, where the tail may be tiny
/// and the atom at y subnormal; 1 - CDF otherwise, where the tail exceeds
/// roughly one third and no digits are lost to cancellation.
double upper_tail_from_pmf(int y, double mu, double pmf_y) {
  if (mu < static_cast<double>(y) + 1.0) return upper_series(y, mu, pmf_y);
  return 1.0 - lower_cdf(y, mu, pmf_y);
}

}  // namespace

double poisson_log_pmf(int y, double mu) {
  check_mean(mu);
  if (y < 0) return -std::numeric_limits<double>::infinity();
  return static_cast<double>(y) * std::log(mu) - mu - std::lgamma(static_cast<double>(y) + 1.0);
}

double poisson_pmf(int y, double mu) { return std::exp(poisson_log_pmf(y, mu)); }

double poisson_upper_tail(int y, double mu) {
  check_mean(mu);
  if (y < 0) return 1.0;
  return std::clamp(upper_tail_from_pmf(y, mu, poisson_pmf(y, mu)), 0.0, 1.0);
}

double poisson_upper_tail_incomplete_gamma(int y, double mu) {
  check_mean(mu);
  if (y < 0) return 1.0;
  return boost::math::gamma_p(static_cast<double>(y) + 1.0, mu);
}

MidPValue::MidPValue(int y_obs) : y_(y_obs), log_factorial_(std::lgamma(static_cast<double>(y_obs) + 1.0)) {
  if (y_obs < 0) throw DomainError("observed count must be non-negative");
}

MidPValue::Result MidPValue::at_log_mean(double log_mu) const {
  const double mu = std::exp(log_mu);
  if (mu == 0.0) return {y_ == 0 ? 0.5 : 0.0, y_ == 0 ? 0.0 : -std::numeric_limits<double>::infinity()};
  if (std::isinf(mu)) return {1.0, -std::numeric_limits<double>::infinity()};
  const double log_pmf = static_cast<double>(y_) * log_mu - mu - log_factorial_;
  const double pmf = std::exp(log_pmf);
  const double tail = upper_tail_from_pmf(y_, mu, pmf);
  return {std::clamp(tail + 0.5 * pmf, 0.0, 1.0), log_pmf};
}

double MidPValue::operator()(double mu) const {
  check_mean(mu);
  return at_log_mean(std::log(mu)).pvalue;
}

MidPValueCurve::MidPValueCurve(int y_obs) : exact_(y_obs) {
  constexpr double kHalfWidthBelow = 8.0;
  constexpr double kHalfWidthAbove = 4.0;
  constexpr std::size_t kMaxNodes = std::size_t{1} << 20;
  // Derivatives in log mu grow like sqrt(y)^k, so the step shrinks like 1/sqrt(y).
  const double h = 0.02 / std::sqrt(static_cast<double>(y_obs) + 1.0);
  const double width = kHalfWidthBelow + kHalfWidthAbove;
  const auto nodes = static_cast<std::size_t>(std::ceil(width / h)) + 1;
  if (nodes > kMaxNodes) return;
  lo_ = std::log(static_cast<double>(y_obs) + 1.0) - kHalfWidthBelow;
  inv_h_ = 1.0 / h;
  last_ = static_cast<double>(nodes - 1);
  std::vector<double> value(nodes);
  std::vector<double> slope(nodes);  // d p / d log mu, times h
  for (std::size_t j = 0; j < nodes; ++j) {
    const double log_mu = lo_ + static_cast<double>(j) * h;
    const auto r = exact_.at_log_mean(log_mu);
    value[j] = r.pvalue;
    slope[j] = 0.5 * std::exp(r.log_pmf) * (std::exp(log_mu) + static_cast<double>(y_obs)) * h;
  }
  coef_.resize(4 * (nodes - 1));
  for (std::size_t j = 0; j + 1 < nodes; ++j) {
    const double dv = value[j + 1] - value[j];
    coef_[4 * j] = value[j];
    coef_[4 * j + 1] = slope[j];
    coef_[4 * j + 2] = 3.0 * dv - 2.0 * slope[j] - slope[j + 1];
    coef_[4 * j + 3] = slope[j] + slope[j + 1] - 2.0 * dv;
  }
}

double MidPValueCurve::at_log_mean(double log_mu) const {
  const double u = (log_mu - lo_) * inv_h_;
  if (!(u >= 0.0 && u < last_)) return exact_.at_log_mean(log_mu).pvalue;
  const auto j = static_cast<std::size_t>(u);
  const double t = u - static_cast<double>(j);
  const double* c = &coef_[4 * j];
  return std::clamp(((c[3] * t + c[2]) * t + c[1]) * t + c[0], 0.0, 1.0);
}

double MidPValueCurve::sum_at_log_means(std::span<const double> log_mu) const {
  double sum = 0.0;
  for (double l : log_mu) sum += at_log_mean(l);
  return sum;
}

double mid_p_value(int y_obs, double mu) { return MidPValue(y_obs)(mu); }

}  // namespace carcheck
