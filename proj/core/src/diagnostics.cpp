#include "carcheck/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

namespace carcheck {

namespace {

using Chains = std::vector<std::vector<double>>;

double mean_of(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double variance_of(std::span<const double> v) {
  // Exact for constant input; the rounded mean of equal values may not equal them.
  if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); })) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

Chains split_chains(std::span<const std::vector<double>> chains) {
  Chains out;
  for (const auto& c : chains) {
    const std::size_t half = c.size() / 2;
    // An odd middle draw is dropped so both halves have equal length.
    out.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
    out.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
  }
  return out;
}

/// Replace every value by the normal score of its pooled (average) rank.
Chains rank_normalize(const Chains& chains) {
  std::vector<std::pair<double, std::size_t>> pooled;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    for (double v : chains[c]) pooled.emplace_back(v, pooled.size());
  }
  const std::size_t total = pooled.size();
  std::vector<double> ranks(total);
  std::sort(pooled.begin(), pooled.end());
  for (std::size_t lo = 0; lo < total;) {
    std::size_t hi = lo;
    while (hi + 1 < total && pooled[hi + 1].first == pooled[lo].first) ++hi;
    const double avg = 0.5 * static_cast<double>(lo + hi) + 1.0;
    for (std::size_t k = lo; k <= hi; ++k) ranks[pooled[k].second] = avg;
    lo = hi + 1;
  }
  const boost::math::normal_distribution<double> normal;
  Chains out;
  std::size_t idx = 0;
  for (const auto& c : chains) {
    std::vector<double> z(c.size());
    for (double& v : z) {
      v = boost::math::quantile(normal, (ranks[idx++] - 0.375) / (static_cast<double>(total) + 0.25));
    }
    out.push_back(std::move(z));
  }
  return out;
}

double rhat_basic(const Chains& chains) {
  const double n = static_cast<double>(chains.front().size());
  std::vector<double> means, vars;
  for (const auto& c : chains) {
    means.push_back(mean_of(c));
    vars.push_back(variance_of(c));
  }
  const double within = mean_of(vars);
  const double between_over_n = variance_of(means);
  if (within <= 0.0) {
    return between_over_n > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  }
  const double var_plus = (n - 1.0) / n * within + between_over_n;
  return std::sqrt(var_plus / within);
}

double ess_basic(const Chains& chains) {
  const std::size_t m = chains.size();
  const std::size_t n = chains.front().size();
  const double dn = static_cast<double>(n);
  std::vector<double> means(m), acov0(m);
  for (std::size_t c = 0; c < m; ++c) means[c] = mean_of(chains[c]);

  auto autocov = [&](std::size_t c, std::size_t lag) {
    const auto& x = chains[c];
    double s = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) s += (x[t] - means[c]) * (x[t + lag] - means[c]);
    return s / dn;
  };
  auto mean_autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t c = 0; c < m; ++c) s += autocov(c, lag);
    return s / static_cast<double>(m);
  };

  double mean_var = 0.0;
  for (std::size_t c = 0; c < m; ++c) {
    acov0[c] = autocov(c, 0);
    mean_var += acov0[c] * dn / (dn - 1.0);
  }
  mean_var /= static_cast<double>(m);
  double var_plus = mean_var * (dn - 1.0) / dn;
  if (m > 1) var_plus += variance_of(means);
  if (!(var_plus > 0.0)) return std::numeric_limits<double>::quiet_NaN();

  auto rho = [&](std::size_t lag) { return 1.0 - (mean_var - mean_autocov(lag)) / var_plus; };

  // Geyer's initial positive sequence on pairs (rho_{2k} + rho_{2k+1}),
  // made monotone.
  std::vector<double> rho_hat{1.0, rho(1)};
  std::size_t t = 1;
  while (t + 2 < n) {
    const double even = rho(t + 1);
    const double odd = rho(t + 2);
    if (even + odd < 0.0) break;
    rho_hat.push_back(even);
    rho_hat.push_back(odd);
    t += 2;
  }
  const std::size_t max_t = rho_hat.size() - 1;
  for (std::size_t k = 1; k + 2 <= max_t; k += 2) {
    const double prev = rho_hat[k - 1] + rho_hat[k];
    const double cur = rho_hat[k + 1] + rho_hat[k + 2];
    if (cur > prev) {
      rho_hat[k + 1] = prev / 2.0;
      rho_hat[k + 2] = prev / 2.0;
    }
  }
  double tau = -1.0;
  for (double r : rho_hat) tau += 2.0 * r;
  const double total = static_cast<double>(m) * dn;
  tau = std::max(tau, 1.0 / std::log10(total));
  return total / tau;
}

Chains folded(const Chains& chains) {
  std::vector<double> all;
  for (const auto& c : chains) all.insert(all.end(), c.begin(), c.end());
  std::nth_element(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(all.size() / 2), all.end());
  const double median = all[all.size() / 2];
  Chains out = chains;
  for (auto& c : out) {
    for (double& v : c) v = std::abs(v - median);
  }
  return out;
}

}  // namespace

std::optional<double> split_rhat(std::span<const std::vector<double>> chains) {
  if (chains.size() < 2) return std::nullopt;
  const auto split = split_chains(chains);
  if (split.front().size() < 2) return std::nullopt;
  const double bulk = rhat_basic(rank_normalize(split));
  const double tail = rhat_basic(rank_normalize(folded(split)));
  return std::max(bulk, tail);
}

double bulk_ess(std::span<const std::vector<double>> chains) {
  if (chains.empty() || chains.front().size() < 4) return std::numeric_limits<double>::quiet_NaN();
  return ess_basic(rank_normalize(split_chains(chains)));
}

std::vector<QuantityDiagnostics> diagnostics(const PosteriorDraws& draws) {
  const std::size_t per_chain = draws.per_chain;
  auto summarize = [&](std::string name, auto&& value_at) {
    Chains chains(draws.n_chains, std::vector<double>(per_chain));
    std::vector<double> all;
    all.reserve(draws.size());
    for (std::size_t c = 0; c < draws.n_chains; ++c) {
      for (std::size_t k = 0; k < per_chain; ++k) {
        chains[c][k] = value_at(c * per_chain + k);
        all.push_back(chains[c][k]);
      }
    }
    QuantityDiagnostics q;
    q.name = std::move(name);
    q.r_hat = split_rhat(chains);
    q.ess = bulk_ess(chains);
    q.mean = mean_of(all);
    q.sd = all.size() > 1 ? std::sqrt(variance_of(all)) : 0.0;
    return q;
  };
  std::vector<QuantityDiagnostics> out;
  out.push_back(summarize("alpha", [&](std::size_t t) { return draws.params[t].alpha; }));
  out.push_back(summarize("beta", [&](std::size_t t) { return draws.params[t].beta; }));
  out.push_back(summarize("tau2", [&](std::size_t t) { return draws.params[t].tau2; }));
  out.push_back(summarize("phi", [&](std::size_t t) { return draws.params[t].phi; }));
  for (std::size_t i = 0; i < draws.n_districts; ++i) {
    out.push_back(summarize("s" + std::to_string(i + 1), [&](std::size_t t) { return draws.s(t, i); }));
  }
  return out;
}

}  // namespace carcheck
