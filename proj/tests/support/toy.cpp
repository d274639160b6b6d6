#include "toy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <stdexcept>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

namespace carcheck::testing {

SpatialDataset chain_dataset(const std::vector<int>& y, const std::vector<double>& expected,
                             const std::vector<double>& covariate) {
  std::vector<DistrictRecord> records;
  const int n = static_cast<int>(y.size());
  for (int i = 0; i < n; ++i) {
    DistrictRecord r;
    r.id = i + 1;
    r.name = "d" + std::to_string(i + 1);
    r.y_obs = y[i];
    r.expected = expected[i];
    r.covariate = covariate.empty() ? 0.0 : covariate[i];
    if (i > 0) r.neighbours.push_back(i);
    if (i + 1 < n) r.neighbours.push_back(i + 2);
    records.push_back(r);
  }
  return SpatialDataset::from_records(records);
}

SpatialDataset random_dataset(std::mt19937_64& gen, std::size_t n) {
  std::uniform_real_distribution<double> e_dist(0.5, 5.0);
  std::uniform_real_distribution<double> x_dist(-1.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::set<int>> adj(n);
  for (std::size_t i = 1; i < n; ++i) {
    const auto parent = std::uniform_int_distribution<std::size_t>(0, i - 1)(gen);
    adj[i].insert(static_cast<int>(parent));
    adj[parent].insert(static_cast<int>(i));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (u(gen) < 0.3) {
        adj[i].insert(static_cast<int>(j));
        adj[j].insert(static_cast<int>(i));
      }
    }
  }
  std::vector<DistrictRecord> records;
  for (std::size_t i = 0; i < n; ++i) {
    DistrictRecord r;
    r.id = static_cast<int>(i + 1);
    r.name = "r" + std::to_string(i + 1);
    r.expected = e_dist(gen);
    r.covariate = x_dist(gen);
    r.y_obs = std::poisson_distribution<int>(r.expected)(gen);
    for (int j : adj[i]) r.neighbours.push_back(j + 1);
    records.push_back(r);
  }
  return SpatialDataset::from_records(records);
}

Eigen::MatrixXd dense_weights(const SpatialDataset& dataset) {
  const auto n = static_cast<Eigen::Index>(dataset.size());
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j1 : dataset[i].neighbours) {
      const Eigen::Index j = j1 - 1;
      c(i, j) = std::sqrt(dataset[j].expected / dataset[i].expected);
    }
  }
  return c;
}

Eigen::MatrixXd dense_covariance(const SpatialDataset& dataset, double phi, double tau2) {
  const auto n = static_cast<Eigen::Index>(dataset.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) m(i, i) = 1.0 / dataset[i].expected;
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - phi * dense_weights(dataset);
  Eigen::MatrixXd cov = a.fullPivLu().solve(m) * tau2;
  return 0.5 * (cov + cov.transpose());
}

Eigen::VectorXd dense_mean(const SpatialDataset& dataset, const ModelParams& theta) {
  Eigen::VectorXd mean(static_cast<Eigen::Index>(dataset.size()));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    mean[static_cast<Eigen::Index>(i)] = theta.alpha + dataset[i].covariate * theta.beta;
  }
  return mean;
}

double dense_log_density(const SpatialDataset& dataset, const Eigen::VectorXd& s, const ModelParams& theta) {
  const Eigen::MatrixXd cov = dense_covariance(dataset, theta.phi, theta.tau2);
  const Eigen::VectorXd r = s - dense_mean(dataset, theta);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
  const double log_det = ldlt.vectorD().array().log().sum();
  const double n = static_cast<double>(s.size());
  return -0.5 * (n * std::log(2.0 * std::numbers::pi) + log_det + r.dot(ldlt.solve(r)));
}

PhiBounds dense_phi_bounds(const SpatialDataset& dataset) {
  const Eigen::VectorXcd ev = dense_weights(dataset).eigenvalues();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& z : ev) {
    lo = std::min(lo, z.real());
    hi = std::max(hi, z.real());
  }
  return {1.0 / lo, 1.0 / hi};
}

double oracle_mid_p(int y, double mu) {
  const double pmf = std::exp(y * std::log(mu) - mu - std::lgamma(y + 1.0));
  return boost::math::gamma_p(y + 1.0, mu) + 0.5 * pmf;
}

ToyProblem outlier_chain_toy() {
  ToyProblem toy{chain_dataset({11, 5, 4}, {2.0, 3.0, 2.5}), {}};
  toy.theta.alpha = std::log(1.5);
  toy.theta.beta = 0.0;
  toy.theta.tau2 = 0.3;
  toy.theta.phi = 0.5;
  return toy;
}

QuadraturePValues quadrature_pvalues(const SpatialDataset& dataset, const ModelParams& theta,
                                     std::size_t points_per_axis) {
  const std::size_t n = dataset.size();
  if (n != 3) throw std::invalid_argument("quadrature oracle is written for three districts");
  const Eigen::MatrixXd cov = dense_covariance(dataset, theta.phi, theta.tau2);
  const Eigen::MatrixXd prec = cov.inverse();
  const Eigen::VectorXd mean = dense_mean(dataset, theta);

  // Per-axis nodes, log-likelihood and mid-p-value.
  const std::size_t g = points_per_axis;
  std::vector<std::vector<double>> node(n, std::vector<double>(g));
  std::vector<std::vector<double>> loglik(n, std::vector<double>(g));
  std::vector<std::vector<double>> midp(n, std::vector<double>(g));
  for (std::size_t i = 0; i < n; ++i) {
    const double sd = std::sqrt(cov(i, i));
    const double lo = mean[i] - 8.0 * sd;
    const double step = 16.0 * sd / static_cast<double>(g - 1);
    const int y = dataset[i].y_obs;
    for (std::size_t k = 0; k < g; ++k) {
      const double s = lo + step * static_cast<double>(k);
      const double mu = dataset[i].expected * std::exp(s);
      node[i][k] = s;
      loglik[i][k] = y * std::log(mu) - mu - std::lgamma(y + 1.0);
      midp[i][k] = oracle_mid_p(y, mu);
    }
  }

  // Weights on the grid for the full posterior and for each holdout; the
  // uniform cell volume cancels in every ratio.
  std::vector<double> prior_log(g * g * g);
  for (std::size_t a = 0; a < g; ++a) {
    for (std::size_t b = 0; b < g; ++b) {
      for (std::size_t c = 0; c < g; ++c) {
        const Eigen::Vector3d r(node[0][a] - mean[0], node[1][b] - mean[1], node[2][c] - mean[2]);
        prior_log[(a * g + b) * g + c] = -0.5 * r.dot(prec * r);
      }
    }
  }
  auto expectation = [&](int held_out, std::size_t target) {
    double max = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < g; ++a) {
      for (std::size_t b = 0; b < g; ++b) {
        for (std::size_t c = 0; c < g; ++c) {
          double lw = prior_log[(a * g + b) * g + c];
          if (held_out != 0) lw += loglik[0][a];
          if (held_out != 1) lw += loglik[1][b];
          if (held_out != 2) lw += loglik[2][c];
          max = std::max(max, lw);
        }
      }
    }
    double num = 0.0;
    double den = 0.0;
    for (std::size_t a = 0; a < g; ++a) {
      for (std::size_t b = 0; b < g; ++b) {
        for (std::size_t c = 0; c < g; ++c) {
          double lw = prior_log[(a * g + b) * g + c];
          if (held_out != 0) lw += loglik[0][a];
          if (held_out != 1) lw += loglik[1][b];
          if (held_out != 2) lw += loglik[2][c];
          const double w = std::exp(lw - max);
          const std::size_t k[3] = {a, b, c};
          num += w * midp[target][k[target]];
          den += w;
        }
      }
    }
    return num / den;
  };

  QuadraturePValues out;
  for (std::size_t i = 0; i < n; ++i) {
    out.loocv.push_back(expectation(static_cast<int>(i), i));
    out.posterior_check.push_back(expectation(-1, i));
  }
  return out;
}

}  // namespace carcheck::testing
