#pragma once

#include <filesystem>
#include <iosfwd>

#include "carcheck/mcmc.hpp"

namespace carcheck {

// Compact binary artifact (host byte order, IEEE doubles):
//   magic "CCDRAWS1", u64 n_districts, u64 n_chains, u64 per_chain,
//   i64 holdout (0 = none), per chain {latent_mean, latent_min, phi} acceptance,
//   u64 warning count + length-prefixed strings,
//   then per draw {alpha, beta, tau2, phi, s_1..s_n}.
void write_draws_binary(const PosteriorDraws& draws, std::ostream& out);
PosteriorDraws read_draws_binary(std::istream& in);
void save_draws(const PosteriorDraws& draws, const std::filesystem::path& path);
PosteriorDraws load_draws(const std::filesystem::path& path);

/// CSV dump with header chain,iter,alpha,beta,tau2,phi,s1..sN; iter counts
/// retained draws within the chain from 1.
void write_draws_csv(const PosteriorDraws& draws, std::ostream& out);

}  // namespace carcheck
