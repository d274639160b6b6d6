#include "carcheck/draws_io.hpp"

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "carcheck/error.hpp"
#include "carcheck/format.hpp"

namespace carcheck {

namespace {

constexpr std::array<char, 8> kMagic = {'C', 'C', 'D', 'R', 'A', 'W', 'S', '1'};

template <class T>
void put(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw DataError("truncated draws artifact");
  return value;
}

}  // namespace

void write_draws_binary(const PosteriorDraws& draws, std::ostream& out) {
  out.write(kMagic.data(), kMagic.size());
  put<std::uint64_t>(out, draws.n_districts);
  put<std::uint64_t>(out, draws.n_chains);
  put<std::uint64_t>(out, draws.per_chain);
  put<std::int64_t>(out, draws.holdout.district.value_or(0));
  for (const auto& a : draws.acceptance) {
    put(out, a.latent_mean);
    put(out, a.latent_min);
    put(out, a.phi);
  }
  put<std::uint64_t>(out, draws.warnings.size());
  for (const auto& w : draws.warnings) {
    put<std::uint64_t>(out, w.size());
    out.write(w.data(), static_cast<std::streamsize>(w.size()));
  }
  for (std::size_t t = 0; t < draws.size(); ++t) {
    const auto& p = draws.params[t];
    put(out, p.alpha);
    put(out, p.beta);
    put(out, p.tau2);
    put(out, p.phi);
    const auto s = draws.field(t);
    out.write(reinterpret_cast<const char*>(s.data()), static_cast<std::streamsize>(s.size() * sizeof(double)));
  }
  if (!out) throw DataError("failed writing draws artifact");
}

PosteriorDraws read_draws_binary(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw DataError("not a carcheck draws artifact");
  PosteriorDraws draws;
  draws.n_districts = get<std::uint64_t>(in);
  draws.n_chains = get<std::uint64_t>(in);
  draws.per_chain = get<std::uint64_t>(in);
  if (const auto h = get<std::int64_t>(in); h != 0) draws.holdout.district = static_cast<int>(h);
  constexpr std::uint64_t kSanity = std::uint64_t{1} << 40;
  if (draws.n_districts == 0 || draws.n_chains * draws.per_chain * draws.n_districts > kSanity) {
    throw DataError("draws artifact header is implausible");
  }
  draws.acceptance.resize(draws.n_chains);
  for (auto& a : draws.acceptance) {
    a.latent_mean = get<double>(in);
    a.latent_min = get<double>(in);
    a.phi = get<double>(in);
  }
  const auto n_warnings = get<std::uint64_t>(in);
  for (std::uint64_t k = 0; k < n_warnings; ++k) {
    const auto len = get<std::uint64_t>(in);
    if (len > (1u << 20)) throw DataError("draws artifact warning string too long");
    std::string w(len, '\0');
    in.read(w.data(), static_cast<std::streamsize>(len));
    if (!in) throw DataError("truncated draws artifact");
    draws.warnings.push_back(std::move(w));
  }
  const std::size_t total = draws.n_chains * draws.per_chain;
  draws.params.resize(total);
  draws.latent.resize(total * draws.n_districts);
  for (std::size_t t = 0; t < total; ++t) {
    auto& p = draws.params[t];
    p.alpha = get<double>(in);
    p.beta = get<double>(in);
    p.tau2 = get<double>(in);
    p.phi = get<double>(in);
    in.read(reinterpret_cast<char*>(draws.latent.data() + t * draws.n_districts),
            static_cast<std::streamsize>(draws.n_districts * sizeof(double)));
    if (!in) throw DataError("truncated draws artifact");
  }
  return draws;
}

void save_draws(const PosteriorDraws& draws, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write_draws_binary(draws, out);
}

PosteriorDraws load_draws(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open draws artifact '" + path.string() + "'");
  return read_draws_binary(in);
}

void write_draws_csv(const PosteriorDraws& draws, std::ostream& out) {
  out << "chain,iter,alpha,beta,tau2,phi";
  for (std::size_t i = 0; i < draws.n_districts; ++i) out << ",s" << (i + 1);
  out << '\n';
  for (std::size_t t = 0; t < draws.size(); ++t) {
    const auto& p = draws.params[t];
    out << (t / draws.per_chain + 1) << ',' << (t % draws.per_chain + 1) << ',' << format_double(p.alpha) << ','
        << format_double(p.beta) << ',' << format_double(p.tau2) << ',' << format_double(p.phi);
    for (double s : draws.field(t)) out << ',' << format_double(s);
    out << '\n';
  }
}

}  // namespace carcheck
