#include "carcheck/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "carcheck/car.hpp"
#include "carcheck/data.hpp"
#include "carcheck/diagnostics.hpp"
#include "carcheck/draws_io.hpp"
#include "carcheck/error.hpp"
#include "carcheck/eval.hpp"
#include "carcheck/format.hpp"
#include "carcheck/mcmc.hpp"
#include "carcheck/poisson.hpp"
#include "carcheck/pvalues.hpp"
#include "carcheck/report.hpp"
#include "json.hpp"

namespace carcheck::cli {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

struct CommandOutput {
  std::vector<std::string> artifacts;           // reproducible byte for byte
  std::vector<std::string> volatile_artifacts;  // wall-clock measurements
  std::vector<std::string> notes;
};

struct Context {
  const RunOptions& options;
  fs::path out_dir;
  std::ostream& out;
  std::ostream& err;
  SpatialDataset dataset;
  CarStructure car;
  CommandOutput result;

  void write(const std::string& name, const std::string& content, bool is_volatile = false) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    const fs::path path = out_dir / name;
    std::ofstream file(path, std::ios::binary);
    file << content;
    if (!file) throw ConfigError("cannot write " + path.string());
    (is_volatile ? result.volatile_artifacts : result.artifacts).push_back(name);
  }

  void warn(const std::string& message) {
    err << "warning: " << message << '\n';
    result.notes.push_back(message);
  }

  [[nodiscard]] bool json() const { return options.format == "json"; }
  [[nodiscard]] std::string ext() const { return json() ? ".json" : ".csv"; }
};

SpatialDataset load_data(const RunOptions& o) {
  return o.data.empty() ? bundled_dataset() : load_dataset(o.data);
}

McmcConfig mcmc_config(const RunOptions& o) {
  McmcConfig config;
  config.n_chains = o.chains;
  config.iterations = o.iterations;
  config.burn_in = o.burn_in;
  config.thin = o.thin;
  config.seed = o.seed;
  config.threads = o.threads;
  if (o.holdout != 0) config.holdout.district = o.holdout;
  config.validate();
  return config;
}

PValueOptions pvalue_options(const RunOptions& o) {
  PValueOptions p;
  p.iis_draws = o.k;
  p.ghost_draws = o.ghost_k;
  p.seed = o.reps_seed;
  p.shared_streams = o.shared_streams;
  p.threads = o.threads;
  return p;
}

std::vector<Method> selected_methods(const RunOptions& o, bool allow_loocv) {
  std::vector<Method> methods;
  if (o.method == "all") {
    for (Method m : kAllMethods) {
      if (allow_loocv || m != Method::loocv) methods.push_back(m);
    }
    return methods;
  }
  const auto m = parse_method(o.method);
  if (!m) throw ConfigError("unknown method '" + o.method + "' (expected post, nis, ghost, iis, loocv or all)");
  if (*m == Method::loocv && !allow_loocv) throw ConfigError("loocv is the reference here; choose another method");
  methods.push_back(*m);
  return methods;
}

void check_options(const RunOptions& o, std::size_t n) {
  if (o.k == 0) throw ConfigError("--K must be positive");
  if (o.ghost_k == 0) throw ConfigError("--ghost-K must be positive");
  if (o.threads == 0) throw ConfigError("--threads must be positive");
  if (o.holdout != 0) {
    if (o.command != "fit") throw ConfigError("--holdout applies to fit only");
    if (o.holdout < 1 || static_cast<std::size_t>(o.holdout) > n) {
      throw ConfigError("--holdout " + std::to_string(o.holdout) + " is outside 1.." + std::to_string(n));
    }
  }
}

PosteriorDraws full_draws(Context& ctx, const McmcConfig& config) {
  if (ctx.options.draws.empty()) {
    auto draws = run_mcmc(ctx.dataset, ctx.car, config);
    for (const auto& w : draws.warnings) ctx.warn(w);
    return draws;
  }
  auto draws = load_draws(ctx.options.draws);
  if (draws.n_districts != ctx.dataset.size()) {
    throw DataError(ctx.options.draws + ": draws cover " + std::to_string(draws.n_districts) +
                    " districts, dataset has " + std::to_string(ctx.dataset.size()));
  }
  if (draws.holdout.active()) throw ConfigError(ctx.options.draws + ": holdout draws cannot serve full-data methods");
  return draws;
}

std::string table_cell(const std::optional<double>& v) {
  if (!v) return "-";
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << *v;
  return s.str();
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

// ---- fit -------------------------------------------------------------------

void cmd_fit(Context& ctx) {
  const auto config = mcmc_config(ctx.options);
  const auto draws = run_mcmc(ctx.dataset, ctx.car, config);
  for (const auto& w : draws.warnings) ctx.warn(w);
  const auto diag = diagnostics(draws);

  if (ctx.json()) {
    Json rows = Json::array();
    for (const auto& q : diag) {
      Json row;
      row["quantity"] = q.name;
      row["r_hat"] = q.r_hat ? Json(*q.r_hat) : Json(nullptr);
      row["ess"] = q.ess;
      row["mean"] = q.mean;
      row["sd"] = q.sd;
      rows.push_back(std::move(row));
    }
    ctx.write("diagnostics.json", rows.dump(2) + "\n");
  } else {
    std::ostringstream s;
    write_diagnostics_csv(s, diag);
    ctx.write("diagnostics.csv", s.str());
  }
  if (ctx.options.dump_draws) {
    std::ostringstream s(std::ios::binary);
    write_draws_binary(draws, s);
    ctx.write("fit_draws.bin", s.str());
  }
  if (ctx.options.draws_csv) {
    std::ostringstream s;
    write_draws_csv(draws, s);
    ctx.write("fit_draws.csv", s.str());
  }

  ctx.out << "draws: " << draws.size() << " (" << draws.n_chains << " chains x " << draws.per_chain << ")";
  if (config.holdout.active()) ctx.out << ", district " << *config.holdout.district << " held out";
  ctx.out << "\n" << std::left << std::setw(8) << "param" << std::setw(10) << "r_hat" << std::setw(10) << "ess"
          << std::setw(12) << "mean" << "sd\n";
  for (std::size_t q = 0; q < 4 && q < diag.size(); ++q) {
    ctx.out << std::setw(8) << diag[q].name << std::setw(10) << table_cell(diag[q].r_hat) << std::setw(10)
            << fixed(diag[q].ess, 0) << std::setw(12) << fixed(diag[q].mean, 4) << fixed(diag[q].sd, 4) << '\n';
  }
  std::size_t unconverged = 0;
  for (const auto& q : diag) unconverged += (q.r_hat && *q.r_hat >= 1.05) ? 1 : 0;
  if (unconverged > 0) ctx.warn(std::to_string(unconverged) + " quantities have split R-hat >= 1.05");
}

// ---- pvalues ---------------------------------------------------------------

std::vector<PValueVector> compute_pvalues(Context& ctx, std::span<const Method> methods) {
  const auto config = mcmc_config(ctx.options);
  const auto popts = pvalue_options(ctx.options);
  std::optional<PosteriorDraws> draws;
  std::vector<PValueVector> results;
  for (Method m : methods) {
    if (m == Method::loocv) {
      results.push_back(loocv_pvalues(ctx.dataset, ctx.car, config));
      continue;
    }
    if (!draws) draws = full_draws(ctx, config);
    results.push_back(compute_method(m, *draws, ctx.car, ctx.dataset, popts));
  }
  return results;
}

void cmd_pvalues(Context& ctx) {
  const auto methods = selected_methods(ctx.options, true);
  const auto results = compute_pvalues(ctx, methods);
  if (ctx.json()) {
    ctx.write("pvalues.json", pvalues_json(results));
  } else {
    std::ostringstream s;
    write_pvalues_csv(s, results);
    ctx.write("pvalues.csv", s.str());
  }
  ctx.out << std::left << std::setw(10) << "district";
  for (const auto& r : results) ctx.out << std::setw(8) << method_label(r.method);
  ctx.out << '\n';
  for (std::size_t i = 0; i < ctx.dataset.size(); ++i) {
    ctx.out << std::setw(10) << i + 1;
    for (const auto& r : results) ctx.out << std::setw(8) << fixed(r.values[i], 3);
    ctx.out << '\n';
  }
}

// ---- compare ---------------------------------------------------------------

std::vector<PValueVector> read_pvalue_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return read_pvalues_csv(in, path);
}

PValueVector reference_vector(Context& ctx) {
  const auto& o = ctx.options;
  if (o.reference.empty()) {
    throw ConfigError(
        "compare needs an actual LOOCV reference: run `carcheck pvalues --method loocv` and pass the resulting "
        "pvalues.csv with --reference");
  }
  auto vectors = read_pvalue_file(o.reference);
  auto it = std::find_if(vectors.begin(), vectors.end(), [](const auto& v) { return v.method == Method::loocv; });
  if (it == vectors.end()) {
    if (vectors.size() != 1) throw DataError(o.reference + ": no loocv column among several methods");
    it = vectors.begin();
  }
  PValueVector ref = std::move(*it);
  if (ref.size() != ctx.dataset.size()) throw DataError(o.reference + ": reference does not match the dataset size");
  const auto config = reference_config(mcmc_config(o));
  ref.draw_count = o.reference_draws != 0 ? o.reference_draws : config.n_chains * config.draws_per_chain();
  return ref;
}

void write_relerr(Context& ctx, std::span<const RelErrorSummary> rows) {
  if (ctx.json()) {
    Json doc = Json::array();
    for (const auto& r : rows) {
      doc.push_back({{"method", std::string(method_label(r.method))},
                     {"mean_rel_error", r.mean_rel_error},
                     {"sd_rel_error", r.sd_rel_error ? Json(*r.sd_rel_error) : Json(nullptr)},
                     {"n_reps", r.n_reps}});
    }
    ctx.write("relerr.json", doc.dump(2) + "\n");
  } else {
    std::ostringstream s;
    write_relerr_csv(s, rows);
    ctx.write("relerr.csv", s.str());
  }
  ctx.out << std::left << std::setw(8) << "method" << std::setw(16) << "mean_rel_error" << std::setw(14)
          << "sd_rel_error" << "n_reps\n";
  for (const auto& r : rows) {
    ctx.out << std::setw(8) << method_label(r.method) << std::setw(16) << fixed(r.mean_rel_error, 3) << std::setw(14)
            << (r.sd_rel_error ? fixed(*r.sd_rel_error, 3) : std::string("-")) << r.n_reps << '\n';
  }
}

void cmd_compare(Context& ctx) {
  const auto& o = ctx.options;
  const auto reference = reference_vector(ctx);

  if (o.reps > 0) {
    ReplicationOptions ropts;
    ropts.n_reps = o.reps;
    ropts.methods = selected_methods(o, false);
    ropts.pvalues = pvalue_options(o);
    ropts.threads = o.threads;
    const auto study = replication_study(ctx.dataset, ctx.car, mcmc_config(o), reference, ropts);
    for (const auto& w : study.warnings) ctx.warn(w);
    write_relerr(ctx, study.summaries);
    return;
  }

  std::vector<PValueVector> estimates;
  if (!o.estimates.empty()) {
    estimates = read_pvalue_file(o.estimates);
  } else {
    const auto methods = selected_methods(o, false);
    estimates = compute_pvalues(ctx, methods);
  }
  std::vector<RelErrorSummary> rows;
  for (const auto& est : estimates) {
    if (est.size() != reference.size()) throw DataError("estimates do not match the reference size");
    const auto err = relative_error(est, reference);
    for (const auto& w : err.warnings) ctx.warn(w);
    rows.push_back({est.method, err.value, std::nullopt, 1});
    std::ostringstream s;
    write_scatter_csv(s, reference, est);
    ctx.write("scatter_" + std::string(method_label(est.method)) + ".csv", s.str());
  }
  write_relerr(ctx, rows);
}

// ---- pmf -------------------------------------------------------------------

std::vector<int> parse_grid(const std::string& text) {
  const auto dots = text.find("..");
  auto parse = [&](std::string_view part) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (part.empty() || ec != std::errc{} || ptr != part.data() + part.size()) {
      throw ConfigError("--grid expects a..b with integers a <= b, got '" + text + "'");
    }
    return v;
  };
  if (dots == std::string::npos) throw ConfigError("--grid expects a..b, got '" + text + "'");
  const int lo = parse(std::string_view(text).substr(0, dots));
  const int hi = parse(std::string_view(text).substr(dots + 2));
  if (lo < 0 || hi < lo) throw ConfigError("--grid expects 0 <= a <= b, got '" + text + "'");
  std::vector<int> grid;
  for (int y = lo; y <= hi; ++y) grid.push_back(y);
  return grid;
}

void cmd_pmf(Context& ctx) {
  const auto& o = ctx.options;
  const std::size_t n = ctx.dataset.size();
  if (o.district < 1 || static_cast<std::size_t>(o.district) > n) {
    throw ConfigError("--district " + std::to_string(o.district) + " is outside 1.." + std::to_string(n));
  }
  const auto i = static_cast<std::size_t>(o.district - 1);
  const auto grid = parse_grid(o.grid);
  const auto config = mcmc_config(o);
  const auto full = full_draws(ctx, config);
  const auto holdout = run_mcmc(ctx.dataset, ctx.car, fold_config(config, i));
  for (const auto& w : holdout.warnings) ctx.warn(w);

  const auto pmf_full = predictive_pmf(full, ctx.dataset, i, grid);
  const auto pmf_loocv = predictive_pmf(holdout, ctx.dataset, i, grid);
  const int y_obs = ctx.dataset.counts()[i];
  const double p_full = posterior_check(full, ctx.dataset).values[i];
  const double p_loocv = loocv_fold_pvalue(holdout, ctx.dataset);

  const std::string name = "pmf_district" + std::to_string(o.district);
  if (ctx.json()) {
    Json doc;
    doc["district"] = o.district;
    doc["observed_y"] = y_obs;
    doc["y"] = grid;
    doc["pmf_full"] = pmf_full;
    doc["pmf_loocv"] = pmf_loocv;
    ctx.write(name + ".json", doc.dump(2) + "\n");
  } else {
    std::ostringstream s;
    write_pmf_csv(s, grid, pmf_full, pmf_loocv);
    ctx.write(name + ".csv", s.str());
  }
  ctx.result.notes.push_back("observed_y=" + std::to_string(y_obs));
  ctx.result.notes.push_back("mid_p_full=" + format_double(p_full));
  ctx.result.notes.push_back("mid_p_loocv=" + format_double(p_loocv));
  ctx.out << "district " << o.district << ": observed y = " << y_obs << ", mid-p full = " << fixed(p_full, 3)
          << ", mid-p loocv = " << fixed(p_loocv, 3) << '\n';
}

// ---- timing ----------------------------------------------------------------

void cmd_timing(Context& ctx) {
  const auto config = mcmc_config(ctx.options);
  const auto popts = pvalue_options(ctx.options);
  std::vector<RunRecord> records;

  Stopwatch fit_clock;
  const auto draws = run_mcmc(ctx.dataset, ctx.car, config);
  const double fit_seconds = fit_clock.seconds();
  for (const auto& w : draws.warnings) ctx.warn(w);

  LoocvTiming loocv;
  loocv_pvalues(ctx.dataset, ctx.car, config, &loocv);
  records.push_back({Method::loocv, RunRecord::Phase::mcmc, loocv.mcmc_seconds});
  records.push_back({Method::loocv, RunRecord::Phase::pvalues, loocv.pvalue_seconds});

  for (Method m : {Method::iis, Method::nis, Method::ghost, Method::posterior_check}) {
    records.push_back({m, RunRecord::Phase::mcmc, fit_seconds});
    Stopwatch clock;
    compute_method(m, draws, ctx.car, ctx.dataset, popts);
    records.push_back({m, RunRecord::Phase::pvalues, clock.seconds()});
  }
  const auto report = timing_report(records);
  if (ctx.json()) {
    ctx.write("timing.json", timing_json(report), true);
  } else {
    std::ostringstream s;
    write_timing_csv(s, report);
    ctx.write("timing.csv", s.str(), true);
  }

  ctx.out << std::left << std::setw(20) << "";
  for (const auto& [m, t] : report.rows) ctx.out << std::setw(10) << method_label(m);
  ctx.out << '\n';
  auto row = [&](const char* label, auto get) {
    ctx.out << std::setw(20) << label;
    for (const auto& [m, t] : report.rows) ctx.out << std::setw(10) << fixed(get(t), 2);
    ctx.out << '\n';
  };
  row("MCMC simulations", [](const PhaseTimes& t) { return t.mcmc_simulations; });
  row("Computing p-values", [](const PhaseTimes& t) { return t.computing_pvalues; });
  row("Total", [](const PhaseTimes& t) { return t.total(); });
  const double iis = report.find(Method::iis)->computing_pvalues;
  ctx.out << "loocv mcmc / single fit = " << fixed(loocv.mcmc_seconds / fit_seconds, 2) << '\n'
          << "iis p-values / single fit = " << fixed(iis / fit_seconds, 2) << '\n';
}

// ---- dispatch ----------------------------------------------------------------

CommandOutput execute(const RunOptions& o, const fs::path& out_dir, std::ostream& out, std::ostream& err,
                      const std::string& expected_checksum = {}) {
  if (o.format != "csv" && o.format != "json") throw ConfigError("--format must be csv or json");
  auto dataset = load_data(o);
  const std::string checksum = hex64(dataset_checksum(dataset));
  if (!expected_checksum.empty() && checksum != expected_checksum) {
    throw DataError("dataset checksum " + checksum + " differs from the manifest's " + expected_checksum);
  }
  check_options(o, dataset.size());
  auto car = build_car(dataset);
  Context ctx{o, out_dir, out, err, std::move(dataset), std::move(car), {}};

  if (o.command == "fit") {
    cmd_fit(ctx);
  } else if (o.command == "pvalues") {
    cmd_pvalues(ctx);
  } else if (o.command == "compare") {
    cmd_compare(ctx);
  } else if (o.command == "pmf") {
    cmd_pmf(ctx);
  } else if (o.command == "timing") {
    cmd_timing(ctx);
  } else {
    throw ConfigError("unknown command '" + o.command + "'");
  }

  const std::string manifest_name = o.command + "_manifest.json";
  std::ofstream manifest(out_dir / manifest_name, std::ios::binary);
  manifest << manifest_json(o, checksum, ctx.result.artifacts, ctx.result.volatile_artifacts, ctx.result.notes);
  if (!manifest) throw ConfigError("cannot write " + (out_dir / manifest_name).string());
  for (const auto& a : ctx.result.artifacts) out << "wrote " << (out_dir / a).string() << '\n';
  for (const auto& a : ctx.result.volatile_artifacts) out << "wrote " << (out_dir / a).string() << '\n';
  out << "wrote " << (out_dir / manifest_name).string() << '\n';
  return ctx.result;
}

void add_run_options(CLI::App* app, RunOptions& o) {
  app->add_option("--data", o.data, "District CSV (default: bundled Scotland data)");
  app->add_option("--seed", o.seed, "Master seed for the samplers");
  app->add_option("--chains", o.chains, "Number of chains");
  app->add_option("--iterations", o.iterations, "Iterations per chain, burn-in included");
  app->add_option("--burn-in", o.burn_in, "Burn-in iterations per chain");
  app->add_option("--thin", o.thin, "Keep every thin-th draw after burn-in");
  app->add_option("--threads", o.threads, "Worker threads")->envname("CARCHECK_THREADS");
  app->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  app->add_option("--draws", o.draws, "Reuse a fit_draws.bin artifact instead of refitting");
  app->add_option("--K", o.k, "Inner draws per posterior draw for iis");
  app->add_option("--ghost-K", o.ghost_k, "Inner draws per posterior draw for ghosting");
  app->add_option("--reps-seed", o.reps_seed, "Seed of the inner regeneration streams");
  app->add_flag("--shared-streams", o.shared_streams, "Estimate A and P from the same inner draws (default)");
  app->add_flag("--iis-independent-streams{false}", o.shared_streams,
                "Estimate P from an independent inner stream");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Predictive p-values for a Poisson disease-mapping model with a proper CAR prior", "carcheck"};
  app.require_subcommand(1);
  RunOptions o;
  std::string out_dir = ".";
  std::string manifest_path;

  auto* fit = app.add_subcommand("fit", "Fit the model and report convergence diagnostics");
  auto* pvalues = app.add_subcommand("pvalues", "Per-district predictive mid-p-values");
  auto* compare = app.add_subcommand("compare", "Relative error against an actual LOOCV reference");
  auto* pmf = app.add_subcommand("pmf", "Full-data and holdout predictive mass functions of one district");
  auto* timing = app.add_subcommand("timing", "Wall-clock time of each method's phases");
  auto* replay = app.add_subcommand("replay", "Re-run a command from its manifest");

  for (auto* sub : {fit, pvalues, compare, pmf, timing}) {
    add_run_options(sub, o);
    sub->add_option("--out-dir", out_dir, "Directory for outputs");
  }
  fit->add_option("--holdout", o.holdout, "Omit the likelihood of this district (1-based)");
  fit->add_flag("--dump-draws", o.dump_draws, "Write the binary draw artifact fit_draws.bin");
  fit->add_flag("--draws-csv", o.draws_csv, "Write the draws as fit_draws.csv");
  for (auto* sub : {pvalues, compare}) sub->add_option("--method", o.method, "post, nis, ghost, iis, loocv or all");
  compare->add_option("--reference", o.reference, "LOOCV p-value CSV from `pvalues --method loocv`");
  compare->add_option("--estimates", o.estimates, "P-value CSV to score instead of computing estimates");
  compare->add_option("--reference-draws", o.reference_draws, "Draw count behind the reference");
  compare->add_option("--reps", o.reps, "Independent replications of the full-data fit");
  pmf->add_option("--district", o.district, "District (1-based)");
  pmf->add_option("--grid", o.grid, "Count grid a..b");
  replay->add_option("manifest", manifest_path, "A *_manifest.json file")->required();
  replay->add_option("--out-dir", out_dir, "Directory for outputs (default: the manifest's directory)");

  std::vector<const char*> argv{"carcheck"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (replay->parsed()) {
      std::ifstream in(manifest_path, std::ios::binary);
      if (!in) throw ConfigError("cannot open manifest " + manifest_path);
      const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      std::string checksum;
      const RunOptions replayed = options_from_manifest(text, &checksum);
      if (replay->count("--out-dir") == 0) out_dir = fs::path(manifest_path).parent_path().string();
      if (out_dir.empty()) out_dir = ".";
      execute(replayed, out_dir, out, err, checksum);
      return kOk;
    }
    o.command = app.get_subcommands().front()->get_name();
    execute(o, out_dir, out, err);
    return kOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kConfig;
  }
}

}  // namespace carcheck::cli
