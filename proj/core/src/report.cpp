#include "carcheck/report.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "carcheck/error.hpp"
#include "carcheck/format.hpp"

namespace carcheck {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double(const std::string& text, const std::string& where) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end) throw DataError(where + ": not a number: '" + text + "'");
  return v;
}

}  // namespace

void write_pvalues_csv(std::ostream& out, std::span<const PValueVector> results) {
  out << "district,method,pvalue,mc_se\n";
  for (const auto& r : results) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      out << i + 1 << ',' << method_label(r.method) << ',' << format_double(r.values[i]) << ','
          << format_double(i < r.mc_se.size() ? r.mc_se[i] : 0.0) << '\n';
    }
  }
}

std::string pvalues_json(std::span<const PValueVector> results) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& r : results) {
    nlohmann::ordered_json entry;
    entry["method"] = std::string(method_label(r.method));
    entry["draw_count"] = r.draw_count;
    entry["inner_draws"] = r.mc.inner_draws;
    entry["inner_seed"] = r.mc.seed;
    entry["shared_streams"] = r.mc.shared_streams;
    entry["pvalue"] = r.values;
    entry["mc_se"] = r.mc_se;
    doc.push_back(std::move(entry));
  }
  return doc.dump(2) + "\n";
}

std::vector<PValueVector> read_pvalues_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line) || line != "district,method,pvalue,mc_se") {
    throw DataError(source + ": expected header district,method,pvalue,mc_se");
  }
  std::vector<PValueVector> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    const auto cells = split_csv_line(line);
    if (cells.size() != 4) throw DataError(where + ": expected 4 fields");
    const auto method = parse_method(cells[1]);
    if (!method) throw DataError(where + ": unknown method '" + cells[1] + "'");
    if (out.empty() || out.back().method != *method) {
      out.emplace_back();
      out.back().method = *method;
    }
    auto& vec = out.back();
    const double district = parse_double(cells[0], where);
    if (district != static_cast<double>(vec.size() + 1)) {
      throw DataError(where + ": districts of method '" + cells[1] + "' must run 1..n in order");
    }
    vec.values.push_back(parse_double(cells[2], where));
    vec.mc_se.push_back(parse_double(cells[3], where));
  }
  if (out.empty()) throw DataError(source + ": no p-values");
  return out;
}

void write_pmf_csv(std::ostream& out, std::span<const int> y_grid, std::span<const double> pmf_full,
                   std::span<const double> pmf_loocv) {
  out << "y,pmf_full,pmf_loocv\n";
  for (std::size_t k = 0; k < y_grid.size(); ++k) {
    out << y_grid[k] << ',' << format_double(pmf_full[k]) << ',' << format_double(pmf_loocv[k]) << '\n';
  }
}

void write_diagnostics_csv(std::ostream& out, std::span<const QuantityDiagnostics> rows) {
  out << "quantity,r_hat,ess,mean,sd\n";
  for (const auto& q : rows) {
    out << q.name << ',' << (q.r_hat ? format_double(*q.r_hat) : std::string()) << ',' << format_double(q.ess) << ','
        << format_double(q.mean) << ',' << format_double(q.sd) << '\n';
  }
}

void write_relerr_csv(std::ostream& out, std::span<const RelErrorSummary> rows) {
  out << "method,mean_rel_error,sd_rel_error,n_reps\n";
  for (const auto& r : rows) {
    out << method_label(r.method) << ',' << format_double(r.mean_rel_error) << ','
        << (r.sd_rel_error ? format_double(*r.sd_rel_error) : std::string()) << ',' << r.n_reps << '\n';
  }
}

void write_scatter_csv(std::ostream& out, const PValueVector& reference, const PValueVector& estimate) {
  if (estimate.size() != reference.size()) throw ConfigError("scatter columns differ in length");
  out << "district,loocv_pvalue,method_pvalue\n";
  for (std::size_t i = 0; i < reference.size(); ++i) {
    out << i + 1 << ',' << format_double(reference.values[i]) << ',' << format_double(estimate.values[i]) << '\n';
  }
}

void write_timing_csv(std::ostream& out, const TimingReport& report) {
  out << "phase";
  for (const auto& [m, t] : report.rows) out << ',' << method_label(m);
  out << '\n';
  auto row = [&](const char* label, auto get) {
    out << label;
    for (const auto& [m, t] : report.rows) out << ',' << format_double(get(t));
    out << '\n';
  };
  row("MCMC simulations", [](const PhaseTimes& t) { return t.mcmc_simulations; });
  row("Computing p-values", [](const PhaseTimes& t) { return t.computing_pvalues; });
  row("Total", [](const PhaseTimes& t) { return t.total(); });
}

std::string timing_json(const TimingReport& report) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  for (const auto& [m, t] : report.rows) {
    doc[std::string(method_label(m))] = {
        {"mcmc_simulations", t.mcmc_simulations}, {"computing_pvalues", t.computing_pvalues}, {"total", t.total()}};
  }
  return doc.dump(2) + "\n";
}

}  // namespace carcheck
