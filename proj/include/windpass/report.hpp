#pragma once

// CSV and JSON outputs of trials and sweeps.
//
// CSV numbers are printed with 6 significant digits; JSON keeps full double
// precision so stored results can be re-reported exactly.

#include <cstdio>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "windpass/config.hpp"
#include "windpass/harness.hpp"

namespace windpass {

inline std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string fmt_passes(const std::optional<std::size_t>& p) { return p ? std::to_string(*p) : "none"; }

inline std::string grid_name(std::size_t n1, std::size_t n2) { return std::to_string(n1) + "x" + std::to_string(n2); }

struct PassRow {
  std::size_t pass_index = 0;
  double expected_cost = 0.0;
  double incurred_cost = 0.0;
  std::string path;
  bool is_oracle_path = false;
};

inline std::vector<PassRow> pass_rows(const TrialResult& result) {
  std::vector<PassRow> rows;
  for (const auto& p : result.passes) {
    rows.push_back(PassRow{p.pass_index, p.expected_cost, p.incurred_cost, path_string(p.path), result.is_oracle_path(p)});
  }
  return rows;
}

inline std::string passes_csv(const std::vector<PassRow>& rows) {
  std::ostringstream out;
  out << "pass_index,expected_cost,incurred_cost,path,is_oracle_path\n";
  for (const auto& r : rows) {
    out << r.pass_index << ',' << fmt6(r.expected_cost) << ',' << fmt6(r.incurred_cost) << ',' << r.path << ','
        << (r.is_oracle_path ? "true" : "false") << '\n';
  }
  return out.str();
}

inline std::string signal_csv(const std::vector<SignalTraceRow>& rows) {
  std::ostringstream out;
  out << "step,t,true_dpx2,estimated_edpx2,percent_error\n";
  for (const auto& r : rows) {
    out << r.step << ',' << fmt6(r.t) << ',' << fmt6(r.true_dpx2) << ',' << fmt6(r.edpx2) << ','
        << fmt6(r.percent_error) << '\n';
  }
  return out.str();
}

// The median is reported as "none" when more than half the seeds failed to
// converge within the pass budget.
inline std::string summary_csv(const std::vector<SummaryRow>& rows, std::size_t max_passes) {
  std::ostringstream out;
  out << "grid,case,estimator,median_passes,min_passes,max_passes,converged_fraction\n";
  for (const auto& r : rows) {
    out << grid_name(r.cell.n1, r.cell.n2) << ',' << r.cell.scenario_case << ',' << to_string(r.cell.estimator) << ','
        << (r.median_passes > static_cast<double>(max_passes) ? std::string("none") : fmt6(r.median_passes)) << ','
        << fmt_passes(r.min_passes) << ',' << fmt_passes(r.max_passes) << ',' << fmt6(r.converged_fraction) << '\n';
  }
  return out.str();
}

inline Json result_json(const TrialResult& result) {
  Json passes = Json::array();
  for (const auto& p : result.passes) {
    Json path = Json::array();
    for (VertexId v : p.path) path.push_back(GridGraph::label(v));
    passes.push_back({{"pass_index", p.pass_index},
                      {"start_step", p.start_step},
                      {"end_step", p.end_step()},
                      {"expected_cost", p.expected_cost},
                      {"incurred_cost", p.incurred_cost},
                      {"path", path}});
  }
  Json oracle_path = Json::array();
  for (VertexId v : result.oracle.vertices) oracle_path.push_back(GridGraph::label(v));
  Json j{{"scenario", scenario_json(result.config, result.field)},
         {"oracle", {{"path", oracle_path}, {"cost", result.oracle.expected_cost}}},
         {"convergence_pass", result.convergence_pass ? Json(*result.convergence_pass) : Json("none")},
         {"passes", passes},
         {"series_first_step", result.series_first_step},
         {"edpx2", result.edpx2}};
  if (!result.ok()) j["failure"] = result.failure;
  return j;
}

// What `report` needs to regenerate the CSVs of a stored trial.
struct StoredResult {
  TrialConfig config;
  WindField field;
  std::vector<PassRow> passes;
  Step series_first_step = 0;
  std::vector<double> edpx2;
};

inline StoredResult stored_result_from_json(const Json& j) {
  StoredResult out;
  try {
    auto [config, field] = scenario_from_json(j.at("scenario"));
    out.config = config;
    out.field = std::move(field);
    std::vector<std::size_t> oracle;
    for (const auto& v : j.at("oracle").at("path")) oracle.push_back(v.get<std::size_t>());
    for (const auto& p : j.at("passes")) {
      std::vector<std::size_t> labels;
      for (const auto& v : p.at("path")) labels.push_back(v.get<std::size_t>());
      std::string path;
      for (std::size_t i = 0; i < labels.size(); ++i) path += (i ? "-" : "") + std::to_string(labels[i]);
      out.passes.push_back(PassRow{p.at("pass_index").get<std::size_t>(), p.at("expected_cost").get<double>(),
                                   p.at("incurred_cost").get<double>(), path, labels == oracle});
    }
    out.series_first_step = j.at("series_first_step").get<Step>();
    out.edpx2 = j.at("edpx2").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad result file: ") + e.what());
  }
  return out;
}

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw RuntimeFailure("cannot create " + dir + ": " + ec.message());
}

inline std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

// passes.csv, plus signal.csv for time-varying cases.
inline void write_trial_csvs(const std::string& dir, const TrialConfig& config, const SignalParams& signal,
                             const std::vector<PassRow>& passes, Step series_first_step,
                             const std::vector<double>& edpx2) {
  ensure_dir(dir);
  write_text_file(join_path(dir, "passes.csv"), passes_csv(passes));
  if (config.time_varying()) {
    write_text_file(join_path(dir, "signal.csv"), signal_csv(signal_trace(signal, series_first_step, edpx2, config.dt)));
  }
}

inline void emit_reports(const TrialResult& result, const std::string& dir) {
  write_trial_csvs(dir, result.config, result.field.signal, pass_rows(result), result.series_first_step, result.edpx2);
  write_text_file(join_path(dir, "scenario.json"), scenario_json(result.config, result.field).dump(2) + "\n");
  write_text_file(join_path(dir, "result.json"), result_json(result).dump(2) + "\n");
}

inline void emit_reports(const std::vector<SummaryRow>& rows, std::size_t max_passes, const std::string& dir) {
  ensure_dir(dir);
  write_text_file(join_path(dir, "summary.csv"), summary_csv(rows, max_passes));
}

}  // namespace windpass
