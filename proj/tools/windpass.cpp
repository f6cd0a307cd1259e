// windpass: scenario synthesis, single trials, sweeps and report
// regeneration.
//
//   windpass synth  [--config FILE] [flags] [--out FILE]
//   windpass run    [--config FILE] [--scenario FILE] [flags]
//   windpass sweep  [--config FILE] [flags] --grids 5x7,7x9 --cases 1,2,3,4 --seeds 100
//   windpass report --result FILE [--output-dir DIR]
//
// Exit codes: 0 success, 1 invalid config or arguments, 2 runtime failure.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "windpass/config.hpp"
#include "windpass/harness.hpp"
#include "windpass/report.hpp"

namespace {

using namespace windpass;

// Flags mirror the config keys; only flags given on the command line
// override the file.
struct ConfigFlags {
  std::string config_file;
  std::size_t n1 = 0, n2 = 0;
  double dx1 = 0, dx2 = 0;
  int scenario_case = 0;
  std::string estimator, kf_model, freq_mode;
  double u0 = 0, w_max = 0, dt = 0, noise_variance = 0;
  std::size_t n_terms = 0, max_passes = 0, kf_modes = 0;
  std::vector<double> freq_range;
  std::uint64_t seed = 0;
  std::string output_dir;
  bool antisymmetric_updates = true, reconcile_seams = true;
  double q_large = 0, q_small = 0, q_min_periods = 0;

  std::vector<std::pair<std::string, CLI::Option*>> options;

  void attach(CLI::App& app) {
    app.add_option("--config", config_file, "JSON config file")->check(CLI::ExistingFile);
    const auto add = [&](const char* key, const std::string& flag, auto& field, const char* help) {
      options.emplace_back(key, app.add_option(flag, field, help));
    };
    add("n1", "--n1", n1, "grid columns");
    add("n2", "--n2", n2, "grid rows, boundary rows included");
    add("dx1", "--dx1", dx1, "x1 edge length (m)");
    add("dx2", "--dx2", dx2, "x2 edge length (m)");
    add("case", "--case", scenario_case, "wind case 1-4");
    add("estimator", "--estimator", estimator, "stitch | kf");
    add("kf_model", "--kf-model", kf_model, "printed | oscillator_bank");
    add("u0", "--u0", u0, "air speed (m/s)");
    add("w_max", "--w-max", w_max, "wind speed bound (m/s)");
    add("dt", "--dt", dt, "time step (s)");
    add("n_terms", "--n-terms", n_terms, "cosine terms in the gradient signal");
    add("freq_mode", "--freq-mode", freq_mode, "literal | period");
    add("freq_range", "--freq-range", freq_range, "low high");
    add("noise_variance", "--noise-variance", noise_variance, "gradient noise variance");
    add("max_passes", "--max-passes", max_passes, "pass budget");
    add("seed", "--seed", seed, "trial seed");
    add("output_dir", "--output-dir", output_dir, "output directory");
    add("antisymmetric_updates", "--antisymmetric-updates", antisymmetric_updates, "update reverse edges");
    add("reconcile_seams", "--reconcile-seams", reconcile_seams, "case 4 seam reconciliation");
    add("kf_modes", "--kf-modes", kf_modes, "Kalman filter modes");
    add("q_large", "--q-large", q_large, "early process noise");
    add("q_small", "--q-small", q_small, "settled process noise");
    add("q_min_periods", "--q-min-periods", q_min_periods, "periods before settling");
    for (auto& [key, opt] : options) {
      if (std::string(key) == "freq_range") opt->expected(2);
    }
  }

  Json overrides() const {
    Json j = Json::object();
    for (const auto& [key, opt] : options) {
      if (opt->count() == 0) continue;
      const std::string k = key;
      if (k == "n1") j[k] = n1;
      else if (k == "n2") j[k] = n2;
      else if (k == "dx1") j[k] = dx1;
      else if (k == "dx2") j[k] = dx2;
      else if (k == "case") j[k] = scenario_case;
      else if (k == "estimator") j[k] = estimator;
      else if (k == "kf_model") j[k] = kf_model;
      else if (k == "u0") j[k] = u0;
      else if (k == "w_max") j[k] = w_max;
      else if (k == "dt") j[k] = dt;
      else if (k == "n_terms") j[k] = n_terms;
      else if (k == "freq_mode") j[k] = freq_mode;
      else if (k == "freq_range") j[k] = freq_range;
      else if (k == "noise_variance") j[k] = noise_variance;
      else if (k == "max_passes") j[k] = max_passes;
      else if (k == "seed") j[k] = seed;
      else if (k == "output_dir") j[k] = output_dir;
      else if (k == "antisymmetric_updates") j[k] = antisymmetric_updates;
      else if (k == "reconcile_seams") j[k] = reconcile_seams;
      else if (k == "kf_modes") j[k] = kf_modes;
      else if (k == "q_large") j[k] = q_large;
      else if (k == "q_small") j[k] = q_small;
      else if (k == "q_min_periods") j[k] = q_min_periods;
    }
    return j;
  }

  TrialConfig resolve(TrialConfig base = {}) const {
    if (!config_file.empty()) apply_json(base, read_json_file(config_file));
    apply_json(base, overrides());
    return base;
  }
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, sep);) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::size_t parse_count(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  unsigned long v = 0;
  try {
    v = std::stoul(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw InvalidArgument("bad " + what + " '" + s + "'");
  return v;
}

// "5x7" -> (5, 7)
std::pair<std::size_t, std::size_t> parse_grid(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos) throw InvalidArgument("grid must look like 5x7, got '" + s + "'");
  return {parse_count(s.substr(0, x), "grid"), parse_count(s.substr(x + 1), "grid")};
}

void print_trial(const TrialResult& r) {
  std::printf("grid %s case %d estimator %s seed %llu: convergence_pass %s, oracle cost %s s\n",
              grid_name(r.config.n1, r.config.n2).c_str(), r.config.scenario_case,
              to_string(r.config.estimator).c_str(), static_cast<unsigned long long>(r.config.seed),
              fmt_passes(r.convergence_pass).c_str(), fmt6(r.oracle.expected_cost).c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential-pass route learning in unknown wind"};
  app.require_subcommand(1);

  ConfigFlags synth_flags, run_flags, sweep_flags;

  auto* synth = app.add_subcommand("synth", "write a replayable scenario file");
  synth_flags.attach(*synth);
  std::string synth_out;
  synth->add_option("--out", synth_out, "scenario file (default OUTPUT_DIR/scenario.json)");

  auto* run = app.add_subcommand("run", "run one trial");
  run_flags.attach(*run);
  std::string scenario_file;
  run->add_option("--scenario", scenario_file, "replay a stored scenario")->check(CLI::ExistingFile);

  auto* sweep = app.add_subcommand("sweep", "run seeds 1..N for each grid and case");
  sweep_flags.attach(*sweep);
  std::string grids = "5x7", cases = "1,2,3,4";
  std::size_t seeds = 100;
  sweep->add_option("--grids", grids, "comma-separated grids, e.g. 5x7,7x9");
  sweep->add_option("--cases", cases, "comma-separated cases");
  sweep->add_option("--seeds", seeds, "seeds per cell");

  auto* report = app.add_subcommand("report", "regenerate CSVs from a stored result.json");
  std::string result_file, report_dir;
  report->add_option("--result", result_file, "result.json from run")->required()->check(CLI::ExistingFile);
  report->add_option("--output-dir", report_dir, "output directory (default: the result's directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) {
      const TrialConfig config = synth_flags.resolve();
      config.validate();
      const WindField field = build_scenario(config);
      const std::string path = synth_out.empty() ? join_path(config.output_dir, "scenario.json") : synth_out;
      if (synth_out.empty()) ensure_dir(config.output_dir);
      write_text_file(path, scenario_json(config, field).dump(2) + "\n");
      std::printf("wrote %s\n", path.c_str());
      return 0;
    }
    if (run->parsed()) {
      TrialResult result;
      if (!scenario_file.empty()) {
        auto [stored, field] = scenario_from_json(read_json_file(scenario_file));
        const TrialConfig config = run_flags.resolve(stored);
        config.validate();
        result = run_trial(config, std::move(field));
      } else {
        const TrialConfig config = run_flags.resolve();
        config.validate();
        result = run_trial(config);
      }
      emit_reports(result, result.config.output_dir);
      if (!result.ok()) {
        std::fprintf(stderr, "trial failed: %s\n", result.failure.c_str());
        return 2;
      }
      print_trial(result);
      return 0;
    }
    if (sweep->parsed()) {
      const TrialConfig base = sweep_flags.resolve();
      base.validate();
      std::vector<SweepCell> cells;
      for (const auto& g : split(grids, ',')) {
        const auto [n1, n2] = parse_grid(g);
        for (const auto& c : split(cases, ',')) {
          SweepCell cell{n1, n2, static_cast<int>(parse_count(c, "case")), base.estimator};
          TrialConfig probe = base;
          probe.n1 = n1;
          probe.n2 = n2;
          probe.scenario_case = cell.scenario_case;
          probe.validate();
          cells.push_back(cell);
        }
      }
      const auto rows = run_sweep(base, cells, seeds);
      emit_reports(rows, base.max_passes, base.output_dir);
      std::fputs(summary_csv(rows, base.max_passes).c_str(), stdout);
      for (const auto& row : rows) {
        if (row.failures > 0) {
          std::fprintf(stderr, "%zu trial(s) failed in grid %s case %d\n", row.failures,
                       grid_name(row.cell.n1, row.cell.n2).c_str(), row.cell.scenario_case);
          return 2;
        }
      }
      return 0;
    }
    if (report->parsed()) {
      const StoredResult stored = stored_result_from_json(read_json_file(result_file));
      const std::string dir =
          report_dir.empty() ? std::filesystem::path(result_file).parent_path().string() : report_dir;
      write_trial_csvs(dir.empty() ? "." : dir, stored.config, stored.field.signal, stored.passes,
                       stored.series_first_step, stored.edpx2);
      std::printf("wrote reports to %s\n", dir.empty() ? "." : dir.c_str());
      return 0;
    }
  } catch (const InvalidArgument& e) {
    std::fprintf(stderr, "invalid: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
