#pragma once

// TrialConfig and scenario (de)serialization as JSON.
//
// Config files are flat objects with the TrialConfig field names; missing
// keys keep their defaults and unknown keys are rejected. Scenario files
// carry the resistances, coefficients and signal at full double precision so
// a stored trial replays exactly.

#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "windpass/error.hpp"
#include "windpass/harness.hpp"

namespace windpass {

using Json = nlohmann::ordered_json;

inline std::string to_string(EstimatorKind kind) { return kind == EstimatorKind::Kalman ? "kf" : "stitch"; }
inline std::string to_string(KfModel model) { return model == KfModel::Printed ? "printed" : "oscillator_bank"; }
inline std::string to_string(FrequencyMode mode) { return mode == FrequencyMode::Literal ? "literal" : "period"; }

inline EstimatorKind parse_estimator(const std::string& s) {
  if (s == "stitch") return EstimatorKind::Stitch;
  if (s == "kf") return EstimatorKind::Kalman;
  throw InvalidArgument("estimator must be stitch or kf, got '" + s + "'");
}

inline KfModel parse_kf_model(const std::string& s) {
  if (s == "printed") return KfModel::Printed;
  if (s == "oscillator_bank") return KfModel::OscillatorBank;
  throw InvalidArgument("kf_model must be printed or oscillator_bank, got '" + s + "'");
}

inline FrequencyMode parse_freq_mode(const std::string& s) {
  if (s == "period") return FrequencyMode::Period;
  if (s == "literal") return FrequencyMode::Literal;
  throw InvalidArgument("freq_mode must be literal or period, got '" + s + "'");
}

inline Json to_json(const TrialConfig& c) {
  return Json{{"n1", c.n1},
              {"n2", c.n2},
              {"dx1", c.dx1},
              {"dx2", c.dx2},
              {"case", c.scenario_case},
              {"estimator", to_string(c.estimator)},
              {"kf_model", to_string(c.kf_model)},
              {"u0", c.u0},
              {"w_max", c.w_max},
              {"dt", c.dt},
              {"n_terms", c.n_terms},
              {"freq_mode", to_string(c.freq_mode)},
              {"freq_range", {c.freq_range.low, c.freq_range.high}},
              {"noise_variance", c.noise_variance},
              {"max_passes", c.max_passes},
              {"seed", c.seed},
              {"output_dir", c.output_dir},
              {"antisymmetric_updates", c.antisymmetric_updates},
              {"reconcile_seams", c.reconcile_seams},
              {"kf_modes", c.kf_modes},
              {"q_large", c.q_schedule.large},
              {"q_small", c.q_schedule.small},
              {"q_min_periods", c.q_schedule.min_periods}};
}

// Overlays the keys present in `j` onto `c`.
inline void apply_json(TrialConfig& c, const Json& j) {
  if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
  static const std::set<std::string> known{
      "n1",        "n2",        "dx1",         "dx2",        "case",           "estimator",
      "kf_model",  "u0",        "w_max",       "dt",         "n_terms",        "freq_mode",
      "freq_range", "noise_variance", "max_passes", "seed",   "output_dir",     "antisymmetric_updates",
      "reconcile_seams", "kf_modes", "q_large", "q_small",   "q_min_periods"};
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) throw InvalidArgument("unknown config key '" + item.key() + "'");
  }
  try {
    const auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
    };
    get("n1", c.n1);
    get("n2", c.n2);
    get("dx1", c.dx1);
    get("dx2", c.dx2);
    get("case", c.scenario_case);
    if (j.contains("estimator")) c.estimator = parse_estimator(j.at("estimator").get<std::string>());
    if (j.contains("kf_model")) c.kf_model = parse_kf_model(j.at("kf_model").get<std::string>());
    get("u0", c.u0);
    get("w_max", c.w_max);
    get("dt", c.dt);
    get("n_terms", c.n_terms);
    if (j.contains("freq_mode")) c.freq_mode = parse_freq_mode(j.at("freq_mode").get<std::string>());
    if (j.contains("freq_range")) {
      const auto& r = j.at("freq_range");
      if (!r.is_array() || r.size() != 2) throw InvalidArgument("freq_range must be [low, high]");
      c.freq_range = FrequencyRange{r[0].get<double>(), r[1].get<double>()};
    }
    get("noise_variance", c.noise_variance);
    get("max_passes", c.max_passes);
    get("seed", c.seed);
    get("output_dir", c.output_dir);
    get("antisymmetric_updates", c.antisymmetric_updates);
    get("reconcile_seams", c.reconcile_seams);
    get("kf_modes", c.kf_modes);
    get("q_large", c.q_schedule.large);
    get("q_small", c.q_schedule.small);
    get("q_min_periods", c.q_schedule.min_periods);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad config value: ") + e.what());
  }
}

inline TrialConfig config_from_json(const Json& j) {
  TrialConfig c;
  apply_json(c, j);
  return c;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write " + path);
  out << text;
  if (!out) throw RuntimeFailure("write failed for " + path);
}

inline Json to_json(const SignalParams& s) {
  Json terms = Json::array();
  for (const auto& t : s.terms) terms.push_back({{"a", t.amplitude}, {"b", t.frequency}, {"c", t.phase}});
  return Json{{"d0", s.d0}, {"noise_variance", s.noise_variance}, {"terms", terms}};
}

inline SignalParams signal_from_json(const Json& j) {
  SignalParams s;
  s.d0 = j.at("d0").get<double>();
  s.noise_variance = j.at("noise_variance").get<double>();
  for (const auto& t : j.at("terms")) {
    s.terms.push_back(CosineTerm{t.at("a").get<double>(), t.at("b").get<double>(), t.at("c").get<double>()});
  }
  return s;
}

// Edges listed by 1-based endpoint labels, one entry per directed edge.
inline Json scenario_json(const TrialConfig& config, const WindField& field) {
  const GridGraph& graph = *field.graph;
  Json edges = Json::array();
  for (EdgeId id = 0; id < graph.edge_count(); ++id) {
    const Edge& e = graph.edge(id);
    edges.push_back({{"from", GridGraph::label(e.from)},
                     {"to", GridGraph::label(e.to)},
                     {"resistance", field.resistance[id]},
                     {"coeff", field.coeff[id]}});
  }
  return Json{{"config", to_json(config)},
              {"w_max", field.w_max},
              {"start", GridGraph::label(graph.start())},
              {"goal", GridGraph::label(graph.goal())},
              {"signal", to_json(field.signal)},
              {"edges", edges}};
}

// Rebuilds the stored field exactly; the coefficients are taken as stored
// rather than re-solved.
inline std::pair<TrialConfig, WindField> scenario_from_json(const Json& j) {
  try {
    TrialConfig config = config_from_json(j.at("config"));
    auto graph = std::make_shared<const GridGraph>(config.n1, config.n2, config.dx1, config.dx2);
    const auto& edges = j.at("edges");
    if (edges.size() != graph->edge_count()) throw InvalidArgument("scenario edge count does not match the grid");
    WindField field;
    field.resistance.assign(graph->edge_count(), 0.0);
    field.coeff.assign(graph->edge_count(), 0.0);
    for (const auto& e : edges) {
      const auto from = e.at("from").get<std::size_t>();
      const auto to = e.at("to").get<std::size_t>();
      if (from < 1 || to < 1) throw InvalidArgument("vertex labels start at 1");
      const EdgeId id = graph->edge_between(static_cast<VertexId>(from - 1), static_cast<VertexId>(to - 1));
      field.resistance[id] = e.at("resistance").get<double>();
      field.coeff[id] = e.at("coeff").get<double>();
    }
    field.signal = signal_from_json(j.at("signal"));
    field.w_max = j.at("w_max").get<double>();
    field.graph = std::move(graph);
    return {config, std::move(field)};
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad scenario: ") + e.what());
  }
}

}  // namespace windpass
