#include "nesua/config.hpp"

#include <cstdio>
#include <set>

#include "json.hpp"
#include "nesua/errors.hpp"

namespace nesua {

using nlohmann::json;

namespace {

// Strict reader: every key of the object must be consumed exactly by some field.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError("config section '" + name_ + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(name_ + "." + key + ": " + e.what());
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown config key '" + name_ + "." + it.key() + "'");
    }
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

json to_json(const ScenarioConfig& c) {
  return {{"n_cells", c.n_cells},
          {"inter_site_distance_m", c.inter_site_distance_m},
          {"region_width_m", c.region_width_m},
          {"region_height_m", c.region_height_m},
          {"n_ues", c.n_ues},
          {"bandwidth_mhz", c.bandwidth_mhz},
          {"subcarrier_spacing_khz", c.subcarrier_spacing_khz},
          {"carrier_ghz", c.carrier_ghz},
          {"n_tx_antennas", c.n_tx_antennas},
          {"h_tx_m", c.h_tx_m},
          {"h_ue_m", c.h_ue_m},
          {"tx_power_dbm", c.tx_power_dbm},
          {"noise_figure_db", c.noise_figure_db},
          {"pathloss_exponent", c.pathloss_exponent},
          {"shadowing_sigma_db", c.shadowing_sigma_db},
          {"fast_fading", c.fast_fading},
          {"reuse_factor", c.reuse_factor},
          {"gamma_th_db", c.gamma_th_db},
          {"ue_demand_mbps", c.ue_demand_mbps},
          {"se_cap_bps_per_hz", c.se_cap_bps_per_hz},
          {"rng_seed", c.rng_seed}};
}

void from_json_section(const json& j, ScenarioConfig& c) {
  Section s(j, "scenario");
  s.get("n_cells", c.n_cells);
  s.get("inter_site_distance_m", c.inter_site_distance_m);
  s.get("region_width_m", c.region_width_m);
  s.get("region_height_m", c.region_height_m);
  s.get("n_ues", c.n_ues);
  s.get("bandwidth_mhz", c.bandwidth_mhz);
  s.get("subcarrier_spacing_khz", c.subcarrier_spacing_khz);
  s.get("carrier_ghz", c.carrier_ghz);
  s.get("n_tx_antennas", c.n_tx_antennas);
  s.get("h_tx_m", c.h_tx_m);
  s.get("h_ue_m", c.h_ue_m);
  s.get("tx_power_dbm", c.tx_power_dbm);
  s.get("noise_figure_db", c.noise_figure_db);
  s.get("pathloss_exponent", c.pathloss_exponent);
  s.get("shadowing_sigma_db", c.shadowing_sigma_db);
  s.get("fast_fading", c.fast_fading);
  s.get("reuse_factor", c.reuse_factor);
  s.get("gamma_th_db", c.gamma_th_db);
  s.get("ue_demand_mbps", c.ue_demand_mbps);
  s.get("se_cap_bps_per_hz", c.se_cap_bps_per_hz);
  s.get("rng_seed", c.rng_seed);
  s.finish();
}

json to_json(const PowerParams& p) {
  return {{"p_fixed_w", p.p_fixed_w},   {"p_bb0_w", p.p_bb0_w},       {"p_bb_slope_w", p.p_bb_slope_w},
          {"epsilon", p.epsilon},       {"sigma_max", p.sigma_max},   {"p_max_pa_w", p.p_max_pa_w},
          {"n_tx", p.n_tx},             {"p_sleep_w", p.p_sleep_w},   {"eta_as_pout", p.eta_as_pout}};
}

void from_json_section(const json& j, PowerParams& p) {
  Section s(j, "power");
  s.get("p_fixed_w", p.p_fixed_w);
  s.get("p_bb0_w", p.p_bb0_w);
  s.get("p_bb_slope_w", p.p_bb_slope_w);
  s.get("epsilon", p.epsilon);
  s.get("sigma_max", p.sigma_max);
  s.get("p_max_pa_w", p.p_max_pa_w);
  s.get("n_tx", p.n_tx);
  s.get("p_sleep_w", p.p_sleep_w);
  s.get("eta_as_pout", p.eta_as_pout);
  s.finish();
}

json to_json(const GatConfig& g) {
  return {{"n_cells", g.n_cells},
          {"hidden1", g.hidden1},
          {"hidden2", g.hidden2},
          {"negative_slope", g.negative_slope},
          {"readout_activation", to_string(g.readout_activation)},
          {"heads", g.heads}};
}

void from_json_section(const json& j, GatConfig& g, const char* name) {
  Section s(j, name);
  std::string act = to_string(g.readout_activation);
  s.get("n_cells", g.n_cells);
  s.get("hidden1", g.hidden1);
  s.get("hidden2", g.hidden2);
  s.get("negative_slope", g.negative_slope);
  s.get("readout_activation", act);
  s.get("heads", g.heads);
  s.finish();
  g.readout_activation = readout_activation_from_string(act);
}

json to_json(const TrainConfig& t, const LossConfig& l) {
  return {{"dataset_size", t.dataset_size}, {"split_fraction", t.split_fraction}, {"epochs", t.epochs},
          {"lr", t.lr},                     {"beta1", t.beta1},                   {"beta2", t.beta2},
          {"shuffle_seed", t.shuffle_seed}, {"checkpoint_every", t.checkpoint_every},
          {"lambda1", l.lambda1},           {"lambda2", l.lambda2}};
}

void from_json_section(const json& j, TrainConfig& t, LossConfig& l) {
  Section s(j, "train");
  s.get("dataset_size", t.dataset_size);
  s.get("split_fraction", t.split_fraction);
  s.get("epochs", t.epochs);
  s.get("lr", t.lr);
  s.get("beta1", t.beta1);
  s.get("beta2", t.beta2);
  s.get("shuffle_seed", t.shuffle_seed);
  s.get("checkpoint_every", t.checkpoint_every);
  s.get("lambda1", l.lambda1);
  s.get("lambda2", l.lambda2);
  s.finish();
}

json to_json(const RunConfig& c) {
  json g = to_json(c.gat);
  g.erase("n_cells");  // always taken from scenario.n_cells
  return {{"seed", c.seed},
          {"out_dir", c.out_dir},
          {"scenario", to_json(c.scenario)},
          {"power", to_json(c.power)},
          {"gat", g},
          {"train", to_json(c.train, c.loss)},
          {"eval",
           {{"include_oracle", c.eval.include_oracle},
            {"oracle_budget", c.eval.oracle_budget},
            {"heatmap_instances", c.eval.heatmap_instances}}},
          {"baseline", {{"subsinr_agg", to_string(c.baseline.subsinr_aggregate)}}},
          {"sweep",
           {{"bandwidths_mhz", c.sweep.bandwidths_mhz},
            {"ue_counts", c.sweep.ue_counts},
            {"lambda_ratios", c.sweep.lambda_ratios},
            {"lambda1", c.sweep.lambda1}}}};
}

RunConfig from_json(const json& j) {
  RunConfig c;
  Section root(j, "<root>");
  root.get("seed", c.seed);
  root.get("out_dir", c.out_dir);
  json sec;
  auto section = [&](const char* name) -> const json* {
    root.get(name, sec);
    auto it = j.find(name);
    return it == j.end() ? nullptr : &*it;
  };
  if (const json* s = section("scenario")) from_json_section(*s, c.scenario);
  if (const json* s = section("power")) from_json_section(*s, c.power);
  if (const json* s = section("gat")) {
    if (s->is_object() && s->contains("n_cells")) throw ConfigError("gat.n_cells is derived from scenario.n_cells");
    from_json_section(*s, c.gat, "gat");
  }
  if (const json* s = section("train")) from_json_section(*s, c.train, c.loss);
  if (const json* s = section("eval")) {
    Section e(*s, "eval");
    e.get("include_oracle", c.eval.include_oracle);
    e.get("oracle_budget", c.eval.oracle_budget);
    e.get("heatmap_instances", c.eval.heatmap_instances);
    e.finish();
  }
  if (const json* s = section("baseline")) {
    Section b(*s, "baseline");
    std::string agg = to_string(c.baseline.subsinr_aggregate);
    b.get("subsinr_agg", agg);
    b.finish();
    c.baseline.subsinr_aggregate = subsinr_aggregate_from_string(agg);
  }
  if (const json* s = section("sweep")) {
    Section w(*s, "sweep");
    w.get("bandwidths_mhz", c.sweep.bandwidths_mhz);
    w.get("ue_counts", c.sweep.ue_counts);
    w.get("lambda_ratios", c.sweep.lambda_ratios);
    w.get("lambda1", c.sweep.lambda1);
    w.finish();
  }
  root.finish();
  c.validate();
  return c;
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

}  // namespace

void RunConfig::validate() {
  gat.n_cells = scenario.n_cells;
  scenario.validate();
  power.validate();
  gat.validate();
  train.validate();
  loss.validate();
  if (eval.heatmap_instances < 0) throw ConfigError("eval.heatmap_instances must be >= 0");
  if (!(sweep.lambda1 > 0.0)) throw ConfigError("sweep.lambda1 must be > 0");
  for (double w : sweep.bandwidths_mhz) {
    if (!(w > 0.0)) throw ConfigError("sweep.bandwidths_mhz entries must be > 0");
  }
  for (int k : sweep.ue_counts) {
    if (k < 1) throw ConfigError("sweep.ue_counts entries must be >= 1");
  }
  for (double r : sweep.lambda_ratios) {
    if (!(r >= 0.0)) throw ConfigError("sweep.lambda_ratios entries must be >= 0");
  }
}

RunConfig parse_run_config(const std::string& json_text) {
  return from_json(parse_json(json_text, "config"));
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;  // bare word
  }
  json j = to_json(cfg);
  json* node = &j;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (dot == std::string::npos) {
      if (!node->contains(part)) throw ConfigError("unknown config key '" + key + "'");
      (*node)[part] = value;
      break;
    }
    if (!node->contains(part) || !(*node)[part].is_object()) {
      throw ConfigError("unknown config section in '" + key + "'");
    }
    node = &(*node)[part];
    start = dot + 1;
  }
  cfg = from_json(j);
}

std::string run_config_json(const RunConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

std::string scenario_config_json(const ScenarioConfig& cfg) { return to_json(cfg).dump(); }

std::string gat_config_json(const GatConfig& cfg) { return to_json(cfg).dump(); }

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_digest(const ScenarioConfig& cfg) { return fnv1a_hex(scenario_config_json(cfg)); }

std::string to_string(SubSinrAggregate a) { return a == SubSinrAggregate::max ? "max" : "mean_top8"; }

SubSinrAggregate subsinr_aggregate_from_string(const std::string& s) {
  if (s == "max") return SubSinrAggregate::max;
  if (s == "mean_top8") return SubSinrAggregate::mean_top8;
  throw ConfigError("unknown sub-band SINR aggregate '" + s + "' (expected max or mean_top8)");
}

}  // namespace nesua
