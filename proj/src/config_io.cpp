#include "cellsearch/config_io.hpp"

#include <cmath>
#include <fstream>

#include "cellsearch/errors.hpp"
#include "cellsearch/threshold_calibration.hpp"

namespace cellsearch {

using nlohmann::json;

namespace {

// Recursively overlays `src` onto `dst`, which holds the defaults. Keys
// absent from the defaults and type changes are configuration errors.
void merge_into(json& dst, const json& src, const std::string& path) {
  if (!src.is_object()) throw ConfigError(path.empty() ? "config root must be an object" : path + " must be an object");
  for (const auto& [key, value] : src.items()) {
    const std::string here = path.empty() ? key : path + "." + key;
    if (!dst.contains(key)) throw ConfigError("unknown config key '" + here + "'");
    json& slot = dst[key];
    if (slot.is_object()) {
      merge_into(slot, value, here);
    } else if (slot.is_array()) {
      if (!value.is_array()) throw ConfigError(here + " must be an array");
      slot = value;
    } else if (slot.is_number()) {
      if (!value.is_number()) throw ConfigError(here + " must be a number");
      if (slot.is_number_integer() && !value.is_number_integer()) {
        // Accept integral floats such as 1e4 for count fields.
        const double x = value.get<double>();
        if (std::floor(x) != x) throw ConfigError(here + " must be an integer");
        slot = static_cast<std::int64_t>(x);
      } else {
        slot = value;
      }
    } else if (slot.is_string()) {
      if (!value.is_string()) throw ConfigError(here + " must be a string");
      slot = value;
    } else if (slot.is_boolean()) {
      if (!value.is_boolean()) throw ConfigError(here + " must be true or false");
      slot = value;
    } else {
      slot = value;
    }
  }
}

template <typename T>
T get(const json& tree, const char* section, const char* key) {
  try {
    return tree.at(section).at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(section) + "." + key + " is missing or has the wrong type");
  }
}

std::string choice(const json& tree, const char* section, const char* key,
                   std::initializer_list<const char*> allowed) {
  const auto v = get<std::string>(tree, section, key);
  for (const char* a : allowed) {
    if (v == a) return v;
  }
  std::string msg = std::string(section) + "." + key + ": '" + v + "' is not one of";
  for (const char* a : allowed) msg += std::string(" ") + a;
  throw ConfigError(msg);
}

}  // namespace

double ExperimentConfig::p_fa() const {
  return p_fa_override > 0.0 ? p_fa_override : fa_budget(r_fa, base.pss, freq).p_fa;
}

json default_config_json() {
  return json{
      {"pss",
       {{"w_tot_hz", 1e9},
        {"w_sig_hz", 1e6},
        {"t_sig_s", 1e-4},
        {"t_per_s", 5e-3},
        {"n_sig", 4},
        {"n_slot", 50},
        {"n_pss", 3},
        {"carrier_hz", 28e9},
        {"n_dim", 1024}}},
      {"budget", {{"r_fa", 0.01}, {"lo_ppm", 1.0}, {"speed_kmh", 30.0}, {"p_fa_override", 0.0}}},
      {"arrays", {{"bs_rows", 8}, {"bs_cols", 8}, {"ue_rows", 4}, {"ue_cols", 4}, {"spacing_wl", 0.5}}},
      {"channel",
       {{"model", "single"},
        {"cluster_mean", 1.8},
        {"power_decay", 1.0},
        {"spread_deg", 10.0},
        {"subpaths", 20},
        {"fading", "iid"},
        {"elevation", "sphere"}}},
      {"frontend",
       {{"kind", "analog"},
        {"bits", 3},
        {"n_streams", 4},
        {"quantizer", "surrogate"},
        {"agc_backoff_db", 0.0},
        {"p_fm_fj", 59.4}}},
      {"tx", {{"mode", "omni"}}},
      {"experiment",
       {{"snr_db", {{"start", -30.0}, {"stop", 10.0}, {"step", 2.0}}},
        {"trials", 2000},
        {"calib_trials", 50000},
        {"seed", 1},
        {"slot_model", "reduced"},
        {"residual_offset_hz", 0.0},
        {"stop_after_zero", 0},
        {"rate_target_bps", 10e6},
        {"rate_beta", 0.4}}},
      {"scenarios", json::array()}};
}

void apply_override(json& root, const std::string& assignment) {
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
    value = text;
  }
  // Build {"a": {"b": value}} and merge it, so overrides get the same
  // validation as file entries.
  json patch = value;
  std::string rest = key;
  std::vector<std::string> parts;
  for (std::size_t pos; (pos = rest.find('.')) != std::string::npos; rest = rest.substr(pos + 1)) {
    parts.push_back(rest.substr(0, pos));
  }
  parts.push_back(rest);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    if (it->empty()) throw ConfigError("override key '" + key + "' has an empty component");
    patch = json{{*it, patch}};
  }
  merge_into(root, patch, "");
}

std::vector<double> snr_grid(double start, double stop, double step) {
  if (!(step > 0.0)) throw ConfigError("experiment.snr_db.step must be positive");
  std::vector<double> g;
  if (stop < start) return g;
  const long n = std::lround(std::floor((stop - start) / step + 1e-9)) + 1;
  for (long i = 0; i < n; ++i) g.push_back(start + i * step);
  return g;
}

Scenario scenario_from_json(const json& tree, std::string id) {
  Scenario s;
  s.id = std::move(id);
  PssParams p;
  p.w_tot_hz = get<double>(tree, "pss", "w_tot_hz");
  p.w_sig_hz = get<double>(tree, "pss", "w_sig_hz");
  p.t_sig_s = get<double>(tree, "pss", "t_sig_s");
  p.t_per_s = get<double>(tree, "pss", "t_per_s");
  p.n_sig = get<int>(tree, "pss", "n_sig");
  p.n_slot = get<int>(tree, "pss", "n_slot");
  p.n_pss = get<int>(tree, "pss", "n_pss");
  p.carrier_hz = get<double>(tree, "pss", "carrier_hz");
  p.n_dim = get<int>(tree, "pss", "n_dim");
  s.pss = build_config(p);

  const double spacing = get<double>(tree, "arrays", "spacing_wl");
  s.bs = {get<int>(tree, "arrays", "bs_rows"), get<int>(tree, "arrays", "bs_cols"), spacing};
  s.ue = {get<int>(tree, "arrays", "ue_rows"), get<int>(tree, "arrays", "ue_cols"), spacing};

  s.channel_mode = choice(tree, "channel", "model", {"single", "multipath"}) == "single"
                       ? ChannelMode::single
                       : ChannelMode::multipath;
  s.multipath.cluster_mean = get<double>(tree, "channel", "cluster_mean");
  s.multipath.power_decay = get<double>(tree, "channel", "power_decay");
  s.multipath.spread_deg = get<double>(tree, "channel", "spread_deg");
  s.multipath.subpaths = get<int>(tree, "channel", "subpaths");
  const std::string fading = choice(tree, "channel", "fading", {"iid", "block_per_slot", "constant"});
  s.fading = fading == "iid" ? FadingModel::iid
             : fading == "constant" ? FadingModel::constant
                                    : FadingModel::block_per_slot;
  s.sampling = choice(tree, "channel", "elevation", {"sphere", "angle"}) == "sphere"
                   ? ElevationSampling::sphere
                   : ElevationSampling::angle;

  s.frontend.kind = parse_frontend_kind(choice(tree, "frontend", "kind", {"digital", "digital_q", "analog", "hybrid"}));
  s.frontend.bits = get<int>(tree, "frontend", "bits");
  s.frontend.n_streams = get<int>(tree, "frontend", "n_streams");
  s.frontend.quantizer = choice(tree, "frontend", "quantizer", {"surrogate", "physical"}) == "physical"
                             ? QuantizerMode::physical
                             : QuantizerMode::surrogate;
  s.frontend.agc_backoff_db = get<double>(tree, "frontend", "agc_backoff_db");
  s.frontend.p_fm_fj = get<double>(tree, "frontend", "p_fm_fj");

  s.tx_mode = choice(tree, "tx", "mode", {"omni", "random"}) == "omni" ? TxMode::omni : TxMode::random;
  s.slot_model = choice(tree, "experiment", "slot_model", {"reduced", "explicit"}) == "reduced"
                     ? SlotModel::reduced
                     : SlotModel::explicit_slots;
  s.residual_offset_hz = get<double>(tree, "experiment", "residual_offset_hz");
  s.validate();
  return s;
}

ExperimentConfig resolve_config(const json& file_tree, const std::vector<std::string>& overrides) {
  json tree = default_config_json();
  merge_into(tree, file_tree, "");
  for (const auto& o : overrides) apply_override(tree, o);

  ExperimentConfig cfg;
  cfg.overrides = overrides;
  cfg.resolved = tree;
  json base_tree = tree;
  base_tree.erase("scenarios");
  cfg.base = scenario_from_json(base_tree, "base");

  cfg.r_fa = get<double>(tree, "budget", "r_fa");
  if (!(cfg.r_fa > 0.0 && cfg.r_fa < 1.0)) throw ConfigError("budget.r_fa must be in (0, 1)");
  cfg.p_fa_override = get<double>(tree, "budget", "p_fa_override");
  if (cfg.p_fa_override < 0.0 || cfg.p_fa_override >= 1.0) throw ConfigError("budget.p_fa_override must be in [0, 1)");
  cfg.freq.lo_ppm = get<double>(tree, "budget", "lo_ppm");
  cfg.freq.speed_mps = get<double>(tree, "budget", "speed_kmh") / 3.6;

  const json& ex = tree.at("experiment");
  try {
    cfg.snr_grid_db = snr_grid(ex.at("snr_db").at("start").get<double>(), ex.at("snr_db").at("stop").get<double>(),
                               ex.at("snr_db").at("step").get<double>());
  } catch (const json::exception&) {
    throw ConfigError("experiment.snr_db needs numeric start, stop and step");
  }
  cfg.trials = get<long>(tree, "experiment", "trials");
  cfg.calib_trials = get<long>(tree, "experiment", "calib_trials");
  cfg.seed = get<std::uint64_t>(tree, "experiment", "seed");
  cfg.stop_after_zero = get<int>(tree, "experiment", "stop_after_zero");
  cfg.rate_target_bps = get<double>(tree, "experiment", "rate_target_bps");
  cfg.rate_beta = get<double>(tree, "experiment", "rate_beta");
  if (cfg.trials < 1) throw ConfigError("experiment.trials must be at least 1");
  if (cfg.calib_trials < 1000) throw ConfigError("experiment.calib_trials must be at least 1000");

  const json& list = tree.at("scenarios");
  for (std::size_t i = 0; i < list.size(); ++i) {
    const json& entry = list[i];
    const std::string where = "scenarios[" + std::to_string(i) + "]";
    if (!entry.is_object() || !entry.contains("id") || !entry["id"].is_string()) {
      throw ConfigError(where + " needs a string 'id'");
    }
    json t = base_tree;
    if (entry.contains("set")) {
      if (!entry["set"].is_object()) throw ConfigError(where + ".set must be an object of dotted keys");
      for (const auto& [k, v] : entry["set"].items()) apply_override(t, k + "=" + v.dump());
    }
    for (const auto& [k, v] : entry.items()) {
      if (k != "id" && k != "set") throw ConfigError("unknown config key '" + where + "." + k + "'");
    }
    cfg.scenarios.push_back(scenario_from_json(t, entry["id"].get<std::string>()));
  }
  if (cfg.scenarios.empty()) cfg.scenarios.push_back(cfg.base);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  json tree;
  try {
    tree = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path.string() + "': " + e.what());
  }
  return resolve_config(tree, overrides);
}

}  // namespace cellsearch
