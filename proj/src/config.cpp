#include "msfa/config.hpp"

#include "msfa/io.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace msfa {

namespace {

using Json = nlohmann::json;

void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw InputError("config section '" + where + "' must be an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw InputError("unknown config key '" + where + "." + k + "'");
}

template <typename T>
void read(const Json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InputError("config key '" + where + "." + key + "' has the wrong type");
  }
}

void read_em(const Json& j, EmConfig& em) {
  check_keys(j, {"max_iter", "tol", "reg_relative", "seed", "init_restarts", "kmeans_iter", "max_collapses"},
             "train.em");
  read(j, "max_iter", em.max_iter, "train.em");
  read(j, "tol", em.tol, "train.em");
  read(j, "reg_relative", em.reg_relative, "train.em");
  read(j, "seed", em.seed, "train.em");
  read(j, "init_restarts", em.init_restarts, "train.em");
  read(j, "kmeans_iter", em.kmeans_iter, "train.em");
  read(j, "max_collapses", em.max_collapses, "train.em");
}

void read_train(const Json& j, TrainConfig& t) {
  check_keys(j, {"lag", "lag_band", "max_lag", "g_min", "g_max", "components", "alpha", "window",
                 "validation_fraction", "em"},
             "train");
  read(j, "lag", t.lag, "train");
  read(j, "lag_band", t.lag_band, "train");
  read(j, "max_lag", t.max_lag, "train");
  read(j, "g_min", t.g_min, "train");
  read(j, "g_max", t.g_max, "train");
  read(j, "components", t.components, "train");
  read(j, "alpha", t.alpha, "train");
  read(j, "window", t.window, "train");
  read(j, "validation_fraction", t.validation_fraction, "train");
  if (j.contains("em")) read_em(j["em"], t.em);
}

void read_sim(const Json& j, SimConfig& s) {
  check_keys(j, {"preset", "name", "seed", "duration", "low", "high", "patterns", "schedule", "segment_min",
                 "segment_max", "start_pattern", "script", "faults", "process_noise", "outlet_lift",
                 "outlet_time_constant", "initial_temperature", "start_time", "step_seconds"},
             "simulate");
  if (j.contains("preset")) s = reference_scenario(j["preset"].get<std::string>());
  read(j, "name", s.name, "simulate");
  read(j, "seed", s.seed, "simulate");
  read(j, "duration", s.duration, "simulate");
  read(j, "low", s.low, "simulate");
  read(j, "high", s.high, "simulate");
  read(j, "segment_min", s.segment_min, "simulate");
  read(j, "segment_max", s.segment_max, "simulate");
  read(j, "start_pattern", s.start_pattern, "simulate");
  read(j, "process_noise", s.process_noise, "simulate");
  read(j, "outlet_lift", s.outlet_lift, "simulate");
  read(j, "outlet_time_constant", s.outlet_time_constant, "simulate");
  read(j, "initial_temperature", s.initial_temperature, "simulate");
  read(j, "step_seconds", s.step_seconds, "simulate");
  if (j.contains("start_time")) {
    const auto& t = j["start_time"];
    if (t.is_string()) {
      s.start_time = parse_timestamp(t.get<std::string>());
    } else {
      read(j, "start_time", s.start_time, "simulate");
    }
  }
  if (j.contains("schedule")) {
    const auto name = j["schedule"].get<std::string>();
    if (name == "demand")
      s.schedule = ScheduleKind::Demand;
    else if (name == "scripted")
      s.schedule = ScheduleKind::Scripted;
    else
      throw InputError("simulate.schedule must be 'demand' or 'scripted'");
  }
  if (j.contains("patterns")) {
    s.patterns.clear();
    for (const auto& p : j["patterns"]) {
      check_keys(p, {"heating_rate", "cooling_rate", "noise_sigma", "time_constant"}, "simulate.patterns[]");
      PatternSpec spec;
      read(p, "heating_rate", spec.heating_rate, "simulate.patterns[]");
      read(p, "cooling_rate", spec.cooling_rate, "simulate.patterns[]");
      read(p, "noise_sigma", spec.noise_sigma, "simulate.patterns[]");
      read(p, "time_constant", spec.time_constant, "simulate.patterns[]");
      s.patterns.push_back(spec);
    }
  }
  if (j.contains("script")) {
    s.script.clear();
    for (const auto& e : j["script"]) {
      if (!e.is_array() || e.size() != 2) throw InputError("simulate.script entries must be [start, pattern]");
      s.script.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>()});
    }
  }
  if (j.contains("faults")) {
    s.faults.clear();
    for (const auto& f : j["faults"]) {
      check_keys(f, {"onset", "kind", "magnitude"}, "simulate.faults[]");
      FaultSpec spec;
      read(f, "onset", spec.onset, "simulate.faults[]");
      if (f.contains("kind")) spec.kind = parse_fault_kind(f["kind"].get<std::string>());
      read(f, "magnitude", spec.magnitude, "simulate.faults[]");
      s.faults.push_back(spec);
    }
  }
}

void read_dpca(const Json& j, DpcaConfig& d) {
  check_keys(j, {"variance_fraction", "components", "window"}, "dpca");
  read(j, "variance_fraction", d.variance_fraction, "dpca");
  read(j, "components", d.components, "dpca");
  read(j, "window", d.window, "dpca");
}

}  // namespace

ConfigFile parse_config(const std::string& text, const ConfigFile& base) {
  Json doc;
  try {
    doc = Json::parse(text, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(doc, {"train", "simulate", "dpca"}, "");
  ConfigFile out = base;
  try {
    if (doc.contains("train")) read_train(doc["train"], out.train);
    if (doc.contains("simulate")) {
      read_sim(doc["simulate"], out.simulate);
      out.has_simulate = true;
    }
    if (doc.contains("dpca")) read_dpca(doc["dpca"], out.dpca);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed config: ") + e.what());
  }
  return out;
}

ConfigFile load_config(const std::string& path, const ConfigFile& base) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), base);
}

std::string sim_config_json(const SimConfig& s) {
  nlohmann::ordered_json j;
  j["name"] = s.name;
  j["seed"] = s.seed;
  j["duration"] = s.duration;
  j["low"] = s.low;
  j["high"] = s.high;
  nlohmann::ordered_json pats = nlohmann::ordered_json::array();
  for (const auto& p : s.patterns)
    pats.push_back({{"heating_rate", p.heating_rate},
                    {"cooling_rate", p.cooling_rate},
                    {"noise_sigma", p.noise_sigma},
                    {"time_constant", p.time_constant}});
  j["patterns"] = pats;
  j["schedule"] = s.schedule == ScheduleKind::Demand ? "demand" : "scripted";
  j["segment_min"] = s.segment_min;
  j["segment_max"] = s.segment_max;
  j["start_pattern"] = s.start_pattern;
  nlohmann::ordered_json script = nlohmann::ordered_json::array();
  for (const auto& e : s.script) script.push_back({e.start, e.pattern});
  j["script"] = script;
  nlohmann::ordered_json faults = nlohmann::ordered_json::array();
  for (const auto& f : s.faults)
    faults.push_back({{"onset", f.onset}, {"kind", fault_kind_name(f.kind)}, {"magnitude", f.magnitude}});
  j["faults"] = faults;
  j["process_noise"] = s.process_noise;
  j["outlet_lift"] = s.outlet_lift;
  j["outlet_time_constant"] = s.outlet_time_constant;
  j["initial_temperature"] = s.initial_temperature;
  j["start_time"] = s.start_time;
  j["step_seconds"] = s.step_seconds;
  nlohmann::ordered_json doc;
  doc["simulate"] = j;
  return doc.dump(2);
}

}  // namespace msfa
