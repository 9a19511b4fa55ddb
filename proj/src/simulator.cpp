#include "msfa/simulator.hpp"

#include "msfa/rng.hpp"

#include <sstream>

namespace msfa {

const char* fault_kind_name(FaultKind kind) {
  switch (kind) {
    case FaultKind::DynamicsChange: return "dynamics_change";
    case FaultKind::MeanShift: return "mean_shift";
    case FaultKind::Combined: return "combined";
  }
  return "?";
}

FaultKind parse_fault_kind(const std::string& name) {
  if (name == "dynamics_change") return FaultKind::DynamicsChange;
  if (name == "mean_shift") return FaultKind::MeanShift;
  if (name == "combined") return FaultKind::Combined;
  throw InputError("unknown fault kind '" + name + "'");
}

HealthStatus fault_status(FaultKind kind) {
  switch (kind) {
    case FaultKind::DynamicsChange: return HealthStatus::Degradation;
    case FaultKind::MeanShift: return HealthStatus::NewPattern;
    case FaultKind::Combined: return HealthStatus::Fault;
  }
  return HealthStatus::Fault;
}

void SimConfig::validate() const {
  std::vector<std::string> bad;
  if (duration < 2) bad.push_back("duration must be at least 2 samples");
  if (!(low < high)) bad.push_back("low set-point must be below high set-point");
  if (patterns.empty()) bad.push_back("pattern library is empty");
  for (std::size_t i = 0; i < patterns.size(); ++i) {
    const auto& p = patterns[i];
    if (!(p.heating_rate > 0.0) || !(p.cooling_rate > 0.0))
      bad.push_back("pattern " + std::to_string(i) + ": rates must be positive");
    if (!(p.noise_sigma >= 0.0)) bad.push_back("pattern " + std::to_string(i) + ": noise must be non-negative");
    if (!(p.time_constant >= 1.0)) bad.push_back("pattern " + std::to_string(i) + ": time constant must be >= 1");
  }
  if (schedule == ScheduleKind::Demand) {
    if (segment_min < 1 || segment_max <= segment_min)
      bad.push_back("segment_max must exceed segment_min >= 1");
    if (start_pattern >= static_cast<int>(patterns.size()))
      bad.push_back("start_pattern outside the pattern library");
  } else {
    if (script.empty() || script.front().start != 0) bad.push_back("script must start at sample 0");
    for (std::size_t i = 0; i < script.size(); ++i) {
      if (script[i].pattern >= patterns.size())
        bad.push_back("script entry " + std::to_string(i) + ": unknown pattern");
      if (i > 0 && script[i].start <= script[i - 1].start)
        bad.push_back("script entry " + std::to_string(i) + ": starts must increase");
    }
  }
  for (std::size_t i = 0; i < faults.size(); ++i) {
    if (faults[i].onset >= duration) bad.push_back("fault " + std::to_string(i) + ": onset outside duration");
    if (faults[i].kind != FaultKind::MeanShift && !(faults[i].magnitude > 0.0))
      bad.push_back("fault " + std::to_string(i) + ": rate scaling must be positive");
  }
  if (!(process_noise >= 0.0)) bad.push_back("process_noise must be non-negative");
  if (!(outlet_time_constant >= 1.0)) bad.push_back("outlet_time_constant must be >= 1");
  if (step_seconds < 1) bad.push_back("step_seconds must be positive");
  if (bad.empty()) return;
  std::ostringstream msg;
  msg << "invalid simulator config:";
  for (const auto& b : bad) msg << "\n  - " << b;
  throw InputError(msg.str());
}

std::vector<PatternSpec> default_pattern_library() {
  return {{0.0265, 0.15, 0.03, 5.0}, {0.0643, 0.15, 0.10, 8.0}, {0.1227, 0.15, 0.045, 4.0},
          {0.225, 0.15, 0.15, 10.0}, {0.45, 0.15, 0.02, 6.0},   {1.35, 0.15, 0.067, 7.0}};
}

LabeledDataset generate(const SimConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const auto K = config.duration;
  const auto G = config.patterns.size();

  LabeledDataset out;
  out.frame.values.resize(static_cast<Eigen::Index>(K), 2);
  out.frame.channel_names = {"inlet", "outlet"};
  out.frame.timestamps.resize(K);
  out.labels.resize(K);
  out.status.assign(K, HealthStatus::Normal);

  std::size_t pattern = 0;
  std::size_t segment_end = 0;
  int direction = 1;
  std::size_t script_at = 0;
  if (config.schedule == ScheduleKind::Demand) {
    pattern = config.start_pattern >= 0 ? static_cast<std::size_t>(config.start_pattern)
                                        : static_cast<std::size_t>(rng.below(G));
    segment_end = config.segment_min + rng.below(config.segment_max - config.segment_min);
  }

  double inlet = config.initial_temperature;
  double outlet = config.initial_temperature;
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t previous = pattern;
    if (config.schedule == ScheduleKind::Demand) {
      if (k >= segment_end) {
        // Demand walks the ladder one step at a time and reverses at either end.
        if (G > 1) {
          const auto next = static_cast<long>(pattern) + direction;
          if (next < 0 || next >= static_cast<long>(G)) direction = -direction;
          pattern = static_cast<std::size_t>(static_cast<long>(pattern) + direction);
        }
        segment_end = k + config.segment_min + rng.below(config.segment_max - config.segment_min);
      }
    } else {
      while (script_at + 1 < config.script.size() && config.script[script_at + 1].start <= k) ++script_at;
      pattern = config.script[script_at].pattern;
    }
    if (k > 0 && pattern != previous) out.switches.push_back(k);

    const auto& spec = config.patterns[pattern];
    double heat = spec.heating_rate;
    double cool = spec.cooling_rate;
    double tau = spec.time_constant;
    double low = config.low;
    double high = config.high;
    for (const auto& f : config.faults) {
      if (k < f.onset) continue;
      switch (f.kind) {
        case FaultKind::DynamicsChange:
          heat *= f.magnitude;
          cool *= f.magnitude;
          tau /= f.magnitude;
          break;
        case FaultKind::MeanShift:
          low += f.magnitude;
          high += f.magnitude;
          break;
        case FaultKind::Combined:
          low += f.magnitude;
          high += f.magnitude;
          heat *= 1.0 + f.magnitude;
          cool *= 1.0 + f.magnitude;
          tau /= 1.0 + f.magnitude;
          break;
      }
      out.status[k] = std::max(out.status[k], fault_status(f.kind));
    }
    tau = std::max(tau, 1.0);

    const double balance = heat / (heat + cool);
    const double target = low + (high - low) * balance;
    inlet += (target - inlet) / tau + config.process_noise * cool * rng.normal();
    if (inlet < low) inlet += heat;
    if (inlet > high) inlet -= cool;
    const double lift = config.outlet_lift * (2.0 * balance - 1.0);
    outlet += (inlet + lift - outlet) / config.outlet_time_constant;

    const auto row = static_cast<Eigen::Index>(k);
    out.frame.values(row, 0) = inlet + spec.noise_sigma * rng.normal();
    out.frame.values(row, 1) = outlet + spec.noise_sigma * rng.normal();
    out.frame.timestamps[k] = config.start_time + static_cast<Timestamp>(k) * config.step_seconds;
    out.labels[k] = static_cast<int>(pattern);
  }
  return out;
}

std::vector<SimConfig> reference_scenarios() {
  SimConfig april;
  april.name = "april-train";
  april.seed = 11;
  april.duration = 21600;  // 10 days of training followed by 5 days of validation
  april.patterns = default_pattern_library();
  april.start_time = 1617235200;  // 2021-04-01

  SimConfig may;
  may.name = "may-newpattern";
  may.seed = 12;
  may.duration = 5760;
  may.patterns = default_pattern_library();
  may.schedule = ScheduleKind::Scripted;
  may.script = {{0, 1}, {420, 2}, {900, 3}, {1300, 2}};
  may.faults = {{1440, FaultKind::MeanShift, 2.0}};
  may.start_time = 1621641600;  // 2021-05-22

  SimConfig july;
  july.name = "july-fault";
  july.seed = 13;
  july.duration = 4320;
  july.patterns = default_pattern_library();
  july.faults = {{1440, FaultKind::Combined, 2.0}};
  july.start_time = 1625097600;  // 2021-07-01

  return {april, may, july};
}

SimConfig reference_scenario(const std::string& name) {
  for (auto& c : reference_scenarios())
    if (c.name == name) return c;
  throw InputError("unknown preset '" + name + "' (expected april-train, may-newpattern, july-fault)");
}

}  // namespace msfa
