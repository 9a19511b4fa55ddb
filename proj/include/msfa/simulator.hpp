#pragma once

#include "msfa/common.hpp"
#include "msfa/embedding.hpp"
#include "msfa/fusion.hpp"

#include <string>
#include <vector>

namespace msfa {

struct PatternSpec {
  double heating_rate = 0.1;   ///< degC per minute added when below the low set-point
  double cooling_rate = 0.15;  ///< degC per minute removed when above the high set-point
  double noise_sigma = 0.05;   ///< measurement noise, degC
  double time_constant = 5.0;  ///< minutes
};

enum class FaultKind { DynamicsChange, MeanShift, Combined };

const char* fault_kind_name(FaultKind kind);
FaultKind parse_fault_kind(const std::string& name);

struct FaultSpec {
  std::size_t onset = 0;
  FaultKind kind = FaultKind::DynamicsChange;
  double magnitude = 1.0;
};

struct ScheduleEntry {
  std::size_t start = 0;
  std::size_t pattern = 0;
};

enum class ScheduleKind { Demand, Scripted };

struct SimConfig {
  std::string name;
  std::uint64_t seed = 1;
  std::size_t duration = 1440;
  double low = 46.0;
  double high = 52.0;
  std::vector<PatternSpec> patterns;
  ScheduleKind schedule = ScheduleKind::Demand;
  /// Demand schedule: segment lengths uniform in [segment_min, segment_max).
  std::size_t segment_min = 600;
  std::size_t segment_max = 1200;
  /// Demand schedule start pattern; -1 draws it from the seed.
  int start_pattern = -1;
  std::vector<ScheduleEntry> script;
  std::vector<FaultSpec> faults;
  /// Inlet process noise, in units of the cooling rate.
  double process_noise = 0.5;
  /// Outlet offset at the fastest/slowest heating balance, degC.
  double outlet_lift = 0.4;
  double outlet_time_constant = 2.0;
  double initial_temperature = 49.0;
  Timestamp start_time = 1617235200;  // 2021-04-01T00:00:00Z
  std::int64_t step_seconds = 60;

  /// Throws InputError listing every invalid field.
  void validate() const;
};

struct LabeledDataset {
  TimeSeriesFrame frame;
  std::vector<int> labels;
  std::vector<HealthStatus> status;
  std::vector<std::size_t> switches;
};

/// The six-pattern library used by the presets.
std::vector<PatternSpec> default_pattern_library();

LabeledDataset generate(const SimConfig& config);

/// Presets "april-train", "may-newpattern", "july-fault".
std::vector<SimConfig> reference_scenarios();
SimConfig reference_scenario(const std::string& name);

/// Truth status for samples affected by a fault of this kind.
HealthStatus fault_status(FaultKind kind);

}  // namespace msfa
