#pragma once

#include "msfa/common.hpp"
#include "msfa/fusion.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace msfa {

/// NewPattern, Degradation and Fault are alarms; NormalSwitching is not.
bool is_alarm(HealthStatus status);

/// Fraction of alarmed samples in a run that is normal by ground truth.
double far(const std::vector<HealthStatus>& statuses);

struct Detection {
  std::optional<std::size_t> fdt_index;  ///< first alarm at or after onset
  std::optional<Timestamp> fdt_time;
  std::size_t fdd_samples = 0;
  double fdd_minutes = 0.0;
  double fdr = 0.0;  ///< alarmed fraction of post-onset samples
};

/// Detection from an onset sample index; alarms before it do not count.
Detection fdd_fdr(const std::vector<HealthStatus>& statuses, std::size_t onset_index);

/// Same, with the onset given as a timestamp (first sample at or after it).
Detection fdd_fdr(const std::vector<HealthStatus>& statuses, const std::vector<Timestamp>& timestamps,
                  Timestamp onset);

/// Agreement after the best one-to-one relabeling (Hungarian assignment).
/// Throws InputError on length mismatch or more than 32 distinct labels.
double segmentation_accuracy(const std::vector<int>& predicted, const std::vector<int>& truth);

/// Number of maximal runs of equal labels.
std::size_t label_runs(const std::vector<int>& labels);

/// Minimum-cost assignment for a square cost matrix; result[row] = column.
std::vector<int> hungarian(const Matrix& cost);

struct IndexBreakdown {
  double exceed_rate = 0.0;  ///< fraction of normal samples above 1 - alpha
  std::optional<std::size_t> fdd_samples;  ///< first 3-persistent exceedance after onset
  double fdr = 0.0;
};

struct EvaluationReport {
  std::size_t samples = 0;
  std::size_t normal_samples = 0;
  std::size_t false_alarms = 0;
  double far = 0.0;
  std::optional<Timestamp> onset;
  std::optional<Detection> detection;
  std::array<IndexBreakdown, 4> per_index{};
  std::array<std::size_t, 5> status_counts{};
};

/// `normal` marks ground-truth normal samples; when empty, samples before
/// `onset` (or all samples without an onset) are taken as normal.
EvaluationReport evaluate(const std::vector<Timestamp>& timestamps, const std::vector<Quad>& bips,
                          const std::vector<HealthStatus>& statuses, double alpha,
                          std::optional<Timestamp> onset, const std::vector<bool>& normal = {},
                          std::size_t window = 3);

std::string report_text(const EvaluationReport& report);
std::string report_json(const EvaluationReport& report);

}  // namespace msfa
