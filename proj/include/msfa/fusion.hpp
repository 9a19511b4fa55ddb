#pragma once

#include "msfa/common.hpp"
#include "msfa/embedding.hpp"
#include "msfa/limits.hpp"
#include "msfa/mixture.hpp"
#include "msfa/sfa.hpp"

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace msfa {

enum class HealthStatus { Normal = 0, NormalSwitching = 1, NewPattern = 2, Degradation = 3, Fault = 4 };

const char* status_name(HealthStatus status);
/// Parses the names produced by status_name (also accepts snake_case); throws InputError.
HealthStatus parse_status(const std::string& name);

struct BipVector {
  Quad bip{};
  Vector posterior;
  Timestamp timestamp = 0;
  /// Every pattern density underflowed; the posterior is uniform.
  bool outlier = false;
};

struct Evidence {
  std::array<bool, 4> persistent{};  ///< above tau for the whole window
  std::array<bool, 4> current{};     ///< above tau at the newest sample
  std::size_t window = 0;            ///< samples actually available
  bool warm_up = false;
};

struct Diagnosis {
  HealthStatus status = HealthStatus::Normal;
  Evidence evidence;
};

struct PatternModel {
  PatternSfa sfa;
  ControlLimits limits;
};

struct MsfaModel {
  std::size_t lag = 1;
  std::vector<std::string> channel_names;
  std::size_t channels = 0;
  MixtureModel mixture;
  std::vector<PatternModel> patterns;
  double alpha = 0.01;
  std::size_t window = 3;
  /// Free-form provenance (tool version, seeds, training ranges).
  std::map<std::string, std::string> metadata;

  std::size_t size() const { return patterns.size(); }
  std::size_t lagged_width() const { return lag * channels; }
  /// Throws InputError when member sizes disagree.
  void validate() const;
};

/// Precomputed factorizations of a model for repeated scoring.
class Monitor {
 public:
  explicit Monitor(const MsfaModel& model);
  /// Fused indices for one augmented row (lagged half, difference half).
  BipVector fuse(const Eigen::Ref<const RowVector>& row) const;
  /// Local probabilities of every pattern for one augmented row (G x 4).
  Matrix local(const Eigen::Ref<const RowVector>& row) const;

 private:
  std::shared_ptr<const MsfaModel> model_;
  MixtureScorer mixture_;
  std::vector<LimitScorer> limits_;
};

/// Posterior-weighted fusion of per-pattern local probabilities.
BipVector fuse(const MsfaModel& model, const Eigen::Ref<const RowVector>& lagged,
               const Eigen::Ref<const RowVector>& diff);

/// Table-II decision over the most recent `window` BIP vectors (oldest first).
/// Fewer than `window_length` vectors yields Normal with the warm-up flag set.
Diagnosis classify(std::span<const BipVector> window, double alpha, std::size_t window_length = 3);

/// Same rule on precomputed flags.
HealthStatus classify_flags(const std::array<bool, 4>& persistent, const std::array<bool, 4>& current,
                            bool steady_any_in_window);

struct StreamResult {
  std::vector<BipVector> bips;
  std::vector<Diagnosis> diagnoses;
  std::vector<std::size_t> source_rows;
  std::size_t outliers = 0;

  std::vector<HealthStatus> statuses() const;
};

/// Scores every augmented row of the frame in time order. The rolling window
/// restarts at each timestamp gap.
StreamResult monitor_stream(const MsfaModel& model, const TimeSeriesFrame& frame);
StreamResult monitor_augmented(const MsfaModel& model, const AugmentedMatrix& data);

/// Smallest number of augmented rows accepted for fitting one pattern.
std::size_t minimum_pattern_rows(std::size_t lagged_width);

/// Adds a pattern learned from `samples`; weights are re-normalized from
/// effective counts. The input model is not modified.
MsfaModel update_with_new_pattern(const MsfaModel& model, const AugmentedMatrix& samples);

/// Fits the SFA model and limits of one pattern from its augmented rows.
PatternModel fit_pattern(const AugmentedMatrix& rows, const GaussianComponent& component,
                         std::size_t pattern_id, double alpha);

}  // namespace msfa
