#pragma once

#include "msfa/embedding.hpp"
#include "msfa/fusion.hpp"
#include "msfa/limits.hpp"
#include "msfa/mixture.hpp"

#include <string>
#include <vector>

namespace msfa {

struct TrainConfig {
  /// 0 selects the lag from the training autocorrelation.
  std::size_t lag = 0;
  double lag_band = 0.01;
  std::size_t max_lag = 120;
  std::size_t g_min = 2;
  std::size_t g_max = 32;
  /// Nonzero fixes the pattern count and skips the search.
  std::size_t components = 0;
  double alpha = 0.01;
  std::size_t window = 3;
  /// Trailing fraction of a single input frame held out for validation.
  double validation_fraction = 1.0 / 3.0;
  EmConfig em;

  void validate() const;
};

struct CandidateReport {
  std::size_t components = 0;
  bool fitted = false;
  bool accepted = false;
  std::size_t alarms = 0;  ///< validation samples in an alarm status
  double alarm_rate = 0.0;
  std::string note;
};

struct TrainResult {
  MsfaModel model;
  /// A candidate passed the validation test; false means the fallback was used.
  bool accepted = false;
  std::size_t lag = 0;
  bool lag_band_never_reached = false;
  std::vector<CandidateReport> candidates;
  std::vector<std::string> log;
};

/// Splits a frame into leading training and trailing validation parts.
std::pair<TimeSeriesFrame, TimeSeriesFrame> split_validation(const TimeSeriesFrame& frame, double fraction);

/// Mixture, per-pattern SFA and limits for a fixed G. `labels` receives the
/// training assignment when non-null.
MsfaModel fit_model(const AugmentedMatrix& data, std::size_t components, const TrainConfig& config,
                    const std::vector<std::string>& channel_names = {}, std::vector<int>* labels = nullptr);

/// G search: the first G from g_min whose validation run raises no alarm is
/// accepted; otherwise the G with the lowest validation alarm rate is returned.
TrainResult train(const TimeSeriesFrame& train_frame, const TimeSeriesFrame& valid_frame,
                  const TrainConfig& config);

struct DpcaConfig {
  std::size_t lag = 1;
  double alpha = 0.01;
  double variance_fraction = 0.9;
  /// Nonzero fixes the retained count.
  std::size_t components = 0;
  std::size_t window = 3;
};

struct DpcaModel {
  std::size_t lag = 1;
  std::size_t channels = 0;
  Vector mean;
  Vector scale;
  Matrix loadings;  ///< n x a principal directions
  Vector variances; ///< a retained eigenvalues
  ScaledF t2;
  ScaledChi2 spe;
  double t2_limit = 0.0;
  double spe_limit = 0.0;  ///< +inf when the residual space is empty
  double alpha = 0.01;
  std::size_t window = 3;

  std::size_t retained() const { return static_cast<std::size_t>(loadings.cols()); }
};

struct DpcaScores {
  std::vector<double> t2, spe;
  std::vector<bool> alarm;
  std::vector<Timestamp> timestamps;
  std::vector<std::size_t> source_rows;
};

/// PCA on the standardized lagged matrix (rows aligned with `augment`).
DpcaModel train_dpca(const TimeSeriesFrame& frame, const DpcaConfig& config);
/// Alarm = T2 or SPE above its limit for `window` consecutive rows (reset at gaps).
DpcaScores score_dpca(const DpcaModel& model, const TimeSeriesFrame& frame);

}  // namespace msfa
