#pragma once

#include "msfa/common.hpp"

#include <string>
#include <vector>

namespace msfa {

/// Timestamped multichannel sensor matrix (K samples x J_raw channels).
struct TimeSeriesFrame {
  std::vector<Timestamp> timestamps;
  Matrix values;
  std::vector<std::string> channel_names;

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t channels() const { return static_cast<std::size_t>(values.cols()); }

  /// Throws InputError unless timestamps strictly increase, values are
  /// finite, K >= 2 and the name count matches the channel count.
  void validate() const;

  /// Rows [begin, end).
  TimeSeriesFrame slice(std::size_t begin, std::size_t end) const;
};

/// Lagged + differenced design matrix, X = [X_d, dX_d].
///
/// Row i pairs the lagged vector x_d(k) with the forward difference
/// x_d(k+1) - x_d(k), where k is the sample index stored in `source_rows[i]`.
/// Lagged vectors are flattened channel-major: all channels at lag 0, then
/// all channels at lag 1, and so on.
struct AugmentedMatrix {
  Matrix rows;
  std::size_t lag = 0;
  std::size_t source_channel_count = 0;
  std::vector<Timestamp> row_timestamps;
  /// Index into the source frame of the newest sample of each lagged vector.
  std::vector<std::size_t> source_rows;
  /// Row indices where a new contiguous segment begins (always contains 0
  /// when non-empty). Rows never span a timestamp gap.
  std::vector<std::size_t> segment_starts;

  std::size_t row_count() const { return static_cast<std::size_t>(rows.rows()); }
  std::size_t lagged_width() const { return lag * source_channel_count; }
  std::size_t width() const { return static_cast<std::size_t>(rows.cols()); }

  auto lagged(Eigen::Index i) const { return rows.row(i).head(lagged_width()); }
  auto diff(Eigen::Index i) const { return rows.row(i).tail(lagged_width()); }
  auto lagged_block() const { return rows.leftCols(lagged_width()); }
  auto diff_block() const { return rows.rightCols(lagged_width()); }

  /// Rows selected by `index`, keeping metadata aligned.
  AugmentedMatrix select(const std::vector<std::size_t>& index) const;
};

struct LagSelection {
  std::size_t lag = 1;
  /// Set when no lag up to max_lag fell inside the band; lag == max_lag then.
  bool band_never_reached = false;
  /// Root-summed-squares autocorrelation for lags 1..lag (index 0 -> lag 1).
  std::vector<double> rss_autocorrelation;
};

/// Smallest lag h >= 1 whose root-summed-squares (across channels) biased
/// sample autocorrelation lies inside +/- confidence_band.
LagSelection select_lag(const TimeSeriesFrame& frame, double confidence_band = 0.01,
                        std::size_t max_lag = 120);

/// Lagged matrix: row r (r = 0..K-h) is [x(k), x(k-1), ..., x(k-h+1)] with k = r + h - 1.
Matrix build_lagged(const Matrix& values, std::size_t lag);

/// Forward first-order difference, row i = row(i+1) - row(i).
Matrix difference(const Matrix& matrix);

/// Gap-aware augmentation of a frame. A gap is a timestamp step larger than
/// 1.5x the median step; each contiguous segment is embedded independently
/// and segments shorter than lag + 1 samples are dropped.
AugmentedMatrix augment(const TimeSeriesFrame& frame, std::size_t lag);

/// Contiguous segments of a frame as [begin, end) sample ranges.
std::vector<std::pair<std::size_t, std::size_t>> contiguous_segments(const TimeSeriesFrame& frame);

}  // namespace msfa
