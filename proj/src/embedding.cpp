#include "msfa/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace msfa {

void TimeSeriesFrame::validate() const {
  if (values.rows() < 2) throw InputError("frame needs at least 2 samples");
  if (timestamps.size() != rows())
    throw InputError("timestamp count does not match sample count");
  if (!channel_names.empty() && channel_names.size() != channels())
    throw InputError("channel name count does not match channel count");
  for (std::size_t k = 1; k < timestamps.size(); ++k) {
    if (timestamps[k] <= timestamps[k - 1]) {
      std::ostringstream msg;
      msg << "timestamps must be strictly increasing (row " << k << ")";
      throw InputError(msg.str());
    }
  }
  if (!values.allFinite()) throw InputError("frame contains NaN or infinite values");
}

TimeSeriesFrame TimeSeriesFrame::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > rows()) throw InputError("frame slice out of range");
  TimeSeriesFrame out;
  out.timestamps.assign(timestamps.begin() + static_cast<std::ptrdiff_t>(begin),
                        timestamps.begin() + static_cast<std::ptrdiff_t>(end));
  out.values = values.middleRows(static_cast<Eigen::Index>(begin),
                                 static_cast<Eigen::Index>(end - begin));
  out.channel_names = channel_names;
  return out;
}

AugmentedMatrix AugmentedMatrix::select(const std::vector<std::size_t>& index) const {
  AugmentedMatrix out;
  out.lag = lag;
  out.source_channel_count = source_channel_count;
  out.rows.resize(static_cast<Eigen::Index>(index.size()), rows.cols());
  out.row_timestamps.reserve(index.size());
  out.source_rows.reserve(index.size());
  for (std::size_t r = 0; r < index.size(); ++r) {
    const auto i = index[r];
    out.rows.row(static_cast<Eigen::Index>(r)) = rows.row(static_cast<Eigen::Index>(i));
    out.row_timestamps.push_back(row_timestamps[i]);
    out.source_rows.push_back(source_rows[i]);
    if (r == 0 || source_rows[i] != source_rows[index[r - 1]] + 1)
      out.segment_starts.push_back(r);
  }
  return out;
}

LagSelection select_lag(const TimeSeriesFrame& frame, double confidence_band,
                        std::size_t max_lag) {
  frame.validate();
  if (!(confidence_band > 0.0 && confidence_band < 1.0))
    throw InputError("confidence band must lie in (0, 1)");
  const auto K = frame.rows();
  if (max_lag < 1 || 2 * max_lag >= K) {
    std::ostringstream msg;
    msg << "max_lag " << max_lag << " requires more than " << 2 * max_lag
        << " samples, frame has " << K;
    throw InputError(msg.str());
  }

  const Matrix centered = frame.values.rowwise() - frame.values.colwise().mean();
  const RowVector energy = centered.colwise().squaredNorm();
  for (Eigen::Index j = 0; j < energy.size(); ++j) {
    if (!(energy[j] > 0.0)) {
      const std::string name = frame.channel_names.empty()
                                   ? "#" + std::to_string(j)
                                   : frame.channel_names[static_cast<std::size_t>(j)];
      throw InputError("channel '" + name + "' is constant; autocorrelation undefined");
    }
  }

  LagSelection result;
  const auto n = static_cast<Eigen::Index>(K);
  for (std::size_t h = 1; h <= max_lag; ++h) {
    const auto lag = static_cast<Eigen::Index>(h);
    double sum_sq = 0.0;
    for (Eigen::Index j = 0; j < centered.cols(); ++j) {
      const double cross = centered.col(j).head(n - lag).dot(centered.col(j).tail(n - lag));
      const double r = cross / energy[j];
      sum_sq += r * r;
    }
    const double rss = std::sqrt(sum_sq);
    result.rss_autocorrelation.push_back(rss);
    if (rss < confidence_band) {
      result.lag = h;
      return result;
    }
  }
  result.lag = max_lag;
  result.band_never_reached = true;
  return result;
}

Matrix build_lagged(const Matrix& values, std::size_t lag) {
  const auto K = static_cast<std::size_t>(values.rows());
  if (lag < 1) throw InputError("lag must be at least 1");
  if (lag >= K) throw InputError("lag must be smaller than the sample count");
  const auto J = values.cols();
  const auto h = static_cast<Eigen::Index>(lag);
  const auto out_rows = static_cast<Eigen::Index>(K - lag + 1);
  Matrix out(out_rows, J * h);
  for (Eigen::Index l = 0; l < h; ++l)
    out.middleCols(l * J, J) = values.middleRows(h - 1 - l, out_rows);
  return out;
}

Matrix difference(const Matrix& matrix) {
  if (matrix.rows() < 2) throw InputError("difference needs at least 2 rows");
  const auto n = matrix.rows() - 1;
  return matrix.bottomRows(n) - matrix.topRows(n);
}

std::vector<std::pair<std::size_t, std::size_t>> contiguous_segments(const TimeSeriesFrame& frame) {
  std::vector<std::pair<std::size_t, std::size_t>> segments;
  const auto K = frame.timestamps.size();
  if (K == 0) return segments;
  if (K < 3) {
    segments.emplace_back(0, K);
    return segments;
  }
  std::vector<Timestamp> steps;
  steps.reserve(K - 1);
  for (std::size_t k = 1; k < K; ++k) steps.push_back(frame.timestamps[k] - frame.timestamps[k - 1]);
  std::vector<Timestamp> sorted = steps;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2),
                   sorted.end());
  const double nominal = static_cast<double>(sorted[sorted.size() / 2]);
  std::size_t begin = 0;
  for (std::size_t k = 1; k < K; ++k) {
    if (static_cast<double>(steps[k - 1]) > 1.5 * nominal) {
      segments.emplace_back(begin, k);
      begin = k;
    }
  }
  segments.emplace_back(begin, K);
  return segments;
}

AugmentedMatrix augment(const TimeSeriesFrame& frame, std::size_t lag) {
  frame.validate();
  if (lag < 1) throw InputError("lag must be at least 1");
  if (frame.rows() <= lag + 1) {
    std::ostringstream msg;
    msg << "augmentation with lag " << lag << " needs more than " << lag + 1
        << " samples, frame has " << frame.rows();
    throw InputError(msg.str());
  }

  AugmentedMatrix out;
  out.lag = lag;
  out.source_channel_count = frame.channels();
  const auto width = static_cast<Eigen::Index>(2 * lag * frame.channels());

  std::vector<Matrix> blocks;
  std::size_t total = 0;
  for (const auto& [begin, end] : contiguous_segments(frame)) {
    if (end - begin < lag + 1) continue;
    const Matrix seg = frame.values.middleRows(static_cast<Eigen::Index>(begin),
                                               static_cast<Eigen::Index>(end - begin));
    const Matrix lagged = build_lagged(seg, lag);
    const Matrix diffs = difference(lagged);
    Matrix block(diffs.rows(), width);
    block << lagged.topRows(diffs.rows()), diffs;
    out.segment_starts.push_back(total);
    for (Eigen::Index i = 0; i < block.rows(); ++i) {
      const auto k = begin + lag - 1 + static_cast<std::size_t>(i);
      out.source_rows.push_back(k);
      out.row_timestamps.push_back(frame.timestamps[k]);
    }
    total += static_cast<std::size_t>(block.rows());
    blocks.push_back(std::move(block));
  }
  if (total == 0) throw InputError("no contiguous segment is long enough for the requested lag");

  out.rows.resize(static_cast<Eigen::Index>(total), width);
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    out.rows.middleRows(at, b.rows()) = b;
    at += b.rows();
  }
  return out;
}

}  // namespace msfa
