#pragma once

#include "msfa/common.hpp"

#include <cstddef>

namespace msfa {

/// Full slow-feature solution of one pattern, ordered by ascending slowness.
struct SfaSpectrum {
  Matrix weights;   ///< n x r, column i is the i-th slowest direction
  Vector slowness;  ///< r values of <s_dot^2>, ascending
  /// Input directions whose steady variance fell below the floor (r = n - dropped).
  std::size_t dropped = 0;
};

struct KneeSelection {
  std::size_t count = 1;
  bool degenerate = false;
};

/// Per-pattern SFA model: standardization plus the slow/residual split.
struct PatternSfa {
  std::size_t pattern_id = 0;
  Vector center;  ///< subtracted from the lagged vector
  Vector scale;   ///< per-coordinate divisor, applied to lagged and differenced halves
  Matrix w_slow;  ///< n x P
  Matrix w_resid; ///< n x L
  Vector slowness;
  std::size_t dropped = 0;
  bool knee_degenerate = false;

  std::size_t input_width() const { return static_cast<std::size_t>(center.size()); }
  std::size_t slow_count() const { return static_cast<std::size_t>(w_slow.cols()); }
  std::size_t residual_count() const { return static_cast<std::size_t>(w_resid.cols()); }
};

/// Steady and dynamic features of one or more samples (one row per sample).
struct Features {
  Matrix ss, sr, ds, dr;
};

/// Solves min <s_dot^2> s.t. <s^2> = 1, <s_i s_j> = 0 on already standardized
/// steady rows `x` (zero mean) and their differences `xdot`.
/// Steady eigen-directions below floor_relative * largest are dropped.
SfaSpectrum fit_sfa(const Matrix& x, const Matrix& xdot, double floor_relative = 1e-10);

/// Knee of the ascending slowness spectrum: the count before the point of
/// largest second difference, limited to [1, r-1].
KneeSelection select_num_slow_features(const Vector& slowness);

/// Standardizes a pattern with the mixture component's mean and diagonal
/// variance (lagged half), fits SFA and splits at the knee (or `slow_count` if nonzero).
PatternSfa fit_pattern_sfa(const Matrix& lagged, const Matrix& diffs, const Vector& mean,
                           const Vector& variance, std::size_t pattern_id,
                           std::size_t slow_count = 0);

/// Projects lagged rows and their differences onto both subspaces.
Features project(const PatternSfa& pattern, const Matrix& lagged, const Matrix& diffs);

}  // namespace msfa
