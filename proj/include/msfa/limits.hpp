#pragma once

#include "msfa/common.hpp"
#include "msfa/sfa.hpp"

#include <array>
#include <cstddef>

namespace msfa {

/// Index order used everywhere for the four statistics and probabilities.
enum Index : std::size_t { kSteadySlow = 0, kSteadyResidual = 1, kDynamicSlow = 2, kDynamicResidual = 3 };

using Quad = std::array<double, 4>;

/// g * chi2(dof), moment-matched to a statistic with mean m and variance v.
struct ScaledChi2 {
  double g = 1.0;
  double dof = 1.0;

  static ScaledChi2 from_moments(double mean, double variance);
  double cdf(double x) const;
  double quantile(double p) const;
};

/// Hotelling-type limit: c * F(d1, d2) with c = d1 (K^2 - 1) / (K (K - d1)), d2 = K - d1.
struct ScaledF {
  double dim = 1.0;
  double count = 2.0;

  double factor() const;
  double cdf(double x) const;
  double quantile(double p) const;
};

struct ControlLimits {
  double alpha = 0.01;
  std::size_t count = 0;  ///< training rows K_g
  ScaledChi2 t2_s, t2_r;
  ScaledF d2_s, d2_r;
  Matrix lambda_s, lambda_r;  ///< covariances of the differenced features
  Quad limit{};               ///< 1 - alpha quantile of each reference distribution
};

/// Cholesky factors of the dynamic covariances, for repeated scoring.
class LimitScorer {
 public:
  explicit LimitScorer(const ControlLimits& limits);
  Quad score(const Eigen::Ref<const RowVector>& ss, const Eigen::Ref<const RowVector>& sr,
             const Eigen::Ref<const RowVector>& ds, const Eigen::Ref<const RowVector>& dr) const;
  Quad probabilities(const Quad& statistics) const;

 private:
  ScaledChi2 t2_s_, t2_r_;
  ScaledF d2_s_, d2_r_;
  Matrix lower_s_, lower_r_;
};

ControlLimits fit_limits(const Features& training, double alpha);

/// T2_s, T2_r, D2_s, D2_r for one sample.
Quad score(const ControlLimits& limits, const Eigen::Ref<const RowVector>& ss,
           const Eigen::Ref<const RowVector>& sr, const Eigen::Ref<const RowVector>& ds,
           const Eigen::Ref<const RowVector>& dr);

/// Reference-distribution CDF of each statistic.
Quad local_probabilities(const ControlLimits& limits, const Quad& statistics);

/// Cholesky factor of an SPD matrix, adding eps * I jitter when needed.
Matrix spd_factor(const Matrix& m);

}  // namespace msfa
