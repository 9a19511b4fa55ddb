#include "msfa/limits.hpp"

#include "msfa/distributions.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace msfa {

namespace {

const char* kNames[4] = {"steady slow", "steady residual", "dynamic slow", "dynamic residual"};

ScaledChi2 fit_t2(const Matrix& features, const char* name) {
  const Vector t2 = features.rowwise().squaredNorm();
  const double m = t2.mean();
  const double v = (t2.array() - m).square().mean();
  if (!(m > 0.0) || !(v > 0.0)) {
    std::ostringstream msg;
    msg << "zero-variance T2 statistic in the " << name << " subspace";
    throw NumericError(msg.str());
  }
  return ScaledChi2::from_moments(m, v);
}

Matrix sample_covariance(const Matrix& features) {
  const Matrix centered = features.rowwise() - features.colwise().mean();
  return centered.transpose() * centered / static_cast<double>(features.rows() - 1);
}

double quadratic(const Matrix& lower, const Eigen::Ref<const RowVector>& v) {
  return lower.triangularView<Eigen::Lower>().solve(v.transpose()).squaredNorm();
}

}  // namespace

ScaledChi2 ScaledChi2::from_moments(double mean, double variance) {
  ScaledChi2 out;
  out.g = variance / (2.0 * mean);
  out.dof = 2.0 * mean * mean / variance;
  return out;
}

double ScaledChi2::cdf(double x) const { return dist::chi2_cdf(x / g, dof); }
double ScaledChi2::quantile(double p) const { return g * dist::chi2_quantile(p, dof); }

double ScaledF::factor() const { return dim * (count * count - 1.0) / (count * (count - dim)); }
double ScaledF::cdf(double x) const { return dist::f_cdf(x / factor(), dim, count - dim); }
double ScaledF::quantile(double p) const { return factor() * dist::f_quantile(p, dim, count - dim); }

Matrix spd_factor(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  const double scale = std::max(m.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  for (double eps = 1e-12; eps <= 1e-2; eps *= 10.0) {
    Matrix bumped = m;
    bumped.diagonal().array() += eps * scale;
    llt.compute(bumped);
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  throw NumericError("dynamic feature covariance is not positive definite");
}

ControlLimits fit_limits(const Features& training, double alpha) {
  if (!(alpha > 0.0 && alpha < 0.5)) throw InputError("alpha must lie in (0, 0.5)");
  const auto K = training.ss.rows();
  const auto P = training.ss.cols();
  const auto L = training.sr.cols();
  if (P < 1 || L < 1) throw InputError("both subspaces need at least one feature");
  if (K <= std::max(P, L) + 1) {
    std::ostringstream msg;
    msg << "control limits need more than " << std::max(P, L) + 1 << " rows, got " << K;
    throw InputError(msg.str());
  }

  ControlLimits out;
  out.alpha = alpha;
  out.count = static_cast<std::size_t>(K);
  out.t2_s = fit_t2(training.ss, kNames[0]);
  out.t2_r = fit_t2(training.sr, kNames[1]);
  out.lambda_s = sample_covariance(training.ds);
  out.lambda_r = sample_covariance(training.dr);
  for (int i = 0; i < 2; ++i) {
    const Matrix& lam = i == 0 ? out.lambda_s : out.lambda_r;
    if (!(lam.trace() > 0.0)) {
      std::ostringstream msg;
      msg << "zero-variance D2 statistic in the " << kNames[2 + i] << " subspace";
      throw NumericError(msg.str());
    }
  }
  out.d2_s = ScaledF{static_cast<double>(P), static_cast<double>(K)};
  out.d2_r = ScaledF{static_cast<double>(L), static_cast<double>(K)};
  out.limit = {out.t2_s.quantile(1.0 - alpha), out.t2_r.quantile(1.0 - alpha),
               out.d2_s.quantile(1.0 - alpha), out.d2_r.quantile(1.0 - alpha)};
  return out;
}

LimitScorer::LimitScorer(const ControlLimits& limits)
    : t2_s_(limits.t2_s),
      t2_r_(limits.t2_r),
      d2_s_(limits.d2_s),
      d2_r_(limits.d2_r),
      lower_s_(spd_factor(limits.lambda_s)), lower_r_(spd_factor(limits.lambda_r)) {}

Quad LimitScorer::score(const Eigen::Ref<const RowVector>& ss, const Eigen::Ref<const RowVector>& sr,
                        const Eigen::Ref<const RowVector>& ds,
                        const Eigen::Ref<const RowVector>& dr) const {
  if (ds.size() != lower_s_.rows() || dr.size() != lower_r_.rows() || ss.size() != ds.size() ||
      sr.size() != dr.size())
    throw InputError("feature dimensions do not match the control limits");
  return {ss.squaredNorm(), sr.squaredNorm(), quadratic(lower_s_, ds), quadratic(lower_r_, dr)};
}

Quad LimitScorer::probabilities(const Quad& s) const {
  return {t2_s_.cdf(s[0]), t2_r_.cdf(s[1]), d2_s_.cdf(s[2]), d2_r_.cdf(s[3])};
}

Quad score(const ControlLimits& limits, const Eigen::Ref<const RowVector>& ss,
           const Eigen::Ref<const RowVector>& sr, const Eigen::Ref<const RowVector>& ds,
           const Eigen::Ref<const RowVector>& dr) {
  return LimitScorer(limits).score(ss, sr, ds, dr);
}

Quad local_probabilities(const ControlLimits& limits, const Quad& statistics) {
  for (double s : statistics)
    if (!(s >= 0.0) || !std::isfinite(s)) throw InputError("statistics must be finite and non-negative");
  return LimitScorer(limits).probabilities(statistics);
}

}  // namespace msfa
