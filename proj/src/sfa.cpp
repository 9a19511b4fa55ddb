#include "msfa/sfa.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace msfa {

SfaSpectrum fit_sfa(const Matrix& x, const Matrix& xdot, double floor_relative) {
  const auto K = x.rows();
  const auto n = x.cols();
  if (xdot.cols() != n || xdot.rows() != K)
    throw InputError("steady and difference matrices must have the same shape");
  if (K <= n) {
    std::ostringstream msg;
    msg << "SFA needs more rows than columns (" << K << " rows, " << n << " columns)";
    throw InputError(msg.str());
  }

  const Matrix cov = x.transpose() * x / static_cast<double>(K);
  Eigen::SelfAdjointEigenSolver<Matrix> steady(cov);
  if (steady.info() != Eigen::Success) throw NumericError("steady covariance eigensolver failed");
  const Vector& ev = steady.eigenvalues();
  const double floor = floor_relative * std::max(ev.maxCoeff(), 0.0);
  Eigen::Index first = 0;
  while (first < n && !(ev[first] > floor)) ++first;
  if (first == n) throw NumericError("steady covariance has no direction above the floor");

  const auto r = n - first;
  const Matrix whiten = steady.eigenvectors().rightCols(r) *
                        ev.tail(r).cwiseSqrt().cwiseInverse().asDiagonal();
  const Matrix zdot = xdot * whiten;
  const Matrix dcov = zdot.transpose() * zdot / static_cast<double>(K);
  Eigen::SelfAdjointEigenSolver<Matrix> dynamic(dcov);
  if (dynamic.info() != Eigen::Success) throw NumericError("difference covariance eigensolver failed");

  SfaSpectrum out;
  out.weights = whiten * dynamic.eigenvectors();
  out.slowness = dynamic.eigenvalues().cwiseMax(0.0);
  out.dropped = static_cast<std::size_t>(first);
  // Fix each direction's sign so that its largest loading is positive.
  for (Eigen::Index i = 0; i < out.weights.cols(); ++i) {
    Eigen::Index at = 0;
    out.weights.col(i).cwiseAbs().maxCoeff(&at);
    if (out.weights(at, i) < 0.0) out.weights.col(i) = -out.weights.col(i);
  }
  return out;
}

KneeSelection select_num_slow_features(const Vector& slowness) {
  const auto r = slowness.size();
  if (r < 2) throw InputError("knee selection needs at least 2 slowness values");
  KneeSelection out;
  if (r == 2) return out;
  const Vector d2 = slowness.tail(r - 2) - 2.0 * slowness.segment(1, r - 2) + slowness.head(r - 2);
  const double span = slowness.cwiseAbs().maxCoeff();
  if (d2.cwiseAbs().maxCoeff() <= 1e-9 * std::max(span, 1e-300)) {
    out.count = std::max<std::size_t>(1, static_cast<std::size_t>(r) / 2);
    out.degenerate = true;
    return out;
  }
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < d2.size(); ++i)
    if (d2[i] > d2[best]) best = i;
  // d2[i] is centred on element i+1, the last slow feature before the jump.
  out.count = std::clamp<std::size_t>(static_cast<std::size_t>(best) + 2, 1,
                                      static_cast<std::size_t>(r) - 1);
  return out;
}

PatternSfa fit_pattern_sfa(const Matrix& lagged, const Matrix& diffs, const Vector& mean,
                           const Vector& variance, std::size_t pattern_id,
                           std::size_t slow_count) {
  const auto n = lagged.cols();
  if (mean.size() < n || variance.size() < n)
    throw InputError("normalization vectors are shorter than the lagged width");
  PatternSfa out;
  out.pattern_id = pattern_id;
  out.scale = variance.head(n).cwiseMax(0.0).cwiseSqrt();
  for (Eigen::Index j = 0; j < n; ++j)
    if (!(out.scale[j] > 0.0)) out.scale[j] = 1.0;
  Matrix z = (lagged.rowwise() - mean.head(n).transpose()).array().rowwise() /
             out.scale.transpose().array();
  const RowVector residual_mean = z.colwise().mean();
  z.rowwise() -= residual_mean;
  out.center = mean.head(n) + out.scale.cwiseProduct(residual_mean.transpose());
  const Matrix zdot = diffs.array().rowwise() / out.scale.transpose().array();

  SfaSpectrum spectrum;
  try {
    spectrum = fit_sfa(z, zdot);
  } catch (const Error& e) {
    std::ostringstream msg;
    msg << "pattern " << pattern_id << ": " << e.what();
    throw NumericError(msg.str());
  }
  const auto r = spectrum.slowness.size();
  if (r < 2) {
    std::ostringstream msg;
    msg << "pattern " << pattern_id << " has fewer than 2 usable directions";
    throw NumericError(msg.str());
  }
  std::size_t P = slow_count;
  if (P == 0) {
    const auto knee = select_num_slow_features(spectrum.slowness);
    P = knee.count;
    out.knee_degenerate = knee.degenerate;
  }
  P = std::clamp<std::size_t>(P, 1, static_cast<std::size_t>(r) - 1);
  const auto p = static_cast<Eigen::Index>(P);
  out.w_slow = spectrum.weights.leftCols(p);
  out.w_resid = spectrum.weights.rightCols(r - p);
  out.slowness = spectrum.slowness;
  out.dropped = spectrum.dropped;
  return out;
}

Features project(const PatternSfa& pattern, const Matrix& lagged, const Matrix& diffs) {
  const auto n = static_cast<Eigen::Index>(pattern.input_width());
  if (lagged.cols() != n || diffs.cols() != n || lagged.rows() != diffs.rows())
    throw InputError("projection input width does not match the pattern");
  const Matrix z = (lagged.rowwise() - pattern.center.transpose()).array().rowwise() /
                   pattern.scale.transpose().array();
  const Matrix zdot = diffs.array().rowwise() / pattern.scale.transpose().array();
  Features f;
  f.ss = z * pattern.w_slow;
  f.sr = z * pattern.w_resid;
  f.ds = zdot * pattern.w_slow;
  f.dr = zdot * pattern.w_resid;
  return f;
}

}  // namespace msfa
