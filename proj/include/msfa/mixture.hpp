#pragma once

#include "msfa/common.hpp"

#include <string>
#include <vector>

namespace msfa {

struct GaussianComponent {
  double weight = 1.0;
  Vector mean;
  Matrix covariance;
};

struct EmConfig {
  std::size_t max_iter = 500;
  /// Stop when the relative log-likelihood improvement drops below this.
  double tol = 1e-8;
  /// Diagonal regularization added at every M-step: reg_relative * trace(S)/J
  /// with S the covariance of the whole fitted data set.
  double reg_relative = 1e-6;
  std::uint64_t seed = 42;
  /// k-means++ restarts used to seed EM; the lowest-inertia run wins.
  std::size_t init_restarts = 8;
  std::size_t kmeans_iter = 100;
  /// Collapse reinitializations allowed before em_fit gives up.
  std::size_t max_collapses = 3;
};

struct MixtureModel {
  std::vector<GaussianComponent> components;
  std::size_t dimension = 0;
  /// Log-likelihood of every retained parameter set, in iteration order,
  /// restarted after a collapse reinitialization.
  std::vector<double> fit_log;
  /// Soft sample counts K_g = sum_k gamma_k(g) at the final E-step.
  std::vector<double> effective_counts;
  EmConfig config;
  /// Human-readable record of collapse reinitializations.
  std::vector<std::string> events;
  bool converged = false;

  std::size_t size() const { return components.size(); }
};

struct Responsibilities {
  Matrix gamma;  ///< K x G
  /// Samples whose every component density underflowed; their row is uniform.
  std::vector<std::size_t> outliers;
};

/// Cached Cholesky factors of a mixture for repeated density evaluation.
class MixtureScorer {
 public:
  explicit MixtureScorer(const MixtureModel& model);

  std::size_t size() const { return factors_.size(); }
  std::size_t dimension() const { return dimension_; }

  /// K x G matrix of log(pi_g N(x_k | mu_g, Sigma_g)).
  Matrix weighted_log_densities(const Matrix& data) const;
  /// Same for one sample, written into `out` (size G).
  void weighted_log_densities(const Eigen::Ref<const RowVector>& sample, Vector& out) const;

 private:
  struct Factor {
    Matrix lower;      ///< Cholesky factor L with Sigma = L L^T
    Matrix inv_upper;  ///< L^-T, so that (x - mu) L^-T is whitened
    Vector mean;
    double log_norm = 0.0;  ///< log pi - 0.5 (J log 2pi + log|Sigma|)
  };
  std::vector<Factor> factors_;
  std::size_t dimension_ = 0;
};

/// Fits a G-component full-covariance Gaussian mixture with EM.
MixtureModel em_fit(const Matrix& data, std::size_t components, const EmConfig& config = {});

/// Per-sample, per-component log(pi_g N(x_k | mu_g, Sigma_g)), K x G.
Matrix weighted_log_densities(const MixtureModel& model, const Matrix& data);

/// Posterior component probabilities, computed in log-space.
Responsibilities responsibilities(const MixtureModel& model, const Matrix& data);

/// Single-sample posterior; returns false when all densities underflow (uniform row).
bool posterior(const MixtureModel& model, const Eigen::Ref<const RowVector>& sample, Vector& out);

/// argmax_g gamma_k(g), ties toward the lower index. A positive odd
/// `smooth_window` applies a running median filter to the labels.
std::vector<int> assign(const MixtureModel& model, const Matrix& data, std::size_t smooth_window = 0);

/// argmax over each row of a score matrix, ties toward the lower index.
std::vector<int> argmax_rows(const Matrix& scores);

/// Running median of integer labels over an odd window (edges use the shrunken window).
std::vector<int> median_smooth(const std::vector<int>& labels, std::size_t window);

/// Sum over samples of the log mixture density (log-sum-exp stabilized).
double log_likelihood(const MixtureModel& model, const Matrix& data);

/// Builds a component from the sample mean and (regularized) covariance of `data`.
GaussianComponent moment_component(const Matrix& data, double reg_relative, double weight);

}  // namespace msfa
