#include "msfa/mixture.hpp"

#include "msfa/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace msfa {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

/// Cholesky with escalating diagonal jitter for matrices that are PD only in theory.
Matrix robust_cholesky(const Matrix& cov) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  const double scale = std::max(cov.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  for (double jitter = 1e-12; jitter <= 1e-2; jitter *= 10.0) {
    Matrix bumped = cov;
    bumped.diagonal().array() += jitter * scale;
    llt.compute(bumped);
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  throw NumericError("covariance matrix is not positive definite");
}

double log_sum_exp(const Eigen::Ref<const RowVector>& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

Matrix regularized_covariance(const Matrix& scatter, double eps) {
  Matrix cov = 0.5 * (scatter + scatter.transpose());
  cov.diagonal().array() += eps;
  return cov;
}

/// Diagonal floor reg_relative * trace(S)/J of the whole data set's covariance.
double regularization(const Matrix& data, double reg_relative) {
  const Matrix centered = data.rowwise() - data.colwise().mean();
  const double trace = centered.squaredNorm() / static_cast<double>(data.rows());
  const double eps = reg_relative * trace / static_cast<double>(data.cols());
  return eps > 0.0 ? eps : reg_relative;
}

struct KMeansResult {
  std::vector<int> labels;
  double inertia = std::numeric_limits<double>::infinity();
};

KMeansResult kmeans_once(const Matrix& data, std::size_t G, Rng& rng, std::size_t iters) {
  const auto K = data.rows();
  Matrix centers(static_cast<Eigen::Index>(G), data.cols());
  // k-means++ seeding: first center uniform, the rest by squared distance.
  centers.row(0) = data.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(K))));
  Vector dist = (data.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (std::size_t g = 1; g < G; ++g) {
    const double total = dist.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double u = rng.uniform() * total;
      for (pick = 0; pick < K - 1; ++pick) {
        u -= dist[pick];
        if (u < 0.0) break;
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(K)));
    }
    centers.row(static_cast<Eigen::Index>(g)) = data.row(pick);
    dist = dist.cwiseMin((data.rowwise() - data.row(pick)).rowwise().squaredNorm());
  }

  KMeansResult out;
  out.labels.assign(static_cast<std::size_t>(K), -1);
  Matrix d2(K, static_cast<Eigen::Index>(G));
  for (std::size_t it = 0; it < iters; ++it) {
    for (Eigen::Index g = 0; g < static_cast<Eigen::Index>(G); ++g)
      d2.col(g) = (data.rowwise() - centers.row(g)).rowwise().squaredNorm();
    bool changed = false;
    double inertia = 0.0;
    for (Eigen::Index k = 0; k < K; ++k) {
      Eigen::Index best = 0;
      inertia += d2.row(k).minCoeff(&best);
      if (out.labels[static_cast<std::size_t>(k)] != static_cast<int>(best)) {
        out.labels[static_cast<std::size_t>(k)] = static_cast<int>(best);
        changed = true;
      }
    }
    out.inertia = inertia;
    if (!changed) break;
    Matrix sums = Matrix::Zero(static_cast<Eigen::Index>(G), data.cols());
    std::vector<double> counts(G, 0.0);
    for (Eigen::Index k = 0; k < K; ++k) {
      const auto g = out.labels[static_cast<std::size_t>(k)];
      sums.row(g) += data.row(k);
      counts[static_cast<std::size_t>(g)] += 1.0;
    }
    for (std::size_t g = 0; g < G; ++g)
      if (counts[g] > 0.0) centers.row(static_cast<Eigen::Index>(g)) = sums.row(static_cast<Eigen::Index>(g)) / counts[g];
  }
  return out;
}

std::vector<int> kmeans_labels(const Matrix& data, std::size_t G, const EmConfig& config) {
  Rng rng(config.seed);
  KMeansResult best;
  const auto restarts = std::max<std::size_t>(1, config.init_restarts);
  for (std::size_t r = 0; r < restarts; ++r) {
    auto run = kmeans_once(data, G, rng, config.kmeans_iter);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  return best.labels;
}

/// M-step: weights, means and regularized full covariances from responsibilities.
void maximize(const Matrix& data, const Matrix& gamma, double eps, MixtureModel& model) {
  const auto G = gamma.cols();
  const auto K = static_cast<double>(data.rows());
  model.components.resize(static_cast<std::size_t>(G));
  model.effective_counts.assign(static_cast<std::size_t>(G), 0.0);
  double weight_sum = 0.0;
  Matrix centered(data.rows(), data.cols());
  Matrix weighted(data.rows(), data.cols());
  for (Eigen::Index g = 0; g < G; ++g) {
    auto& comp = model.components[static_cast<std::size_t>(g)];
    const double Kg = gamma.col(g).sum();
    model.effective_counts[static_cast<std::size_t>(g)] = Kg;
    if (!(Kg > 0.0)) {
      comp.weight = 0.0;
      continue;
    }
    comp.mean.noalias() = data.transpose() * gamma.col(g);
    comp.mean /= Kg;
    centered = data.rowwise() - comp.mean.transpose();
    weighted = centered.array().colwise() * gamma.col(g).array();
    Matrix scatter(data.cols(), data.cols());
    scatter.noalias() = weighted.transpose() * centered;
    scatter /= Kg;
    comp.covariance = regularized_covariance(scatter, eps);
    comp.weight = Kg / K;
    weight_sum += comp.weight;
  }
  for (auto& comp : model.components) comp.weight /= weight_sum;
}

/// E-step: returns total log-likelihood and fills gamma.
double expect(const MixtureModel& model, const Matrix& data, Matrix& gamma) {
  const MixtureScorer scorer(model);
  const Matrix logd = scorer.weighted_log_densities(data);
  gamma.resize(logd.rows(), logd.cols());
  double ll = 0.0;
  for (Eigen::Index k = 0; k < logd.rows(); ++k) {
    const double lse = log_sum_exp(logd.row(k));
    ll += lse;
    if (std::isfinite(lse)) {
      gamma.row(k) = (logd.row(k).array() - lse).exp();
      gamma.row(k) /= gamma.row(k).sum();
    } else {
      gamma.row(k).setConstant(1.0 / static_cast<double>(logd.cols()));
    }
  }
  return ll;
}

}  // namespace

MixtureScorer::MixtureScorer(const MixtureModel& model) : dimension_(model.dimension) {
  factors_.reserve(model.size());
  for (const auto& comp : model.components) {
    Factor f;
    f.mean = comp.mean;
    if (comp.weight > 0.0) {
      f.lower = robust_cholesky(comp.covariance);
      f.inv_upper = f.lower.triangularView<Eigen::Lower>()
                        .solve(Matrix::Identity(f.lower.rows(), f.lower.cols()))
                        .transpose();
      const double log_det = 2.0 * f.lower.diagonal().array().log().sum();
      f.log_norm = std::log(comp.weight) -
                   0.5 * (static_cast<double>(dimension_) * kLog2Pi + log_det);
    } else {
      f.log_norm = -std::numeric_limits<double>::infinity();
    }
    factors_.push_back(std::move(f));
  }
}

Matrix MixtureScorer::weighted_log_densities(const Matrix& data) const {
  if (static_cast<std::size_t>(data.cols()) != dimension_)
    throw InputError("data width does not match mixture dimension");
  Matrix out(data.rows(), static_cast<Eigen::Index>(factors_.size()));
  Matrix centered(data.rows(), data.cols());
  Matrix z(data.rows(), data.cols());
  for (std::size_t g = 0; g < factors_.size(); ++g) {
    const auto& f = factors_[g];
    const auto col = static_cast<Eigen::Index>(g);
    if (!std::isfinite(f.log_norm)) {
      out.col(col).setConstant(f.log_norm);
      continue;
    }
    centered = data.rowwise() - f.mean.transpose();
    z.noalias() = centered * f.inv_upper;
    out.col(col) = (f.log_norm - 0.5 * z.rowwise().squaredNorm().array()).matrix();
  }
  return out;
}

void MixtureScorer::weighted_log_densities(const Eigen::Ref<const RowVector>& sample, Vector& out) const {
  if (static_cast<std::size_t>(sample.size()) != dimension_)
    throw InputError("sample width does not match mixture dimension");
  out.resize(static_cast<Eigen::Index>(factors_.size()));
  for (std::size_t g = 0; g < factors_.size(); ++g) {
    const auto& f = factors_[g];
    if (!std::isfinite(f.log_norm)) {
      out[static_cast<Eigen::Index>(g)] = f.log_norm;
      continue;
    }
    const Vector z = f.lower.triangularView<Eigen::Lower>().solve((sample.transpose() - f.mean).eval());
    out[static_cast<Eigen::Index>(g)] = f.log_norm - 0.5 * z.squaredNorm();
  }
}

GaussianComponent moment_component(const Matrix& data, double reg_relative, double weight) {
  if (data.rows() < 1) throw InputError("cannot build a component from zero samples");
  GaussianComponent comp;
  comp.weight = weight;
  comp.mean = data.colwise().mean().transpose();
  const Matrix centered = data.rowwise() - comp.mean.transpose();
  const Matrix scatter = centered.transpose() * centered / static_cast<double>(data.rows());
  comp.covariance = regularized_covariance(scatter, regularization(data, reg_relative));
  return comp;
}

MixtureModel em_fit(const Matrix& data, std::size_t G, const EmConfig& config) {
  if (G < 1) throw InputError("mixture needs at least one component");
  if (data.rows() < static_cast<Eigen::Index>(G))
    throw InputError("fewer samples than mixture components");
  if (!data.allFinite()) throw InputError("mixture data contains non-finite values");

  MixtureModel model;
  model.dimension = static_cast<std::size_t>(data.cols());
  model.config = config;
  const auto K = data.rows();

  Matrix gamma = Matrix::Zero(K, static_cast<Eigen::Index>(G));
  if (G == 1) {
    gamma.setOnes();
  } else {
    const auto labels = kmeans_labels(data, G, config);
    for (Eigen::Index k = 0; k < K; ++k) gamma(k, labels[static_cast<std::size_t>(k)]) = 1.0;
  }
  const double eps = regularization(data, config.reg_relative);
  maximize(data, gamma, eps, model);

  std::size_t collapses = 0;
  MixtureModel retained = model;
  Matrix retained_gamma;
  double prev = -std::numeric_limits<double>::infinity();

  for (std::size_t it = 0; it < config.max_iter; ++it) {
    // A component emptied by the previous M-step is reseeded at the sample
    // the current mixture explains worst.
    for (std::size_t g = 0; g < G; ++g) {
      if (model.effective_counts[g] >= 1.0) continue;
      if (++collapses > config.max_collapses)
        throw NumericError("mixture component collapsed repeatedly; reduce the component count");
      MixtureModel live = model;
      for (auto& c : live.components)
        if (!(c.weight > 0.0)) c.weight = 1e-300;
      const Matrix logd = MixtureScorer(live).weighted_log_densities(data);
      Eigen::Index worst = 0;
      double worst_ll = std::numeric_limits<double>::infinity();
      for (Eigen::Index k = 0; k < K; ++k) {
        const double v = log_sum_exp(logd.row(k));
        if (v < worst_ll) {
          worst_ll = v;
          worst = k;
        }
      }
      auto& comp = model.components[g];
      comp.mean = data.row(worst).transpose();
      comp.covariance = moment_component(data, config.reg_relative, 1.0).covariance;
      comp.weight = 1.0 / static_cast<double>(K);
      double total = 0.0;
      for (const auto& c : model.components) total += c.weight;
      for (auto& c : model.components) c.weight /= total;
      model.effective_counts[g] = 1.0;
      std::ostringstream ev;
      ev << "iteration " << it << ": component " << g << " collapsed; reseeded at sample " << worst;
      model.events.push_back(ev.str());
      model.fit_log.clear();
      prev = -std::numeric_limits<double>::infinity();
    }

    const double ll = expect(model, data, gamma);
    if (!std::isfinite(ll)) throw NumericError("mixture log-likelihood is not finite");
    if (ll < prev) {
      // The regularized M-step is not an exact maximizer; a decrease means
      // the fit has converged to within that perturbation.
      model = std::move(retained);
      gamma = std::move(retained_gamma);
      model.converged = true;
      break;
    }
    model.fit_log.push_back(ll);
    const bool done = std::isfinite(prev) && (ll - prev) <= config.tol * std::abs(prev);
    prev = ll;
    if (done) {
      model.converged = true;
      break;
    }
    retained = model;
    retained_gamma = gamma;
    maximize(data, gamma, eps, model);
    model.fit_log = retained.fit_log;
    model.events = retained.events;
    model.config = config;
    model.dimension = retained.dimension;
  }

  // Effective counts of the retained parameters.
  model.effective_counts.assign(G, 0.0);
  for (std::size_t g = 0; g < G; ++g)
    model.effective_counts[g] = gamma.col(static_cast<Eigen::Index>(g)).sum();
  return model;
}

Matrix weighted_log_densities(const MixtureModel& model, const Matrix& data) {
  return MixtureScorer(model).weighted_log_densities(data);
}

Responsibilities responsibilities(const MixtureModel& model, const Matrix& data) {
  const Matrix logd = weighted_log_densities(model, data);
  Responsibilities out;
  out.gamma.resize(logd.rows(), logd.cols());
  for (Eigen::Index k = 0; k < logd.rows(); ++k) {
    const double lse = log_sum_exp(logd.row(k));
    if (std::isfinite(lse)) {
      out.gamma.row(k) = (logd.row(k).array() - lse).exp();
      out.gamma.row(k) /= out.gamma.row(k).sum();
    } else {
      out.gamma.row(k).setConstant(1.0 / static_cast<double>(logd.cols()));
      out.outliers.push_back(static_cast<std::size_t>(k));
    }
  }
  return out;
}

bool posterior(const MixtureModel& model, const Eigen::Ref<const RowVector>& sample, Vector& out) {
  Vector logd;
  MixtureScorer(model).weighted_log_densities(sample, logd);
  const double lse = log_sum_exp(logd.transpose());
  if (!std::isfinite(lse)) {
    out = Vector::Constant(logd.size(), 1.0 / static_cast<double>(logd.size()));
    return false;
  }
  out = (logd.array() - lse).exp();
  out /= out.sum();
  return true;
}

std::vector<int> argmax_rows(const Matrix& scores) {
  std::vector<int> labels(static_cast<std::size_t>(scores.rows()), 0);
  for (Eigen::Index k = 0; k < scores.rows(); ++k) {
    Eigen::Index best = 0;
    for (Eigen::Index g = 1; g < scores.cols(); ++g)
      if (scores(k, g) > scores(k, best)) best = g;
    labels[static_cast<std::size_t>(k)] = static_cast<int>(best);
  }
  return labels;
}

std::vector<int> median_smooth(const std::vector<int>& labels, std::size_t window) {
  if (window < 2) return labels;
  if (window % 2 == 0) throw InputError("median smoothing window must be odd");
  const auto half = window / 2;
  std::vector<int> out(labels.size());
  std::vector<int> buf;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto lo = i >= half ? i - half : 0;
    const auto hi = std::min(labels.size(), i + half + 1);
    buf.assign(labels.begin() + static_cast<std::ptrdiff_t>(lo),
               labels.begin() + static_cast<std::ptrdiff_t>(hi));
    std::nth_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(buf.size() / 2), buf.end());
    out[i] = buf[buf.size() / 2];
  }
  return out;
}

std::vector<int> assign(const MixtureModel& model, const Matrix& data, std::size_t smooth_window) {
  auto labels = argmax_rows(responsibilities(model, data).gamma);
  return smooth_window > 1 ? median_smooth(labels, smooth_window) : labels;
}

double log_likelihood(const MixtureModel& model, const Matrix& data) {
  const Matrix logd = weighted_log_densities(model, data);
  double total = 0.0;
  for (Eigen::Index k = 0; k < logd.rows(); ++k) total += log_sum_exp(logd.row(k));
  return total;
}

}  // namespace msfa
