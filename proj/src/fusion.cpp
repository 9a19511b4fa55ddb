#include "msfa/fusion.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace msfa {

namespace {

constexpr const char* kStatusNames[] = {"Normal", "NormalSwitching", "NewPattern", "Degradation",
                                        "Fault"};
constexpr const char* kStatusSnake[] = {"normal", "normal_switching", "new_pattern", "degradation",
                                        "fault"};

Quad pattern_probabilities(const LimitScorer& scorer, const Features& f, Eigen::Index k) {
  return scorer.probabilities(scorer.score(f.ss.row(k), f.sr.row(k), f.ds.row(k), f.dr.row(k)));
}

Features project_row(const PatternSfa& sfa, const Eigen::Ref<const RowVector>& row) {
  const auto n = static_cast<Eigen::Index>(sfa.input_width());
  if (row.size() != 2 * n) throw InputError("augmented row width does not match the model");
  return project(sfa, row.head(n), row.tail(n));
}

}  // namespace

const char* status_name(HealthStatus status) { return kStatusNames[static_cast<int>(status)]; }

HealthStatus parse_status(const std::string& name) {
  for (int i = 0; i < 5; ++i)
    if (name == kStatusNames[i] || name == kStatusSnake[i]) return static_cast<HealthStatus>(i);
  throw InputError("unknown health status '" + name + "'");
}

void MsfaModel::validate() const {
  if (lag < 1 || channels < 1) throw InputError("model lag and channel count must be positive");
  if (!channel_names.empty() && channel_names.size() != channels)
    throw InputError("model channel names do not match the channel count");
  if (patterns.empty() || mixture.size() != patterns.size())
    throw InputError("pattern count differs between mixture and pattern models");
  if (mixture.dimension != 2 * lagged_width())
    throw InputError("mixture dimension does not match lag and channel count");
  if (!(alpha > 0.0 && alpha < 0.5)) throw InputError("alpha must lie in (0, 0.5)");
  if (window < 1) throw InputError("persistence window must be at least 1");
  for (const auto& p : patterns)
    if (p.sfa.input_width() != lagged_width())
      throw InputError("pattern input width does not match the model");
}

std::vector<HealthStatus> StreamResult::statuses() const {
  std::vector<HealthStatus> out;
  out.reserve(diagnoses.size());
  for (const auto& d : diagnoses) out.push_back(d.status);
  return out;
}

Monitor::Monitor(const MsfaModel& model)
    : model_(std::make_shared<const MsfaModel>(model)), mixture_(model.mixture) {
  model.validate();
  limits_.reserve(model.size());
  for (const auto& p : model.patterns) limits_.emplace_back(p.limits);
}

Matrix Monitor::local(const Eigen::Ref<const RowVector>& row) const {
  Matrix out(static_cast<Eigen::Index>(limits_.size()), 4);
  for (std::size_t g = 0; g < limits_.size(); ++g) {
    const auto f = project_row(model_->patterns[g].sfa, row);
    const Quad p = pattern_probabilities(limits_[g], f, 0);
    for (int i = 0; i < 4; ++i) out(static_cast<Eigen::Index>(g), i) = p[static_cast<std::size_t>(i)];
  }
  return out;
}

BipVector Monitor::fuse(const Eigen::Ref<const RowVector>& row) const {
  BipVector out;
  Vector logd;
  mixture_.weighted_log_densities(row, logd);
  const double m = logd.maxCoeff();
  if (std::isfinite(m)) {
    out.posterior = (logd.array() - m).exp();
    out.posterior /= out.posterior.sum();
  } else {
    out.posterior = Vector::Constant(logd.size(), 1.0 / static_cast<double>(logd.size()));
    out.outlier = true;
  }
  const Matrix p = local(row);
  for (int i = 0; i < 4; ++i)
    out.bip[static_cast<std::size_t>(i)] = std::clamp(out.posterior.dot(p.col(i)), 0.0, 1.0);
  return out;
}

BipVector fuse(const MsfaModel& model, const Eigen::Ref<const RowVector>& lagged,
               const Eigen::Ref<const RowVector>& diff) {
  RowVector row(lagged.size() + diff.size());
  row << lagged, diff;
  return Monitor(model).fuse(row);
}

HealthStatus classify_flags(const std::array<bool, 4>& persistent, const std::array<bool, 4>& current,
                            bool steady_any_in_window) {
  const bool steady = persistent[kSteadySlow] || persistent[kSteadyResidual];
  const bool dynamic = persistent[kDynamicSlow] || persistent[kDynamicResidual];
  if (steady && dynamic) return HealthStatus::Fault;
  if (dynamic) return HealthStatus::Degradation;
  if (steady) return HealthStatus::NewPattern;
  const bool spike = (current[kDynamicSlow] && !persistent[kDynamicSlow]) ||
                     (current[kDynamicResidual] && !persistent[kDynamicResidual]);
  if (spike && !steady_any_in_window) return HealthStatus::NormalSwitching;
  return HealthStatus::Normal;
}

Diagnosis classify(std::span<const BipVector> window, double alpha, std::size_t window_length) {
  if (window_length < 1) throw InputError("persistence window must be at least 1");
  Diagnosis out;
  const double tau = 1.0 - alpha;
  const auto n = std::min(window.size(), window_length);
  out.evidence.window = n;
  if (n < window_length) {
    out.evidence.warm_up = true;
    if (!window.empty())
      for (std::size_t i = 0; i < 4; ++i) out.evidence.current[i] = window.back().bip[i] > tau;
    return out;
  }
  const auto recent = window.last(n);
  out.evidence.persistent = {true, true, true, true};
  bool steady_any = false;
  for (const auto& b : recent) {
    for (std::size_t i = 0; i < 4; ++i) {
      const bool above = b.bip[i] > tau;
      out.evidence.persistent[i] = out.evidence.persistent[i] && above;
      if (i < 2 && above) steady_any = true;
    }
  }
  for (std::size_t i = 0; i < 4; ++i) out.evidence.current[i] = recent.back().bip[i] > tau;
  out.status = classify_flags(out.evidence.persistent, out.evidence.current, steady_any);
  return out;
}

StreamResult monitor_augmented(const MsfaModel& model, const AugmentedMatrix& data) {
  model.validate();
  if (data.width() != model.mixture.dimension)
    throw InputError("augmented data width does not match the model");
  const auto K = data.rows.rows();
  const auto G = static_cast<Eigen::Index>(model.size());

  const Responsibilities post = responsibilities(model.mixture, data.rows);
  std::vector<bool> outlier(static_cast<std::size_t>(K), false);
  for (auto k : post.outliers) outlier[k] = true;

  std::vector<Matrix> local(4, Matrix(K, G));
  for (Eigen::Index g = 0; g < G; ++g) {
    const auto& pm = model.patterns[static_cast<std::size_t>(g)];
    const LimitScorer scorer(pm.limits);
    const Features f = project(pm.sfa, data.lagged_block(), data.diff_block());
    for (Eigen::Index k = 0; k < K; ++k) {
      const Quad p = pattern_probabilities(scorer, f, k);
      for (std::size_t i = 0; i < 4; ++i) local[i](k, g) = p[i];
    }
  }

  StreamResult out;
  out.bips.resize(static_cast<std::size_t>(K));
  out.diagnoses.reserve(static_cast<std::size_t>(K));
  out.source_rows = data.source_rows;
  std::size_t segment = 0;
  std::size_t segment_begin = 0;
  for (Eigen::Index k = 0; k < K; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    if (segment < data.segment_starts.size() && data.segment_starts[segment] == ku) {
      segment_begin = ku;
      ++segment;
    }
    auto& b = out.bips[ku];
    b.posterior = post.gamma.row(k).transpose();
    b.timestamp = data.row_timestamps[ku];
    b.outlier = outlier[ku];
    if (b.outlier) ++out.outliers;
    for (std::size_t i = 0; i < 4; ++i)
      b.bip[i] = std::clamp(local[i].row(k).dot(post.gamma.row(k)), 0.0, 1.0);
    const auto first = std::max(segment_begin, ku + 1 >= model.window ? ku + 1 - model.window : 0);
    out.diagnoses.push_back(classify(std::span<const BipVector>(out.bips.data() + first, ku + 1 - first),
                                     model.alpha, model.window));
  }
  return out;
}

StreamResult monitor_stream(const MsfaModel& model, const TimeSeriesFrame& frame) {
  if (frame.channels() != model.channels) {
    std::ostringstream msg;
    msg << "frame has " << frame.channels() << " channels, model expects " << model.channels;
    throw InputError(msg.str());
  }
  return monitor_augmented(model, augment(frame, model.lag));
}

std::size_t minimum_pattern_rows(std::size_t lagged_width) { return 2 * lagged_width + 2; }

PatternModel fit_pattern(const AugmentedMatrix& rows, const GaussianComponent& component,
                         std::size_t pattern_id, double alpha) {
  const auto need = minimum_pattern_rows(rows.lagged_width());
  if (rows.row_count() < need) {
    std::ostringstream msg;
    msg << "pattern " << pattern_id << " has " << rows.row_count() << " rows, at least " << need
        << " required";
    throw InputError(msg.str());
  }
  PatternModel out;
  const Matrix lagged = rows.lagged_block();
  const Matrix diffs = rows.diff_block();
  out.sfa = fit_pattern_sfa(lagged, diffs, component.mean, component.covariance.diagonal(), pattern_id);
  out.limits = fit_limits(project(out.sfa, lagged, diffs), alpha);
  return out;
}

MsfaModel update_with_new_pattern(const MsfaModel& model, const AugmentedMatrix& samples) {
  model.validate();
  if (samples.width() != model.mixture.dimension)
    throw InputError("new-pattern samples do not match the model width");
  const auto need = minimum_pattern_rows(model.lagged_width());
  if (samples.row_count() < need) {
    std::ostringstream msg;
    msg << "new pattern needs at least " << need << " augmented rows, got " << samples.row_count();
    throw InputError(msg.str());
  }

  MsfaModel out = model;
  const auto G = model.size();
  std::vector<double> counts = model.mixture.effective_counts;
  if (counts.size() != G) throw InputError("model carries no effective pattern counts");
  counts.push_back(static_cast<double>(samples.row_count()));

  auto component = moment_component(samples.rows, model.mixture.config.reg_relative, 0.0);
  out.patterns.push_back(fit_pattern(samples, component, G, model.alpha));
  out.mixture.components.push_back(std::move(component));
  double total = 0.0;
  for (double c : counts) total += c;
  for (std::size_t g = 0; g <= G; ++g) out.mixture.components[g].weight = counts[g] / total;
  out.mixture.effective_counts = counts;
  std::ostringstream ev;
  ev << "pattern " << G << " added from " << samples.row_count() << " rows";
  out.mixture.events.push_back(ev.str());
  return out;
}

}  // namespace msfa
