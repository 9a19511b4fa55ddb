#include "msfa/pipeline.hpp"

#include "msfa/metrics.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <sstream>

namespace msfa {

void TrainConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 0.5)) throw InputError("alpha must lie in (0, 0.5)");
  if (g_max < 1) throw InputError("g_max must be at least 1");
  if (g_min < 1) throw InputError("g_min must be at least 1");
  if (window < 1) throw InputError("persistence window must be at least 1");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw InputError("validation_fraction must lie in (0, 1)");
  if (!(lag_band > 0.0 && lag_band < 1.0)) throw InputError("lag band must lie in (0, 1)");
}

std::pair<TimeSeriesFrame, TimeSeriesFrame> split_validation(const TimeSeriesFrame& frame, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw InputError("validation fraction must lie in (0, 1)");
  const auto K = frame.rows();
  const auto cut = K - static_cast<std::size_t>(std::llround(fraction * static_cast<double>(K)));
  if (cut < 2 || cut >= K - 1) throw InputError("frame too short to split for validation");
  return {frame.slice(0, cut), frame.slice(cut, K)};
}

MsfaModel fit_model(const AugmentedMatrix& data, std::size_t components, const TrainConfig& config,
                    const std::vector<std::string>& channel_names, std::vector<int>* labels) {
  MsfaModel model;
  model.lag = data.lag;
  model.channels = data.source_channel_count;
  model.channel_names = channel_names;
  model.alpha = config.alpha;
  model.window = config.window;
  model.mixture = em_fit(data.rows, components, config.em);
  const auto assigned = assign(model.mixture, data.rows);

  std::vector<std::vector<std::size_t>> members(components);
  for (std::size_t k = 0; k < assigned.size(); ++k) members[static_cast<std::size_t>(assigned[k])].push_back(k);
  for (std::size_t g = 0; g < components; ++g)
    model.patterns.push_back(
        fit_pattern(data.select(members[g]), model.mixture.components[g], g, config.alpha));

  model.metadata["training_rows"] = std::to_string(data.row_count());
  model.metadata["em_seed"] = std::to_string(config.em.seed);
  if (labels) *labels = assigned;
  return model;
}

TrainResult train(const TimeSeriesFrame& train_frame, const TimeSeriesFrame& valid_frame,
                  const TrainConfig& config) {
  config.validate();
  train_frame.validate();
  valid_frame.validate();
  if (train_frame.channels() != valid_frame.channels())
    throw InputError("training and validation frames have different channels");
  if (!(train_frame.timestamps.back() < valid_frame.timestamps.front() ||
        valid_frame.timestamps.back() < train_frame.timestamps.front()))
    throw InputError("training and validation frames overlap in time");

  TrainResult result;
  result.lag = config.lag;
  if (result.lag == 0) {
    const auto sel = select_lag(train_frame, config.lag_band, config.max_lag);
    result.lag = sel.lag;
    result.lag_band_never_reached = sel.band_never_reached;
    std::ostringstream msg;
    msg << "lag " << sel.lag << " selected by autocorrelation"
        << (sel.band_never_reached ? " (band never reached; max_lag used)" : "");
    result.log.push_back(msg.str());
  }
  const auto data = augment(train_frame, result.lag);
  const auto valid = augment(valid_frame, result.lag);

  std::size_t first = config.components ? config.components : std::min(config.g_min, config.g_max);
  std::size_t last = config.components ? config.components : config.g_max;

  std::optional<MsfaModel> best;
  std::size_t best_alarms = std::numeric_limits<std::size_t>::max();
  for (std::size_t G = first; G <= last; ++G) {
    CandidateReport rep;
    rep.components = G;
    MsfaModel model;
    try {
      model = fit_model(data, G, config, train_frame.channel_names);
    } catch (const Error& e) {
      rep.note = e.what();
      result.log.push_back("G=" + std::to_string(G) + " skipped: " + e.what());
      result.candidates.push_back(rep);
      continue;
    }
    rep.fitted = true;
    const auto run = monitor_augmented(model, valid);
    for (const auto& d : run.diagnoses)
      if (is_alarm(d.status)) ++rep.alarms;
    rep.alarm_rate = static_cast<double>(rep.alarms) / static_cast<double>(run.diagnoses.size());
    rep.accepted = rep.alarms == 0;
    {
      std::ostringstream msg;
      msg << "G=" << G << ": validation alarm rate " << rep.alarm_rate << " (" << rep.alarms << " samples)"
          << (rep.accepted ? ", accepted" : "");
      result.log.push_back(msg.str());
    }
    result.candidates.push_back(rep);
    if (rep.alarms < best_alarms) {
      best_alarms = rep.alarms;
      best = std::move(model);
    }
    if (rep.accepted) {
      result.accepted = true;
      break;
    }
  }
  if (!best) throw InputError("no candidate pattern count could be fitted");
  if (!result.accepted && !config.components)
    result.log.push_back("no G passed validation; using the lowest validation alarm rate");
  result.model = std::move(*best);
  result.model.metadata["validation_accepted"] = result.accepted ? "true" : "false";
  result.model.metadata["validation_rows"] = std::to_string(valid.row_count());
  return result;
}

namespace {

Matrix lagged_rows(const TimeSeriesFrame& frame, std::size_t lag, AugmentedMatrix& meta) {
  meta = augment(frame, lag);
  return meta.lagged_block();
}

}  // namespace

DpcaModel train_dpca(const TimeSeriesFrame& frame, const DpcaConfig& config) {
  if (!(config.alpha > 0.0 && config.alpha < 0.5)) throw InputError("alpha must lie in (0, 0.5)");
  if (!(config.variance_fraction > 0.0 && config.variance_fraction <= 1.0))
    throw InputError("variance fraction must lie in (0, 1]");
  AugmentedMatrix meta;
  const Matrix X = lagged_rows(frame, config.lag, meta);
  const auto K = X.rows();
  const auto n = X.cols();

  DpcaModel m;
  m.lag = config.lag;
  m.channels = frame.channels();
  m.alpha = config.alpha;
  m.window = config.window;
  m.mean = X.colwise().mean().transpose();
  const Matrix centered = X.rowwise() - m.mean.transpose();
  m.scale = (centered.colwise().squaredNorm() / static_cast<double>(K)).cwiseSqrt().transpose();
  for (Eigen::Index j = 0; j < n; ++j)
    if (!(m.scale[j] > 0.0)) m.scale[j] = 1.0;
  const Matrix Z = centered.array().rowwise() / m.scale.transpose().array();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(Z.transpose() * Z / static_cast<double>(K - 1));
  if (eig.info() != Eigen::Success) throw NumericError("DPCA eigensolver failed");
  const Vector ev = eig.eigenvalues().reverse().cwiseMax(0.0);
  const Matrix vecs = eig.eigenvectors().rowwise().reverse();

  Eigen::Index a = static_cast<Eigen::Index>(config.components);
  if (a == 0) {
    const double total = ev.sum();
    double acc = 0.0;
    while (a < n) {
      acc += ev[a++];
      if (acc >= config.variance_fraction * total * (1.0 - 1e-12)) break;
    }
  }
  if (a < 1 || a > n) throw InputError("retained component count outside [1, lagged width]");
  if (a >= K) throw InputError("too few rows for the retained component count");
  m.loadings = vecs.leftCols(a);
  m.variances = ev.head(a);
  for (Eigen::Index i = 0; i < a; ++i)
    if (!(m.variances[i] > 0.0)) throw NumericError("retained principal component has zero variance");
  m.t2 = ScaledF{static_cast<double>(a), static_cast<double>(K)};
  m.t2_limit = m.t2.quantile(1.0 - config.alpha);

  const Matrix resid = Z - Z * m.loadings * m.loadings.transpose();
  const Vector spe = resid.rowwise().squaredNorm();
  const double mu = spe.mean();
  const double var = (spe.array() - mu).square().mean();
  if (mu > 1e-12 * static_cast<double>(n) && var > 0.0) {
    m.spe = ScaledChi2::from_moments(mu, var);
    m.spe_limit = m.spe.quantile(1.0 - config.alpha);
  } else {
    m.spe_limit = std::numeric_limits<double>::infinity();
  }
  return m;
}

DpcaScores score_dpca(const DpcaModel& model, const TimeSeriesFrame& frame) {
  if (frame.channels() != model.channels) throw InputError("frame channel count does not match the DPCA model");
  AugmentedMatrix meta;
  const Matrix X = lagged_rows(frame, model.lag, meta);
  const Matrix Z = (X.rowwise() - model.mean.transpose()).array().rowwise() / model.scale.transpose().array();
  const Matrix T = Z * model.loadings;
  const Matrix resid = Z - T * model.loadings.transpose();

  DpcaScores s;
  const auto K = static_cast<std::size_t>(Z.rows());
  s.timestamps = meta.row_timestamps;
  s.source_rows = meta.source_rows;
  s.t2.resize(K);
  s.spe.resize(K);
  s.alarm.assign(K, false);
  std::size_t run_t2 = 0, run_spe = 0, segment = 0;
  for (std::size_t k = 0; k < K; ++k) {
    if (segment < meta.segment_starts.size() && meta.segment_starts[segment] == k) {
      run_t2 = run_spe = 0;
      ++segment;
    }
    const auto r = static_cast<Eigen::Index>(k);
    s.t2[k] = (T.row(r).array().square() / model.variances.transpose().array()).sum();
    s.spe[k] = resid.row(r).squaredNorm();
    run_t2 = s.t2[k] > model.t2_limit ? run_t2 + 1 : 0;
    run_spe = s.spe[k] > model.spe_limit ? run_spe + 1 : 0;
    s.alarm[k] = run_t2 >= model.window || run_spe >= model.window;
  }
  return s;
}

}  // namespace msfa
