#include "msfa/msfa.h"

#include "msfa/config.hpp"
#include "msfa/io.hpp"
#include "msfa/metrics.hpp"
#include "msfa/model_io.hpp"
#include "msfa/pipeline.hpp"
#include "msfa/simulator.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

struct msfa_config {
  nlohmann::json doc = nlohmann::json::object();
};

struct msfa_frame {
  msfa::TimeSeriesFrame frame;
};

struct msfa_dataset {
  msfa::LabeledDataset data;
  msfa::SimConfig config;
};

struct msfa_clustering {
  std::vector<msfa::Timestamp> timestamps;
  std::vector<int> labels;
  std::string summary;
};

struct msfa_model {
  msfa::MsfaModel model;
};

struct msfa_results {
  msfa::StreamResult result;
};

struct msfa_dpca {
  msfa::DpcaModel model;
  msfa::DpcaScores scores;
};

namespace {

thread_local std::string last_error;

msfa_status fail(msfa_status code, const char* what) {
  last_error = what;
  return code;
}

template <typename F>
msfa_status guard(F&& body) {
  try {
    last_error.clear();
    return body();
  } catch (const msfa::ModelVersionError& e) {
    return fail(MSFA_ERR_MODEL_VERSION, e.what());
  } catch (const msfa::ChecksumError& e) {
    return fail(MSFA_ERR_MODEL_CHECKSUM, e.what());
  } catch (const msfa::ModelFileError& e) {
    return fail(MSFA_ERR_MODEL_CORRUPT, e.what());
  } catch (const msfa::InputError& e) {
    return fail(MSFA_ERR_INPUT, e.what());
  } catch (const msfa::NumericError& e) {
    return fail(MSFA_ERR_NUMERIC, e.what());
  } catch (const std::bad_alloc&) {
    return fail(MSFA_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(MSFA_ERR_INTERNAL, e.what());
  }
}

char* dup(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(const void* p, const char* name) {
  if (!p) throw msfa::InputError(std::string(name) + " must not be NULL");
}

msfa::ConfigFile resolve(const msfa_config* config) {
  if (!config) return {};
  return msfa::parse_config(config->doc.dump());
}

}  // namespace

extern "C" {

const char* msfa_version(void) { return "1.0.0"; }

const char* msfa_last_error(void) { return last_error.c_str(); }

void msfa_string_free(char* s) { delete[] s; }

const char* msfa_health_name(int health) {
  if (health < 0 || health > 4) return "unknown";
  return msfa::status_name(static_cast<msfa::HealthStatus>(health));
}

msfa_status msfa_config_create(msfa_config** out) {
  return guard([&] {
    require(out, "out");
    *out = new msfa_config();
    return MSFA_OK;
  });
}

msfa_status msfa_config_load(const char* path, msfa_config** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    std::ifstream in(path);
    if (!in) throw msfa::InputError(std::string("cannot open config file '") + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    auto cfg = std::make_unique<msfa_config>();
    try {
      cfg->doc = nlohmann::json::parse(buf.str(), nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
      throw msfa::InputError(std::string("config is not valid JSON: ") + e.what());
    }
    msfa::parse_config(cfg->doc.dump());
    *out = cfg.release();
    return MSFA_OK;
  });
}

msfa_status msfa_config_set(msfa_config* config, const char* key, const char* value) {
  return guard([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    nlohmann::json parsed;
    try {
      parsed = nlohmann::json::parse(value);
    } catch (const nlohmann::json::parse_error&) {
      parsed = std::string(value);
    }
    nlohmann::json updated = config->doc;
    nlohmann::json* node = &updated;
    std::string path = key;
    std::size_t at = 0;
    while (true) {
      const auto dot = path.find('.', at);
      const auto part = path.substr(at, dot == std::string::npos ? std::string::npos : dot - at);
      if (part.empty()) throw msfa::InputError(std::string("malformed config key '") + key + "'");
      if (!node->is_object()) *node = nlohmann::json::object();
      node = &(*node)[part];
      if (dot == std::string::npos) break;
      at = dot + 1;
    }
    *node = parsed;
    msfa::parse_config(updated.dump());
    config->doc = std::move(updated);
    return MSFA_OK;
  });
}

msfa_status msfa_config_json(const msfa_config* config, char** out) {
  return guard([&] {
    require(config, "config");
    require(out, "out");
    *out = dup(config->doc.dump(2));
    return MSFA_OK;
  });
}

void msfa_config_free(msfa_config* config) { delete config; }

msfa_status msfa_frame_create(const int64_t* timestamps, const double* values, size_t rows, size_t channels,
                              const char* const* names, msfa_frame** out) {
  return guard([&] {
    require(timestamps, "timestamps");
    require(values, "values");
    require(out, "out");
    auto f = std::make_unique<msfa_frame>();
    f->frame.timestamps.assign(timestamps, timestamps + rows);
    f->frame.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        values, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(channels));
    if (names)
      for (size_t j = 0; j < channels; ++j) f->frame.channel_names.emplace_back(names[j] ? names[j] : "");
    f->frame.validate();
    *out = f.release();
    return MSFA_OK;
  });
}

msfa_status msfa_frame_read_csv(const char* path, msfa_frame** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new msfa_frame{msfa::read_frame_csv(path)};
    return MSFA_OK;
  });
}

msfa_status msfa_frame_write_csv(const msfa_frame* frame, const char* path) {
  return guard([&] {
    require(frame, "frame");
    require(path, "path");
    msfa::write_frame_csv(frame->frame, path);
    return MSFA_OK;
  });
}

msfa_status msfa_frame_slice(const msfa_frame* frame, size_t begin, size_t end, msfa_frame** out) {
  return guard([&] {
    require(frame, "frame");
    require(out, "out");
    *out = new msfa_frame{frame->frame.slice(begin, end)};
    return MSFA_OK;
  });
}

size_t msfa_frame_find_time(const msfa_frame* frame, int64_t t) {
  if (!frame) return 0;
  const auto& ts = frame->frame.timestamps;
  return static_cast<size_t>(std::lower_bound(ts.begin(), ts.end(), t) - ts.begin());
}

size_t msfa_frame_rows(const msfa_frame* frame) { return frame ? frame->frame.rows() : 0; }
size_t msfa_frame_channels(const msfa_frame* frame) { return frame ? frame->frame.channels() : 0; }

int64_t msfa_frame_timestamp(const msfa_frame* frame, size_t row) {
  return frame && row < frame->frame.rows() ? frame->frame.timestamps[row] : 0;
}

double msfa_frame_value(const msfa_frame* frame, size_t row, size_t channel) {
  if (!frame || row >= frame->frame.rows() || channel >= frame->frame.channels()) return 0.0;
  return frame->frame.values(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(channel));
}

void msfa_frame_free(msfa_frame* frame) { delete frame; }

msfa_status msfa_parse_timestamp(const char* text, int64_t* out) {
  return guard([&] {
    require(text, "text");
    require(out, "out");
    *out = msfa::parse_timestamp(text);
    return MSFA_OK;
  });
}

msfa_status msfa_select_lag(const msfa_frame* frame, double band, size_t max_lag, size_t* lag,
                            int* band_never_reached) {
  return guard([&] {
    require(frame, "frame");
    require(lag, "lag");
    const auto sel = msfa::select_lag(frame->frame, band, max_lag);
    *lag = sel.lag;
    if (band_never_reached) *band_never_reached = sel.band_never_reached ? 1 : 0;
    return MSFA_OK;
  });
}

msfa_status msfa_simulate(const char* preset, const msfa_config* config, const uint64_t* seed,
                          msfa_dataset** out) {
  return guard([&] {
    require(out, "out");
    msfa::ConfigFile base;
    if (preset) base.simulate = msfa::reference_scenario(preset);
    const auto cfg = config ? msfa::parse_config(config->doc.dump(), base) : base;
    if (!preset && !cfg.has_simulate)
      throw msfa::InputError("no preset given and the config has no simulate section");
    auto ds = std::make_unique<msfa_dataset>();
    ds->config = cfg.simulate;
    if (seed) ds->config.seed = *seed;
    ds->data = msfa::generate(ds->config);
    *out = ds.release();
    return MSFA_OK;
  });
}

msfa_status msfa_dataset_frame(const msfa_dataset* data, msfa_frame** out) {
  return guard([&] {
    require(data, "data");
    require(out, "out");
    *out = new msfa_frame{data->data.frame};
    return MSFA_OK;
  });
}

msfa_status msfa_dataset_write(const msfa_dataset* data, const char* data_path, const char* truth_path) {
  return guard([&] {
    require(data, "data");
    if (data_path) msfa::write_frame_csv(data->data.frame, data_path);
    if (truth_path) msfa::write_truth_csv(data->data, truth_path);
    return MSFA_OK;
  });
}

size_t msfa_dataset_rows(const msfa_dataset* data) { return data ? data->data.labels.size() : 0; }

int msfa_dataset_label(const msfa_dataset* data, size_t row) {
  return data && row < data->data.labels.size() ? data->data.labels[row] : -1;
}

int msfa_dataset_health(const msfa_dataset* data, size_t row) {
  return data && row < data->data.status.size() ? static_cast<int>(data->data.status[row]) : -1;
}

void msfa_dataset_free(msfa_dataset* data) { delete data; }

msfa_status msfa_cluster(const msfa_frame* frame, size_t lag, size_t components, size_t smooth_window,
                         const msfa_config* config, msfa_clustering** out) {
  return guard([&] {
    require(frame, "frame");
    require(out, "out");
    const auto cfg = resolve(config);
    if (components < 1) throw msfa::InputError("component count must be at least 1");
    if (lag == 0) lag = msfa::select_lag(frame->frame, cfg.train.lag_band, cfg.train.max_lag).lag;
    const auto data = msfa::augment(frame->frame, lag);
    const auto model = msfa::em_fit(data.rows, components, cfg.train.em);
    auto c = std::make_unique<msfa_clustering>();
    c->labels = msfa::assign(model, data.rows, smooth_window);
    c->timestamps = data.row_timestamps;
    nlohmann::ordered_json s;
    s["lag"] = lag;
    s["components"] = components;
    s["rows"] = data.row_count();
    s["iterations"] = model.fit_log.size();
    s["converged"] = model.converged;
    s["log_likelihood"] = model.fit_log.empty() ? 0.0 : model.fit_log.back();
    s["label_runs"] = msfa::label_runs(c->labels);
    std::vector<double> weights;
    for (const auto& comp : model.components) weights.push_back(comp.weight);
    s["weights"] = weights;
    s["events"] = model.events;
    c->summary = s.dump(2);
    *out = c.release();
    return MSFA_OK;
  });
}

size_t msfa_clustering_rows(const msfa_clustering* c) { return c ? c->labels.size() : 0; }

int64_t msfa_clustering_timestamp(const msfa_clustering* c, size_t row) {
  return c && row < c->timestamps.size() ? c->timestamps[row] : 0;
}

int msfa_clustering_label(const msfa_clustering* c, size_t row) {
  return c && row < c->labels.size() ? c->labels[row] : -1;
}

msfa_status msfa_clustering_write_csv(const msfa_clustering* c, const char* path) {
  return guard([&] {
    require(c, "clustering");
    require(path, "path");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw msfa::InputError(std::string("cannot write '") + path + "'");
    out << "timestamp,label\n";
    for (size_t k = 0; k < c->labels.size(); ++k)
      out << msfa::format_timestamp(c->timestamps[k]) << ',' << c->labels[k] << '\n';
    return MSFA_OK;
  });
}

msfa_status msfa_clustering_summary(const msfa_clustering* c, char** json) {
  return guard([&] {
    require(c, "clustering");
    require(json, "json");
    *json = dup(c->summary);
    return MSFA_OK;
  });
}

void msfa_clustering_free(msfa_clustering* c) { delete c; }

msfa_status msfa_train(const msfa_frame* train, const msfa_frame* valid, const msfa_config* config,
                       msfa_model** out, char** report) {
  return guard([&] {
    require(train, "train");
    require(out, "out");
    const auto cfg = resolve(config);
    msfa::TimeSeriesFrame tr = train->frame;
    msfa::TimeSeriesFrame va;
    if (valid) {
      va = valid->frame;
    } else {
      auto parts = msfa::split_validation(train->frame, cfg.train.validation_fraction);
      tr = std::move(parts.first);
      va = std::move(parts.second);
    }
    auto result = msfa::train(tr, va, cfg.train);
    if (report) {
      nlohmann::ordered_json r;
      r["lag"] = result.lag;
      r["lag_band_never_reached"] = result.lag_band_never_reached;
      r["patterns"] = result.model.size();
      r["accepted"] = result.accepted;
      nlohmann::ordered_json cands = nlohmann::ordered_json::array();
      for (const auto& c : result.candidates)
        cands.push_back({{"components", c.components},
                         {"fitted", c.fitted},
                         {"accepted", c.accepted},
                         {"alarms", c.alarms},
                         {"alarm_rate", c.alarm_rate},
                         {"note", c.note}});
      r["candidates"] = cands;
      std::vector<std::size_t> slow;
      for (const auto& p : result.model.patterns) slow.push_back(p.sfa.slow_count());
      r["slow_features"] = slow;
      r["log"] = result.log;
      *report = dup(r.dump(2));
    }
    const bool fixed = cfg.train.components != 0;
    *out = new msfa_model{std::move(result.model)};
    return result.accepted || fixed ? MSFA_OK : MSFA_REJECTED;
  });
}

msfa_status msfa_model_load(const char* path, msfa_model** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new msfa_model{msfa::load_model(path)};
    return MSFA_OK;
  });
}

msfa_status msfa_model_save(const msfa_model* model, const char* path) {
  return guard([&] {
    require(model, "model");
    require(path, "path");
    msfa::save_model(model->model, path);
    return MSFA_OK;
  });
}

size_t msfa_model_patterns(const msfa_model* model) { return model ? model->model.size() : 0; }
size_t msfa_model_lag(const msfa_model* model) { return model ? model->model.lag : 0; }
size_t msfa_model_channels(const msfa_model* model) { return model ? model->model.channels : 0; }
double msfa_model_alpha(const msfa_model* model) { return model ? model->model.alpha : 0.0; }

msfa_status msfa_model_summary(const msfa_model* model, char** json) {
  return guard([&] {
    require(model, "model");
    require(json, "json");
    const auto& m = model->model;
    nlohmann::ordered_json s;
    s["lag"] = m.lag;
    s["channels"] = m.channel_names;
    s["alpha"] = m.alpha;
    s["window"] = m.window;
    nlohmann::ordered_json pats = nlohmann::ordered_json::array();
    for (std::size_t g = 0; g < m.size(); ++g) {
      const auto& p = m.patterns[g];
      pats.push_back({{"weight", m.mixture.components[g].weight},
                      {"slow_features", p.sfa.slow_count()},
                      {"residual_features", p.sfa.residual_count()},
                      {"training_rows", p.limits.count},
                      {"limits", std::vector<double>(p.limits.limit.begin(), p.limits.limit.end())}});
    }
    s["patterns"] = pats;
    s["metadata"] = m.metadata;
    *json = dup(s.dump(2));
    return MSFA_OK;
  });
}

void msfa_model_free(msfa_model* model) { delete model; }

msfa_status msfa_model_update(const msfa_model* model, const msfa_frame* samples, msfa_model** out) {
  return guard([&] {
    require(model, "model");
    require(samples, "samples");
    require(out, "out");
    const auto data = msfa::augment(samples->frame, model->model.lag);
    *out = new msfa_model{msfa::update_with_new_pattern(model->model, data)};
    return MSFA_OK;
  });
}

msfa_status msfa_monitor(const msfa_model* model, const msfa_frame* frame, msfa_results** out) {
  return guard([&] {
    require(model, "model");
    require(frame, "frame");
    require(out, "out");
    *out = new msfa_results{msfa::monitor_stream(model->model, frame->frame)};
    return MSFA_OK;
  });
}

size_t msfa_results_rows(const msfa_results* r) { return r ? r->result.bips.size() : 0; }

msfa_status msfa_results_get(const msfa_results* r, size_t row, int64_t* timestamp, double bip[4], int* health) {
  return guard([&] {
    require(r, "results");
    if (row >= r->result.bips.size()) throw msfa::InputError("result row out of range");
    const auto& b = r->result.bips[row];
    if (timestamp) *timestamp = b.timestamp;
    if (bip) std::copy(b.bip.begin(), b.bip.end(), bip);
    if (health) *health = static_cast<int>(r->result.diagnoses[row].status);
    return MSFA_OK;
  });
}

msfa_status msfa_results_write_csv(const msfa_results* r, const char* path) {
  return guard([&] {
    require(r, "results");
    require(path, "path");
    msfa::write_results_csv(r->result, path);
    return MSFA_OK;
  });
}

void msfa_results_free(msfa_results* r) { delete r; }

msfa_status msfa_evaluate(const char* results_path, const char* truth_path, const int64_t* onset, double alpha,
                          char** json, char** text) {
  return guard([&] {
    require(results_path, "results_path");
    const auto res = msfa::read_results_csv(results_path);
    std::vector<bool> normal;
    std::optional<msfa::Timestamp> at;
    if (onset) at = *onset;
    if (truth_path) {
      const auto truth = msfa::read_truth_csv(truth_path);
      std::size_t j = 0;
      normal.reserve(res.timestamps.size());
      for (auto t : res.timestamps) {
        while (j < truth.timestamps.size() && truth.timestamps[j] < t) ++j;
        if (j == truth.timestamps.size() || truth.timestamps[j] != t)
          throw msfa::InputError("truth file has no row for result timestamp " + msfa::format_timestamp(t));
        normal.push_back(truth.status[j] == msfa::HealthStatus::Normal);
      }
      if (!at)
        for (std::size_t k = 0; k < truth.timestamps.size(); ++k)
          if (truth.status[k] != msfa::HealthStatus::Normal) {
            at = truth.timestamps[k];
            break;
          }
    }
    const auto report = msfa::evaluate(res.timestamps, res.bips, res.status, alpha, at, normal);
    if (json) *json = dup(msfa::report_json(report));
    if (text) *text = dup(msfa::report_text(report));
    return MSFA_OK;
  });
}

msfa_status msfa_dpca_run(const msfa_frame* train, const msfa_frame* test, size_t lag, const msfa_config* config,
                          msfa_dpca** out) {
  return guard([&] {
    require(train, "train");
    require(test, "test");
    require(out, "out");
    const auto cfg = resolve(config);
    auto dc = cfg.dpca;
    dc.alpha = cfg.train.alpha;
    dc.lag = lag ? lag : (cfg.train.lag ? cfg.train.lag : msfa::select_lag(train->frame, cfg.train.lag_band,
                                                                             cfg.train.max_lag).lag);
    auto d = std::make_unique<msfa_dpca>();
    d->model = msfa::train_dpca(train->frame, dc);
    d->scores = msfa::score_dpca(d->model, test->frame);
    *out = d.release();
    return MSFA_OK;
  });
}

size_t msfa_dpca_rows(const msfa_dpca* d) { return d ? d->scores.t2.size() : 0; }

msfa_status msfa_dpca_get(const msfa_dpca* d, size_t row, int64_t* timestamp, double* t2, double* spe, int* alarm) {
  return guard([&] {
    require(d, "dpca");
    if (row >= d->scores.t2.size()) throw msfa::InputError("DPCA row out of range");
    if (timestamp) *timestamp = d->scores.timestamps[row];
    if (t2) *t2 = d->scores.t2[row];
    if (spe) *spe = d->scores.spe[row];
    if (alarm) *alarm = d->scores.alarm[row] ? 1 : 0;
    return MSFA_OK;
  });
}

msfa_status msfa_dpca_write_csv(const msfa_dpca* d, const char* path) {
  return guard([&] {
    require(d, "dpca");
    require(path, "path");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw msfa::InputError(std::string("cannot write '") + path + "'");
    out << "timestamp,t2,spe,alarm\n";
    for (size_t k = 0; k < d->scores.t2.size(); ++k)
      out << msfa::format_timestamp(d->scores.timestamps[k]) << ',' << msfa::format_double(d->scores.t2[k]) << ','
          << msfa::format_double(d->scores.spe[k]) << ',' << (d->scores.alarm[k] ? 1 : 0) << '\n';
    return MSFA_OK;
  });
}

msfa_status msfa_dpca_report(const msfa_dpca* d, const int64_t* onset, char** json) {
  return guard([&] {
    require(d, "dpca");
    require(json, "json");
    const auto& s = d->scores;
    nlohmann::ordered_json r;
    r["lag"] = d->model.lag;
    r["retained_components"] = d->model.retained();
    r["t2_limit"] = d->model.t2_limit;
    r["spe_limit"] = std::isfinite(d->model.spe_limit) ? nlohmann::ordered_json(d->model.spe_limit)
                                                       : nlohmann::ordered_json(nullptr);
    std::size_t normal = 0, false_alarms = 0, post = 0, hits = 0;
    std::optional<std::size_t> first;
    for (size_t k = 0; k < s.alarm.size(); ++k) {
      const bool after = onset && s.timestamps[k] >= *onset;
      if (after) {
        ++post;
        if (s.alarm[k]) {
          ++hits;
          if (!first) first = k;
        }
      } else {
        ++normal;
        if (s.alarm[k]) ++false_alarms;
      }
    }
    r["rows"] = s.alarm.size();
    r["far"] = normal ? static_cast<double>(false_alarms) / static_cast<double>(normal) : 0.0;
    if (onset) {
      r["onset"] = *onset;
      r["fdt"] = first ? nlohmann::ordered_json(s.timestamps[*first]) : nlohmann::ordered_json(nullptr);
      r["fdd_minutes"] = first ? nlohmann::ordered_json(static_cast<double>(s.timestamps[*first] - *onset) / 60.0)
                               : nlohmann::ordered_json(nullptr);
      r["fdr"] = post ? static_cast<double>(hits) / static_cast<double>(post) : 0.0;
    }
    *json = dup(r.dump(2));
    return MSFA_OK;
  });
}

void msfa_dpca_free(msfa_dpca* d) { delete d; }

}  // extern "C"
