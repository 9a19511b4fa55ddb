#include "msfa/metrics.hpp"
#include "msfa/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <limits>
#include <map>
#include <sstream>

namespace msfa {

bool is_alarm(HealthStatus s) {
  return s == HealthStatus::NewPattern || s == HealthStatus::Degradation || s == HealthStatus::Fault;
}

double far(const std::vector<HealthStatus>& statuses) {
  if (statuses.empty()) throw InputError("FAR of an empty run is undefined");
  const auto n = std::count_if(statuses.begin(), statuses.end(), is_alarm);
  return static_cast<double>(n) / static_cast<double>(statuses.size());
}

Detection fdd_fdr(const std::vector<HealthStatus>& statuses, std::size_t onset_index) {
  if (onset_index >= statuses.size()) throw InputError("fault onset lies outside the evaluated range");
  Detection out;
  std::size_t alarms = 0;
  for (std::size_t k = onset_index; k < statuses.size(); ++k) {
    if (!is_alarm(statuses[k])) continue;
    ++alarms;
    if (!out.fdt_index) out.fdt_index = k;
  }
  if (out.fdt_index) out.fdd_samples = *out.fdt_index - onset_index;
  out.fdr = static_cast<double>(alarms) / static_cast<double>(statuses.size() - onset_index);
  return out;
}

Detection fdd_fdr(const std::vector<HealthStatus>& statuses, const std::vector<Timestamp>& timestamps,
                  Timestamp onset) {
  if (timestamps.size() != statuses.size()) throw InputError("timestamp and status counts differ");
  const auto it = std::lower_bound(timestamps.begin(), timestamps.end(), onset);
  if (it == timestamps.end()) throw InputError("fault onset lies after the last sample");
  auto out = fdd_fdr(statuses, static_cast<std::size_t>(it - timestamps.begin()));
  if (out.fdt_index) {
    out.fdt_time = timestamps[*out.fdt_index];
    out.fdd_minutes = static_cast<double>(*out.fdt_time - onset) / 60.0;
  }
  return out;
}

std::vector<int> hungarian(const Matrix& cost) {
  // Shortest augmenting path formulation with row/column potentials (1-based internally).
  const auto n = static_cast<std::size_t>(cost.rows());
  if (cost.cols() != cost.rows()) throw InputError("assignment cost matrix must be square");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> out(n, -1);
  for (std::size_t j = 1; j <= n; ++j)
    if (p[j] != 0) out[p[j] - 1] = static_cast<int>(j - 1);
  return out;
}

double segmentation_accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size()) throw InputError("label sequences differ in length");
  if (predicted.empty()) throw InputError("label sequences are empty");
  std::map<int, int> pid, tid;
  for (int l : predicted) pid.emplace(l, static_cast<int>(pid.size()));
  for (int l : truth) tid.emplace(l, static_cast<int>(tid.size()));
  if (pid.size() > 32 || tid.size() > 32) throw InputError("more than 32 distinct labels");
  const auto n = static_cast<Eigen::Index>(std::max(pid.size(), tid.size()));
  Matrix counts = Matrix::Zero(n, n);
  for (std::size_t k = 0; k < predicted.size(); ++k) counts(pid[predicted[k]], tid[truth[k]]) += 1.0;
  const auto match = hungarian(-counts);
  double hit = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) hit += counts(i, match[static_cast<std::size_t>(i)]);
  return hit / static_cast<double>(predicted.size());
}

std::size_t label_runs(const std::vector<int>& labels) {
  if (labels.empty()) return 0;
  std::size_t runs = 1;
  for (std::size_t k = 1; k < labels.size(); ++k)
    if (labels[k] != labels[k - 1]) ++runs;
  return runs;
}

EvaluationReport evaluate(const std::vector<Timestamp>& timestamps, const std::vector<Quad>& bips,
                          const std::vector<HealthStatus>& statuses, double alpha,
                          std::optional<Timestamp> onset, const std::vector<bool>& normal,
                          std::size_t window) {
  const auto K = statuses.size();
  if (K == 0) throw InputError("nothing to evaluate");
  if (timestamps.size() != K || bips.size() != K) throw InputError("result columns differ in length");
  if (!normal.empty() && normal.size() != K) throw InputError("truth does not cover every result row");

  EvaluationReport r;
  r.samples = K;
  r.onset = onset;
  std::vector<bool> is_normal(K, true);
  for (std::size_t k = 0; k < K; ++k) {
    if (!normal.empty())
      is_normal[k] = normal[k];
    else if (onset)
      is_normal[k] = timestamps[k] < *onset;
  }
  for (std::size_t k = 0; k < K; ++k) {
    ++r.status_counts[static_cast<std::size_t>(statuses[k])];
    if (!is_normal[k]) continue;
    ++r.normal_samples;
    if (is_alarm(statuses[k])) ++r.false_alarms;
  }
  if (r.normal_samples > 0)
    r.far = static_cast<double>(r.false_alarms) / static_cast<double>(r.normal_samples);
  if (onset) r.detection = fdd_fdr(statuses, timestamps, *onset);

  const double tau = 1.0 - alpha;
  const auto onset_index = onset ? static_cast<std::size_t>(std::lower_bound(timestamps.begin(),
                                                                               timestamps.end(), *onset) -
                                                              timestamps.begin())
                                 : K;
  for (std::size_t i = 0; i < 4; ++i) {
    auto& b = r.per_index[i];
    std::size_t above_normal = 0, post = 0, above_post = 0, run = 0;
    for (std::size_t k = 0; k < K; ++k) {
      const bool above = bips[k][i] > tau;
      run = above ? run + 1 : 0;
      if (is_normal[k] && above) ++above_normal;
      if (k >= onset_index) {
        ++post;
        if (above) ++above_post;
        if (run >= window && !b.fdd_samples) b.fdd_samples = k - onset_index;
      }
    }
    if (r.normal_samples > 0)
      b.exceed_rate = static_cast<double>(above_normal) / static_cast<double>(r.normal_samples);
    if (post > 0) b.fdr = static_cast<double>(above_post) / static_cast<double>(post);
  }
  return r;
}

namespace {
const char* kIndexNames[4] = {"bip_ss", "bip_sr", "bip_ds", "bip_dr"};
}

std::string report_text(const EvaluationReport& r) {
  std::ostringstream out;
  out << "samples:        " << r.samples << "\n";
  out << "normal samples: " << r.normal_samples << "\n";
  out << "false alarms:   " << r.false_alarms << "\n";
  out << "FAR:            " << r.far << "\n";
  if (r.detection) {
    const auto& d = *r.detection;
    if (d.fdt_index)
      out << "FDT:            row " << *d.fdt_index << " (t=" << format_timestamp(*d.fdt_time) << ")\n"
          << "FDD:            " << d.fdd_samples << " samples, " << d.fdd_minutes << " min\n";
    else
      out << "FDT:            not detected\n";
    out << "FDR:            " << d.fdr << "\n";
  }
  for (std::size_t i = 0; i < 4; ++i) {
    out << kIndexNames[i] << ": exceed " << r.per_index[i].exceed_rate;
    if (r.onset) {
      out << ", fdr " << r.per_index[i].fdr << ", fdd ";
      if (r.per_index[i].fdd_samples)
        out << *r.per_index[i].fdd_samples;
      else
        out << "none";
    }
    out << "\n";
  }
  out << "statuses:";
  for (int s = 0; s < 5; ++s)
    out << " " << status_name(static_cast<HealthStatus>(s)) << "=" << r.status_counts[static_cast<std::size_t>(s)];
  out << "\n";
  return out.str();
}

std::string report_json(const EvaluationReport& r) {
  nlohmann::ordered_json j;
  j["samples"] = r.samples;
  j["normal_samples"] = r.normal_samples;
  j["false_alarms"] = r.false_alarms;
  j["far"] = r.far;
  j["onset"] = r.onset ? nlohmann::ordered_json(*r.onset) : nlohmann::ordered_json(nullptr);
  if (r.detection) {
    const auto& d = *r.detection;
    j["fdt_row"] = d.fdt_index ? nlohmann::ordered_json(*d.fdt_index) : nlohmann::ordered_json(nullptr);
    j["fdt"] = d.fdt_time ? nlohmann::ordered_json(*d.fdt_time) : nlohmann::ordered_json(nullptr);
    j["fdd_samples"] = d.fdt_index ? nlohmann::ordered_json(d.fdd_samples) : nlohmann::ordered_json(nullptr);
    j["fdd_minutes"] = d.fdt_index ? nlohmann::ordered_json(d.fdd_minutes) : nlohmann::ordered_json(nullptr);
    j["fdr"] = d.fdr;
  }
  nlohmann::ordered_json idx;
  for (std::size_t i = 0; i < 4; ++i) {
    nlohmann::ordered_json e;
    e["exceed_rate"] = r.per_index[i].exceed_rate;
    e["fdr"] = r.per_index[i].fdr;
    e["fdd_samples"] = r.per_index[i].fdd_samples ? nlohmann::ordered_json(*r.per_index[i].fdd_samples)
                                                  : nlohmann::ordered_json(nullptr);
    idx[kIndexNames[i]] = e;
  }
  j["per_index"] = idx;
  nlohmann::ordered_json counts;
  for (int s = 0; s < 5; ++s) counts[status_name(static_cast<HealthStatus>(s))] = r.status_counts[static_cast<std::size_t>(s)];
  j["status_counts"] = counts;
  return j.dump(2);
}

}  // namespace msfa
