// msfa command-line front end. Talks to the library through the C API only.
#include "msfa/msfa.h"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

namespace {

struct Failure {
  msfa_status status;
};

void check(msfa_status s) {
  if (s != MSFA_OK) throw Failure{s};
}

int exit_code(msfa_status s) {
  switch (s) {
    case MSFA_OK: return 0;
    case MSFA_REJECTED: return 2;
    case MSFA_ERR_INPUT:
    case MSFA_ERR_NUMERIC: return 3;
    case MSFA_ERR_MODEL_CORRUPT:
    case MSFA_ERR_MODEL_VERSION:
    case MSFA_ERR_MODEL_CHECKSUM: return 4;
    default: return 1;
  }
}

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
  T** out() { return &p; }
  operator T*() const { return p; }
};

using Config = Handle<msfa_config, msfa_config_free>;
using Frame = Handle<msfa_frame, msfa_frame_free>;
using Dataset = Handle<msfa_dataset, msfa_dataset_free>;
using Clustering = Handle<msfa_clustering, msfa_clustering_free>;
using Model = Handle<msfa_model, msfa_model_free>;
using Results = Handle<msfa_results, msfa_results_free>;
using Dpca = Handle<msfa_dpca, msfa_dpca_free>;

struct Text {
  char* p = nullptr;
  ~Text() { msfa_string_free(p); }
  char** out() { return &p; }
  std::string str() const { return p ? p : ""; }
};

void write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text << '\n';
    return;
  }
  std::ofstream out(path, std::ios::binary);
  out << text << '\n';
  if (!out) {
    std::fprintf(stderr, "error: cannot write '%s'\n", path.c_str());
    throw Failure{MSFA_ERR_INPUT};
  }
}

std::optional<int64_t> timestamp(const std::string& text) {
  if (text.empty()) return std::nullopt;
  int64_t t = 0;
  check(msfa_parse_timestamp(text.c_str(), &t));
  return t;
}

void set(msfa_config* c, const char* key, const std::string& value) { check(msfa_config_set(c, key, value.c_str())); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixture slow feature analysis: simulate, train, monitor and evaluate multi-pattern systems"};
  app.require_subcommand(1);

  std::optional<uint64_t> seed;
  std::optional<double> alpha;
  std::string config_path;
  app.add_option("--seed", seed, "Random seed for simulation and EM initialization");
  app.add_option("--alpha", alpha, "Significance level of the control limits")->check(CLI::Range(1e-12, 0.5));
  app.add_option("--config", config_path, "JSON config file with train/simulate/dpca sections")
      ->check(CLI::ExistingFile);

  auto* sim = app.add_subcommand("simulate", "Generate a synthetic heat-pump data set with ground truth");
  std::string sim_preset, sim_out, sim_truth;
  sim->add_option("--preset", sim_preset, "april-train, may-newpattern or july-fault");
  sim->add_option("--out", sim_out, "Data CSV")->required();
  sim->add_option("--truth", sim_truth, "Truth CSV (timestamp,pattern,status)");

  auto* lag = app.add_subcommand("lag-select", "Pick the time lag from the autocorrelation band");
  std::string lag_input;
  double lag_band = 0.01;
  std::size_t lag_max = 120;
  lag->add_option("--input", lag_input)->required()->check(CLI::ExistingFile);
  lag->add_option("--band", lag_band, "Autocorrelation band")->capture_default_str();
  lag->add_option("--max-lag", lag_max)->capture_default_str();

  auto* clu = app.add_subcommand("cluster", "Fit the Gaussian mixture and label every augmented row");
  std::string clu_input, clu_out;
  std::size_t clu_lag = 0, clu_components = 0, clu_smooth = 0;
  clu->add_option("--input", clu_input)->required()->check(CLI::ExistingFile);
  clu->add_option("--lag", clu_lag, "Time lag (0 = autocorrelation selection)");
  clu->add_option("--components", clu_components)->required();
  clu->add_option("--smooth", clu_smooth, "Odd median-filter window for the labels");
  clu->add_option("--out", clu_out, "Label CSV (timestamp,label)");

  auto* tr = app.add_subcommand("train", "Train an MSFA model, selecting the pattern count on validation data");
  std::string tr_input, tr_valid, tr_model, tr_report;
  std::optional<std::size_t> tr_lag, tr_gmax, tr_components;
  tr->add_option("--input", tr_input, "Training CSV")->required()->check(CLI::ExistingFile);
  tr->add_option("--valid", tr_valid, "Validation CSV (default: tail split of --input)")->check(CLI::ExistingFile);
  tr->add_option("--model", tr_model, "Output model file")->required();
  tr->add_option("--lag", tr_lag, "Time lag (0 = autocorrelation selection)");
  tr->add_option("--g-max", tr_gmax, "Largest pattern count tried");
  tr->add_option("--components", tr_components, "Fixed pattern count, skipping the search");
  tr->add_option("--report", tr_report, "Training report JSON ('-' for stdout)");

  auto* mon = app.add_subcommand("monitor", "Score a stream and diagnose every sample");
  std::string mon_model, mon_input, mon_csv;
  mon->add_option("--model", mon_model)->required()->check(CLI::ExistingFile);
  mon->add_option("--input", mon_input)->required()->check(CLI::ExistingFile);
  mon->add_option("--emit-csv", mon_csv, "Results CSV")->required();

  auto* up = app.add_subcommand("update", "Add a new pattern fitted on confirmed normal samples");
  std::string up_model, up_input, up_out, up_from, up_to;
  up->add_option("--model", up_model)->required()->check(CLI::ExistingFile);
  up->add_option("--input", up_input, "CSV holding the new-pattern samples")->required()->check(CLI::ExistingFile);
  up->add_option("--from", up_from, "First timestamp to use (inclusive)");
  up->add_option("--to", up_to, "Last timestamp to use (exclusive)");
  up->add_option("--out", up_out, "Updated model file")->required();

  auto* ev = app.add_subcommand("evaluate", "FAR, detection delay and detection rate of a monitoring run");
  std::string ev_results, ev_truth, ev_onset, ev_json;
  ev->add_option("--results", ev_results)->required()->check(CLI::ExistingFile);
  ev->add_option("--truth", ev_truth)->check(CLI::ExistingFile);
  ev->add_option("--onset", ev_onset, "Fault onset (epoch seconds or ISO-8601)");
  ev->add_option("--json", ev_json, "Machine-readable report");

  auto* dp = app.add_subcommand("baseline-dpca", "Dynamic PCA baseline with T2 and SPE limits");
  std::string dp_train, dp_input, dp_csv, dp_onset, dp_json;
  std::size_t dp_lag = 0;
  dp->add_option("--train", dp_train)->required()->check(CLI::ExistingFile);
  dp->add_option("--input", dp_input)->required()->check(CLI::ExistingFile);
  dp->add_option("--lag", dp_lag, "Time lag (0 = config or autocorrelation selection)");
  dp->add_option("--emit-csv", dp_csv);
  dp->add_option("--onset", dp_onset);
  dp->add_option("--json", dp_json, "Report JSON (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 3;
  }

  try {
    Config cfg;
    if (config_path.empty())
      check(msfa_config_create(cfg.out()));
    else
      check(msfa_config_load(config_path.c_str(), cfg.out()));
    if (seed) set(cfg, "train.em.seed", std::to_string(*seed));
    if (alpha) set(cfg, "train.alpha", std::to_string(*alpha));

    if (*sim) {
      Dataset data;
      const uint64_t* s = seed ? &*seed : nullptr;
      check(msfa_simulate(sim_preset.empty() ? nullptr : sim_preset.c_str(), cfg, s, data.out()));
      check(msfa_dataset_write(data, sim_out.c_str(), sim_truth.empty() ? nullptr : sim_truth.c_str()));
      std::printf("%zu samples written to %s\n", msfa_dataset_rows(data), sim_out.c_str());
    } else if (*lag) {
      Frame f;
      check(msfa_frame_read_csv(lag_input.c_str(), f.out()));
      std::size_t h = 0;
      int never = 0;
      check(msfa_select_lag(f, lag_band, lag_max, &h, &never));
      std::printf("%zu\n", h);
      if (never) std::fprintf(stderr, "warning: autocorrelation never entered the band; using max lag\n");
    } else if (*clu) {
      Frame f;
      Clustering c;
      Text summary;
      check(msfa_frame_read_csv(clu_input.c_str(), f.out()));
      check(msfa_cluster(f, clu_lag, clu_components, clu_smooth, cfg, c.out()));
      if (!clu_out.empty()) check(msfa_clustering_write_csv(c, clu_out.c_str()));
      check(msfa_clustering_summary(c, summary.out()));
      std::cout << summary.str() << '\n';
    } else if (*tr) {
      if (tr_lag) set(cfg, "train.lag", std::to_string(*tr_lag));
      if (tr_gmax) set(cfg, "train.g_max", std::to_string(*tr_gmax));
      if (tr_components) set(cfg, "train.components", std::to_string(*tr_components));
      Frame train, valid;
      check(msfa_frame_read_csv(tr_input.c_str(), train.out()));
      if (!tr_valid.empty()) check(msfa_frame_read_csv(tr_valid.c_str(), valid.out()));
      Model m;
      Text report;
      const auto s = msfa_train(train, valid, cfg, m.out(), report.out());
      if (s != MSFA_OK && s != MSFA_REJECTED) throw Failure{s};
      check(msfa_model_save(m, tr_model.c_str()));
      if (!tr_report.empty()) write_text(tr_report, report.str());
      std::printf("model with %zu patterns (lag %zu) written to %s\n", msfa_model_patterns(m), msfa_model_lag(m),
                  tr_model.c_str());
      if (s == MSFA_REJECTED) {
        std::fprintf(stderr, "warning: no pattern count passed validation; kept the lowest alarm rate\n");
        return exit_code(s);
      }
    } else if (*mon) {
      Model m;
      Frame f;
      Results r;
      check(msfa_model_load(mon_model.c_str(), m.out()));
      check(msfa_frame_read_csv(mon_input.c_str(), f.out()));
      check(msfa_monitor(m, f, r.out()));
      check(msfa_results_write_csv(r, mon_csv.c_str()));
      std::size_t counts[5] = {};
      for (std::size_t k = 0; k < msfa_results_rows(r); ++k) {
        int h = 0;
        check(msfa_results_get(r, k, nullptr, nullptr, &h));
        ++counts[h];
      }
      std::printf("%zu samples scored\n", msfa_results_rows(r));
      for (int h = 0; h < 5; ++h) std::printf("  %-16s %zu\n", msfa_health_name(h), counts[h]);
    } else if (*up) {
      Model m, updated;
      Frame f, part;
      check(msfa_model_load(up_model.c_str(), m.out()));
      check(msfa_frame_read_csv(up_input.c_str(), f.out()));
      const auto from = timestamp(up_from);
      const auto to = timestamp(up_to);
      const std::size_t b = from ? msfa_frame_find_time(f, *from) : 0;
      const std::size_t e = to ? msfa_frame_find_time(f, *to) : msfa_frame_rows(f);
      check(msfa_frame_slice(f, b, e, part.out()));
      check(msfa_model_update(m, part, updated.out()));
      check(msfa_model_save(updated, up_out.c_str()));
      std::printf("model now has %zu patterns, written to %s\n", msfa_model_patterns(updated), up_out.c_str());
    } else if (*ev) {
      const auto onset = timestamp(ev_onset);
      const double a = alpha ? *alpha : 0.01;
      Text json, text;
      check(msfa_evaluate(ev_results.c_str(), ev_truth.empty() ? nullptr : ev_truth.c_str(),
                          onset ? &*onset : nullptr, a, json.out(), text.out()));
      std::cout << text.str();
      if (!ev_json.empty()) write_text(ev_json, json.str());
    } else if (*dp) {
      Frame train, test;
      Dpca d;
      Text json;
      check(msfa_frame_read_csv(dp_train.c_str(), train.out()));
      check(msfa_frame_read_csv(dp_input.c_str(), test.out()));
      check(msfa_dpca_run(train, test, dp_lag, cfg, d.out()));
      if (!dp_csv.empty()) check(msfa_dpca_write_csv(d, dp_csv.c_str()));
      const auto onset = timestamp(dp_onset);
      check(msfa_dpca_report(d, onset ? &*onset : nullptr, json.out()));
      write_text(dp_json.empty() ? "-" : dp_json, json.str());
    }
  } catch (const Failure& f) {
    const char* msg = msfa_last_error();
    if (msg && *msg) std::fprintf(stderr, "error: %s\n", msg);
    return exit_code(f.status);
  }
  return 0;
}
