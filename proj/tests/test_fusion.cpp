#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "msfa/fusion.hpp"
#include "msfa/metrics.hpp"
#include "msfa/pipeline.hpp"
#include "msfa/simulator.hpp"

#include <algorithm>

using namespace msfa;

namespace {

constexpr double kAlpha = 0.01;

struct Fixture {
  TimeSeriesFrame train;
  MsfaModel model;
  MsfaModel single;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture out;
    const auto data = generate(reference_scenario("april-train"));
    out.train = split_validation(data.frame, 1.0 / 3.0).first;
    TrainConfig cfg;
    cfg.lag = 5;
    const auto a = augment(out.train, 5);
    out.model = fit_model(a, 6, cfg);
    out.single = fit_model(a, 1, cfg);
    return out;
  }();
  return f;
}

BipVector bip_of(unsigned bits) {
  BipVector b;
  for (std::size_t i = 0; i < 4; ++i) b.bip[i] = (bits >> i) & 1U ? 0.9995 : 0.4;
  return b;
}

// Table II decision written out from the rule text, independent of the library.
HealthStatus oracle(const std::array<unsigned, 3>& window) {
  bool persistent[4], spike[4], steady_any = false;
  for (std::size_t i = 0; i < 4; ++i) {
    bool all = true;
    for (unsigned w : window) all = all && ((w >> i) & 1U);
    persistent[i] = all;
    spike[i] = ((window[2] >> i) & 1U) && !all;
  }
  for (unsigned w : window) steady_any = steady_any || (w & 0b0011U);
  const bool steady = persistent[0] || persistent[1];
  const bool dynamic = persistent[2] || persistent[3];
  if (steady && dynamic) return HealthStatus::Fault;
  if (dynamic) return HealthStatus::Degradation;
  if (steady) return HealthStatus::NewPattern;
  if ((spike[2] || spike[3]) && !steady_any) return HealthStatus::NormalSwitching;
  return HealthStatus::Normal;
}

}  // namespace

TEST_CASE("rule engine matches the precedence table on all 4096 windows") {
  std::size_t mismatches = 0;
  std::array<std::size_t, 5> seen{};
  for (unsigned code = 0; code < 4096; ++code) {
    const std::array<unsigned, 3> w{code & 15U, (code >> 4) & 15U, (code >> 8) & 15U};
    const std::array<BipVector, 3> window{bip_of(w[0]), bip_of(w[1]), bip_of(w[2])};
    const auto d = classify(window, kAlpha);
    const auto expect = oracle(w);
    mismatches += d.status != expect;
    ++seen[static_cast<std::size_t>(expect)];
    CHECK_FALSE(d.evidence.warm_up);
    CHECK(d.evidence.window == 3);
  }
  CHECK(mismatches == 0);
  for (auto n : seen) CHECK(n > 0);
}

TEST_CASE("rule examples") {
  const auto run = [](unsigned a, unsigned b, unsigned c) {
    const std::array<BipVector, 3> w{bip_of(a), bip_of(b), bip_of(c)};
    return classify(w, kAlpha).status;
  };
  CHECK(run(0, 0, 0) == HealthStatus::Normal);
  CHECK(run(0b0001, 0b0001, 0b0001) == HealthStatus::NewPattern);
  CHECK(run(0b0100, 0b0100, 0b0100) == HealthStatus::Degradation);
  CHECK(run(0b0101, 0b0101, 0b0101) == HealthStatus::Fault);
  CHECK(run(0, 0, 0b1000) == HealthStatus::NormalSwitching);
  // A steady excursion anywhere in the window rules out a benign switch.
  CHECK(run(0b0001, 0, 0b1000) == HealthStatus::Normal);
  CHECK(classify_flags({true, false, false, false}, {true, false, true, false}, true) ==
        HealthStatus::NewPattern);
}

TEST_CASE("short windows are a Normal warm-up") {
  const std::array<BipVector, 2> w{bip_of(15), bip_of(15)};
  const auto d = classify(w, kAlpha);
  CHECK(d.status == HealthStatus::Normal);
  CHECK(d.evidence.warm_up);
  const std::array<BipVector, 5> longer{bip_of(0), bip_of(0), bip_of(4), bip_of(4), bip_of(4)};
  CHECK(classify(longer, kAlpha).status == HealthStatus::Degradation);
  CHECK(classify(longer, kAlpha, 5).status == HealthStatus::NormalSwitching);
}

TEST_CASE("status names round-trip") {
  for (int s = 0; s < 5; ++s) {
    const auto st = static_cast<HealthStatus>(s);
    CHECK(parse_status(status_name(st)) == st);
  }
  CHECK(parse_status("new_pattern") == HealthStatus::NewPattern);
  CHECK(parse_status("normal_switching") == HealthStatus::NormalSwitching);
  CHECK_THROWS_AS(parse_status("broken"), InputError);
}

TEST_CASE("single-pattern fusion equals the local probabilities") {
  const auto& fx = fixture();
  const auto a = augment(fx.train.slice(0, 400), 5);
  const Monitor mon(fx.single);
  for (Eigen::Index i = 0; i < 50; ++i) {
    const auto b = mon.fuse(a.rows.row(i));
    const Matrix local = mon.local(a.rows.row(i));
    for (Eigen::Index j = 0; j < 4; ++j) CHECK(b.bip[static_cast<std::size_t>(j)] == local(0, j));
    CHECK(b.posterior[0] == 1.0);
  }
}

TEST_CASE("fused indices are the posterior-weighted local probabilities") {
  const auto& fx = fixture();
  const auto a = augment(fx.train.slice(2000, 2600), 5);
  const Monitor mon(fx.model);
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(a.row_count()); i += 23) {
    const auto b = mon.fuse(a.rows.row(i));
    const Matrix local = mon.local(a.rows.row(i));
    Vector post;
    posterior(fx.model.mixture, a.rows.row(i), post);
    CHECK(post.sum() <= 1.0 + 1e-12);
    for (Eigen::Index j = 0; j < 4; ++j) {
      CHECK(b.bip[static_cast<std::size_t>(j)] == doctest::Approx(post.dot(local.col(j))).epsilon(1e-12));
      CHECK(b.bip[static_cast<std::size_t>(j)] >= 0.0);
      CHECK(b.bip[static_cast<std::size_t>(j)] <= 1.0);
    }
    const auto free_fn = fuse(fx.model, a.lagged(i), a.diff(i));
    CHECK(free_fn.bip == b.bip);
  }
}

TEST_CASE("extreme samples keep every index within [0, 1]") {
  const auto& fx = fixture();
  const Monitor mon(fx.model);
  const auto width = static_cast<Eigen::Index>(2 * fx.model.lagged_width());
  for (double v : {-1e3, 0.0, 49.0, 80.0, 1e6, 1e200}) {
    const auto b = mon.fuse(RowVector::Constant(width, v));
    for (double x : b.bip) {
      CHECK(x >= 0.0);
      CHECK(x <= 1.0);
    }
  }
  const auto far_away = mon.fuse(RowVector::Constant(width, 1e200));
  CHECK(far_away.outlier);
}

TEST_CASE("training replay stays quiet and is deterministic") {
  const auto& fx = fixture();
  const auto a = monitor_stream(fx.model, fx.train);
  const auto b = monitor_stream(fx.model, fx.train);
  CHECK(far(a.statuses()) <= 2.0 * kAlpha);
  REQUIRE(a.bips.size() == b.bips.size());
  bool same = true;
  for (std::size_t k = 0; k < a.bips.size(); ++k)
    same = same && a.bips[k].bip == b.bips[k].bip && a.diagnoses[k].status == b.diagnoses[k].status;
  CHECK(same);
}

TEST_CASE("rolling window restarts after a gap") {
  const auto& fx = fixture();
  auto f = fx.train.slice(0, 300);
  for (std::size_t k = 150; k < 300; ++k) f.timestamps[k] += 3600;
  const auto r = monitor_stream(fx.model, f);
  REQUIRE(r.bips.size() == 2 * (150 - 5));
  const std::size_t first_after = 150 - 5;
  CHECK(r.diagnoses[first_after].evidence.warm_up);
  CHECK(r.diagnoses[first_after + 1].evidence.warm_up);
  CHECK_FALSE(r.diagnoses[first_after + 2].evidence.warm_up);
  CHECK(r.source_rows[first_after] == 150 + 4);
}

TEST_CASE("dynamics fault is flagged within 60 samples") {
  const auto& fx = fixture();
  auto cfg = reference_scenario("july-fault");
  cfg.faults = {FaultSpec{1440, FaultKind::DynamicsChange, 2.0}};
  const auto data = generate(cfg);
  const auto r = monitor_stream(fx.model, data.frame);
  std::vector<Timestamp> ts;
  for (const auto& b : r.bips) ts.push_back(b.timestamp);
  const auto det = fdd_fdr(r.statuses(), ts, data.frame.timestamps[1440]);
  REQUIRE(det.fdt_index.has_value());
  std::size_t first = *det.fdt_index;
  while (first < r.bips.size() && r.diagnoses[first].status != HealthStatus::Degradation &&
         r.diagnoses[first].status != HealthStatus::Fault)
    ++first;
  REQUIRE(first < r.bips.size());
  const auto onset_row = static_cast<std::size_t>(
      std::lower_bound(r.source_rows.begin(), r.source_rows.end(), std::size_t{1440}) - r.source_rows.begin());
  CHECK(first >= onset_row);
  CHECK(first - onset_row <= 60);
}

TEST_CASE("new pattern update") {
  const auto& fx = fixture();
  const auto cfg = reference_scenario("may-newpattern");
  const auto data = generate(cfg);
  const std::size_t onset = cfg.faults.at(0).onset;
  const auto before = monitor_stream(fx.model, data.frame.slice(onset, onset + 600));
  std::size_t new_pattern = 0;
  for (auto s : before.statuses()) new_pattern += s == HealthStatus::NewPattern || s == HealthStatus::Fault;
  CHECK(new_pattern > before.bips.size() / 2);

  const auto samples = augment(data.frame.slice(onset + 120, onset + 1560), 5);
  const auto updated = update_with_new_pattern(fx.model, samples);
  CHECK(updated.size() == fx.model.size() + 1);
  CHECK(fx.model.size() == 6);
  double total = 0.0;
  for (const auto& c : updated.mixture.components) total += c.weight;
  CHECK(std::abs(total - 1.0) < 1e-12);

  const auto replay = monitor_augmented(updated, samples);
  std::size_t quiet = 0;
  for (auto s : replay.statuses()) quiet += !is_alarm(s);
  CHECK(static_cast<double>(quiet) >= 0.95 * static_cast<double>(replay.bips.size()));

  const auto after = monitor_stream(updated, data.frame.slice(onset + 1560, data.frame.rows()));
  CHECK(far(after.statuses()) <= 2.0 * kAlpha);

  const double old_far = far(monitor_stream(fx.model, fx.train).statuses());
  const double new_far = far(monitor_stream(updated, fx.train).statuses());
  CHECK(new_far <= old_far + 0.01);
}

TEST_CASE("updating with an existing pattern is harmless") {
  const auto& fx = fixture();
  const auto samples = augment(fx.train.slice(0, 800), 5);
  const auto updated = update_with_new_pattern(fx.model, samples);
  CHECK(far(monitor_augmented(updated, samples).statuses()) <= 2.0 * kAlpha);
}

TEST_CASE("update needs enough rows") {
  const auto& fx = fixture();
  const std::size_t need = minimum_pattern_rows(fx.model.lagged_width());
  CHECK(need == 2 * fx.model.lagged_width() + 2);
  const auto few = augment(fx.train.slice(0, need), 5);
  REQUIRE(few.row_count() < need);
  const std::string count = std::to_string(need);
  CHECK_THROWS_WITH_AS(update_with_new_pattern(fx.model, few), doctest::Contains(count.c_str()), InputError);
}
