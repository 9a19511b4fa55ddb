#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "msfa/config.hpp"
#include "msfa/io.hpp"
#include "msfa/model_io.hpp"
#include "msfa/pipeline.hpp"
#include "msfa/rng.hpp"
#include "msfa/simulator.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace msfa;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "msfa_test_io";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

const MsfaModel& small_model() {
  static const MsfaModel m = [] {
    auto cfg = reference_scenario("april-train");
    cfg.duration = 3000;
    const auto d = generate(cfg);
    TrainConfig tc;
    tc.lag = 3;
    auto model = fit_model(augment(d.frame, 3), 2, tc, d.frame.channel_names);
    model.metadata["note"] = "unit test";
    return model;
  }();
  return m;
}

}  // namespace

TEST_CASE("timestamps parse from epoch seconds and ISO-8601") {
  CHECK(parse_timestamp("1617235200") == 1617235200);
  CHECK(parse_timestamp("2021-04-01T00:00:00Z") == 1617235200);
  CHECK(parse_timestamp("2021-04-01 00:00:00") == 1617235200);
  CHECK(parse_timestamp("2021-04-01T00:00Z") == 1617235200);
  CHECK(parse_timestamp("2021-04-01T08:00:00+08:00") == 1617235200);
  CHECK(parse_timestamp("2021-03-31T19:30:00-04:30") == 1617235200);
  CHECK(format_timestamp(1617235200) == "2021-04-01T00:00:00Z");
  CHECK(format_timestamp(0) == "1970-01-01T00:00:00Z");
  CHECK_THROWS_AS(parse_timestamp("yesterday"), InputError);
  CHECK_THROWS_AS(parse_timestamp("2021-13-01T00:00:00Z"), InputError);
  CHECK_THROWS_AS(parse_timestamp(""), InputError);
}

TEST_CASE("doubles print as round-trip shortest decimals") {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = std::ldexp(rng.normal(), static_cast<int>(rng.below(200)) - 100);
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(49.0) == "49");
}

TEST_CASE("frame CSV round-trips exactly") {
  const auto d = generate(reference_scenario("july-fault"));
  const auto p = scratch("frame.csv");
  write_frame_csv(d.frame, p.string());
  const auto back = read_frame_csv(p.string());
  CHECK(back.timestamps == d.frame.timestamps);
  CHECK(bit_equal(back.values, d.frame.values));
  CHECK(back.channel_names == std::vector<std::string>{"inlet", "outlet"});
  write_frame_csv(back, scratch("frame2.csv").string());
  CHECK(slurp(p) == slurp(scratch("frame2.csv")));
}

TEST_CASE("frame CSV accepts epoch timestamps") {
  const auto p = scratch("epoch.csv");
  spit(p, "timestamp,a,b\n60,1,2\n120,3,4.5\n180,5,6\n");
  const auto f = read_frame_csv(p.string());
  CHECK(f.timestamps == std::vector<Timestamp>{60, 120, 180});
  CHECK(f.values(1, 1) == 4.5);
}

TEST_CASE("malformed frame CSVs are input errors") {
  const auto p = scratch("bad.csv");
  for (const char* text : {"", "time,a\n1,2\n3,4\n", "timestamp,a\n1,2\n1,3\n", "timestamp,a\n1,2\n2,nan\n",
                           "timestamp,a,b\n1,2\n2,3,4\n", "timestamp,a\n1,x\n2,3\n", "timestamp,a\n5,1\n"}) {
    spit(p, text);
    CAPTURE(text);
    CHECK_THROWS_AS(read_frame_csv(p.string()), InputError);
  }
  CHECK_THROWS_AS(read_frame_csv(scratch("missing.csv").string()), InputError);
}

TEST_CASE("truth and results CSVs round-trip") {
  auto cfg = reference_scenario("may-newpattern");
  const auto d = generate(cfg);
  const auto tp = scratch("truth.csv");
  write_truth_csv(d, tp.string());
  const auto truth = read_truth_csv(tp.string());
  CHECK(truth.timestamps == d.frame.timestamps);
  CHECK(truth.labels == d.labels);
  CHECK(truth.status == d.status);
  CHECK(slurp(tp).rfind("timestamp,pattern,status\n", 0) == 0);

  const auto r = monitor_stream(small_model(), d.frame.slice(0, 400));
  const auto rp = scratch("results.csv");
  write_results_csv(r, rp.string());
  CHECK(slurp(rp) == results_csv(r));
  CHECK(slurp(rp).rfind("timestamp,bip_ss,bip_sr,bip_ds,bip_dr,status\n", 0) == 0);
  const auto back = read_results_csv(rp.string());
  REQUIRE(back.bips.size() == r.bips.size());
  for (std::size_t k = 0; k < r.bips.size(); ++k) {
    CHECK(back.bips[k] == r.bips[k].bip);
    CHECK(back.status[k] == r.diagnoses[k].status);
    CHECK(back.timestamps[k] == r.bips[k].timestamp);
  }
}

TEST_CASE("model save, load and save again are byte-identical") {
  const auto& m = small_model();
  const auto a = scratch("m1.msfa"), b = scratch("m2.msfa");
  save_model(m, a.string());
  const auto loaded = load_model(a.string());
  CHECK(models_equal(m, loaded));
  save_model(loaded, b.string());
  CHECK(slurp(a) == slurp(b));
  CHECK(serialize_model(m) == slurp(a));
}

TEST_CASE("models_equal notices a one-ulp change") {
  const auto& m = small_model();
  auto other = m;
  CHECK(models_equal(m, other));
  double& v = other.patterns[1].sfa.w_slow(0, 0);
  v = std::nextafter(v, 1e300);
  CHECK_FALSE(models_equal(m, other));
  auto named = m;
  named.metadata["note"] = "changed";
  CHECK_FALSE(models_equal(m, named));
}

TEST_CASE("model file errors are distinct") {
  const std::string good = serialize_model(small_model());
  CHECK_THROWS_AS(deserialize_model(good.substr(0, good.size() / 2)), CorruptModelError);
  CHECK_THROWS_AS(deserialize_model("not json"), CorruptModelError);
  CHECK_THROWS_AS(deserialize_model("{\"format\":\"other\"}"), CorruptModelError);

  auto doc = nlohmann::ordered_json::parse(good);
  auto future = doc;
  future["schema_version"] = kModelSchemaVersion + 1;
  CHECK_THROWS_AS(deserialize_model(future.dump(1)), ModelVersionError);

  auto tampered = doc;
  tampered["body"]["alpha"] = "0x1.47ae147ae147bp-6";
  CHECK_THROWS_AS(deserialize_model(tampered.dump(1)), ChecksumError);

  auto bad_sum = doc;
  bad_sum["checksum"] = "fnv1a64:0000000000000000";
  CHECK_THROWS_AS(deserialize_model(bad_sum.dump(1)), ChecksumError);

  const auto p = scratch("truncated.msfa");
  spit(p, good.substr(0, 100));
  CHECK_THROWS_AS(load_model(p.string()), CorruptModelError);
  CHECK_THROWS_AS(load_model(scratch("absent.msfa").string()), InputError);
}

TEST_CASE("config documents") {
  const auto cfg = parse_config(R"({"train": {"lag": 7, "g_max": 9, "em": {"seed": 3}},
                                    "simulate": {"preset": "july-fault", "seed": 99,
                                                 "start_time": "2022-01-01T00:00:00Z"},
                                    "dpca": {"variance_fraction": 0.8}})");
  CHECK(cfg.train.lag == 7);
  CHECK(cfg.train.g_max == 9);
  CHECK(cfg.train.em.seed == 3);
  CHECK(cfg.train.alpha == 0.01);
  CHECK(cfg.has_simulate);
  CHECK(cfg.simulate.name == "july-fault");
  CHECK(cfg.simulate.seed == 99);
  CHECK(cfg.simulate.start_time == 1640995200);
  CHECK(cfg.simulate.faults.size() == 1);
  CHECK(cfg.dpca.variance_fraction == 0.8);

  CHECK_THROWS_WITH_AS(parse_config(R"({"train": {"lagg": 7}})"), doctest::Contains("lagg"), InputError);
  CHECK_THROWS_AS(parse_config(R"({"extra": {}})"), InputError);
  CHECK_THROWS_AS(parse_config(R"({"train": {"lag": "seven"}})"), InputError);
  CHECK_THROWS_AS(parse_config("{"), InputError);
}

TEST_CASE("simulator configs survive a JSON round trip") {
  for (const auto& s : reference_scenarios()) {
    const auto text = sim_config_json(s);
    const auto back = parse_config(text).simulate;
    CHECK(sim_config_json(back) == text);
    CHECK(bit_equal(generate(back).frame.values, generate(s).frame.values));
  }
}

TEST_CASE("shipped default config carries the documented lag and pattern bound") {
  const auto cfg = load_config(MSFA_SOURCE_DIR "/configs/default.json");
  CHECK(cfg.train.lag == 43);
  CHECK(cfg.train.g_max == 32);
  CHECK(cfg.train.alpha == 0.01);
  CHECK(cfg.train.window == 3);
  const auto desk = load_config(MSFA_SOURCE_DIR "/configs/desk.json");
  CHECK(desk.train.lag == 5);
}
