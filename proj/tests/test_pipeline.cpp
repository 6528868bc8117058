#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "padfuse/cli.hpp"
#include "padfuse/error.hpp"
#include "padfuse/pipeline.hpp"

using namespace padfuse;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int cli(std::vector<std::string> args, std::string* out_text = nullptr) {
  args.insert(args.begin(), "padfuse");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int rc = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str() + err.str();
  return rc;
}

ScenarioConfig short_scenario() {
  ScenarioConfig cfg;
  cfg.name = "short";
  cfg.object = Box{{0.03, 0.025, 0.04}};
  cfg.initial.mode = InitialPoseMode::FixedYaw;
  cfg.schedule.rotate_start = 3.0;
  cfg.schedule.rotate_duration = 1.0;
  cfg.schedule.hold_duration = 0.5;
  cfg.model.analytic = true;
  return cfg;
}

fs::path write_config(const fs::path& dir, const ScenarioConfig& cfg) {
  const fs::path p = dir / "scenario.json";
  std::ofstream(p) << scenario_to_json(cfg).dump(2);
  return p;
}

}  // namespace

TEST_CASE("FNV-1a reference values") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("estimator config presets and overrides") {
  const EstimatorConfig sim = estimator_config_from_json(Json{{"preset", "simulation"}});
  CHECK(sim.solver.max_iterations == 5);
  const EstimatorConfig real = estimator_config_from_json(
      Json{{"preset", "real_world"}, {"weights", {{"vis", 2.0}, {"tac", 10.0}, {"pen", 300.0}}}, {"damping", 0.1}});
  CHECK(real.solver.max_iterations == 2);
  CHECK(real.solver.damping == 0.1);
  CHECK(real.weights.vis == 2.0);
  CHECK(real.weights.pen == 300.0);
  CHECK(estimator_config_to_json(estimator_config_from_json(estimator_config_to_json(real))) ==
        estimator_config_to_json(real));
  CHECK_THROWS_AS(estimator_config_from_json(Json{{"preset", "lab"}}), Error);

  const EstimatorConfig shipped = load_estimator_config(PADFUSE_DATA_DIR "/solver/simulation.json");
  CHECK(shipped.weights.tac == 10.0);
  CHECK(shipped.weights.pen == 300.0);
}

TEST_CASE("worker count honours the thread cap") {
  CHECK(worker_count(0) >= 1);
  CHECK(worker_count(1) == 1);
  std::vector<int> hits(50, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  CHECK_THROWS(parallel_for(4, [](std::size_t i) {
    if (i == 2) throw Error(ErrorCode::InvalidArgument, "boom");
  }));
}

TEST_CASE("generate is reproducible byte for byte") {
  TempDir dir("padfuse_test_generate");
  const fs::path cfg = write_config(dir.path, short_scenario());
  REQUIRE(cli({"generate", "--config", cfg.string(), "--out", (dir.path / "a.jsonl").string()}) == 0);
  REQUIRE(cli({"generate", "--config", cfg.string(), "--out", (dir.path / "b.jsonl").string()}) == 0);
  REQUIRE(cli({"generate", "--config", cfg.string(), "--seed", "2", "--out", (dir.path / "c.jsonl").string()}) == 0);
  CHECK(slurp(dir.path / "a.jsonl") == slurp(dir.path / "b.jsonl"));
  CHECK(slurp(dir.path / "a.jsonl") != slurp(dir.path / "c.jsonl"));
  CHECK(read_sequence(dir.path / "c.jsonl").config.seed == 2);
}

TEST_CASE("vision-only tracking replays the visual stream") {
  const SequenceData seq = generate(short_scenario());
  const TrackRun run = track_sequence(seq, TrackingMode::Vis, EstimatorConfig{});
  REQUIRE(run.frames.size() == seq.records.size());
  Pose last;
  for (std::size_t i = 0; i < seq.records.size(); ++i) {
    if (seq.records[i].vision) last = *seq.records[i].vision;
    CHECK(run.frames[i].estimate.matrix() == last.matrix());
  }
  CHECK(run.manifest.mode == TrackingMode::Vis);
  CHECK(run_id(run.manifest) == "short-1");
  CHECK(mode_tag(TrackingMode::VisTacPen) == "vis_tac_pen");
}

TEST_CASE("run files round trip") {
  TempDir dir("padfuse_test_run");
  const SequenceData seq = generate(short_scenario());
  const TrackRun run = track_sequence(seq, TrackingMode::VisTacPen, EstimatorConfig{});
  write_run(run, dir.path / "r.run.jsonl");
  const TrackRun back = read_run(dir.path / "r.run.jsonl");
  CHECK(run_to_jsonl(back) == run_to_jsonl(run));
  REQUIRE(back.frames.size() == run.frames.size());
  CHECK(back.frames.back().estimate.matrix() == run.frames.back().estimate.matrix());
  CHECK(add_s_rows(back) == add_s_rows(run));
}

TEST_CASE("end-to-end generate, track and evaluate") {
  TempDir dir("padfuse_test_e2e");
  const fs::path cfg = write_config(dir.path, short_scenario());
  std::vector<std::string> track{"track"};
  for (int seed = 1; seed <= 6; ++seed) {
    const fs::path seq = dir.path / ("seq" + std::to_string(seed) + ".jsonl");
    REQUIRE(cli({"generate", "--config", cfg.string(), "--seed", std::to_string(seed), "--out", seq.string()}) == 0);
    track.insert(track.end(), {"--sequence", seq.string()});
  }
  track.insert(track.end(), {"--mode", "vis", "--mode", "vis+pen", "--mode", "vis+tac+pen", "--solver-config",
                             PADFUSE_DATA_DIR "/solver/simulation.json", "--out", (dir.path / "runs").string()});
  REQUIRE(cli(track) == 0);
  CHECK(fs::exists(dir.path / "runs" / "seq1.vis_tac_pen.run.jsonl"));
  const Json manifest = Json::parse(slurp(dir.path / "runs" / "manifest.json"));
  CHECK(manifest.size() == 18);

  std::string text;
  REQUIRE(cli({"evaluate", "--runs", (dir.path / "runs").string(), "--out", (dir.path / "eval").string()}, &text) == 0);
  for (const char* f : {"add_s.csv", "summary.json", "timeseries.svg", "boxplot.svg"}) CHECK(fs::exists(dir.path / "eval" / f));
  const Json summary = Json::parse(slurp(dir.path / "eval" / "summary.json"));
  CHECK(summary["runs"] == 6);
  const Json& post = summary["windows"]["post_rotation"];
  for (const char* mode : {"vis", "vis+pen", "vis+tac+pen"}) {
    CHECK(post["modes"][mode]["median"].get<double>() > 0.0);
    CHECK(post["modes"][mode]["run_medians"].size() == 6);
  }
  REQUIRE(post["tests"].size() == 2);
  for (const auto& t : post["tests"]) {
    CHECK(t["status"] == "ok");
    CHECK(t["method"] == "exact");
    CHECK(t["p_value"].get<double>() > 0.0);
    CHECK(t["p_value"].get<double>() <= 1.0);
  }
  const auto rows = parse_csv(slurp(dir.path / "eval" / "add_s.csv"));
  const double end = short_scenario().schedule.end_time();
  CHECK(rows.size() == 18 * (static_cast<std::size_t>(std::floor(end * 30.0 + 1e-9)) + 1));
  CHECK(slurp(dir.path / "eval" / "timeseries.svg").rfind("<svg", 0) == 0);

  // evaluating the same runs again gives identical artefacts
  REQUIRE(cli({"evaluate", "--runs", (dir.path / "runs").string(), "--out", (dir.path / "eval2").string()}) == 0);
  for (const char* f : {"add_s.csv", "summary.json", "timeseries.svg", "boxplot.svg"}) {
    CHECK(slurp(dir.path / "eval" / f) == slurp(dir.path / "eval2" / f));
  }

  REQUIRE(cli({"evaluate", "--runs", (dir.path / "runs").string(), "--out", (dir.path / "eval3").string(),
               "--average-per-object"}) == 0);
  const Json per_object = Json::parse(slurp(dir.path / "eval3" / "summary.json"));
  CHECK(per_object["windows"]["post_rotation"]["tests"][0]["status"] == "too-few-samples");
}

TEST_CASE("bad input exits nonzero") {
  TempDir dir("padfuse_test_bad");
  std::string text;
  CHECK(cli({}, &text) != 0);
  CHECK(cli({"generate", "--config", (dir.path / "missing.json").string(), "--out", "x"}, &text) != 0);
  std::ofstream(dir.path / "broken.json") << "{ not json";
  CHECK(cli({"generate", "--config", (dir.path / "broken.json").string(), "--out", (dir.path / "x").string()}, &text) != 0);
  CHECK(text.find("error") != std::string::npos);
  std::ofstream(dir.path / "s.jsonl") << "{}\n";
  CHECK(cli({"track", "--sequence", (dir.path / "s.jsonl").string(), "--mode", "tac", "--out", "o"}, &text) != 0);
  CHECK(cli({"track", "--sequence", (dir.path / "s.jsonl").string(), "--mode", "vis", "--out",
             (dir.path / "o").string()}, &text) != 0);
  CHECK(cli({"evaluate", "--runs", (dir.path / "nothing").string(), "--out", (dir.path / "e").string()}, &text) != 0);
}

TEST_CASE("bench reports throughput") {
  BenchOptions opts;
  opts.steps = 50;
  opts.resolution = 32;
  const BenchResult r = bench(opts);
  CHECK(r.steps == 50);
  CHECK(r.pads == 16);
  CHECK(r.seconds > 0.0);
  CHECK(r.steps_per_second == doctest::Approx(50.0 / r.seconds));
}
