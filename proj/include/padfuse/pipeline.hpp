#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "padfuse/estimator.hpp"
#include "padfuse/json_io.hpp"
#include "padfuse/metrics.hpp"
#include "padfuse/simulate.hpp"

namespace padfuse {

/// 64-bit FNV-1a as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view data);

Json estimator_config_to_json(const EstimatorConfig& cfg);
/// Accepts {"preset": "simulation"|"real_world", ...overrides}.
EstimatorConfig estimator_config_from_json(const Json& j);
EstimatorConfig load_estimator_config(const std::filesystem::path& path);

struct RunManifest {
  std::string scenario;
  std::string config_hash;  ///< hash of the canonical scenario config
  std::uint64_t seed = 0;
  TrackingMode mode = TrackingMode::VisTacPen;
  EstimatorConfig estimator;
  std::string sequence;  ///< file names only, so manifests do not depend on the working directory
  std::string output;
};

Json manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const Json& j);

struct FrameEstimate {
  double t = 0.0;
  Pose estimate;
  Pose truth;
  std::optional<Pose> vision;
  SolveReport report;
  std::size_t block_count = 0;
};

struct TrackRun {
  RunManifest manifest;
  ScenarioConfig scenario;
  std::vector<FrameEstimate> frames;
};

TrackRun track_sequence(const SequenceData& seq, TrackingMode mode, const EstimatorConfig& cfg,
                        const HandModel& hand, const ObjectModel& model);
/// Loads the hand and builds the object model named in the sequence config.
TrackRun track_sequence(const SequenceData& seq, TrackingMode mode, const EstimatorConfig& cfg);

/// JSON lines: a "run" header with the manifest, then one "frame" line per step.
std::string run_to_jsonl(const TrackRun& run);
void write_run(const TrackRun& run, const std::filesystem::path& path);
TrackRun read_run(const std::filesystem::path& path);

/// "vis+tac+pen" -> "vis_tac_pen", for file names.
std::string mode_tag(TrackingMode mode);

struct EvaluateOptions {
  /// Average per-run medians over runs of the same object before testing.
  bool average_per_object = false;
};

struct Evaluation {
  std::vector<AddSRow> rows;
  Json summary;
  std::string timeseries_svg;
  std::string boxplot_svg;
};

/// "<scenario>-<seed>", the key that pairs runs across modes.
std::string run_id(const RunManifest& m);

/// ADD-S at every frame that carries a visual measurement.
std::vector<AddSRow> add_s_rows(const TrackRun& run);

/**
 * ADD-S table, per-window statistics (pre-rotation [settle, rotate_start),
 * post-rotation [rotate_start, end]) and signed-rank tests of each fused mode
 * against vis on per-run medians.
 */
Evaluation evaluate(const std::vector<TrackRun>& runs, const EvaluateOptions& options = {});
/// Writes add_s.csv, summary.json, timeseries.svg and boxplot.svg.
void write_evaluation(const Evaluation& ev, const std::filesystem::path& dir);

struct BenchOptions {
  std::size_t steps = 600;
  Shape object = Sphere{0.035};
  int resolution = 128;
  SolverConfig solver = SolverConfig::real_world();
  std::uint64_t seed = 1;
};

struct BenchResult {
  std::size_t steps = 0;
  std::size_t pads = 0;
  double seconds = 0.0;
  double steps_per_second = 0.0;
};

/// Times the vis+tac+pen tracking loop alone (generation and baking excluded).
BenchResult bench(const BenchOptions& options);

/// Worker count for `jobs` independent tasks, capped by PADFUSE_THREADS.
std::size_t worker_count(std::size_t jobs);
/// Runs fn(0..n-1) on worker_count(n) threads; rethrows the first failure.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace padfuse
