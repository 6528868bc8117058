#include "padfuse/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "padfuse/error.hpp"
#include "padfuse/pipeline.hpp"

namespace padfuse {

namespace fs = std::filesystem;

namespace {

Json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
  }
}

std::vector<fs::path> expand_runs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(in)) {
        const std::string name = e.path().filename().string();
        if (e.is_regular_file() && name.size() > 10 && name.ends_with(".run.jsonl")) found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.emplace_back(in);
    }
  }
  return out;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Visuo-tactile object pose tracking: scenario generation, tracking and evaluation"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "Generate a synthetic grasp sequence");
  std::string gen_config, gen_out;
  std::optional<std::uint64_t> gen_seed;
  gen->add_option("--config", gen_config, "Scenario config (JSON)")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", gen_out, "Output sequence (JSON lines)")->required();
  gen->add_option("--seed", gen_seed, "Override the config seed");

  auto* track = app.add_subcommand("track", "Track sequences with one or more modes");
  std::vector<std::string> track_seqs, track_modes;
  std::string track_solver, track_out;
  track->add_option("--sequence", track_seqs, "Sequence files")->required()->check(CLI::ExistingFile);
  track->add_option("--mode", track_modes, "vis | vis+pen | vis+tac+pen (repeatable)")
      ->required()
      ->check(CLI::IsMember({"vis", "vis+pen", "vis+tac+pen"}));
  track->add_option("--solver-config", track_solver, "Solver config (JSON)")->check(CLI::ExistingFile);
  track->add_option("--out", track_out, "Output directory")->required();

  auto* eval = app.add_subcommand("evaluate", "ADD-S table, statistics and plots");
  std::vector<std::string> eval_runs;
  std::string eval_out;
  bool per_object = false;
  eval->add_option("--runs", eval_runs, "Run files or directories holding *.run.jsonl")->required();
  eval->add_option("--out", eval_out, "Output directory")->required();
  eval->add_flag("--average-per-object", per_object, "Average run medians per object before testing");

  auto* bench_cmd = app.add_subcommand("bench", "Tracking-loop throughput");
  BenchOptions bench_opts;
  std::string bench_solver;
  bench_cmd->add_option("--steps", bench_opts.steps, "Tracker steps to time")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--resolution", bench_opts.resolution, "SDF grid resolution per axis")
      ->check(CLI::Range(2, 1024));
  bench_cmd->add_option("--solver-config", bench_solver, "Solver config (JSON); default real_world preset")
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*gen) {
      ScenarioConfig cfg = scenario_from_json(read_json_file(gen_config));
      if (gen_seed) cfg.seed = *gen_seed;
      const SequenceData seq = generate(cfg);
      if (const auto parent = fs::path(gen_out).parent_path(); !parent.empty()) fs::create_directories(parent);
      write_sequence(seq, gen_out);
      out << "wrote " << seq.records.size() << " records to " << gen_out << " (" << seq.attempts
          << " initial-pose samples)\n";
    } else if (*track) {
      const EstimatorConfig cfg = track_solver.empty() ? EstimatorConfig{} : load_estimator_config(track_solver);
      std::vector<TrackingMode> modes;
      for (const auto& m : track_modes) modes.push_back(parse_mode(m));
      fs::create_directories(track_out);
      std::vector<Json> manifests(track_seqs.size() * modes.size());
      parallel_for(track_seqs.size(), [&](std::size_t i) {
        const fs::path seq_path(track_seqs[i]);
        const SequenceData seq = read_sequence(seq_path);
        const HandModel hand = load_hand(seq.config.hand);
        const ObjectModel model = make_object_model(seq.config.object, seq.config.model);
        for (std::size_t m = 0; m < modes.size(); ++m) {
          TrackRun run = track_sequence(seq, modes[m], cfg, hand, model);
          run.manifest.sequence = seq_path.filename().string();
          run.manifest.output = seq_path.stem().string() + "." + mode_tag(modes[m]) + ".run.jsonl";
          write_run(run, fs::path(track_out) / run.manifest.output);
          manifests[i * modes.size() + m] = manifest_to_json(run.manifest);
        }
      });
      std::ofstream mf(fs::path(track_out) / "manifest.json", std::ios::binary);
      mf << Json(manifests).dump(2) << "\n";
      out << "tracked " << track_seqs.size() << " sequence(s) x " << modes.size() << " mode(s) into " << track_out
          << "\n";
    } else if (*eval) {
      std::vector<TrackRun> runs;
      for (const auto& p : expand_runs(eval_runs)) runs.push_back(read_run(p));
      const Evaluation ev = evaluate(runs, EvaluateOptions{per_object});
      write_evaluation(ev, eval_out);
      const Json& post = ev.summary["windows"]["post_rotation"]["modes"];
      for (const auto& [mode, s] : post.items()) {
        out << mode << ": post-rotation median ADD-S " << s["median"].get<double>() * 1e3 << " mm\n";
      }
      out << "wrote " << ev.rows.size() << " rows to " << (fs::path(eval_out) / "add_s.csv").string() << "\n";
    } else if (*bench_cmd) {
      if (!bench_solver.empty()) bench_opts.solver = load_estimator_config(bench_solver).solver;
      const BenchResult r = bench(bench_opts);
      out << Json{{"steps", r.steps},
                  {"pads", r.pads},
                  {"lm_iterations", bench_opts.solver.max_iterations},
                  {"resolution", bench_opts.resolution},
                  {"seconds", r.seconds},
                  {"steps_per_second", r.steps_per_second}}
                 .dump()
          << "\n";
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace padfuse
