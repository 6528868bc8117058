#include "padfuse/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "padfuse/error.hpp"

namespace padfuse {

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

Json kernel_to_json(const RobustKernel& k) {
  if (k.type() == RobustKernel::Type::Quadratic) return Json{{"type", "quadratic"}};
  return Json{{"type", "welsch"}, {"theta", k.theta()}};
}

RobustKernel kernel_from_json(const Json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "quadratic") return RobustKernel::quadratic();
  if (type != "welsch") throw Error(ErrorCode::Parse, "unknown kernel type '" + type + "'");
  if (j.contains("log_theta")) return RobustKernel::welsch_log(j.at("log_theta").get<double>());
  return RobustKernel::welsch(j.at("theta").get<double>());
}

Termination termination_from_string(const std::string& s) {
  if (s == "max-iter") return Termination::MaxIterations;
  if (s == "converged") return Termination::Converged;
  if (s == "degenerate") return Termination::Degenerate;
  throw Error(ErrorCode::Parse, "unknown termination '" + s + "'");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out << text;
}

}  // namespace

Json estimator_config_to_json(const EstimatorConfig& cfg) {
  const SolverConfig& s = cfg.solver;
  return Json{{"max_iterations", s.max_iterations},
              {"damping", s.damping},
              {"step_tolerance", s.step_tolerance},
              {"kernel_vis", kernel_to_json(s.kernel_vis)},
              {"kernel_tac", kernel_to_json(s.kernel_tac)},
              {"kernel_pen", kernel_to_json(s.kernel_pen)},
              {"weights", {{"vis", cfg.weights.vis}, {"tac", cfg.weights.tac}, {"pen", cfg.weights.pen}}}};
}

EstimatorConfig estimator_config_from_json(const Json& j) {
  try {
    EstimatorConfig cfg;
    const auto preset = value_or(j, "preset", std::string("simulation"));
    if (preset == "simulation") {
      cfg.solver = SolverConfig::simulation();
    } else if (preset == "real_world") {
      cfg.solver = SolverConfig::real_world();
    } else {
      throw Error(ErrorCode::Parse, "unknown solver preset '" + preset + "'");
    }
    SolverConfig& s = cfg.solver;
    s.max_iterations = value_or(j, "max_iterations", s.max_iterations);
    s.damping = value_or(j, "damping", s.damping);
    s.step_tolerance = value_or(j, "step_tolerance", s.step_tolerance);
    if (j.contains("log_theta_vis")) s.kernel_vis = RobustKernel::welsch_log(j.at("log_theta_vis").get<double>());
    if (j.contains("log_theta_tac")) s.kernel_tac = RobustKernel::welsch_log(j.at("log_theta_tac").get<double>());
    if (j.contains("kernel_vis")) s.kernel_vis = kernel_from_json(j.at("kernel_vis"));
    if (j.contains("kernel_tac")) s.kernel_tac = kernel_from_json(j.at("kernel_tac"));
    if (j.contains("kernel_pen")) s.kernel_pen = kernel_from_json(j.at("kernel_pen"));
    if (auto it = j.find("weights"); it != j.end()) {
      cfg.weights.vis = value_or(*it, "vis", cfg.weights.vis);
      cfg.weights.tac = value_or(*it, "tac", cfg.weights.tac);
      cfg.weights.pen = value_or(*it, "pen", cfg.weights.pen);
    }
    s.validate();
    if (!(cfg.weights.vis > 0.0 && cfg.weights.tac > 0.0 && cfg.weights.pen > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "factor weights must be positive");
    }
    return cfg;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("solver config: ") + e.what());
  }
}

EstimatorConfig load_estimator_config(const std::filesystem::path& path) {
  try {
    return estimator_config_from_json(Json::parse(read_file(path)));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
  }
}

Json manifest_to_json(const RunManifest& m) {
  return Json{{"scenario", m.scenario},
              {"config_hash", m.config_hash},
              {"seed", m.seed},
              {"mode", std::string(to_string(m.mode))},
              {"solver", estimator_config_to_json(m.estimator)},
              {"sequence", m.sequence},
              {"output", m.output}};
}

RunManifest manifest_from_json(const Json& j) {
  RunManifest m;
  m.scenario = j.at("scenario").get<std::string>();
  m.config_hash = j.at("config_hash").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.mode = parse_mode(j.at("mode").get<std::string>());
  m.estimator = estimator_config_from_json(j.at("solver"));
  m.sequence = value_or(j, "sequence", std::string());
  m.output = value_or(j, "output", std::string());
  return m;
}

std::string mode_tag(TrackingMode mode) {
  std::string s(to_string(mode));
  std::replace(s.begin(), s.end(), '+', '_');
  return s;
}

TrackRun track_sequence(const SequenceData& seq, TrackingMode mode, const EstimatorConfig& cfg,
                        const HandModel& hand, const ObjectModel& model) {
  TrackRun run;
  run.scenario = seq.config;
  run.manifest.scenario = seq.config.name;
  run.manifest.config_hash = fnv1a_hex(scenario_to_json(seq.config).dump());
  run.manifest.seed = seq.config.seed;
  run.manifest.mode = mode;
  run.manifest.estimator = cfg;

  TrackerState state;
  state.flags = configure_ablation(mode);
  run.frames.reserve(seq.records.size());
  for (const auto& r : seq.records) {
    if (!state.initialized && !r.vision) continue;  // wait for the first visual pose
    const Measurements m{r.t, r.vision, r.y, r.q, r.wrist};
    StepResult res = step(state, m, hand, model, cfg);
    state = res.state;
    run.frames.push_back({r.t, state.estimate, r.truth, r.vision, std::move(res.report), res.block_count});
  }
  return run;
}

TrackRun track_sequence(const SequenceData& seq, TrackingMode mode, const EstimatorConfig& cfg) {
  const HandModel hand = load_hand(seq.config.hand);
  const ObjectModel model = make_object_model(seq.config.object, seq.config.model);
  return track_sequence(seq, mode, cfg, hand, model);
}

std::string run_to_jsonl(const TrackRun& run) {
  std::string out = Json{{"kind", "run"},
                         {"format", "padfuse-run/1"},
                         {"manifest", manifest_to_json(run.manifest)},
                         {"scenario", scenario_to_json(run.scenario)}}
                        .dump();
  out += '\n';
  for (const auto& f : run.frames) {
    out += Json{{"kind", "frame"},
                {"t", f.t},
                {"estimate", pose_to_json(f.estimate)},
                {"truth", pose_to_json(f.truth)},
                {"vision", f.vision ? pose_to_json(*f.vision) : Json(nullptr)},
                {"iterations", f.report.iterations},
                {"termination", std::string(to_string(f.report.termination))},
                {"costs", f.report.costs},
                {"non_descent", f.report.non_descent},
                {"blocks", f.block_count}}
               .dump();
    out += '\n';
  }
  return out;
}

void write_run(const TrackRun& run, const std::filesystem::path& path) { write_file(path, run_to_jsonl(run)); }

TrackRun read_run(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open run " + path.string());
  TrackRun run;
  bool have_header = false;
  std::string line;
  std::size_t line_no = 0;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const Json j = Json::parse(line);
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "run") {
        run.manifest = manifest_from_json(j.at("manifest"));
        run.scenario = scenario_from_json(j.at("scenario"));
        have_header = true;
      } else if (kind == "frame") {
        FrameEstimate f;
        f.t = j.at("t").get<double>();
        f.estimate = pose_from_json(j.at("estimate"));
        f.truth = pose_from_json(j.at("truth"));
        if (!j.at("vision").is_null()) f.vision = pose_from_json(j.at("vision"));
        f.report.pose = f.estimate;
        f.report.iterations = j.at("iterations").get<int>();
        f.report.termination = termination_from_string(j.at("termination").get<std::string>());
        f.report.costs = j.at("costs").get<std::vector<double>>();
        f.report.non_descent = j.at("non_descent").get<bool>();
        f.block_count = j.at("blocks").get<std::size_t>();
        run.frames.push_back(std::move(f));
      } else {
        throw Error(ErrorCode::Parse, "unknown record kind '" + kind + "'");
      }
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Parse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
  }
  if (!have_header) throw Error(ErrorCode::Parse, path.string() + ": missing run header");
  return run;
}

// ---------------------------------------------------------------------------

std::string run_id(const RunManifest& m) { return m.scenario + "-" + std::to_string(m.seed); }

std::vector<AddSRow> add_s_rows(const TrackRun& run) {
  std::mt19937_64 rng(run.scenario.model.seed);
  const AddS metric(sample_surface(run.scenario.object, run.scenario.model.surface_points, rng));
  const std::string object = shape_name(run.scenario.object);
  const std::string mode(to_string(run.manifest.mode));
  std::vector<AddSRow> rows;
  for (const auto& f : run.frames) {
    if (!f.vision) continue;
    rows.push_back({object, run_id(run.manifest), f.t, mode, metric(f.estimate, f.truth)});
  }
  return rows;
}

namespace {

const TrackingMode kModes[] = {TrackingMode::Vis, TrackingMode::VisPen, TrackingMode::VisTacPen};

const char* mode_color(const std::string& mode) {
  if (mode == "vis") return "#d62728";
  if (mode == "vis+pen") return "#1f77b4";
  return "#2ca02c";
}

struct Window {
  const char* name;
  bool post;
};

bool in_window(double t, const GraspSchedule& s, bool post) {
  if (post) return t >= s.rotate_start && t <= s.end_time() + 1e-9;
  return t >= s.settle_duration && t < s.rotate_start;
}

std::string fmt(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

struct Series {
  std::vector<double> t, med, q1, q3;
};

std::string svg_open(int w, int h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) + "\" height=\"" +
         std::to_string(h) + "\" viewBox=\"0 0 " + std::to_string(w) + " " + std::to_string(h) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

std::string svg_axes(double x0, double y0, double x1, double y1, double ymax, const std::string& xlabel,
                     const std::string& ylabel) {
  std::string s;
  s += "<line x1=\"" + fmt(x0) + "\" y1=\"" + fmt(y1) + "\" x2=\"" + fmt(x1) + "\" y2=\"" + fmt(y1) +
       "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + fmt(x0) + "\" y1=\"" + fmt(y0) + "\" x2=\"" + fmt(x0) + "\" y2=\"" + fmt(y1) +
       "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = ymax * i / 4.0;
    const double y = y1 - (y1 - y0) * i / 4.0;
    s += "<line x1=\"" + fmt(x0 - 4) + "\" y1=\"" + fmt(y) + "\" x2=\"" + fmt(x0) + "\" y2=\"" + fmt(y) +
         "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + fmt(x0 - 6) + "\" y=\"" + fmt(y + 4) + "\" text-anchor=\"end\">" + fmt(v, 1) + "</text>\n";
  }
  s += "<text x=\"" + fmt(0.5 * (x0 + x1)) + "\" y=\"" + fmt(y1 + 36) + "\" text-anchor=\"middle\">" + xlabel +
       "</text>\n";
  s += "<text transform=\"translate(16 " + fmt(0.5 * (y0 + y1)) + ") rotate(-90)\" text-anchor=\"middle\">" +
       ylabel + "</text>\n";
  return s;
}

std::string timeseries_svg(const std::map<std::string, Series>& series, double rotate_start) {
  const double x0 = 70, y0 = 30, x1 = 690, y1 = 320;
  double tmin = std::numeric_limits<double>::infinity(), tmax = -tmin, ymax = 0.0;
  for (const auto& [mode, s] : series) {
    if (s.t.empty()) continue;
    tmin = std::min(tmin, s.t.front());
    tmax = std::max(tmax, s.t.back());
    for (double v : s.q3) ymax = std::max(ymax, v);
  }
  std::string out = svg_open(720, 380);
  if (!(tmax > tmin)) return out + "</svg>\n";
  ymax = ymax > 0.0 ? 1.1 * ymax : 1.0;
  const auto X = [&](double t) { return x0 + (x1 - x0) * (t - tmin) / (tmax - tmin); };
  const auto Y = [&](double v) { return y1 - (y1 - y0) * std::min(v, ymax) / ymax; };
  out += svg_axes(x0, y0, x1, y1, ymax, "time [s]", "ADD-S [mm]");
  for (double t = std::ceil(tmin); t <= tmax; t += 1.0) {
    out += "<text x=\"" + fmt(X(t)) + "\" y=\"" + fmt(y1 + 16) + "\" text-anchor=\"middle\">" + fmt(t, 0) +
           "</text>\n";
  }
  if (rotate_start > tmin && rotate_start < tmax) {
    out += "<line x1=\"" + fmt(X(rotate_start)) + "\" y1=\"" + fmt(y0) + "\" x2=\"" + fmt(X(rotate_start)) +
           "\" y2=\"" + fmt(y1) + "\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n";
  }
  int legend = 0;
  for (const auto& mode : {"vis", "vis+pen", "vis+tac+pen"}) {
    auto it = series.find(mode);
    if (it == series.end() || it->second.t.empty()) continue;
    const Series& s = it->second;
    std::string band, line;
    for (std::size_t i = 0; i < s.t.size(); ++i) band += fmt(X(s.t[i])) + "," + fmt(Y(s.q3[i])) + " ";
    for (std::size_t i = s.t.size(); i-- > 0;) band += fmt(X(s.t[i])) + "," + fmt(Y(s.q1[i])) + " ";
    for (std::size_t i = 0; i < s.t.size(); ++i) line += fmt(X(s.t[i])) + "," + fmt(Y(s.med[i])) + " ";
    out += "<polygon points=\"" + band + "\" fill=\"" + mode_color(mode) + "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
    out += "<polyline points=\"" + line + "\" fill=\"none\" stroke=\"" + mode_color(mode) + "\" stroke-width=\"1.5\"/>\n";
    const double ly = y0 + 4 + 16 * legend++;
    out += "<rect x=\"" + fmt(x1 - 110) + "\" y=\"" + fmt(ly - 9) + "\" width=\"12\" height=\"10\" fill=\"" +
           mode_color(mode) + "\"/>\n";
    out += "<text x=\"" + fmt(x1 - 92) + "\" y=\"" + fmt(ly) + "\">" + mode + "</text>\n";
  }
  return out + "</svg>\n";
}

std::string boxplot_svg(const std::map<std::string, std::vector<double>>& values) {
  const double x0 = 70, y0 = 30, x1 = 450, y1 = 320;
  double ymax = 0.0;
  for (const auto& [mode, v] : values) {
    for (double x : v) ymax = std::max(ymax, x);
  }
  ymax = ymax > 0.0 ? 1.1 * ymax : 1.0;
  const auto Y = [&](double v) { return y1 - (y1 - y0) * v / ymax; };
  std::string out = svg_open(480, 380);
  out += svg_axes(x0, y0, x1, y1, ymax, "per-run median, post-rotation", "ADD-S [mm]");
  int slot = 0;
  for (const auto& mode : {"vis", "vis+pen", "vis+tac+pen"}) {
    auto it = values.find(mode);
    if (it == values.end() || it->second.empty()) continue;
    const auto& v = it->second;
    const double cx = x0 + 70 + 120 * slot++;
    const double lo = *std::min_element(v.begin(), v.end());
    const double hi = *std::max_element(v.begin(), v.end());
    const Iqr q = interquartile(v);
    const double med = median(v);
    const std::string color = mode_color(mode);
    out += "<line x1=\"" + fmt(cx) + "\" y1=\"" + fmt(Y(lo)) + "\" x2=\"" + fmt(cx) + "\" y2=\"" + fmt(Y(hi)) +
           "\" stroke=\"" + color + "\"/>\n";
    out += "<rect x=\"" + fmt(cx - 25) + "\" y=\"" + fmt(Y(q.q3)) + "\" width=\"50\" height=\"" +
           fmt(Y(q.q1) - Y(q.q3)) + "\" fill=\"" + color + "\" fill-opacity=\"0.3\" stroke=\"" + color + "\"/>\n";
    out += "<line x1=\"" + fmt(cx - 25) + "\" y1=\"" + fmt(Y(med)) + "\" x2=\"" + fmt(cx + 25) + "\" y2=\"" +
           fmt(Y(med)) + "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    for (double x : v) {
      out += "<circle cx=\"" + fmt(cx) + "\" cy=\"" + fmt(Y(x)) + "\" r=\"2\" fill=\"" + color + "\"/>\n";
    }
    out += "<text x=\"" + fmt(cx) + "\" y=\"" + fmt(y1 + 16) + "\" text-anchor=\"middle\">" + mode + "</text>\n";
  }
  return out + "</svg>\n";
}

Json test_json(const std::string& a, const std::string& b, const std::vector<double>& va,
               const std::vector<double>& vb) {
  Json j{{"a", a}, {"b", b}, {"pairs", va.size()}};
  try {
    const WilcoxonResult w = wilcoxon_signed_rank(va, vb);
    j["status"] = to_string(w.status);
    j["statistic"] = w.statistic;
    j["w_plus"] = w.w_plus;
    j["w_minus"] = w.w_minus;
    j["n"] = w.n;
    j["method"] = w.exact ? "exact" : "normal";
    j["p_value"] = w.status == WilcoxonStatus::Ok ? Json(w.p_value) : Json(nullptr);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::TooFewSamples) throw;
    j["status"] = "too-few-samples";
    j["p_value"] = nullptr;
  }
  return j;
}

}  // namespace

Evaluation evaluate(const std::vector<TrackRun>& runs, const EvaluateOptions& options) {
  if (runs.empty()) throw Error(ErrorCode::InvalidArgument, "evaluate needs at least one run");
  Evaluation ev;
  std::map<std::string, GraspSchedule> schedules;
  std::map<std::string, double> spacing;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& run : runs) {
    const std::string mode(to_string(run.manifest.mode));
    const std::string id = run_id(run.manifest);
    if (!seen.emplace(id, mode).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate run '" + id + "' for mode " + mode);
    }
    schedules[id] = run.scenario.schedule;
    const std::string object = shape_name(run.scenario.object);
    if (!spacing.count(object)) {
      std::mt19937_64 rng(run.scenario.model.seed);
      spacing[object] =
          mean_nearest_spacing(sample_surface(run.scenario.object, run.scenario.model.surface_points, rng));
    }
    auto rows = add_s_rows(run);
    ev.rows.insert(ev.rows.end(), rows.begin(), rows.end());
  }
  std::stable_sort(ev.rows.begin(), ev.rows.end(), [](const AddSRow& a, const AddSRow& b) {
    return std::tie(a.object, a.run, a.mode) < std::tie(b.object, b.run, b.mode);
  });

  Json summary{{"format", "padfuse-summary/1"},
               {"runs", schedules.size()},
               {"average_per_object", options.average_per_object},
               {"units", "m"}};
  Json sp = Json::object();
  for (const auto& [object, v] : spacing) sp[object] = v;
  summary["sampling_spacing"] = sp;

  std::map<std::string, std::vector<double>> post_run_medians_mm;
  for (const Window w : {Window{"pre_rotation", false}, Window{"post_rotation", true}}) {
    // mode -> run -> values
    std::map<std::string, std::map<std::string, std::vector<double>>> by_run;
    std::map<std::string, std::string> run_object;
    for (const auto& r : ev.rows) {
      if (!in_window(r.t, schedules.at(r.run), w.post)) continue;
      by_run[r.mode][r.run].push_back(r.add_s);
      run_object[r.run] = r.object;
    }
    Json modes = Json::object();
    std::map<std::string, std::map<std::string, double>> run_medians;
    for (const auto m : kModes) {
      const std::string mode(to_string(m));
      auto it = by_run.find(mode);
      if (it == by_run.end()) continue;
      std::vector<double> pooled;
      Json per_run = Json::object();
      for (const auto& [run, vals] : it->second) {
        pooled.insert(pooled.end(), vals.begin(), vals.end());
        const double med = median(vals);
        run_medians[mode][run] = med;
        per_run[run] = med;
        if (w.post) post_run_medians_mm[mode].push_back(1e3 * med);
      }
      const Iqr q = interquartile(pooled);
      modes[mode] = Json{{"median", median(pooled)}, {"q1", q.q1},           {"q3", q.q3},
                         {"iqr", q.width()},          {"frames", pooled.size()}, {"run_medians", per_run}};
    }
    Json tests = Json::array();
    const std::string base = "vis";
    for (const auto m : {TrackingMode::VisTacPen, TrackingMode::VisPen}) {
      const std::string mode(to_string(m));
      if (!run_medians.count(mode) || !run_medians.count(base)) continue;
      std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> groups;
      for (const auto& [run, v] : run_medians[mode]) {
        auto b = run_medians[base].find(run);
        if (b == run_medians[base].end()) continue;
        const std::string key = options.average_per_object ? run_object[run] : run;
        groups[key].first.push_back(v);
        groups[key].second.push_back(b->second);
      }
      std::vector<double> va, vb;
      for (const auto& [key, g] : groups) {
        const auto mean = [](const std::vector<double>& v) {
          double s = 0.0;
          for (double x : v) s += x;
          return s / static_cast<double>(v.size());
        };
        va.push_back(mean(g.first));
        vb.push_back(mean(g.second));
      }
      tests.push_back(test_json(mode, base, va, vb));
    }
    summary["windows"][w.name] = Json{{"modes", modes}, {"tests", tests}};
  }
  ev.summary = std::move(summary);

  // Time series across runs, in mm.
  std::map<std::string, std::map<double, std::vector<double>>> by_time;
  for (const auto& r : ev.rows) by_time[r.mode][r.t].push_back(1e3 * r.add_s);
  std::map<std::string, Series> series;
  for (const auto& [mode, frames] : by_time) {
    Series& s = series[mode];
    for (const auto& [t, v] : frames) {
      const Iqr q = interquartile(v);
      s.t.push_back(t);
      s.med.push_back(median(v));
      s.q1.push_back(q.q1);
      s.q3.push_back(q.q3);
    }
  }
  ev.timeseries_svg = timeseries_svg(series, runs.front().scenario.schedule.rotate_start);
  ev.boxplot_svg = boxplot_svg(post_run_medians_mm);
  return ev;
}

void write_evaluation(const Evaluation& ev, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / "add_s.csv", write_csv(ev.rows));
  write_file(dir / "summary.json", ev.summary.dump(2) + "\n");
  write_file(dir / "timeseries.svg", ev.timeseries_svg);
  write_file(dir / "boxplot.svg", ev.boxplot_svg);
}

// ---------------------------------------------------------------------------

BenchResult bench(const BenchOptions& options) {
  if (options.steps == 0) throw Error(ErrorCode::InvalidArgument, "bench needs at least one step");
  ScenarioConfig sc;
  sc.name = "bench";
  sc.seed = options.seed;
  sc.object = options.object;
  sc.initial.mode = InitialPoseMode::FixedYaw;
  sc.model.resolution = options.resolution;
  const SequenceData seq = generate(sc);
  const HandModel hand = load_hand(sc.hand);
  const ObjectModel model = make_object_model(sc.object, sc.model);
  EstimatorConfig cfg;
  cfg.solver = options.solver;

  TrackerState state;
  state.flags = configure_ablation(TrackingMode::VisTacPen);
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < options.steps; ++i) {
    const auto& r = seq.records[i % seq.records.size()];
    const Measurements m{r.t, i == 0 ? seq.records.front().vision : r.vision, r.y, r.q, r.wrist};
    state = step(state, m, hand, model, cfg).state;
  }
  BenchResult out;
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.steps = options.steps;
  out.pads = hand.pad_count();
  out.steps_per_second = out.seconds > 0.0 ? static_cast<double>(out.steps) / out.seconds : 0.0;
  return out;
}

std::size_t worker_count(std::size_t jobs) {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PADFUSE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) n = std::min(n, static_cast<std::size_t>(v));
  }
  return std::max<std::size_t>(1, std::min(n, jobs));
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = worker_count(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace padfuse
