#include "padfuse/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "padfuse/error.hpp"

namespace padfuse {

namespace {

constexpr double kDeg = M_PI / 180.0;
// Kinematic contacts settle with the pad this far inside the surface, so they
// register at a zero threshold while staying well within the feasibility band.
constexpr double kContactDepth = 1e-4;

bool is_palm(const Chain& c) { return c.name == "palm"; }
bool is_thumb(const Chain& c) { return c.name.find("thumb") != std::string::npos; }

Rotation random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (;;) {
    Eigen::Quaterniond q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
    if (q.norm() > 1e-9) return Rotation(q);
  }
}

// Minimal object SDF over the given pads, hand frame.
double min_pad_sdf(const HandModel& hand, const std::vector<Pose>& pad_poses, const std::vector<int>& pads,
                   const Pose& object_in_hand, const Shape& shape) {
  const Pose to_object = object_in_hand.inverse();
  double best = std::numeric_limits<double>::infinity();
  for (int k : pads) {
    const Pose pad_to_object = to_object * pad_poses[k];
    for (const auto& g : hand.pads()[k].grid) best = std::min(best, shape_distance(shape, pad_to_object * g));
  }
  return best;
}

// Bisects a monotone predicate interval [ok, bad] (f(ok) > 0, f(bad) < 0)
// down to a point with f in [-kContactDepth, 0).
template <class F>
double bisect_contact(double ok, double bad, F&& f) {
  for (int it = 0; it < 80; ++it) {
    const double fb = f(bad);
    if (fb >= -kContactDepth) break;
    const double mid = 0.5 * (ok + bad);
    if (f(mid) > 0.0) {
      ok = mid;
    } else {
      bad = mid;
    }
  }
  return bad;
}

struct ClosingResult {
  std::vector<JointConfig> trajectory;  ///< per record index until the grasp is complete
  JointConfig final_q;
};

struct JointPlan {
  int chain;
  int level;
  int index;  ///< flat joint index
  double start;
  double max_angle;
  double rate;
  std::vector<int> distal_pads;
};

ClosingResult simulate_closing(const HandModel& hand, const ScenarioConfig& cfg, const Pose& object_in_hand,
                               std::size_t record_count) {
  const GraspSchedule& s = cfg.schedule;
  const double dt = 1.0 / cfg.tactile_hz;
  std::vector<JointPlan> plans;
  for (std::size_t c = 0; c < hand.chains().size(); ++c) {
    const Chain& chain = hand.chains()[c];
    if (is_palm(chain)) continue;
    const double delay = s.settle_duration + (is_thumb(chain) ? s.thumb_delay : 0.0);
    for (std::size_t j = 0; j < chain.joints.size(); ++j) {
      JointPlan p;
      p.chain = static_cast<int>(c);
      p.level = static_cast<int>(j);
      p.index = hand.joint_offset(c) + static_cast<int>(j);
      p.start = delay + static_cast<double>(j) * s.stage_delay;
      p.max_angle = s.max_angles[std::min(j, s.max_angles.size() - 1)];
      p.rate = p.max_angle / s.close_duration;
      for (std::size_t jj = j; jj < chain.joints.size(); ++jj) {
        for (int k : chain.joints[jj].pads) p.distal_pads.push_back(k);
      }
      plans.push_back(std::move(p));
    }
  }

  ClosingResult out;
  JointConfig q(hand.dof(), 0.0);
  std::vector<bool> done(plans.size(), false);
  for (std::size_t i = 0; i < record_count; ++i) {
    const double t = static_cast<double>(i) * dt;
    for (std::size_t n = 0; n < plans.size(); ++n) {
      const JointPlan& p = plans[n];
      if (done[n] || t <= p.start) continue;
      const auto f = [&](double angle) {
        JointConfig trial = q;
        trial[p.index] = angle;
        return min_pad_sdf(hand, forward_kinematics(hand, trial), p.distal_pads, object_in_hand, cfg.object);
      };
      const double current = q[p.index];
      const double proposal = std::min(current + p.rate * dt, p.max_angle);
      if (p.distal_pads.empty()) {
        q[p.index] = proposal;
      } else if (f(current) <= 0.0) {
        done[n] = true;  // a distal pad already touches
        continue;
      } else if (f(proposal) >= 0.0) {
        q[p.index] = proposal;
      } else {
        q[p.index] = bisect_contact(current, proposal, f);
        done[n] = true;
        continue;
      }
      if (q[p.index] >= p.max_angle) done[n] = true;
    }
    out.trajectory.push_back(q);
    if (std::all_of(done.begin(), done.end(), [](bool d) { return d; })) break;
  }
  out.final_q = q;
  return out;
}

// Drops the object straight down onto the open hand.
Pose settle_on_hand(const HandModel& hand, const Shape& shape, const Rotation& orientation) {
  const auto poses = forward_kinematics(hand, JointConfig(hand.dof(), 0.0));
  std::vector<int> all(hand.pad_count());
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = static_cast<int>(k);
  const auto f = [&](double z) {
    return min_pad_sdf(hand, poses, all, Pose(orientation, Vector3(0.0, 0.0, z)), shape);
  };
  const double high = shape_half_bounds(shape).norm() + 0.01;
  double low = 0.0;
  if (f(low) >= 0.0) throw Error(ErrorCode::InvalidArgument, "object does not reach the pads");
  return Pose(orientation, Vector3(0.0, 0.0, bisect_contact(high, low, f)));
}

Pose wrist_pose(double t, const GraspSchedule& s) {
  const double u = std::clamp((t - s.rotate_start) / s.rotate_duration, 0.0, 1.0);
  if (u <= 0.0) return Pose::identity();
  // Negative rotation about y tips the fingers up toward the camera.
  const Rotation tilt = Rotation::about_axis(Vector3::UnitY(), -u * s.rotate_angle_deg * kDeg);
  return Pose::from_translation(s.wrist_pivot) * Pose::from_rotation(tilt) *
         Pose::from_translation(-s.wrist_pivot);
}

std::size_t record_count(const ScenarioConfig& cfg) {
  return static_cast<std::size_t>(std::llround(cfg.schedule.end_time() * cfg.tactile_hz)) + 1;
}

Json rotation_to_json(const Rotation& r) {
  const auto& q = r.quaternion();
  return Json::array({q.w(), q.x(), q.y(), q.z()});
}

}  // namespace

double depth_noise_sigma(double depth) {
  if (depth < 0.0) throw Error(ErrorCode::InvalidArgument, "depth must be >= 0");
  return 0.001063 + 0.0007278 * depth + 0.003949 * depth * depth;
}

double OcclusionSchedule::multiplier(double t, const GraspSchedule& s) const {
  const double u = std::clamp((t - s.rotate_start) / s.rotate_duration, 0.0, 1.0);
  return 1.0 + u * (max_multiplier - 1.0);
}

void ScenarioConfig::validate() const {
  const auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::InvalidArgument, what);
  };
  validate_shape(object);
  require(vision_hz > 0.0 && tactile_hz > 0.0, "rates must be positive");
  const GraspSchedule& s = schedule;
  require(s.settle_duration >= 0.0, "settle duration must be >= 0");
  require(s.close_duration > 0.0 && s.rotate_duration > 0.0 && s.hold_duration >= 0.0,
          "durations must be positive");
  require(s.rotate_start >= 0.0 && s.stage_delay >= 0.0 && s.thumb_delay >= 0.0, "delays must be >= 0");
  require(!s.max_angles.empty(), "max_angles must not be empty");
  require(noise.scale >= 0.0 && noise.rotation_sigma >= 0.0 && noise.translation_scale >= 0.0 &&
              noise.outlier_rotation_sigma >= 0.0 && noise.outlier_translation_sigma >= 0.0,
          "noise sigmas must be >= 0");
  require(noise.outlier_probability >= 0.0 && noise.outlier_probability <= 1.0,
          "outlier probability must be in [0, 1]");
  require(occlusion.max_multiplier >= 1.0, "occlusion max_multiplier must be >= 1");
  require(contact_threshold >= 0.0, "contact threshold must be >= 0");
  require(initial.yaw_range_deg >= 0.0, "yaw range must be >= 0");
}

HandModel load_hand(const std::string& ref) {
  if (ref.empty() || ref == "default") return HandModel::default_hand();
  return HandModel::load(ref);
}

SequenceData generate(const ScenarioConfig& cfg) {
  cfg.validate();
  const HandModel hand = load_hand(cfg.hand);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const std::size_t count = record_count(cfg);

  SequenceData seq;
  seq.config = cfg;
  ClosingResult closing;
  constexpr int kMaxAttempts = 1000;
  bool accepted = false;
  for (int attempt = 1; attempt <= kMaxAttempts && !accepted; ++attempt) {
    Rotation orientation;
    if (cfg.initial.mode == InitialPoseMode::Uniform) {
      orientation = random_rotation(rng);
    } else {
      const double yaw = (2.0 * uni(rng) - 1.0) * cfg.initial.yaw_range_deg * kDeg;
      orientation = Rotation::about_axis(Vector3::UnitZ(), yaw) * cfg.initial.nominal;
    }
    // Settling on the hand absorbs any initial drop height, so none is sampled.
    const Pose rest = settle_on_hand(hand, cfg.object, orientation);
    closing = simulate_closing(hand, cfg, rest, count);
    const SdfField exact(cfg.object);
    const auto y = synthesize_contacts(hand, closing.final_q, rest, exact, cfg.contact_threshold);
    const auto contacts = std::count(y.begin(), y.end(), true);
    if (contacts >= cfg.min_contacts) {
      seq.object_in_hand = rest;
      seq.attempts = attempt;
      accepted = true;
    }
  }
  if (!accepted) {
    throw Error(ErrorCode::RejectionExhausted,
                "no stable grasp after " + std::to_string(kMaxAttempts) + " initial poses");
  }

  const SdfField exact(cfg.object);
  const VisionNoise& noise = cfg.noise;
  const Vector3 camera = cfg.camera.position();
  std::normal_distribution<double> gauss(0.0, 1.0);
  seq.records.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    SequenceRecord rec;
    rec.t = static_cast<double>(i) / cfg.tactile_hz;
    rec.wrist = wrist_pose(rec.t, cfg.schedule);
    rec.truth = rec.wrist * seq.object_in_hand;
    rec.q = i < closing.trajectory.size() ? closing.trajectory[i] : closing.final_q;
    rec.y = synthesize_contacts(hand, rec.q, rec.truth, exact, cfg.contact_threshold, rec.wrist);
    rec.occlusion = cfg.occlusion.multiplier(rec.t, cfg.schedule);

    const bool vision_frame =
        i == 0 || std::floor(rec.t * cfg.vision_hz + 1e-9) !=
                      std::floor(static_cast<double>(i - 1) / cfg.tactile_hz * cfg.vision_hz + 1e-9);
    if (vision_frame) {
      // Draw every variate on every frame so streams stay aligned across noise settings.
      const double u = uni(rng);
      Vector6 inlier, outlier;
      for (int a = 0; a < 6; ++a) inlier[a] = gauss(rng);
      for (int a = 0; a < 6; ++a) outlier[a] = gauss(rng);

      const double depth = (camera - rec.truth.translation()).norm();
      const double sr = noise.rotation_sigma * noise.scale * rec.occlusion;
      const double st = noise.translation_scale * depth_noise_sigma(depth) * noise.scale * rec.occlusion;
      rec.outlier = u < std::min(1.0, noise.outlier_probability * rec.occlusion);
      Twist eps;
      if (rec.outlier) {
        eps << noise.outlier_rotation_sigma * outlier.head<3>(), noise.outlier_translation_sigma * outlier.tail<3>();
      } else {
        eps << sr * inlier.head<3>(), st * inlier.tail<3>();
      }
      Pose zeta = rec.truth;
      if (!eps.isZero(0.0)) zeta = zeta * exp(eps);
      if (!noise.bias.isZero(0.0)) {
        zeta = Pose::from_translation(rec.wrist.rotation() * noise.bias) * zeta;
      }
      rec.vision = zeta;
    }
    seq.records.push_back(std::move(rec));
  }
  return seq;
}

// ---------------------------------------------------------------------------

Json scenario_to_json(const ScenarioConfig& cfg) {
  const GraspSchedule& s = cfg.schedule;
  const VisionNoise& n = cfg.noise;
  Json initial{{"mode", cfg.initial.mode == InitialPoseMode::Uniform ? "uniform" : "fixed_yaw"},
               {"nominal", rotation_to_json(cfg.initial.nominal)},
               {"yaw_range_deg", cfg.initial.yaw_range_deg}};
  return Json{
      {"name", cfg.name},
      {"seed", cfg.seed},
      {"object", shape_to_json(cfg.object)},
      {"hand", cfg.hand},
      {"initial_pose", initial},
      {"schedule",
       {{"settle_duration", s.settle_duration},
        {"close_duration", s.close_duration},
        {"stage_delay", s.stage_delay},
        {"thumb_delay", s.thumb_delay},
        {"rotate_start", s.rotate_start},
        {"rotate_duration", s.rotate_duration},
        {"rotate_angle_deg", s.rotate_angle_deg},
        {"hold_duration", s.hold_duration},
        {"max_angles", s.max_angles},
        {"wrist_pivot", vector3_to_json(s.wrist_pivot)}}},
      {"rates", {{"vision_hz", cfg.vision_hz}, {"tactile_hz", cfg.tactile_hz}}},
      {"noise",
       {{"scale", n.scale},
        {"rotation_sigma", n.rotation_sigma},
        {"translation_scale", n.translation_scale},
        {"outlier_probability", n.outlier_probability},
        {"outlier_rotation_sigma", n.outlier_rotation_sigma},
        {"outlier_translation_sigma", n.outlier_translation_sigma},
        {"bias", vector3_to_json(n.bias)}}},
      {"occlusion", {{"max_multiplier", cfg.occlusion.max_multiplier}}},
      {"camera",
       {{"horizontal_distance", cfg.camera.horizontal_distance},
        {"vertical_distance", cfg.camera.vertical_distance}}},
      {"contact_threshold", cfg.contact_threshold},
      {"min_contacts", cfg.min_contacts},
      {"model",
       {{"resolution", cfg.model.resolution},
        {"padding", cfg.model.padding},
        {"surface_points", cfg.model.surface_points},
        {"seed", cfg.model.seed},
        {"analytic", cfg.model.analytic}}},
  };
}

ScenarioConfig scenario_from_json(const Json& j) {
  try {
    ScenarioConfig cfg;
    cfg.name = value_or(j, "name", cfg.name);
    cfg.seed = value_or(j, "seed", cfg.seed);
    if (j.contains("object")) cfg.object = shape_from_json(j.at("object"));
    cfg.hand = value_or(j, "hand", cfg.hand);
    if (auto it = j.find("initial_pose"); it != j.end()) {
      const auto mode = value_or(*it, "mode", std::string("uniform"));
      if (mode == "uniform") {
        cfg.initial.mode = InitialPoseMode::Uniform;
      } else if (mode == "fixed_yaw") {
        cfg.initial.mode = InitialPoseMode::FixedYaw;
      } else {
        throw Error(ErrorCode::Parse, "unknown initial_pose.mode '" + mode + "'");
      }
      if (it->contains("nominal")) {
        const auto& q = it->at("nominal");
        cfg.initial.nominal = Rotation(q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(),
                                       q.at(3).get<double>());
      }
      cfg.initial.yaw_range_deg = value_or(*it, "yaw_range_deg", cfg.initial.yaw_range_deg);
    }
    if (auto it = j.find("schedule"); it != j.end()) {
      GraspSchedule& s = cfg.schedule;
      s.settle_duration = value_or(*it, "settle_duration", s.settle_duration);
      s.close_duration = value_or(*it, "close_duration", s.close_duration);
      s.stage_delay = value_or(*it, "stage_delay", s.stage_delay);
      s.thumb_delay = value_or(*it, "thumb_delay", s.thumb_delay);
      s.rotate_start = value_or(*it, "rotate_start", s.rotate_start);
      s.rotate_duration = value_or(*it, "rotate_duration", s.rotate_duration);
      s.rotate_angle_deg = value_or(*it, "rotate_angle_deg", s.rotate_angle_deg);
      s.hold_duration = value_or(*it, "hold_duration", s.hold_duration);
      s.max_angles = value_or(*it, "max_angles", s.max_angles);
      if (it->contains("wrist_pivot")) s.wrist_pivot = vector3_from_json(it->at("wrist_pivot"));
    }
    if (auto it = j.find("rates"); it != j.end()) {
      cfg.vision_hz = value_or(*it, "vision_hz", cfg.vision_hz);
      cfg.tactile_hz = value_or(*it, "tactile_hz", cfg.tactile_hz);
    }
    if (auto it = j.find("noise"); it != j.end()) {
      VisionNoise& n = cfg.noise;
      n.scale = value_or(*it, "scale", n.scale);
      n.rotation_sigma = value_or(*it, "rotation_sigma", n.rotation_sigma);
      n.translation_scale = value_or(*it, "translation_scale", n.translation_scale);
      n.outlier_probability = value_or(*it, "outlier_probability", n.outlier_probability);
      n.outlier_rotation_sigma = value_or(*it, "outlier_rotation_sigma", n.outlier_rotation_sigma);
      n.outlier_translation_sigma = value_or(*it, "outlier_translation_sigma", n.outlier_translation_sigma);
      if (it->contains("bias")) n.bias = vector3_from_json(it->at("bias"));
    }
    if (auto it = j.find("occlusion"); it != j.end()) {
      cfg.occlusion.max_multiplier = value_or(*it, "max_multiplier", cfg.occlusion.max_multiplier);
    }
    if (auto it = j.find("camera"); it != j.end()) {
      cfg.camera.horizontal_distance = value_or(*it, "horizontal_distance", cfg.camera.horizontal_distance);
      cfg.camera.vertical_distance = value_or(*it, "vertical_distance", cfg.camera.vertical_distance);
    }
    cfg.contact_threshold = value_or(j, "contact_threshold", cfg.contact_threshold);
    cfg.min_contacts = value_or(j, "min_contacts", cfg.min_contacts);
    if (auto it = j.find("model"); it != j.end()) {
      cfg.model.resolution = value_or(*it, "resolution", cfg.model.resolution);
      cfg.model.padding = value_or(*it, "padding", cfg.model.padding);
      cfg.model.surface_points = value_or(*it, "surface_points", cfg.model.surface_points);
      cfg.model.seed = value_or(*it, "seed", cfg.model.seed);
      cfg.model.analytic = value_or(*it, "analytic", cfg.model.analytic);
    }
    cfg.validate();
    return cfg;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("scenario config: ") + e.what());
  }
}

std::string sequence_to_jsonl(const SequenceData& seq) {
  std::string out;
  Json header{{"kind", "header"},
              {"format", "padfuse-sequence/1"},
              {"config", scenario_to_json(seq.config)},
              {"object_in_hand", pose_to_json(seq.object_in_hand)},
              {"attempts", seq.attempts},
              {"records", seq.records.size()}};
  out += header.dump();
  out += '\n';
  for (const auto& r : seq.records) {
    Json y = Json::array();
    for (bool b : r.y) y.push_back(b ? 1 : 0);
    Json frame{{"kind", "frame"},
               {"t", r.t},
               {"truth", pose_to_json(r.truth)},
               {"wrist", pose_to_json(r.wrist)},
               {"q", r.q},
               {"y", y},
               {"vision", r.vision ? pose_to_json(*r.vision) : Json(nullptr)},
               {"occlusion", r.occlusion},
               {"outlier", r.outlier}};
    out += frame.dump();
    out += '\n';
  }
  return out;
}

void write_sequence(const SequenceData& seq, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out << sequence_to_jsonl(seq);
}

SequenceData read_sequence(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open sequence " + path.string());
  SequenceData seq;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const Json j = Json::parse(line);
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "header") {
        seq.config = scenario_from_json(j.at("config"));
        seq.object_in_hand = pose_from_json(j.at("object_in_hand"));
        seq.attempts = value_or(j, "attempts", 1);
        have_header = true;
      } else if (kind == "frame") {
        SequenceRecord r;
        r.t = j.at("t").get<double>();
        r.truth = pose_from_json(j.at("truth"));
        r.wrist = pose_from_json(j.at("wrist"));
        r.q = j.at("q").get<JointConfig>();
        for (const auto& b : j.at("y")) r.y.push_back(b.get<int>() != 0);
        if (!j.at("vision").is_null()) r.vision = pose_from_json(j.at("vision"));
        r.occlusion = value_or(j, "occlusion", 1.0);
        r.outlier = value_or(j, "outlier", false);
        if (!seq.records.empty() && !(r.t > seq.records.back().t)) {
          throw Error(ErrorCode::Parse, "timestamps must be strictly increasing");
        }
        seq.records.push_back(std::move(r));
      } else {
        throw Error(ErrorCode::Parse, "unknown record kind '" + kind + "'");
      }
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Parse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
  }
  if (!have_header) throw Error(ErrorCode::Parse, path.string() + ": missing header line");
  return seq;
}

}  // namespace padfuse
