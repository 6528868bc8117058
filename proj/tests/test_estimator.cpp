#include <doctest.h>

#include <random>

#include "padfuse/error.hpp"
#include "padfuse/estimator.hpp"
#include "padfuse/pipeline.hpp"
#include "padfuse/simulate.hpp"

using namespace padfuse;

namespace {

EstimatorConfig tuned() { return load_estimator_config(PADFUSE_DATA_DIR "/solver/simulation.json"); }

ScenarioConfig quiet_sphere() {
  ScenarioConfig cfg;
  cfg.name = "quiet";
  cfg.object = Sphere{0.035};
  cfg.initial.mode = InitialPoseMode::FixedYaw;
  cfg.noise.scale = 0.0;
  cfg.noise.outlier_probability = 0.0;
  cfg.model.analytic = true;
  return cfg;
}

const SequenceData& quiet_sequence() {
  static const SequenceData seq = generate(quiet_sphere());
  return seq;
}

Measurements measurements(const SequenceRecord& r) { return {r.t, r.vision, r.y, r.q, r.wrist}; }

TrackerState fresh(TrackingMode mode) { return {Pose::identity(), false, configure_ablation(mode)}; }

std::size_t count(const ContactVector& y) { return static_cast<std::size_t>(std::count(y.begin(), y.end(), true)); }

}  // namespace

TEST_CASE("mode names and ablation flags") {
  for (auto m : {TrackingMode::Vis, TrackingMode::VisPen, TrackingMode::VisTacPen}) {
    CHECK(parse_mode(to_string(m)) == m);
  }
  CHECK_THROWS_AS(parse_mode("tac"), Error);
  const ModeFlags v = configure_ablation(TrackingMode::Vis);
  CHECK((v.use_vis && !v.use_tac && !v.use_pen && v.passthrough));
  const ModeFlags vp = configure_ablation(TrackingMode::VisPen);
  CHECK((vp.use_vis && !vp.use_tac && vp.use_pen && !vp.passthrough));
  const ModeFlags vtp = configure_ablation(TrackingMode::VisTacPen);
  CHECK((vtp.use_vis && vtp.use_tac && vtp.use_pen && !vtp.passthrough));
}

TEST_CASE("first frame needs vision") {
  const SequenceData& seq = quiet_sequence();
  Measurements m = measurements(seq.records.front());
  m.vision.reset();
  const HandModel hand = HandModel::default_hand();
  const ObjectModel model = make_object_model(seq.config.object, seq.config.model);
  CHECK_THROWS_AS(step(fresh(TrackingMode::VisTacPen), m, hand, model, EstimatorConfig{}), Error);
}

TEST_CASE("problem structure per mode") {
  const SequenceData& seq = quiet_sequence();
  const HandModel hand = HandModel::default_hand();
  const ObjectModel model = make_object_model(seq.config.object, seq.config.model);
  const std::size_t k = hand.pad_count();
  const SequenceRecord& r = seq.records.back();
  TrackerState s = fresh(TrackingMode::VisPen);
  s.initialized = true;
  s.estimate = r.truth;
  auto blocks = build_problem(s, measurements(r), hand, model, EstimatorConfig{});
  CHECK(blocks.size() == 1 + k);
  s.flags = configure_ablation(TrackingMode::VisTacPen);
  blocks = build_problem(s, measurements(r), hand, model, EstimatorConfig{});
  CHECK(blocks.size() == 1 + 2 * k);
  CHECK(blocks.front().kind() == FactorKind::Visual);
  std::size_t contacts = 0;
  for (const auto& b : blocks)
    if (b.kind() == FactorKind::Tactile) contacts += b.contact();
  CHECK(contacts == count(r.y));

  Measurements no_vision = measurements(r);
  no_vision.vision.reset();
  CHECK(build_problem(s, no_vision, hand, model, EstimatorConfig{}).size() == 2 * k);

  Measurements short_y = measurements(r);
  short_y.contacts.pop_back();
  CHECK_THROWS_AS(build_problem(s, short_y, hand, model, EstimatorConfig{}), Error);
}

TEST_CASE("vision passthrough follows the visual stream") {
  const SequenceData& seq = quiet_sequence();
  const HandModel hand = HandModel::default_hand();
  const ObjectModel model = make_object_model(seq.config.object, seq.config.model);
  TrackerState s = fresh(TrackingMode::Vis);
  Pose last;
  for (const auto& r : seq.records) {
    const StepResult res = step(s, measurements(r), hand, model, EstimatorConfig{});
    if (r.vision) last = *r.vision;
    CHECK(res.state.estimate.matrix() == last.matrix());
    CHECK(res.block_count == 0);
    s = res.state;
  }
}

TEST_CASE("noiseless vision with consistent contacts tracks the truth") {
  const SequenceData& seq = quiet_sequence();
  const HandModel hand = HandModel::default_hand();
  const ObjectModel model = make_object_model(seq.config.object, seq.config.model);
  for (auto mode : {TrackingMode::VisPen, TrackingMode::VisTacPen}) {
    TrackerState s = fresh(mode);
    double worst = 0.0;
    for (const auto& r : seq.records) {
      s = step(s, measurements(r), hand, model, tuned()).state;
      worst = std::max(worst, (s.estimate.translation() - r.truth.translation()).norm());
    }
    MESSAGE(to_string(mode) << " worst translation error " << worst);
    CHECK(worst < 2e-3);
  }
}

TEST_CASE("without vision or contacts the estimate does not move") {
  const SequenceData& seq = quiet_sequence();
  const HandModel hand = HandModel::default_hand();
  const ObjectModel model = make_object_model(seq.config.object, seq.config.model);
  const SequenceRecord& r = seq.records.front();
  TrackerState s = fresh(TrackingMode::VisTacPen);
  s.initialized = true;
  s.estimate = Pose::from_translation({0.0, 0.0, 1.0});  // far above the hand
  Measurements m = measurements(r);
  m.vision.reset();
  std::fill(m.contacts.begin(), m.contacts.end(), false);
  const StepResult res = step(s, m, hand, model, tuned());
  CHECK(res.state.estimate.matrix() == s.estimate.matrix());
}

TEST_CASE("with no pad in contact vis+tac+pen equals vis+pen") {
  const SequenceData& seq = quiet_sequence();
  const HandModel hand = HandModel::default_hand();
  const ObjectModel model = make_object_model(seq.config.object, seq.config.model);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 0.003);
  TrackerState a = fresh(TrackingMode::VisPen), b = fresh(TrackingMode::VisTacPen);
  for (const auto& r : seq.records) {
    Measurements m = measurements(r);
    std::fill(m.contacts.begin(), m.contacts.end(), false);
    if (m.vision) m.vision = Pose::from_translation({g(rng), g(rng), g(rng)}) * *m.vision;
    a = step(a, m, hand, model, tuned()).state;
    b = step(b, m, hand, model, tuned()).state;
    REQUIRE(a.estimate.matrix() == b.estimate.matrix());
  }
}

TEST_CASE("tactile evidence corrects a biased visual pose") {
  const SequenceData& seq = quiet_sequence();
  const HandModel hand = HandModel::default_hand();
  const ObjectModel model = make_object_model(seq.config.object, seq.config.model);
  const SequenceRecord& r = seq.records[static_cast<std::size_t>(4.0 * seq.config.tactile_hz)];
  REQUIRE(count(r.y) >= 4);

  // push the visual pose 10 mm along the normal of the first contacting pad, out of the grasp
  const auto pads = forward_kinematics(hand, r.q, r.wrist);
  std::size_t first = 0;
  while (!r.y[first]) ++first;
  const Vector3 normal = pads[first].rotation() * Vector3::UnitZ();
  Measurements m = measurements(r);
  m.vision = Pose::from_translation(-0.01 * normal) * r.truth;

  TrackerState s = fresh(TrackingMode::VisTacPen);
  for (int i = 0; i < 30; ++i) s = step(s, m, hand, model, tuned()).state;
  const double vision_error = (m.vision->translation() - r.truth.translation()).norm();
  const double error = (s.estimate.translation() - r.truth.translation()).norm();
  MESSAGE("visual error " << vision_error << ", fused error " << error);
  CHECK(error < 0.5 * vision_error);
  for (std::size_t k = 0; k < hand.pad_count(); ++k) {
    if (!r.y[k]) continue;
    std::vector<Vector3> world;
    for (const auto& p : hand.pads()[k].grid) world.push_back(pads[k] * p);
    const ContactPoint c = contact_point(world, s.estimate, model.sdf);
    CHECK(std::abs(c.sdf_value) < 1e-3);
  }
}

TEST_CASE("tracking is deterministic and tolerates dropped vision") {
  const SequenceData& seq = quiet_sequence();
  const HandModel hand = HandModel::default_hand();
  const ObjectModel model = make_object_model(seq.config.object, seq.config.model);
  auto run = [&](bool drop) {
    TrackerState s = fresh(TrackingMode::VisTacPen);
    std::vector<Pose> out;
    for (std::size_t i = 0; i < seq.records.size(); ++i) {
      Measurements m = measurements(seq.records[i]);
      if (drop && i > 0 && i % 7 == 0) m.vision.reset();
      s = step(s, m, hand, model, tuned()).state;
      out.push_back(s.estimate);
    }
    return out;
  };
  const auto a = run(false), b = run(false);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i].matrix() == b[i].matrix());
  const auto c = run(true);
  CHECK((c.back().translation() - seq.records.back().truth.translation()).norm() < 2e-3);
}
