#include "padfuse/estimator.hpp"

#include "padfuse/error.hpp"

namespace padfuse {

std::string_view to_string(TrackingMode mode) {
  switch (mode) {
    case TrackingMode::Vis: return "vis";
    case TrackingMode::VisPen: return "vis+pen";
    case TrackingMode::VisTacPen: return "vis+tac+pen";
  }
  return "unknown";
}

TrackingMode parse_mode(std::string_view text) {
  if (text == "vis") return TrackingMode::Vis;
  if (text == "vis+pen") return TrackingMode::VisPen;
  if (text == "vis+tac+pen") return TrackingMode::VisTacPen;
  throw Error(ErrorCode::InvalidArgument, "unknown mode '" + std::string(text) + "'");
}

ModeFlags configure_ablation(TrackingMode mode) {
  switch (mode) {
    case TrackingMode::Vis: return {true, false, false, true};
    case TrackingMode::VisPen: return {true, false, true, false};
    case TrackingMode::VisTacPen: return {true, true, true, false};
  }
  return {};
}

std::vector<ResidualBlock> build_problem(const TrackerState& state, const Measurements& m,
                                         const HandModel& hand, const ObjectModel& object,
                                         const EstimatorConfig& cfg) {
  const ModeFlags& flags = state.flags;
  std::vector<ResidualBlock> blocks;
  if (flags.use_vis && m.vision) {
    blocks.push_back(ResidualBlock::visual(*m.vision, cfg.weights.vis, cfg.solver.kernel_vis));
  }
  if (!flags.use_tac && !flags.use_pen) return blocks;

  if (m.contacts.size() != hand.pad_count()) {
    throw Error(ErrorCode::InvalidArgument, "contact vector length does not match pad count");
  }
  const auto pad_poses = forward_kinematics(hand, m.joints, m.wrist);
  std::vector<PadGrid> grids;
  grids.reserve(hand.pad_count());
  for (std::size_t k = 0; k < hand.pad_count(); ++k) {
    auto world = std::make_shared<std::vector<Vector3>>();
    world->reserve(hand.pads()[k].grid.size());
    for (const auto& g : hand.pads()[k].grid) world->push_back(pad_poses[k] * g);
    grids.push_back(std::move(world));
  }
  if (flags.use_tac) {
    for (std::size_t k = 0; k < grids.size(); ++k) {
      blocks.push_back(ResidualBlock::tactile(m.contacts[k], grids[k], object.sdf, cfg.weights.tac,
                                              cfg.solver.kernel_tac));
    }
  }
  if (flags.use_pen) {
    for (const auto& grid : grids) {
      blocks.push_back(
          ResidualBlock::penetration(grid, object.sdf, cfg.weights.pen, cfg.solver.kernel_pen));
    }
  }
  return blocks;
}

StepResult step(const TrackerState& state, const Measurements& m, const HandModel& hand,
                const ObjectModel& object, const EstimatorConfig& cfg) {
  StepResult out;
  out.state = state;
  if (!state.initialized) {
    if (!m.vision) throw Error(ErrorCode::NotInitialized, "first frame has no visual pose");
    out.state.estimate = *m.vision;
    out.state.initialized = true;
  }
  out.report.pose = out.state.estimate;

  if (state.flags.passthrough) {
    if (m.vision) out.state.estimate = *m.vision;
    out.report.pose = out.state.estimate;
    out.report.termination = Termination::Converged;
    return out;
  }

  auto blocks = build_problem(out.state, m, hand, object, cfg);
  out.block_count = blocks.size();
  if (blocks.empty()) {
    out.report.termination = Termination::Converged;
    return out;
  }
  out.report = solve(blocks, out.state.estimate, cfg.solver);
  // On a degenerate system the report holds the last accepted pose.
  out.state.estimate = out.report.pose;
  return out;
}

}  // namespace padfuse
