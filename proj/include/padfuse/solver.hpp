#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "padfuse/factors.hpp"
#include "padfuse/liegroup.hpp"

namespace padfuse {

struct SolverConfig {
  int max_iterations = 5;
  double damping = 0.02;
  double step_tolerance = 1e-8;
  RobustKernel kernel_vis = RobustKernel::welsch_log(-6.5);
  RobustKernel kernel_tac = RobustKernel::welsch_log(0.0);
  RobustKernel kernel_pen = RobustKernel::quadratic();

  /// Simulation column of the hyperparameter table (5 iterations).
  static SolverConfig simulation() { return {}; }
  /// Real-robot column (2 iterations, log theta_vis = -5, log theta_tac = -7.5).
  static SolverConfig real_world();

  void validate() const;
};

enum class Termination { MaxIterations, Converged, Degenerate };
std::string_view to_string(Termination t);

struct SolveReport {
  Pose pose;
  /// Robust cost at the start of every iteration followed by the final cost.
  std::vector<double> costs;
  int iterations = 0;
  Termination termination = Termination::MaxIterations;
  /// Final cost exceeded the initial cost (fixed damping accepts every step).
  bool non_descent = false;

  double initial_cost() const { return costs.empty() ? 0.0 : costs.front(); }
  double final_cost() const { return costs.empty() ? 0.0 : costs.back(); }
};

/// Re-selects contact points for every grid-backed block. Blocks sharing a
/// pad grid share one argmin pass.
void associate_contacts(std::span<ResidualBlock> blocks, const Pose& xi);

/// IRLS weights rho'(w ||r||^2) * w at xi (with current associations).
std::vector<double> robust_weights(std::span<const ResidualBlock> blocks, const Pose& xi);

/// 0.5 * sum rho(w ||r||^2)
double total_cost(std::span<const ResidualBlock> blocks, const Pose& xi);

/**
 * Robust Levenberg-Marquardt with fixed additive damping. Each iteration
 * re-associates contacts, solves (J^T W J + lambda I) d = -J^T W r and
 * retracts xi <- xi * exp(d).
 */
SolveReport solve(std::span<ResidualBlock> blocks, const Pose& init, const SolverConfig& cfg);

}  // namespace padfuse
