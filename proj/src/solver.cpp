#include "padfuse/solver.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <unordered_map>

#include "padfuse/error.hpp"
#include "padfuse/handmodel.hpp"

namespace padfuse {

SolverConfig SolverConfig::real_world() {
  SolverConfig cfg;
  cfg.max_iterations = 2;
  cfg.kernel_vis = RobustKernel::welsch_log(-5.0);
  cfg.kernel_tac = RobustKernel::welsch_log(-7.5);
  return cfg;
}

void SolverConfig::validate() const {
  if (max_iterations < 1) throw Error(ErrorCode::InvalidArgument, "max_iterations must be >= 1");
  if (!(damping >= 0.0)) throw Error(ErrorCode::InvalidArgument, "damping must be >= 0");
  if (!(step_tolerance >= 0.0)) throw Error(ErrorCode::InvalidArgument, "step tolerance must be >= 0");
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::MaxIterations: return "max-iter";
    case Termination::Converged: return "converged";
    case Termination::Degenerate: return "degenerate";
  }
  return "unknown";
}

void associate_contacts(std::span<ResidualBlock> blocks, const Pose& xi) {
  std::unordered_map<const std::vector<Vector3>*, Vector3> cache;
  for (auto& b : blocks) {
    if (!b.grid()) continue;
    // A tactile block without contact has a zero residual wherever its point is.
    if (b.kind() == FactorKind::Tactile && !b.contact()) continue;
    const auto* key = b.grid().get();
    auto it = cache.find(key);
    if (it == cache.end()) {
      if (b.associate(xi)) cache.emplace(key, b.contact_point());
    } else {
      b.set_contact_point(it->second);
    }
  }
}

std::vector<double> robust_weights(std::span<const ResidualBlock> blocks, const Pose& xi) {
  std::vector<double> out;
  out.reserve(blocks.size());
  for (const auto& b : blocks) {
    out.push_back(b.kernel().derivative(b.weighted_squared_norm(xi)) * b.weight());
  }
  return out;
}

double total_cost(std::span<const ResidualBlock> blocks, const Pose& xi) {
  double c = 0.0;
  for (const auto& b : blocks) c += b.cost(xi);
  return 0.5 * c;
}

namespace {

bool solve_normal_equations(const Matrix6& H, const Vector6& g, Vector6& delta) {
  constexpr double kRelPivot = 1e-12;
  Eigen::LLT<Matrix6> llt(H);
  if (llt.info() == Eigen::Success) {
    const auto d = llt.matrixLLT().diagonal().cwiseAbs2();
    if (d.minCoeff() > kRelPivot * d.maxCoeff()) {
      delta = -llt.solve(g);
      return true;
    }
  }
  Eigen::LDLT<Matrix6> ldlt(H);
  if (ldlt.info() != Eigen::Success) return false;
  const auto d = ldlt.vectorD().cwiseAbs();
  if (!(d.maxCoeff() > 0.0) || d.minCoeff() <= kRelPivot * d.maxCoeff()) return false;
  delta = -ldlt.solve(g);
  return delta.allFinite();
}

}  // namespace

SolveReport solve(std::span<ResidualBlock> blocks, const Pose& init, const SolverConfig& cfg) {
  if (blocks.empty()) throw Error(ErrorCode::InvalidArgument, "solve needs at least one residual block");
  cfg.validate();

  SolveReport report;
  Pose xi = init;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    associate_contacts(blocks, xi);

    Matrix6 H = cfg.damping * Matrix6::Identity();
    Vector6 g = Vector6::Zero();
    double cost = 0.0;
    for (const auto& b : blocks) {
      const Linearization lin = b.linearize(xi);
      const double e = b.weight() * lin.residual.squaredNorm();
      cost += b.kernel().rho(e);
      const double w = b.kernel().derivative(e) * b.weight();
      if (w == 0.0) continue;
      H.noalias() += w * lin.jacobian.transpose() * lin.jacobian;
      g.noalias() += w * lin.jacobian.transpose() * lin.residual;
    }
    report.costs.push_back(0.5 * cost);
    report.iterations = it + 1;

    Vector6 delta;
    if (!solve_normal_equations(H, g, delta)) {
      report.termination = Termination::Degenerate;
      break;
    }
    xi = retract(xi, delta);
    if (delta.norm() < cfg.step_tolerance) {
      report.termination = Termination::Converged;
      break;
    }
  }

  associate_contacts(blocks, xi);
  report.costs.push_back(total_cost(blocks, xi));
  report.pose = xi;
  report.non_descent = report.final_cost() > report.initial_cost() * (1.0 + 1e-12);
  return report;
}

}  // namespace padfuse
