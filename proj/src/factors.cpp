#include "padfuse/factors.hpp"

#include <algorithm>
#include <cmath>

#include "padfuse/error.hpp"
#include "padfuse/handmodel.hpp"

namespace padfuse {

KernelValue welsch(double e, double theta) {
  const double ex = std::exp(-e / theta);
  return {theta * (1.0 - ex), ex};
}

RobustKernel RobustKernel::welsch(double theta) {
  if (!(theta > 0.0)) throw Error(ErrorCode::InvalidArgument, "Welsch theta must be positive");
  return RobustKernel(Type::Welsch, theta);
}

RobustKernel RobustKernel::welsch_log(double log_theta) { return welsch(std::exp(log_theta)); }

double RobustKernel::rho(double e) const {
  return type_ == Type::Quadratic ? e : padfuse::welsch(e, theta_).value;
}

double RobustKernel::derivative(double e) const {
  return type_ == Type::Quadratic ? 1.0 : padfuse::welsch(e, theta_).derivative;
}

LogResult residual_vis_checked(const Pose& xi, const Pose& zeta) {
  return log_checked(xi.inverse() * zeta);
}

Twist residual_vis(const Pose& xi, const Pose& zeta) { return residual_vis_checked(xi, zeta).twist; }

double residual_tac(const Pose& xi, bool contact, const Vector3& p_world, const SdfField& sdf) {
  if (!contact) return 0.0;
  return std::max(0.0, sdf.eval(xi.inverse() * p_world));
}

double residual_pen(const Pose& xi, const Vector3& p_world, const SdfField& sdf) {
  return std::min(0.0, sdf.eval(xi.inverse() * p_world));
}

ResidualBlock ResidualBlock::visual(const Pose& zeta, double weight, const RobustKernel& kernel) {
  ResidualBlock b(FactorKind::Visual, weight, kernel);
  b.zeta_ = zeta;
  return b;
}

ResidualBlock ResidualBlock::tactile(bool contact, PadGrid grid, SdfField sdf, double weight,
                                     const RobustKernel& kernel) {
  if (!grid || grid->empty()) throw Error(ErrorCode::InvalidArgument, "pad grid is empty");
  ResidualBlock b(FactorKind::Tactile, weight, kernel);
  b.contact_ = contact;
  b.point_ = grid->front();
  b.grid_ = std::move(grid);
  b.sdf_ = std::move(sdf);
  return b;
}

ResidualBlock ResidualBlock::tactile_at(bool contact, const Vector3& point, SdfField sdf,
                                        double weight, const RobustKernel& kernel) {
  ResidualBlock b(FactorKind::Tactile, weight, kernel);
  b.contact_ = contact;
  b.point_ = point;
  b.sdf_ = std::move(sdf);
  return b;
}

ResidualBlock ResidualBlock::penetration(PadGrid grid, SdfField sdf, double weight,
                                         const RobustKernel& kernel) {
  if (!grid || grid->empty()) throw Error(ErrorCode::InvalidArgument, "pad grid is empty");
  ResidualBlock b(FactorKind::Penetration, weight, kernel);
  b.point_ = grid->front();
  Vector3 c = Vector3::Zero();
  for (const auto& p : *grid) c += p;
  c /= static_cast<double>(grid->size());
  double r = 0.0;
  for (const auto& p : *grid) r = std::max(r, (p - c).norm());
  b.grid_center_ = c;
  b.grid_radius_ = r;
  b.grid_ = std::move(grid);
  b.sdf_ = std::move(sdf);
  return b;
}

ResidualBlock ResidualBlock::penetration_at(const Vector3& point, SdfField sdf, double weight,
                                            const RobustKernel& kernel) {
  ResidualBlock b(FactorKind::Penetration, weight, kernel);
  b.point_ = point;
  b.sdf_ = std::move(sdf);
  return b;
}

bool ResidualBlock::associate(const Pose& xi) {
  if (!grid_) return true;
  if (kind_ == FactorKind::Penetration) {
    const double lower = sdf_.eval(xi.inverse() * grid_center_) - sdf_.lipschitz() * grid_radius_;
    if (lower > 1e-9) {
      point_ = grid_->front();
      return false;
    }
  }
  point_ = padfuse::contact_point(*grid_, xi, sdf_).point;
  return true;
}

ResidualVector ResidualBlock::residual(const Pose& xi) const {
  ResidualVector r;
  switch (kind_) {
    case FactorKind::Visual:
      r = residual_vis(xi, zeta_);
      break;
    case FactorKind::Tactile:
      r.resize(1);
      r[0] = residual_tac(xi, contact_, point_, sdf_);
      break;
    case FactorKind::Penetration:
      r.resize(1);
      r[0] = residual_pen(xi, point_, sdf_);
      break;
  }
  return r;
}

Linearization ResidualBlock::linearize(const Pose& xi) const {
  Linearization out;
  if (kind_ == FactorKind::Visual) {
    const Twist r = residual_vis(xi, zeta_);
    out.residual = r;
    // log(exp(-d) * T) ~ log(T) - Jl^-1(log T) d
    out.jacobian = -se3_left_jacobian_inverse(r);
    return out;
  }

  out.residual.setZero(1);
  out.jacobian.setZero(1, 6);
  const Vector3 x = xi.inverse() * point_;
  Vector3 g;
  const double phi = sdf_.eval(x, &g);
  // Clamp boundaries (phi == 0) resolve to the inactive branch.
  const bool active = kind_ == FactorKind::Tactile ? (contact_ && phi > 0.0) : phi < 0.0;
  if (!active) return out;
  out.residual[0] = phi;
  // (xi exp(d))^-1 p ~ x + [x]_x omega - v
  out.jacobian.block<1, 3>(0, 0) = g.transpose() * skew(x);
  out.jacobian.block<1, 3>(0, 3) = -g.transpose();
  return out;
}

double ResidualBlock::weighted_squared_norm(const Pose& xi) const {
  return weight_ * residual(xi).squaredNorm();
}

double ResidualBlock::cost(const Pose& xi) const { return kernel_.rho(weighted_squared_norm(xi)); }

JacobianMatrix jacobians(const ResidualBlock& block, const Pose& xi) {
  return block.linearize(xi).jacobian;
}

}  // namespace padfuse
