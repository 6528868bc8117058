#pragma once

#include <memory>
#include <vector>

#include "padfuse/liegroup.hpp"
#include "padfuse/sdf.hpp"

namespace padfuse {

struct FactorWeights {
  double vis = 1.0;
  double tac = 1.0;
  double pen = 1.0;
};

struct KernelValue {
  double value;
  double derivative;
};

/// Welsch loss rho(e) = theta * (1 - exp(-e / theta)) and its derivative in e.
KernelValue welsch(double e, double theta);

class RobustKernel {
 public:
  enum class Type { Quadratic, Welsch };

  static RobustKernel quadratic() { return RobustKernel(Type::Quadratic, 0.0); }
  static RobustKernel welsch(double theta);
  /// Welsch with theta = exp(log_theta) (natural log).
  static RobustKernel welsch_log(double log_theta);

  Type type() const { return type_; }
  double theta() const { return theta_; }

  /// e is the weighted squared residual norm.
  double rho(double e) const;
  double derivative(double e) const;

 private:
  RobustKernel(Type type, double theta) : type_(type), theta_(theta) {}
  Type type_;
  double theta_;
};

// Residual functions. Contact points are in the world frame.
Twist residual_vis(const Pose& xi, const Pose& zeta);
LogResult residual_vis_checked(const Pose& xi, const Pose& zeta);
double residual_tac(const Pose& xi, bool contact, const Vector3& p_world, const SdfField& sdf);
double residual_pen(const Pose& xi, const Vector3& p_world, const SdfField& sdf);

enum class FactorKind { Visual, Tactile, Penetration };

/// Candidate grid of one pad, already in the world frame.
using PadGrid = std::shared_ptr<const std::vector<Vector3>>;

using ResidualVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 6, 1>;
using JacobianMatrix = Eigen::Matrix<double, Eigen::Dynamic, 6, Eigen::RowMajor, 6, 6>;

struct Linearization {
  ResidualVector residual;
  JacobianMatrix jacobian;  ///< d residual / d right-perturbation twist
};

/**
 * One factor of the pose graph. Tactile and penetration blocks either own a
 * fixed contact point or a pad grid; in the latter case associate() picks the
 * grid point with the minimal SDF under the current pose estimate.
 */
class ResidualBlock {
 public:
  static ResidualBlock visual(const Pose& zeta, double weight, const RobustKernel& kernel);
  static ResidualBlock tactile(bool contact, PadGrid grid, SdfField sdf, double weight,
                               const RobustKernel& kernel);
  static ResidualBlock tactile_at(bool contact, const Vector3& point, SdfField sdf, double weight,
                                  const RobustKernel& kernel);
  static ResidualBlock penetration(PadGrid grid, SdfField sdf, double weight,
                                   const RobustKernel& kernel);
  static ResidualBlock penetration_at(const Vector3& point, SdfField sdf, double weight,
                                      const RobustKernel& kernel);

  FactorKind kind() const { return kind_; }
  int dimension() const { return kind_ == FactorKind::Visual ? 6 : 1; }
  double weight() const { return weight_; }
  const RobustKernel& kernel() const { return kernel_; }
  bool contact() const { return contact_; }
  const Pose& measurement() const { return zeta_; }
  const PadGrid& grid() const { return grid_; }
  const Vector3& contact_point() const { return point_; }

  /**
   * Re-selects the contact point from the pad grid; no-op for fixed points.
   * A penetration block whose whole grid provably lies outside the object
   * skips the scan and keeps any grid point, since the block is inactive
   * either way. Returns false in that case, true when the point is the
   * minimal-SDF grid point.
   */
  bool associate(const Pose& xi);
  /// Sets the contact point directly (shared association across blocks).
  void set_contact_point(const Vector3& p) { point_ = p; }

  ResidualVector residual(const Pose& xi) const;
  Linearization linearize(const Pose& xi) const;
  /// w * ||r||^2
  double weighted_squared_norm(const Pose& xi) const;
  /// rho(w * ||r||^2)
  double cost(const Pose& xi) const;

 private:
  ResidualBlock(FactorKind kind, double weight, const RobustKernel& kernel)
      : kind_(kind), weight_(weight), kernel_(kernel), sdf_(Sphere{1.0}) {}

  FactorKind kind_;
  double weight_;
  RobustKernel kernel_;
  Pose zeta_;
  bool contact_ = false;
  PadGrid grid_;
  Vector3 point_ = Vector3::Zero();
  SdfField sdf_;
  Vector3 grid_center_ = Vector3::Zero();
  double grid_radius_ = 0.0;
};

/// Dense Jacobian of a block (dimension x 6).
JacobianMatrix jacobians(const ResidualBlock& block, const Pose& xi);

}  // namespace padfuse
