#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace padfuse {

using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;
using Matrix4 = Eigen::Matrix4d;
using Vector6 = Eigen::Matrix<double, 6, 1>;
using Matrix6 = Eigen::Matrix<double, 6, 6>;

/// Tangent vector of SE(3), ordered (omega [rad], v [m]).
using Twist = Vector6;

/// Below this rotation angle the exp/log coefficient functions switch to
/// their Taylor series.
inline constexpr double kSmallAngle = 1e-6;

/// log() flags rotations whose angle lies within this band of pi.
inline constexpr double kNearPiBand = 1e-6;

/**
 * Unit quaternion rotation. The stored quaternion is always normalized and
 * canonicalized to w >= 0, so every value has a single representation.
 */
class Rotation {
 public:
  Rotation() : q_(Eigen::Quaterniond::Identity()) {}
  explicit Rotation(const Eigen::Quaterniond& q);
  Rotation(double w, double x, double y, double z) : Rotation(Eigen::Quaterniond(w, x, y, z)) {}

  static Rotation identity() { return {}; }
  static Rotation from_matrix(const Matrix3& m);
  static Rotation about_axis(const Vector3& axis, double angle);

  /// Rodrigues exponential of a rotation vector.
  static Rotation exp(const Vector3& omega);
  /// Rotation vector with angle in [0, pi].
  Vector3 log() const;
  double angle() const;

  Rotation inverse() const { return Rotation(q_.conjugate()); }
  Rotation operator*(const Rotation& other) const { return Rotation(q_ * other.q_); }
  Vector3 operator*(const Vector3& v) const { return q_ * v; }

  Matrix3 matrix() const { return q_.toRotationMatrix(); }
  const Eigen::Quaterniond& quaternion() const { return q_; }

 private:
  Eigen::Quaterniond q_;
};

/// Rigid transform x -> R x + t.
class Pose {
 public:
  Pose() : translation_(Vector3::Zero()) {}
  Pose(const Rotation& rotation, const Vector3& translation)
      : rotation_(rotation), translation_(translation) {}

  static Pose identity() { return {}; }
  static Pose from_translation(const Vector3& t) { return {Rotation(), t}; }
  static Pose from_rotation(const Rotation& r) { return {r, Vector3::Zero()}; }
  static Pose from_matrix(const Matrix4& m);

  const Rotation& rotation() const { return rotation_; }
  const Vector3& translation() const { return translation_; }

  Pose inverse() const;
  Pose operator*(const Pose& other) const;
  Vector3 operator*(const Vector3& x) const { return rotation_ * x + translation_; }

  Matrix4 matrix() const;

 private:
  Rotation rotation_;
  Vector3 translation_;
};

Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& p);
Vector3 transform_point(const Pose& p, const Vector3& x);

struct LogResult {
  Twist twist;
  /// Rotation angle within kNearPiBand of pi; the axis may be ill-conditioned.
  bool angle_near_pi = false;
};

Pose exp(const Twist& t);
LogResult log_checked(const Pose& p);
inline Twist log(const Pose& p) { return log_checked(p).twist; }

/// Right perturbation: p * exp(delta).
Pose retract(const Pose& p, const Twist& delta);
/// Inverse of retract: log(p^-1 q).
Twist local_coordinates(const Pose& p, const Pose& q);

Matrix3 skew(const Vector3& v);

/// SO(3) left Jacobian; equals the V matrix of the SE(3) exponential.
Matrix3 so3_left_jacobian(const Vector3& omega);
Matrix3 so3_left_jacobian_inverse(const Vector3& omega);

/// SE(3) left Jacobian for the (omega, v) ordering: [[J, 0], [Q, J]].
Matrix6 se3_left_jacobian(const Twist& t);
Matrix6 se3_left_jacobian_inverse(const Twist& t);

/// Adjoint of p acting on (omega, v) twists.
Matrix6 adjoint(const Pose& p);

}  // namespace padfuse
