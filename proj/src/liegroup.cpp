#include "padfuse/liegroup.hpp"

#include <cmath>
#include <limits>

namespace padfuse {

namespace {

Eigen::Quaterniond canonical(Eigen::Quaterniond q) {
  if (std::abs(q.squaredNorm() - 1.0) > 8.0 * std::numeric_limits<double>::epsilon()) q.normalize();
  if (q.w() < 0.0) q.coeffs() *= -1.0;
  return q;
}

// Q block of the SE(3) left Jacobian (Barfoot's closed form).
Matrix3 se3_q_block(const Vector3& omega, const Vector3& v) {
  const double theta2 = omega.squaredNorm();
  const double theta = std::sqrt(theta2);
  double c1, c2, c3;
  if (theta < kSmallAngle) {
    c1 = 1.0 / 6.0 - theta2 / 120.0;
    c2 = 1.0 / 24.0 - theta2 / 720.0;
    c3 = 1.0 / 120.0 - theta2 / 2520.0;
  } else {
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    c1 = (theta - s) / (theta2 * theta);
    c2 = (theta2 + 2.0 * c - 2.0) / (2.0 * theta2 * theta2);
    c3 = (2.0 * theta - 3.0 * s + theta * c) / (2.0 * theta2 * theta2 * theta);
  }
  const Matrix3 W = skew(omega);
  const Matrix3 P = skew(v);
  const Matrix3 WP = W * P;
  const Matrix3 PW = P * W;
  const Matrix3 WPW = WP * W;
  return 0.5 * P + c1 * (WP + PW + WPW) + c2 * (W * WP + PW * W - 3.0 * WPW) +
         c3 * (WPW * W + W * WPW);
}

}  // namespace

Rotation::Rotation(const Eigen::Quaterniond& q) : q_(canonical(q)) {}

Rotation Rotation::from_matrix(const Matrix3& m) { return Rotation(Eigen::Quaterniond(m)); }

Rotation Rotation::about_axis(const Vector3& axis, double angle) {
  return Rotation(Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis.normalized())));
}

Rotation Rotation::exp(const Vector3& omega) {
  const double theta2 = omega.squaredNorm();
  const double theta = std::sqrt(theta2);
  double w, k;
  if (theta < kSmallAngle) {
    w = 1.0 - theta2 / 8.0;
    k = 0.5 - theta2 / 48.0;
  } else {
    w = std::cos(0.5 * theta);
    k = std::sin(0.5 * theta) / theta;
  }
  return Rotation(Eigen::Quaterniond(w, k * omega.x(), k * omega.y(), k * omega.z()));
}

Vector3 Rotation::log() const {
  const Vector3 vec = q_.vec();
  const double s = vec.norm();
  const double w = q_.w();
  if (s < kSmallAngle) {
    // theta / s ~ 2/w * (1 - s^2 / (3 w^2))
    return (2.0 / w) * (1.0 - s * s / (3.0 * w * w)) * vec;
  }
  const double theta = 2.0 * std::atan2(s, w);
  return (theta / s) * vec;
}

double Rotation::angle() const { return 2.0 * std::atan2(q_.vec().norm(), q_.w()); }

Pose Pose::from_matrix(const Matrix4& m) {
  return {Rotation::from_matrix(m.topLeftCorner<3, 3>()), m.topRightCorner<3, 1>()};
}

Pose Pose::inverse() const {
  const Rotation r_inv = rotation_.inverse();
  return {r_inv, -(r_inv * translation_)};
}

Pose Pose::operator*(const Pose& other) const {
  return {rotation_ * other.rotation_, rotation_ * other.translation_ + translation_};
}

Matrix4 Pose::matrix() const {
  Matrix4 m = Matrix4::Identity();
  m.topLeftCorner<3, 3>() = rotation_.matrix();
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

Pose compose(const Pose& a, const Pose& b) { return a * b; }
Pose inverse(const Pose& p) { return p.inverse(); }
Vector3 transform_point(const Pose& p, const Vector3& x) { return p * x; }

Pose exp(const Twist& t) {
  const Vector3 omega = t.head<3>();
  const Vector3 v = t.tail<3>();
  return {Rotation::exp(omega), so3_left_jacobian(omega) * v};
}

LogResult log_checked(const Pose& p) {
  LogResult out;
  const Vector3 omega = p.rotation().log();
  out.twist.head<3>() = omega;
  out.twist.tail<3>() = so3_left_jacobian_inverse(omega) * p.translation();
  out.angle_near_pi = p.rotation().angle() > M_PI - kNearPiBand;
  return out;
}

Pose retract(const Pose& p, const Twist& delta) { return p * exp(delta); }

Twist local_coordinates(const Pose& p, const Pose& q) { return log(p.inverse() * q); }

Matrix3 skew(const Vector3& v) {
  Matrix3 s;
  // clang-format off
  s <<    0.0, -v.z(),  v.y(),
        v.z(),    0.0, -v.x(),
       -v.y(),  v.x(),    0.0;
  // clang-format on
  return s;
}

Matrix3 so3_left_jacobian(const Vector3& omega) {
  const double theta2 = omega.squaredNorm();
  const double theta = std::sqrt(theta2);
  double a, b;
  if (theta < kSmallAngle) {
    a = 0.5 - theta2 / 24.0;
    b = 1.0 / 6.0 - theta2 / 120.0;
  } else {
    a = (1.0 - std::cos(theta)) / theta2;
    b = (theta - std::sin(theta)) / (theta2 * theta);
  }
  const Matrix3 W = skew(omega);
  return Matrix3::Identity() + a * W + b * W * W;
}

Matrix3 so3_left_jacobian_inverse(const Vector3& omega) {
  const double theta2 = omega.squaredNorm();
  const double theta = std::sqrt(theta2);
  double c;
  if (theta < kSmallAngle) {
    c = 1.0 / 12.0 + theta2 / 720.0;
  } else {
    c = (1.0 - theta * std::sin(theta) / (2.0 * (1.0 - std::cos(theta)))) / theta2;
  }
  const Matrix3 W = skew(omega);
  return Matrix3::Identity() - 0.5 * W + c * W * W;
}

Matrix6 se3_left_jacobian(const Twist& t) {
  const Vector3 omega = t.head<3>();
  const Matrix3 J = so3_left_jacobian(omega);
  Matrix6 out = Matrix6::Zero();
  out.topLeftCorner<3, 3>() = J;
  out.bottomRightCorner<3, 3>() = J;
  out.bottomLeftCorner<3, 3>() = se3_q_block(omega, t.tail<3>());
  return out;
}

Matrix6 se3_left_jacobian_inverse(const Twist& t) {
  const Vector3 omega = t.head<3>();
  const Matrix3 J_inv = so3_left_jacobian_inverse(omega);
  Matrix6 out = Matrix6::Zero();
  out.topLeftCorner<3, 3>() = J_inv;
  out.bottomRightCorner<3, 3>() = J_inv;
  out.bottomLeftCorner<3, 3>() = -J_inv * se3_q_block(omega, t.tail<3>()) * J_inv;
  return out;
}

Matrix6 adjoint(const Pose& p) {
  const Matrix3 R = p.rotation().matrix();
  Matrix6 out = Matrix6::Zero();
  out.topLeftCorner<3, 3>() = R;
  out.bottomRightCorner<3, 3>() = R;
  out.bottomLeftCorner<3, 3>() = skew(p.translation()) * R;
  return out;
}

}  // namespace padfuse
