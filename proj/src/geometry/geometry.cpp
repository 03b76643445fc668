#include "beaconnav/geometry.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace beaconnav::geometry {

namespace {

void require_finite(const Vec3& v, const char* what) {
  if (!v.finite()) {
    throw Error(ErrorCode::InvalidArgument, std::string(what) + ": non-finite component");
  }
}

void require_same_frame(const Pose& a, const Pose& b) {
  if (a.frame != b.frame) {
    throw Error(ErrorCode::FrameMismatch, std::string("frame mismatch: ") + to_string(a.frame) +
                                              " vs " + to_string(b.frame));
  }
}

void require_unit(const Quat& q) {
  const double n = std::sqrt(q.x() * q.x() + q.y() * q.y() + q.z() * q.z() + q.w() * q.w());
  if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-6) {
    throw Error(ErrorCode::InvalidArgument, "quaternion is not unit norm");
  }
}

}  // namespace

const char* to_string(Frame f) noexcept {
  return f == Frame::RobotMap ? "robot_map" : "viewer";
}

double Vec3::norm() const { return std::sqrt(x * x + y * y + z * z); }

bool Vec3::finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }

double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

Quat Quat::normalized(double qx, double qy, double qz, double qw) {
  const double n = std::sqrt(qx * qx + qy * qy + qz * qz + qw * qw);
  if (!std::isfinite(n) || n < 1e-12) {
    throw Error(ErrorCode::InvalidArgument, "quaternion cannot be normalized");
  }
  return raw(qx / n, qy / n, qz / n, qw / n);
}

Quat Quat::from_unit(double qx, double qy, double qz, double qw, double tol) {
  const double n = std::sqrt(qx * qx + qy * qy + qz * qz + qw * qw);
  if (!std::isfinite(n) || std::abs(n - 1.0) > tol) {
    throw Error(ErrorCode::InvalidArgument, "quaternion norm " + std::to_string(n) + " is not 1");
  }
  // Already unit to working precision: keep the exact components.
  if (std::abs(n - 1.0) <= 1e-12) return raw(qx, qy, qz, qw);
  return raw(qx / n, qy / n, qz / n, qw / n);
}

Quat Quat::from_axis_angle(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (!std::isfinite(n) || n < 1e-12 || !std::isfinite(angle)) {
    throw Error(ErrorCode::InvalidArgument, "degenerate rotation axis");
  }
  const double s = std::sin(angle / 2.0) / n;
  return normalized(axis.x * s, axis.y * s, axis.z * s, std::cos(angle / 2.0));
}

Quat Quat::from_matrix(const Mat3& m) {
  // Shepperd's method: pivot on the largest diagonal term.
  const double tr = m[0][0] + m[1][1] + m[2][2];
  if (tr > 0.0) {
    const double s = std::sqrt(tr + 1.0) * 2.0;
    return normalized((m[2][1] - m[1][2]) / s, (m[0][2] - m[2][0]) / s, (m[1][0] - m[0][1]) / s,
                      0.25 * s);
  }
  if (m[0][0] > m[1][1] && m[0][0] > m[2][2]) {
    const double s = std::sqrt(1.0 + m[0][0] - m[1][1] - m[2][2]) * 2.0;
    return normalized(0.25 * s, (m[0][1] + m[1][0]) / s, (m[0][2] + m[2][0]) / s,
                      (m[2][1] - m[1][2]) / s);
  }
  if (m[1][1] > m[2][2]) {
    const double s = std::sqrt(1.0 + m[1][1] - m[0][0] - m[2][2]) * 2.0;
    return normalized((m[0][1] + m[1][0]) / s, 0.25 * s, (m[1][2] + m[2][1]) / s,
                      (m[0][2] - m[2][0]) / s);
  }
  const double s = std::sqrt(1.0 + m[2][2] - m[0][0] - m[1][1]) * 2.0;
  return normalized((m[0][2] + m[2][0]) / s, (m[1][2] + m[2][1]) / s, 0.25 * s,
                    (m[1][0] - m[0][1]) / s);
}

Quat Quat::operator*(const Quat& o) const {
  return raw(w_ * o.x_ + x_ * o.w_ + y_ * o.z_ - z_ * o.y_,
             w_ * o.y_ - x_ * o.z_ + y_ * o.w_ + z_ * o.x_,
             w_ * o.z_ + x_ * o.y_ - y_ * o.x_ + z_ * o.w_,
             w_ * o.w_ - x_ * o.x_ - y_ * o.y_ - z_ * o.z_);
}

Vec3 Quat::rotate(const Vec3& v) const {
  // v' = v + 2w(u x v) + 2 u x (u x v)
  const Vec3 u{x_, y_, z_};
  const Vec3 t = cross(u, v) * 2.0;
  return v + t * w_ + cross(u, t);
}

Mat3 Quat::matrix() const {
  const double xx = x_ * x_, yy = y_ * y_, zz = z_ * z_;
  const double xy = x_ * y_, xz = x_ * z_, yz = y_ * z_;
  const double wx = w_ * x_, wy = w_ * y_, wz = w_ * z_;
  return {{{1 - 2 * (yy + zz), 2 * (xy - wz), 2 * (xz + wy)},
           {2 * (xy + wz), 1 - 2 * (xx + zz), 2 * (yz - wx)},
           {2 * (xz - wy), 2 * (yz + wx), 1 - 2 * (xx + yy)}}};
}

Quat Quat::canonical() const {
  bool flip = w_ < 0.0;
  if (w_ == 0.0) {
    for (double c : {x_, y_, z_}) {
      if (c != 0.0) {
        flip = c < 0.0;
        break;
      }
    }
  }
  return flip ? raw(-x_, -y_, -z_, -w_) : *this;
}

// robot = P * viewer with P = [[0,0,1],[-1,0,0],[0,1,0]], det(P) = -1.
Vec3 viewer_to_robot_pos(const Vec3& v) {
  require_finite(v, "viewer_to_robot_pos");
  return {v.z, -v.x, v.y};
}

Vec3 robot_to_viewer_pos(const Vec3& v) {
  require_finite(v, "robot_to_viewer_pos");
  return {-v.y, v.z, v.x};
}

// Conjugating a rotation by an improper P maps its axis u to det(P) * P u,
// so the vector part picks up a sign flip on top of the permutation.
Quat viewer_to_robot_quat(const Quat& q) {
  require_unit(q);
  return Quat::normalized(-q.z(), q.x(), -q.y(), q.w()).canonical();
}

Quat robot_to_viewer_quat(const Quat& q) {
  require_unit(q);
  return Quat::normalized(q.y(), -q.z(), -q.x(), q.w()).canonical();
}

Pose viewer_to_robot(const Pose& p) {
  if (p.frame != Frame::Viewer) {
    throw Error(ErrorCode::FrameMismatch, "viewer_to_robot expects a viewer-frame pose");
  }
  return {viewer_to_robot_pos(p.position), viewer_to_robot_quat(p.orientation), Frame::RobotMap};
}

Pose robot_to_viewer(const Pose& p) {
  if (p.frame != Frame::RobotMap) {
    throw Error(ErrorCode::FrameMismatch, "robot_to_viewer expects a robot-map pose");
  }
  return {robot_to_viewer_pos(p.position), robot_to_viewer_quat(p.orientation), Frame::Viewer};
}

Pose compose(const Pose& a, const Pose& b) {
  require_same_frame(a, b);
  const Quat q = a.orientation * b.orientation;
  return {a.position + a.orientation.rotate(b.position),
          Quat::normalized(q.x(), q.y(), q.z(), q.w()).canonical(), a.frame};
}

Pose invert(const Pose& a) {
  const Quat qi = a.orientation.conjugate();
  return {qi.rotate(-a.position), qi.canonical(), a.frame};
}

double yaw_from_quat(const Quat& q, double tol) {
  require_unit(q);
  if (std::abs(q.x()) > tol || std::abs(q.y()) > tol) {
    throw Error(ErrorCode::ConstraintViolation, "quaternion is not a pure rotation about +z");
  }
  return wrap_angle(2.0 * std::atan2(q.z(), q.w()));
}

Quat quat_from_yaw(double yaw) {
  if (!std::isfinite(yaw)) {
    throw Error(ErrorCode::InvalidArgument, "non-finite yaw");
  }
  return Quat::normalized(0.0, 0.0, std::sin(yaw / 2.0), std::cos(yaw / 2.0)).canonical();
}

Pose anchor_to_map(const Pose& local, const AnchorPose& anchor) {
  return compose(anchor.pose, local);
}

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a > std::numbers::pi) a -= two_pi;
  if (a <= -std::numbers::pi) a += two_pi;
  return a;
}

double rotation_distance(const Quat& a, const Quat& b) {
  const Mat3 ma = a.matrix();
  const Mat3 mb = b.matrix();
  double s = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double d = ma[i][j] - mb[i][j];
      s += d * d;
    }
  }
  return std::sqrt(s);
}

}  // namespace beaconnav::geometry
