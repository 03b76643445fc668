#pragma once

#include <array>

#include "beaconnav/error.hpp"

namespace beaconnav::geometry {

// Two conventions share one physical space:
//   RobotMap  right-handed, x forward, y left, z up.
//   Viewer    left-handed,  x right,   y up,   z forward.
enum class Frame { RobotMap, Viewer };

const char* to_string(Frame f) noexcept;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }

  double norm() const;
  bool finite() const;

  friend bool operator==(const Vec3&, const Vec3&) = default;
};

double dot(const Vec3& a, const Vec3& b);
Vec3 cross(const Vec3& a, const Vec3& b);

using Mat3 = std::array<std::array<double, 3>, 3>;

// Unit quaternion, Hamilton convention, stored (x, y, z, w).
class Quat {
 public:
  Quat() = default;

  // Normalizes; throws InvalidArgument for non-finite or near-zero input.
  static Quat normalized(double qx, double qy, double qz, double qw);
  // Requires |q| within tol of 1, then normalizes.
  static Quat from_unit(double qx, double qy, double qz, double qw, double tol = 1e-6);
  static Quat identity() { return {}; }
  static Quat from_axis_angle(const Vec3& axis, double angle);
  static Quat from_matrix(const Mat3& m);

  double x() const { return x_; }
  double y() const { return y_; }
  double z() const { return z_; }
  double w() const { return w_; }

  Quat operator*(const Quat& o) const;
  Quat conjugate() const { return raw(-x_, -y_, -z_, w_); }
  Vec3 rotate(const Vec3& v) const;
  Mat3 matrix() const;

  // Sign flipped so that w >= 0 (ties broken on the first non-zero component).
  Quat canonical() const;

  friend bool operator==(const Quat&, const Quat&) = default;

 private:
  static Quat raw(double qx, double qy, double qz, double qw) {
    Quat q;
    q.x_ = qx;
    q.y_ = qy;
    q.z_ = qz;
    q.w_ = qw;
    return q;
  }

  double x_ = 0.0;
  double y_ = 0.0;
  double z_ = 0.0;
  double w_ = 1.0;
};

struct Pose {
  Vec3 position;
  Quat orientation;
  Frame frame = Frame::RobotMap;

  static Pose identity(Frame f = Frame::RobotMap) { return {{}, Quat::identity(), f}; }

  friend bool operator==(const Pose&, const Pose&) = default;
};

// Pose of the co-localization anchor in the robot map frame.
struct AnchorPose {
  Pose pose = Pose::identity(Frame::RobotMap);
};

Vec3 viewer_to_robot_pos(const Vec3& v);
Vec3 robot_to_viewer_pos(const Vec3& v);
Quat viewer_to_robot_quat(const Quat& q);
Quat robot_to_viewer_quat(const Quat& q);
Pose viewer_to_robot(const Pose& p);
Pose robot_to_viewer(const Pose& p);

Pose compose(const Pose& a, const Pose& b);
Pose invert(const Pose& a);

// Yaw about RobotMap +z, zero along +x, in (-pi, pi].
double yaw_from_quat(const Quat& q, double tol = 1e-6);
Quat quat_from_yaw(double yaw);

Pose anchor_to_map(const Pose& local, const AnchorPose& anchor);

double wrap_angle(double a);

// Frobenius distance between the rotation matrices of a and b.
double rotation_distance(const Quat& a, const Quat& b);

}  // namespace beaconnav::geometry
