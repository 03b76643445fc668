#include <doctest.h>

#include <Eigen/Geometry>
#include <cmath>
#include <numbers>
#include <random>

#include "beaconnav/geometry.hpp"

using namespace beaconnav;
using namespace beaconnav::geometry;

namespace {

constexpr double kPi = std::numbers::pi;

Vec3 random_vec(std::mt19937_64& rng, double scale = 10.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

Quat random_quat(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  return Quat::normalized(n(rng), n(rng), n(rng), n(rng));
}

Pose random_pose(std::mt19937_64& rng, Frame f = Frame::RobotMap) { return {random_vec(rng), random_quat(rng), f}; }

// robot -> viewer axis permutation as a matrix: viewer = P * robot.
Eigen::Matrix3d permutation() {
  Eigen::Matrix3d p;
  p << 0, -1, 0,
       0, 0, 1,
       1, 0, 0;
  return p;
}

Eigen::Matrix3d to_eigen(const Mat3& m) {
  Eigen::Matrix3d e;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) e(r, c) = m[r][c];
  return e;
}

Eigen::Matrix3d eigen_rot(const Quat& q) { return Eigen::Quaterniond(q.w(), q.x(), q.y(), q.z()).toRotationMatrix(); }

Eigen::Matrix4d eigen_tf(const Pose& p) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.block<3, 3>(0, 0) = eigen_rot(p.orientation);
  m.block<3, 1>(0, 3) = Eigen::Vector3d(p.position.x, p.position.y, p.position.z);
  return m;
}

double dist(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

}  // namespace

TEST_CASE("position conversion follows the axis table") {
  CHECK(viewer_to_robot_pos({0, 0, 1}) == Vec3{1, 0, 0});
  CHECK(viewer_to_robot_pos({0, 0, 0}) == Vec3{0, 0, 0});
  CHECK(robot_to_viewer_pos({1, 0, 0}) == Vec3{0, 0, 1});
  CHECK(robot_to_viewer_pos({0, 1, 0}) == Vec3{-1, 0, 0});
  CHECK(robot_to_viewer_pos({0, 0, 1}) == Vec3{0, 1, 0});
}

TEST_CASE("position conversion round-trips and preserves norms") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 p = random_vec(rng);
    CHECK(dist(viewer_to_robot_pos(robot_to_viewer_pos(p)), p) <= 1e-12);
    CHECK(dist(robot_to_viewer_pos(viewer_to_robot_pos(p)), p) <= 1e-12);
    CHECK(std::abs(robot_to_viewer_pos(p).norm() - p.norm()) <= 1e-12);
  }
}

TEST_CASE("non-finite positions are rejected") {
  const double nan = std::nan("");
  CHECK_THROWS_AS(viewer_to_robot_pos({nan, 0, 0}), Error);
  CHECK_THROWS_AS(robot_to_viewer_pos({0, INFINITY, 0}), Error);
}

TEST_CASE("quaternion conversion matches rotation-matrix conjugation") {
  std::mt19937_64 rng(2);
  const Eigen::Matrix3d P = permutation();
  CHECK(robot_to_viewer_quat(Quat::identity()) == Quat::identity());
  CHECK(viewer_to_robot_quat(Quat::identity()) == Quat::identity());
  for (int i = 0; i < 1000; ++i) {
    const Quat q = random_quat(rng);
    const Eigen::Matrix3d expect_v = P * eigen_rot(q) * P.transpose();
    CHECK((to_eigen(robot_to_viewer_quat(q).matrix()) - expect_v).norm() <= 1e-10);
    const Eigen::Matrix3d expect_r = P.transpose() * eigen_rot(q) * P;
    CHECK((to_eigen(viewer_to_robot_quat(q).matrix()) - expect_r).norm() <= 1e-10);

    const Quat back = viewer_to_robot_quat(robot_to_viewer_quat(q));
    CHECK(rotation_distance(back, q) <= 1e-10);
    CHECK(robot_to_viewer_quat(q).w() >= 0.0);
  }
}

TEST_CASE("quaternion conversion rejects non-unit input") {
  CHECK_NOTHROW(Quat::from_unit(0, 0, 0, 1.0 + 5e-7));
  try {
    Quat::from_unit(0, 0, 0, 0.5);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidArgument);
  }
}

TEST_CASE("pose conversion checks the frame tag") {
  std::mt19937_64 rng(3);
  const Pose r = random_pose(rng);
  const Pose v = robot_to_viewer(r);
  CHECK(v.frame == Frame::Viewer);
  CHECK_THROWS_AS(robot_to_viewer(v), Error);
  const Pose rr = viewer_to_robot(v);
  CHECK(rr.frame == Frame::RobotMap);
  CHECK(dist(rr.position, r.position) <= 1e-12);
  CHECK(rotation_distance(rr.orientation, r.orientation) <= 1e-10);
}

TEST_CASE("compose and invert") {
  std::mt19937_64 rng(4);
  const Pose id = Pose::identity();
  for (int i = 0; i < 200; ++i) {
    const Pose a = random_pose(rng), b = random_pose(rng), c = random_pose(rng);
    const Pose ia = compose(id, a);
    CHECK(dist(ia.position, a.position) <= 1e-12);
    CHECK(rotation_distance(ia.orientation, a.orientation) <= 1e-12);

    const Pose e = compose(a, invert(a));
    CHECK(e.position.norm() <= 1e-10);
    CHECK(rotation_distance(e.orientation, Quat::identity()) <= 1e-10);

    const Pose l = compose(compose(a, b), c);
    const Pose r = compose(a, compose(b, c));
    CHECK(dist(l.position, r.position) <= 1e-9);
    CHECK(rotation_distance(l.orientation, r.orientation) <= 1e-9);

    const Eigen::Matrix4d m = eigen_tf(a) * eigen_tf(b);
    const Pose ab = compose(a, b);
    CHECK((eigen_tf(ab) - m).norm() <= 1e-9);
  }
  CHECK_THROWS_AS(compose(Pose::identity(Frame::RobotMap), Pose::identity(Frame::Viewer)), Error);
  try {
    compose(Pose::identity(Frame::RobotMap), Pose::identity(Frame::Viewer));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FrameMismatch);
  }
}

TEST_CASE("yaw helpers") {
  CHECK(quat_from_yaw(0.0) == Quat::identity());
  const Quat q = quat_from_yaw(kPi / 2);
  CHECK(q.x() == 0.0);
  CHECK(q.y() == 0.0);
  CHECK(q.z() == doctest::Approx(std::sqrt(2.0) / 2).epsilon(1e-15));
  CHECK(q.w() == doctest::Approx(std::sqrt(2.0) / 2).epsilon(1e-15));
  CHECK(yaw_from_quat(q) == doctest::Approx(kPi / 2).epsilon(1e-15));

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  for (int i = 0; i < 100; ++i) {
    const double yaw = u(rng);
    CHECK(std::abs(wrap_angle(yaw_from_quat(quat_from_yaw(yaw)) - yaw)) <= 1e-12);
  }
  CHECK_THROWS_AS(yaw_from_quat(Quat::from_axis_angle({1, 0, 0}, 0.3)), Error);
  CHECK(wrap_angle(3 * kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
}

TEST_CASE("anchor_to_map") {
  const Pose local{{0.5, -0.25, 0}, quat_from_yaw(0.3), Frame::RobotMap};
  const Pose same = anchor_to_map(local, AnchorPose{});
  CHECK(dist(same.position, local.position) <= 1e-15);
  CHECK(rotation_distance(same.orientation, local.orientation) <= 1e-15);

  AnchorPose moved;
  moved.pose.position = {1, 2, 0};
  CHECK(dist(anchor_to_map(Pose::identity(), moved).position, Vec3{1, 2, 0}) <= 1e-15);

  AnchorPose turned;
  turned.pose = {{1, 2, 0}, quat_from_yaw(kPi / 2), Frame::RobotMap};
  const Pose out = anchor_to_map({{1, 0, 0}, Quat::identity(), Frame::RobotMap}, turned);
  const Eigen::Vector4d expect = eigen_tf(turned.pose) * Eigen::Vector4d(1, 0, 0, 1);
  CHECK(dist(out.position, {expect.x(), expect.y(), expect.z()}) <= 1e-12);
  CHECK(dist(out.position, {1, 3, 0}) <= 1e-12);
  CHECK_THROWS_AS(anchor_to_map(Pose::identity(Frame::Viewer), turned), Error);
}

TEST_CASE("from_matrix inverts matrix") {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 500; ++i) {
    const Quat q = random_quat(rng);
    CHECK(rotation_distance(Quat::from_matrix(q.matrix()), q) <= 1e-12);
  }
}
