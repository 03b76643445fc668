#include <algorithm>
#include <cmath>

#include "beaconnav/navsim.hpp"

namespace beaconnav::navsim {

using geometry::wrap_angle;

std::string NavStatus::str() const {
  switch (kind) {
    case NavStatusKind::Idle: return "idle";
    case NavStatusKind::Following: return "following";
    case NavStatusKind::RotatingToGoal: return "rotating_to_goal";
    case NavStatusKind::Succeeded: return "succeeded";
    case NavStatusKind::Failed: return reason == FailReason::Timeout ? "failed:timeout" : "failed:no-path";
  }
  return "idle";
}

Simulator::Simulator(OccupancyGrid grid, ControllerParams params, RobotState start)
    : grid_(std::move(grid)),
      inflated_(inflate(grid_, params.inflation_radius)),
      params_(params),
      robot_(start) {}

NavStatus Simulator::set_goal(const NavGoal& goal) {
  if (!std::isfinite(goal.x) || !std::isfinite(goal.y) || !std::isfinite(goal.yaw)) {
    throw Error(ErrorCode::InvalidArgument, "navigation goal is not finite");
  }
  goal_ = goal;
  elapsed_ = 0.0;
  waypoint_ = 0;
  path_.clear();
  remaining_.clear();
  robot_.v = 0.0;
  robot_.w = 0.0;

  auto planned = plan(inflated_, {robot_.x, robot_.y}, {goal.x, goal.y});
  if (!planned) {
    status_ = {NavStatusKind::Failed, FailReason::NoPath};
    return status_;
  }
  path_ = std::move(planned->points);
  // Follow cell centers, but finish on the exact goal point.
  path_.back() = {goal.x, goal.y};
  remaining_.assign(path_.size(), 0.0);
  for (std::size_t i = path_.size() - 1; i-- > 0;) {
    remaining_[i] = remaining_[i + 1] + std::hypot(path_[i + 1].x - path_[i].x, path_[i + 1].y - path_[i].y);
  }
  status_ = {NavStatusKind::Following, FailReason::None};
  return status_;
}

void Simulator::cancel() {
  goal_.reset();
  path_.clear();
  robot_.v = 0.0;
  robot_.w = 0.0;
  status_ = {};
}

bool Simulator::at_goal() const {
  if (!goal_) return false;
  const double d = std::hypot(goal_->x - robot_.x, goal_->y - robot_.y);
  return d < params_.goal_pos_tol && std::abs(wrap_angle(goal_->yaw - robot_.yaw)) < params_.goal_yaw_tol;
}

NavStatus Simulator::tick(double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::InvalidArgument, "tick dt must be positive");
  if (status_.kind == NavStatusKind::Idle || status_.terminal()) {
    robot_.v = 0.0;
    robot_.w = 0.0;
    return status_;
  }

  if (at_goal()) {
    robot_.v = 0.0;
    robot_.w = 0.0;
    status_ = {NavStatusKind::Succeeded, FailReason::None};
    return status_;
  }
  elapsed_ += dt;
  if (elapsed_ > params_.timeout) {
    robot_.v = 0.0;
    robot_.w = 0.0;
    status_ = {NavStatusKind::Failed, FailReason::Timeout};
    return status_;
  }

  const std::size_t last = path_.size() - 1;
  const auto dist_to = [&](Vec2 p) { return std::hypot(p.x - robot_.x, p.y - robot_.y); };

  double v = 0.0;
  double w = 0.0;
  if (status_.kind == NavStatusKind::RotatingToGoal && dist_to(path_[last]) > params_.goal_pos_tol) {
    status_.kind = NavStatusKind::Following;
    waypoint_ = last;
  }

  if (status_.kind == NavStatusKind::Following) {
    while (waypoint_ < last && dist_to(path_[waypoint_]) < params_.waypoint_tol) ++waypoint_;
    const Vec2 target = path_[waypoint_];
    const double dist = dist_to(target);
    if (waypoint_ == last && dist < 0.5 * params_.goal_pos_tol) {
      status_.kind = NavStatusKind::RotatingToGoal;
    } else {
      const double heading = std::atan2(target.y - robot_.y, target.x - robot_.x);
      const double err = wrap_angle(heading - robot_.yaw);
      w = std::clamp(params_.k_w * err, -params_.w_max, params_.w_max);
      // Speed follows the distance left along the path, not to the next cell.
      const double left = dist + remaining_[waypoint_];
      if (std::abs(err) < params_.drive_heading) v = std::clamp(params_.k_v * left, 0.0, params_.v_max);
    }
  }
  if (status_.kind == NavStatusKind::RotatingToGoal) {
    const double err = wrap_angle(goal_->yaw - robot_.yaw);
    w = std::clamp(params_.k_w * err, -params_.w_max, params_.w_max);
    v = 0.0;
  }

  robot_.v = v;
  robot_.w = w;
  robot_.x += v * std::cos(robot_.yaw) * dt;
  robot_.y += v * std::sin(robot_.yaw) * dt;
  robot_.yaw = wrap_angle(robot_.yaw + w * dt);
  return status_;
}

}  // namespace beaconnav::navsim
