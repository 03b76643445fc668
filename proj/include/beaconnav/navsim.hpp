#pragma once

#include <filesystem>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "beaconnav/beacon_core.hpp"
#include "beaconnav/geometry.hpp"

namespace beaconnav::navsim {

using geometry::Vec2;

struct Cell {
  int col = 0;
  int row = 0;  // row 0 is the lowest y

  friend bool operator==(const Cell&, const Cell&) = default;
};

class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  OccupancyGrid(int width, int height, double resolution, Vec2 origin = {});

  int width() const { return width_; }
  int height() const { return height_; }
  double resolution() const { return resolution_; }
  Vec2 origin() const { return origin_; }

  bool in_bounds(Cell c) const { return c.col >= 0 && c.row >= 0 && c.col < width_ && c.row < height_; }
  bool occupied(Cell c) const { return cells_[index(c)] != 0; }
  void set_occupied(Cell c, bool occ = true) { cells_[index(c)] = occ ? 1 : 0; }

  std::optional<Cell> cell_at(Vec2 p) const;
  Vec2 center(Cell c) const;

  // Map file: "resolution <m>", "origin <x> <y>", then rows of '#'/'.', top row = max y.
  static OccupancyGrid parse(std::string_view text);
  static OccupancyGrid load(const std::filesystem::path& path);
  std::string to_text() const;

  friend bool operator==(const OccupancyGrid&, const OccupancyGrid&) = default;

 private:
  std::size_t index(Cell c) const {
    return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(c.col);
  }

  int width_ = 0;
  int height_ = 0;
  double resolution_ = 1.0;
  Vec2 origin_;
  std::vector<unsigned char> cells_;
};

// Marks every free cell whose center lies within radius of some occupied cell's
// square (so radius = one cell grows a single obstacle into a 3x3 block).
OccupancyGrid inflate(const OccupancyGrid& grid, double radius);

struct Path {
  std::vector<Vec2> points;  // cell centers, start first
  double cost = 0.0;         // meters along 8-connected moves
};

// 8-connected A* with octile heuristic. Diagonal moves may not cut occupied corners.
// Returns nullopt when start/goal is occupied, outside the grid, or unreachable.
std::optional<Path> plan(const OccupancyGrid& grid, Vec2 start, Vec2 goal);

struct RobotState {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
  double v = 0.0;
  double w = 0.0;

  friend bool operator==(const RobotState&, const RobotState&) = default;
};

struct NavGoal {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
};

enum class NavStatusKind { Idle, Following, RotatingToGoal, Succeeded, Failed };
enum class FailReason { None, NoPath, Timeout };

struct NavStatus {
  NavStatusKind kind = NavStatusKind::Idle;
  FailReason reason = FailReason::None;

  bool terminal() const { return kind == NavStatusKind::Succeeded || kind == NavStatusKind::Failed; }
  std::string str() const;

  friend bool operator==(const NavStatus&, const NavStatus&) = default;
};

struct ControllerParams {
  double v_max = 0.5;
  double w_max = 1.5;
  double k_v = 1.0;
  double k_w = 2.0;
  double drive_heading = 30.0 * std::numbers::pi / 180.0;
  double waypoint_tol = 0.10;
  double goal_pos_tol = 0.05;
  double goal_yaw_tol = 5.0 * std::numbers::pi / 180.0;
  double timeout = 120.0;
  double inflation_radius = 0.12;
};

// Rotate-then-drive path follower on a unicycle robot. Deterministic: the same
// grid, goals and dt sequence produce bit-identical trajectories.
class Simulator {
 public:
  Simulator(OccupancyGrid grid, ControllerParams params = {}, RobotState start = {});

  // Plans on the inflated grid. No path fails immediately with NoPath.
  NavStatus set_goal(const NavGoal& goal);
  void cancel();
  // Advances by dt seconds (dt > 0).
  NavStatus tick(double dt);

  const RobotState& robot() const { return robot_; }
  const NavStatus& status() const { return status_; }
  const std::optional<NavGoal>& goal() const { return goal_; }
  const std::vector<Vec2>& path() const { return path_; }
  const OccupancyGrid& grid() const { return grid_; }
  const OccupancyGrid& inflated() const { return inflated_; }
  const ControllerParams& params() const { return params_; }
  void reset_robot(const RobotState& r) { robot_ = r; }

 private:
  bool at_goal() const;

  OccupancyGrid grid_;
  OccupancyGrid inflated_;
  ControllerParams params_;
  RobotState robot_;
  NavStatus status_;
  std::optional<NavGoal> goal_;
  std::vector<Vec2> path_;
  std::vector<double> remaining_;  // path length from each point to the goal
  std::size_t waypoint_ = 0;
  double elapsed_ = 0.0;
};

struct Stage {
  int id = 1;
  Vec2 center;
  double width = 1.0;   // along the area's local x
  double height = 1.0;  // along the area's local y
  double yaw = 0.0;
  double target_yaw = 0.0;
  double yaw_tol = 15.0 * std::numbers::pi / 180.0;
};

// One line per stage: "stage <id> <cx> <cy> <w> <h> <area_yaw> <target_yaw> <yaw_tol>".
std::vector<Stage> parse_stages(std::string_view text);
std::vector<Stage> load_stages(const std::filesystem::path& path);

struct StageCheck {
  bool inside = false;
  bool heading_ok = false;

  friend bool operator==(const StageCheck&, const StageCheck&) = default;
};

// Inside iff all four footprint corners lie in the stage rectangle (boundary counts as inside).
StageCheck check_stage(const Stage& stage, const RobotState& robot, const beacon::Footprint& footprint);

}  // namespace beaconnav::navsim
