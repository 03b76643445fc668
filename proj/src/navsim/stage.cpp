#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "beaconnav/navsim.hpp"

namespace beaconnav::navsim {

std::vector<Stage> parse_stages(std::string_view text) {
  std::vector<Stage> stages;
  std::istringstream in{std::string(text)};
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    Stage s;
    if (!(ls >> tag) || tag != "stage" ||
        !(ls >> s.id >> s.center.x >> s.center.y >> s.width >> s.height >> s.yaw >> s.target_yaw >> s.yaw_tol)) {
      throw Error(ErrorCode::LoadError, "stage line " + std::to_string(lineno) + ": expected 'stage <id> <cx> <cy> <w> <h> <area_yaw> <target_yaw> <yaw_tol>'");
    }
    std::string extra;
    if (ls >> extra) throw Error(ErrorCode::LoadError, "stage line " + std::to_string(lineno) + ": trailing fields");
    if (!(s.width > 0) || !(s.height > 0) || !(s.yaw_tol > 0)) {
      throw Error(ErrorCode::LoadError, "stage line " + std::to_string(lineno) + ": sizes and tolerance must be positive");
    }
    if (s.id < 1 || s.id > 4) {
      throw Error(ErrorCode::LoadError, "stage line " + std::to_string(lineno) + ": stage id must be 1..4");
    }
    stages.push_back(s);
  }
  return stages;
}

std::vector<Stage> load_stages(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read stage file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_stages(ss.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

StageCheck check_stage(const Stage& stage, const RobotState& robot, const beacon::Footprint& footprint) {
  const double hl = footprint.length / 2.0;
  const double hw = footprint.width / 2.0;
  const double rc = std::cos(robot.yaw), rs = std::sin(robot.yaw);
  const double sc = std::cos(stage.yaw), ss = std::sin(stage.yaw);

  StageCheck out{true, false};
  for (const auto& [lx, ly] : std::array<std::pair<double, double>, 4>{{{hl, hw}, {hl, -hw}, {-hl, hw}, {-hl, -hw}}}) {
    const double dx = robot.x + rc * lx - rs * ly - stage.center.x;
    const double dy = robot.y + rs * lx + rc * ly - stage.center.y;
    // Into the stage's local frame.
    const double u = sc * dx + ss * dy;
    const double v = -ss * dx + sc * dy;
    if (std::abs(u) > stage.width / 2.0 || std::abs(v) > stage.height / 2.0) {
      out.inside = false;
      break;
    }
  }
  out.heading_ok = std::abs(geometry::wrap_angle(robot.yaw - stage.target_yaw)) <= stage.yaw_tol;
  return out;
}

}  // namespace beaconnav::navsim
