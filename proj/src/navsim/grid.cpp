#include <cmath>
#include <fstream>
#include <sstream>

#include "beaconnav/navsim.hpp"

namespace beaconnav::navsim {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_map(std::size_t lineno, const std::string& msg) {
  throw Error(ErrorCode::LoadError, "map line " + std::to_string(lineno) + ": " + msg);
}

}  // namespace

OccupancyGrid::OccupancyGrid(int width, int height, double resolution, Vec2 origin)
    : width_(width), height_(height), resolution_(resolution), origin_(origin) {
  if (width < 1 || height < 1) throw Error(ErrorCode::InvalidArgument, "grid must be at least 1x1");
  if (!(resolution > 0.0) || !std::isfinite(resolution)) {
    throw Error(ErrorCode::InvalidArgument, "grid resolution must be positive");
  }
  cells_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
}

std::optional<Cell> OccupancyGrid::cell_at(Vec2 p) const {
  const double fx = (p.x - origin_.x) / resolution_ + 0.5;
  const double fy = (p.y - origin_.y) / resolution_ + 0.5;
  if (!std::isfinite(fx) || !std::isfinite(fy)) return std::nullopt;
  const Cell c{static_cast<int>(std::floor(fx)), static_cast<int>(std::floor(fy))};
  if (!in_bounds(c)) return std::nullopt;
  return c;
}

// origin is the center of cell (0,0).
Vec2 OccupancyGrid::center(Cell c) const {
  return {origin_.x + c.col * resolution_, origin_.y + c.row * resolution_};
}

OccupancyGrid OccupancyGrid::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::optional<double> resolution;
  std::optional<Vec2> origin;
  std::vector<std::string> rows;
  std::string raw;
  for (std::size_t lineno = 1; std::getline(in, raw); ++lineno) {
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line.rfind("resolution", 0) == 0) {
      std::istringstream ls(line.substr(10));
      double r = 0.0;
      if (!(ls >> r) || !(r > 0.0)) bad_map(lineno, "bad resolution");
      resolution = r;
    } else if (line.rfind("origin", 0) == 0) {
      std::istringstream ls(line.substr(6));
      Vec2 o;
      if (!(ls >> o.x >> o.y)) bad_map(lineno, "bad origin");
      origin = o;
    } else {
      if (line.find_first_not_of("#.") != std::string::npos) bad_map(lineno, "unexpected character in grid row");
      if (!rows.empty() && line.size() != rows.front().size()) bad_map(lineno, "ragged grid row");
      rows.push_back(line);
    }
  }
  if (!resolution) throw Error(ErrorCode::LoadError, "map: missing 'resolution' line");
  if (!origin) throw Error(ErrorCode::LoadError, "map: missing 'origin' line");
  if (rows.empty()) throw Error(ErrorCode::LoadError, "map: no grid rows");

  const int h = static_cast<int>(rows.size());
  OccupancyGrid g(static_cast<int>(rows.front().size()), h, *resolution, *origin);
  for (int r = 0; r < h; ++r) {
    const std::string& row = rows[static_cast<std::size_t>(h - 1 - r)];
    for (int c = 0; c < g.width(); ++c) {
      if (row[static_cast<std::size_t>(c)] == '#') g.set_occupied({c, r});
    }
  }
  return g;
}

OccupancyGrid OccupancyGrid::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read map file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse(ss.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::string OccupancyGrid::to_text() const {
  std::ostringstream out;
  out.precision(17);
  out << "resolution " << resolution_ << "\norigin " << origin_.x << ' ' << origin_.y << '\n';
  for (int r = height_ - 1; r >= 0; --r) {
    for (int c = 0; c < width_; ++c) out << (occupied({c, r}) ? '#' : '.');
    out << '\n';
  }
  return out.str();
}

OccupancyGrid inflate(const OccupancyGrid& grid, double radius) {
  if (radius < 0.0) throw Error(ErrorCode::InvalidArgument, "inflation radius must be >= 0");
  OccupancyGrid out = grid;
  if (radius == 0.0) return out;
  const double r_cells = radius / grid.resolution();
  const int reach = static_cast<int>(std::ceil(r_cells + 0.5));
  const double r2 = r_cells * r_cells;
  for (int row = 0; row < grid.height(); ++row) {
    for (int col = 0; col < grid.width(); ++col) {
      if (!grid.occupied({col, row})) continue;
      for (int dr = -reach; dr <= reach; ++dr) {
        for (int dc = -reach; dc <= reach; ++dc) {
          const Cell n{col + dc, row + dr};
          if (!grid.in_bounds(n) || out.occupied(n)) continue;
          const double dx = std::max(std::abs(dc) - 0.5, 0.0);
          const double dy = std::max(std::abs(dr) - 0.5, 0.0);
          if (dx * dx + dy * dy <= r2) out.set_occupied(n);
        }
      }
    }
  }
  return out;
}

}  // namespace beaconnav::navsim
