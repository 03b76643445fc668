#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>

#include "beaconnav/navsim.hpp"

namespace beaconnav::navsim {

namespace {

struct Move {
  int dc;
  int dr;
  double cost;
};

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr Move kMoves[] = {{1, 0, 1.0},     {-1, 0, 1.0},    {0, 1, 1.0},      {0, -1, 1.0},
                           {1, 1, kSqrt2}, {1, -1, kSqrt2}, {-1, 1, kSqrt2}, {-1, -1, kSqrt2}};

double octile(Cell a, Cell b) {
  const double dx = std::abs(a.col - b.col);
  const double dy = std::abs(a.row - b.row);
  return dx + dy + (kSqrt2 - 2.0) * std::min(dx, dy);
}

struct OpenEntry {
  double f;
  std::uint64_t seq;
  std::size_t node;
};

// Min-heap on f, earlier insertion wins ties.
struct Later {
  bool operator()(const OpenEntry& a, const OpenEntry& b) const {
    if (a.f != b.f) return a.f > b.f;
    return a.seq > b.seq;
  }
};

}  // namespace

std::optional<Path> plan(const OccupancyGrid& grid, Vec2 start, Vec2 goal) {
  const auto s = grid.cell_at(start);
  const auto g = grid.cell_at(goal);
  if (!s || !g || grid.occupied(*s) || grid.occupied(*g)) return std::nullopt;

  const int w = grid.width();
  const auto idx = [w](Cell c) { return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(w) + static_cast<std::size_t>(c.col); };
  const auto cell = [w](std::size_t i) { return Cell{static_cast<int>(i % static_cast<std::size_t>(w)), static_cast<int>(i / static_cast<std::size_t>(w))}; };

  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(grid.height());
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<double> cost(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> parent(n, kNone);
  std::vector<char> closed(n, 0);

  std::priority_queue<OpenEntry, std::vector<OpenEntry>, Later> open;
  std::uint64_t seq = 0;
  cost[idx(*s)] = 0.0;
  open.push({octile(*s, *g), seq++, idx(*s)});

  const std::size_t target = idx(*g);
  while (!open.empty()) {
    const OpenEntry top = open.top();
    open.pop();
    if (closed[top.node]) continue;
    closed[top.node] = 1;
    if (top.node == target) break;

    const Cell c = cell(top.node);
    for (const Move& m : kMoves) {
      const Cell nb{c.col + m.dc, c.row + m.dr};
      if (!grid.in_bounds(nb) || grid.occupied(nb)) continue;
      if (m.dc != 0 && m.dr != 0 &&
          (grid.occupied({c.col + m.dc, c.row}) || grid.occupied({c.col, c.row + m.dr}))) {
        continue;
      }
      const std::size_t ni = idx(nb);
      if (closed[ni]) continue;
      const double nc = cost[top.node] + m.cost;
      if (nc < cost[ni]) {
        cost[ni] = nc;
        parent[ni] = top.node;
        open.push({nc + octile(nb, *g), seq++, ni});
      }
    }
  }

  if (!closed[target]) return std::nullopt;

  Path path;
  path.cost = cost[target] * grid.resolution();
  for (std::size_t i = target; i != kNone; i = parent[i]) path.points.push_back(grid.center(cell(i)));
  std::reverse(path.points.begin(), path.points.end());
  return path;
}

}  // namespace beaconnav::navsim
