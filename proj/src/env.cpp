#include "dscd/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

namespace dscd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

double hash01(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  const std::uint64_t h = splitmix(a ^ splitmix(b ^ splitmix(c)));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

Env::Env(const Scenario& scenario, const GridConfig& cfg) : scenario_(scenario), cfg_(cfg) {
  cfg_.map_size = scenario_.grid.size();
  cfg_.cell_size = scenario_.cell_size;
  cfg_.validate();
  const int scx = static_cast<int>(std::floor(scenario_.start.x / cfg_.cell_size));
  const int scy = static_cast<int>(std::floor(scenario_.start.y / cfg_.cell_size));
  if (scenario_.grid.occupied(scx, scy)) throw std::runtime_error("env: start cell occupied");
  if (scenario_.grid.occupied(scenario_.target.cx, scenario_.target.cy)) {
    throw std::runtime_error("env: target cell occupied");
  }
  const int r = cfg_.body_radius > 0.0
                    ? static_cast<int>(std::ceil(cfg_.body_radius / cfg_.cell_size - 1e-12))
                    : 0;
  inflated_ = scenario_.grid.inflate(r);
  vis_radius_cells_ =
      std::min(cfg_.max_vis_range / cfg_.cell_size,
               (cfg_.map_size / cfg_.voxel_ray_size) * std::sqrt(2.0 * kPi / cfg_.fov));
}

double Env::ray_clearance(double px, double py, double heading, double max_dist) const {
  const double cs = cfg_.cell_size;
  const double dx = std::cos(heading);
  const double dy = std::sin(heading);
  int cx = static_cast<int>(std::floor(px / cs));
  int cy = static_cast<int>(std::floor(py / cs));
  if (inflated_.occupied(cx, cy)) return 0.0;
  const int sx = dx > 0.0 ? 1 : (dx < 0.0 ? -1 : 0);
  const int sy = dy > 0.0 ? 1 : (dy < 0.0 ? -1 : 0);
  double tmx = kInf, tmy = kInf, tdx = kInf, tdy = kInf;
  if (sx != 0) {
    const double boundary = (sx > 0 ? (cx + 1) * cs : cx * cs);
    tmx = (boundary - px) / dx;
    tdx = cs / std::abs(dx);
  }
  if (sy != 0) {
    const double boundary = (sy > 0 ? (cy + 1) * cs : cy * cs);
    tmy = (boundary - py) / dy;
    tdy = cs / std::abs(dy);
  }
  while (true) {
    double t;
    if (tmx < tmy) {
      t = tmx;
      tmx += tdx;
      cx += sx;
    } else {
      t = tmy;
      tmy += tdy;
      cy += sy;
    }
    if (t >= max_dist) return max_dist;
    if (inflated_.occupied(cx, cy)) return t;
  }
}

std::vector<PolarAction> Env::generate_candidates(const Pose& pose) const {
  const double bin = 2.0 * kPi / cfg_.rotation_bins;
  const int jmax = static_cast<int>(std::floor(cfg_.fov / 2.0 / bin + 1e-9));
  struct Feasible {
    int j;
    double theta;
    double r;
  };
  std::vector<Feasible> feas;
  for (int j = -jmax; j <= jmax; ++j) {
    const double theta = j * bin;
    const double clr =
        ray_clearance(pose.x, pose.y, wrap_angle(pose.heading + theta), cfg_.max_vis_range);
    const double cap = std::min(cfg_.forward_max, 0.9 * clr);
    if (cap < cfg_.forward_min - 1e-12) continue;
    // Strides follow a fixed low-discrepancy profile over the bins: diverse
    // lengths every step without pose-sensitive jitter.
    const double phase = 0.6180339887498949 * (j + 13) + 0.07 * static_cast<double>(scenario_.seed % 97);
    const double u = phase - std::floor(phase);
    const double r = cfg_.forward_min + u * (cap - cfg_.forward_min);
    feas.push_back({j, theta, r});
  }

  std::vector<PolarAction> out;
  auto emit = [&](const Feasible& f) { out.push_back(PolarAction{f.r, f.theta}); };
  const int total = static_cast<int>(feas.size());
  const int want = cfg_.n_candidates;
  if (total <= want) {
    for (const auto& f : feas) emit(f);
  } else if (want == 1) {
    emit(feas[(total - 1) / 2]);
  } else {
    for (int k = 0; k < want; ++k) {
      const int idx = static_cast<int>(
          std::llround(static_cast<double>(k) * (total - 1) / (want - 1)));
      emit(feas[idx]);
    }
  }
  return out;
}

bool Env::line_of_sight(int ax, int ay, int bx, int by) const {
  // Canonical endpoint order keeps the kernel symmetric.
  if (by < ay || (by == ay && bx < ax)) {
    std::swap(ax, bx);
    std::swap(ay, by);
  }
  if (ax == bx && ay == by) return true;
  const double px = ax + 0.5, py = ay + 0.5;
  double dx = (bx + 0.5) - px;
  double dy = (by + 0.5) - py;
  const double len = std::hypot(dx, dy);
  dx /= len;
  dy /= len;
  int cx = ax, cy = ay;
  const int sx = dx > 0.0 ? 1 : (dx < 0.0 ? -1 : 0);
  const int sy = dy > 0.0 ? 1 : (dy < 0.0 ? -1 : 0);
  double tmx = kInf, tmy = kInf, tdx = kInf, tdy = kInf;
  if (sx != 0) {
    tmx = (sx > 0 ? (cx + 1) - px : px - cx) / std::abs(dx);
    tdx = 1.0 / std::abs(dx);
  }
  if (sy != 0) {
    tmy = (sy > 0 ? (cy + 1) - py : py - cy) / std::abs(dy);
    tdy = 1.0 / std::abs(dy);
  }
  while (cx != bx || cy != by) {
    if (tmx < tmy) {
      cx += sx;
      tmx += tdx;
    } else {
      cy += sy;
      tmy += tdy;
    }
    if (cx == bx && cy == by) break;
    if (scenario_.grid.occupied(cx, cy)) return false;
  }
  return true;
}

VisibilityFootprint Env::visible_cells(const Pose& pose, int step) const {
  VisibilityFootprint fp;
  fp.step = step;
  const double cs = cfg_.cell_size;
  const int ax = static_cast<int>(std::floor(pose.x / cs));
  const int ay = static_cast<int>(std::floor(pose.y / cs));
  const double radius = vis_radius_cells_;
  const int ir = static_cast<int>(std::ceil(radius));
  const int n = scenario_.grid.size();
  for (int y = std::max(0, ay - ir); y <= std::min(n - 1, ay + ir); ++y) {
    for (int x = std::max(0, ax - ir); x <= std::min(n - 1, ax + ir); ++x) {
      if (x == ax && y == ay) {
        fp.cells.push_back(scenario_.grid.index(x, y));
        continue;
      }
      if (scenario_.grid.occupied(x, y)) continue;
      const double dx = x - ax;
      const double dy = y - ay;
      if (dx * dx + dy * dy > radius * radius) continue;
      const double bearing = std::atan2(dy, dx);
      if (std::abs(wrap_angle(bearing - pose.heading)) > cfg_.fov / 2.0 + 1e-12) continue;
      if (!line_of_sight(ax, ay, x, y)) continue;
      fp.cells.push_back(scenario_.grid.index(x, y));
    }
  }
  return fp;  // row-major scan keeps indices sorted
}

bool Env::cell_visible_full(int ax, int ay, int bx, int by) const {
  if (scenario_.grid.occupied(ax, ay) || scenario_.grid.occupied(bx, by)) return false;
  if (ax == bx && ay == by) return true;
  const double dx = bx - ax;
  const double dy = by - ay;
  if (dx * dx + dy * dy > vis_radius_cells_ * vis_radius_cells_) return false;
  return line_of_sight(ax, ay, bx, by);
}

bool Env::target_visible(const Pose& pose) const {
  const double cs = cfg_.cell_size;
  const int ax = static_cast<int>(std::floor(pose.x / cs));
  const int ay = static_cast<int>(std::floor(pose.y / cs));
  const int tx = scenario_.target.cx;
  const int ty = scenario_.target.cy;
  if (ax == tx && ay == ty) return true;
  if (!cell_visible_full(ax, ay, tx, ty)) return false;
  const double bearing = std::atan2(static_cast<double>(ty - ay), static_cast<double>(tx - ax));
  return std::abs(wrap_angle(bearing - pose.heading)) <= cfg_.fov / 2.0 + 1e-12;
}

StepOutcome Env::step(const Pose& pose, const PolarAction& action) const {
  StepOutcome out;
  const double h = wrap_angle(pose.heading + action.theta);
  const double horizon = cfg_.map_size * cfg_.cell_size * 2.0;
  const double clearance = ray_clearance(pose.x, pose.y, h, horizon);
  double moved = action.r;
  if (action.r > 0.9 * clearance) {
    moved = 0.9 * clearance;
    out.collision = true;
  }
  out.moved = moved;
  out.pose = Pose{pose.x + moved * std::cos(h), pose.y + moved * std::sin(h), h};
  return out;
}

bool Env::check_success(const Pose& pose) const {
  const double dx = pose.x - scenario_.target.x;
  const double dy = pose.y - scenario_.target.y;
  if (std::hypot(dx, dy) > cfg_.success_radius) return false;
  return target_visible(pose);
}

double Env::geodesic_start_to_target() const {
  const double cs = cfg_.cell_size;
  const int sx = static_cast<int>(std::floor(scenario_.start.x / cs));
  const int sy = static_cast<int>(std::floor(scenario_.start.y / cs));
  return geodesic_distance(scenario_.grid, cs, sx, sy, scenario_.target.cx, scenario_.target.cy);
}

PolarAction Env::recovery_rotation() const {
  return PolarAction{0.0, 2.0 * (2.0 * kPi / cfg_.rotation_bins)};
}

namespace {

// Path length as an exact (straight, diag) step-count pair; value is
// straight + diag * sqrt(2). Pairs compare exactly in integer arithmetic.
struct PathLen {
  std::int64_t straight = -1;  // -1 marks unreached
  std::int64_t diag = 0;
};

bool less_exact(std::int64_t a1, std::int64_t b1, std::int64_t a2, std::int64_t b2) {
  const std::int64_t ds = a1 - a2;
  const std::int64_t dd = b1 - b2;
  if (dd == 0) return ds < 0;
  if (ds == 0) return dd < 0;
  if (ds < 0 && dd < 0) return true;
  if (ds > 0 && dd > 0) return false;
  if (ds > 0) return ds * ds < 2 * dd * dd;  // dd < 0: ds < |dd|*sqrt2
  return 2 * dd * dd < ds * ds;              // ds < 0, dd > 0: dd*sqrt2 < |ds|
}

}  // namespace

double geodesic_distance(const OccupancyGrid& grid, double cell_size, int ax, int ay, int bx,
                         int by) {
  if (grid.occupied(ax, ay) || grid.occupied(bx, by)) {
    throw std::domain_error("geodesic_distance: endpoint cell occupied");
  }
  if (ax == bx && ay == by) return 0.0;
  const int n = grid.size();
  auto at = [n](int x, int y) { return y * n + x; };
  std::vector<PathLen> dist(static_cast<std::size_t>(n) * n);
  std::vector<char> settled(static_cast<std::size_t>(n) * n, 0);

  struct Entry {
    std::int64_t s, d;
    int cell;
  };
  auto after = [](const Entry& a, const Entry& b) {
    if (a.s == b.s && a.d == b.d) return a.cell > b.cell;
    return less_exact(b.s, b.d, a.s, a.d);
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(after)> pq(after);
  dist[at(ax, ay)] = PathLen{0, 0};
  pq.push({0, 0, at(ax, ay)});

  static const int DX[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  static const int DY[8] = {0, 0, 1, -1, 1, -1, 1, -1};
  const int goal = at(bx, by);
  while (!pq.empty()) {
    const Entry e = pq.top();
    pq.pop();
    if (settled[e.cell]) continue;
    settled[e.cell] = 1;
    if (e.cell == goal) break;
    const int x = e.cell % n;
    const int y = e.cell / n;
    for (int k = 0; k < 8; ++k) {
      const int nx = x + DX[k];
      const int ny = y + DY[k];
      if (grid.occupied(nx, ny)) continue;
      const bool diag = k >= 4;
      if (diag && (grid.occupied(nx, y) || grid.occupied(x, ny))) continue;  // no corner cutting
      const std::int64_t ns = e.s + (diag ? 0 : 1);
      const std::int64_t nd = e.d + (diag ? 1 : 0);
      PathLen& cur = dist[at(nx, ny)];
      if (cur.straight < 0 || less_exact(ns, nd, cur.straight, cur.diag)) {
        cur = PathLen{ns, nd};
        pq.push({ns, nd, at(nx, ny)});
      }
    }
  }
  const PathLen& end = dist[goal];
  if (end.straight < 0) return kInf;
  return (static_cast<double>(end.straight) + static_cast<double>(end.diag) * std::sqrt(2.0)) *
         cell_size;
}

}  // namespace dscd
