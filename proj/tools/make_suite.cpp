// dscd-make-suite: deterministic generator for the pinned scenario suite.
// Archetypes: pocket (dead-end trap facing the target), junction (ambiguous
// branch with a decoy chamber), rooms (doored room lattice), open (pillars).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dscd/env.hpp"
#include "dscd/grid.hpp"

namespace fs = std::filesystem;
using namespace dscd;

namespace {

constexpr int kSide = 64;

struct Canvas {
  std::vector<std::string> rows;
  Canvas() : rows(kSide, std::string(kSide, '#')) {}

  void clear_rect(int x0, int y0, int x1, int y1) { paint_rect(x0, y0, x1, y1, '.'); }
  void fill_rect(int x0, int y0, int x1, int y1) { paint_rect(x0, y0, x1, y1, '#'); }
  void paint_rect(int x0, int y0, int x1, int y1, char ch) {
    for (int y = std::max(1, y0); y <= std::min(kSide - 2, y1); ++y) {
      for (int x = std::max(1, x0); x <= std::min(kSide - 2, x1); ++x) {
        rows[y][x] = ch;
      }
    }
  }
  void set(int x, int y, char ch) { rows[y][x] = ch; }
  char get(int x, int y) const { return rows[y][x]; }
};

int pick(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

// Deep dead-end pocket at the end of the approach corridor, aligned with
// the start->target line; the door sits at the end of a perpendicular
// corridor along the wall.
Canvas make_pocket(std::mt19937_64& rng, int& sx, int& sy, int& tx, int& ty, int& heading) {
  Canvas c;
  const int wx = pick(rng, 26, 31);   // wall band start
  const int wt = pick(rng, 10, 13);   // wall thickness; pocket depth = wt - 3
  sy = pick(rng, 20, 42);
  const bool north = pick(rng, 0, 1) == 0;
  int dy = sy + (north ? -1 : 1) * pick(rng, 9, 11);
  dy = std::max(7, std::min(kSide - 8, dy));

  const int ylo = std::min(sy, dy);
  const int yhi = std::max(sy, dy);
  c.clear_rect(wx - 16, sy - 3, wx - 1, sy + 3);      // approach corridor
  c.clear_rect(wx - 7, ylo - 3, wx - 1, yhi + 3);     // corridor along the wall
  c.clear_rect(wx + wt, ylo - 5, wx + wt + 13, yhi + 5);  // target room
  c.clear_rect(wx - 1, dy - 2, wx + wt, dy + 2);      // door
  c.clear_rect(wx - 1, sy - 2, wx + wt - 4, sy + 2);  // inviting pocket

  sx = wx - 13;
  tx = wx + wt + pick(rng, 4, 8);
  ty = sy + pick(rng, -2, 2);
  heading = 0;
  return c;
}

// Corridor to a junction chamber with two branches: a decoy chamber roughly
// toward the goal and a perpendicular corridor to the target room.
Canvas make_junction(std::mt19937_64& rng, int& sx, int& sy, int& tx, int& ty, int& heading) {
  Canvas c;
  const int cy = pick(rng, 26, 38);  // main corridor height
  sy = cy;
  sx = pick(rng, 6, 9);
  c.clear_rect(4, cy - 3, 14, cy + 3);    // start room
  c.clear_rect(14, cy - 2, 26, cy + 2);   // corridor east
  c.clear_rect(26, cy - 5, 34, cy + 5);   // junction chamber

  const bool decoy_north = pick(rng, 0, 1) == 0;
  const int dir = decoy_north ? -1 : 1;
  const int dy0 = cy + dir * pick(rng, 6, 8);
  c.clear_rect(32, std::min(cy, dy0) - 2, 36, std::max(cy, dy0) + 2);  // decoy neck
  c.clear_rect(36, dy0 - 5, 47, dy0 + 5);                              // decoy chamber

  const int ry = cy - dir * pick(rng, 10, 12);
  c.clear_rect(28, std::min(cy, ry), 32, std::max(cy, ry));  // branch away from goal
  c.clear_rect(28, ry - 2, 44, ry + 2);                      // corridor east
  c.clear_rect(44, ry - 6, 54, ry + 6);                      // target room
  tx = pick(rng, 46, 50);
  ty = ry + pick(rng, -3, 3);
  heading = 0;
  return c;
}

// 3x3 lattice of small rooms with one door per wall segment; the target
// sits one or two rooms away.
Canvas make_rooms(std::mt19937_64& rng, int& sx, int& sy, int& tx, int& ty, int& heading) {
  Canvas c;
  const int x0 = 8, y0 = 8, x1 = 55, y1 = 55;
  const int wa = 24, wb = 40;  // wall lines in both axes
  c.clear_rect(x0, y0, x1, y1);
  c.fill_rect(wa, y0, wa + 1, y1);
  c.fill_rect(wb, y0, wb + 1, y1);
  c.fill_rect(x0, wa, x1, wa + 1);
  c.fill_rect(x0, wb, x1, wb + 1);
  const int bands[3][2] = {{x0 + 2, wa - 7}, {wa + 3, wb - 7}, {wb + 3, x1 - 5}};
  for (int wall : {wa, wb}) {
    for (const auto& band : bands) {
      const int dy = pick(rng, band[0], band[1]);
      c.clear_rect(wall, dy, wall + 1, dy + 4);
      const int dx = pick(rng, band[0], band[1]);
      c.clear_rect(dx, wall, dx + 4, wall + 1);
    }
  }
  sx = pick(rng, x0 + 3, wa - 5);
  sy = pick(rng, wa + 4, wb - 5);
  tx = pick(rng, wb + 4, x1 - 3);
  ty = pick(rng, 0, 1) == 0 ? pick(rng, wa + 4, wb - 5) : pick(rng, y0 + 3, wa - 5);
  heading = pick(rng, 0, 3) * 90;
  return c;
}

// Compact open hall with scattered pillars.
Canvas make_open(std::mt19937_64& rng, int& sx, int& sy, int& tx, int& ty, int& heading) {
  Canvas c;
  const int x0 = pick(rng, 6, 10);
  const int y0 = pick(rng, 6, 10);
  const int x1 = x0 + pick(rng, 38, 44);
  const int y1 = y0 + pick(rng, 38, 44);
  c.clear_rect(x0, y0, std::min(kSide - 4, x1), std::min(kSide - 4, y1));
  for (int i = 0; i < pick(rng, 6, 10); ++i) {
    const int px = pick(rng, x0 + 6, x1 - 8);
    const int py = pick(rng, y0 + 6, y1 - 8);
    c.fill_rect(px, py, px + pick(rng, 1, 3), py + pick(rng, 1, 3));
  }
  sx = x0 + pick(rng, 3, 6);
  sy = pick(rng, y0 + 4, y1 - 4);
  tx = x1 - pick(rng, 3, 6);
  ty = pick(rng, y0 + 4, y1 - 4);
  heading = pick(rng, 0, 3) * 90;
  return c;
}

bool free_around(const Canvas& c, int x, int y, int margin) {
  for (int dy = -margin; dy <= margin; ++dy) {
    for (int dx = -margin; dx <= margin; ++dx) {
      if (x + dx < 0 || y + dy < 0 || x + dx >= kSide || y + dy >= kSide) return false;
      if (c.get(x + dx, y + dy) != '.') return false;
    }
  }
  return true;
}

// Nudges a marker onto the nearest spot with 2 cells of clearance.
bool settle(const Canvas& c, int& x, int& y) {
  for (int r = 0; r < 8; ++r) {
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx) {
        if (free_around(c, x + dx, y + dy, 2)) {
          x += dx;
          y += dy;
          return true;
        }
      }
    }
  }
  return false;
}

std::string build_scenario(const std::string& name, std::uint64_t seed, const Canvas& c, int sx,
                           int sy, int tx, int ty, int heading,
                           const std::vector<std::string>& cues) {
  std::ostringstream out;
  out << "name: " << name << "\n";
  out << "seed: " << seed << "\n";
  out << "cell_size: 0.25\n";
  out << "heading_deg: " << heading << "\n";
  out << "target_category: target\n";
  for (const auto& cue : cues) out << "cue: " << cue << "\n";
  out << "map:\n";
  for (int y = 0; y < kSide; ++y) {
    std::string row = c.rows[y];
    if (y == sy) row[sx] = 'S';
    if (y == ty) row[tx] = 'T';
    out << row << "\n";
  }
  return out.str();
}

// Validity: parses, both endpoints settle, the raw and body-inflated grids
// both connect start to target, and the episode is not trivially short.
bool validate(const std::string& text) {
  try {
    std::istringstream in(text);
    const Scenario sc = Scenario::parse(in, "generated");
    GridConfig cfg;
    Env env(sc, cfg);
    const double raw = env.geodesic_start_to_target();
    if (!std::isfinite(raw) || raw < 4.0 || raw > 14.0) return false;
    const int sx = static_cast<int>(sc.start.x / sc.cell_size);
    const int sy = static_cast<int>(sc.start.y / sc.cell_size);
    const double inflated = geodesic_distance(env.motion_grid(), sc.cell_size, sx, sy,
                                              sc.target.cx, sc.target.cy);
    return std::isfinite(inflated);
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"generate a deterministic scenario suite"};
  std::string out_dir = "scenarios/pinned";
  int count = 60;
  std::uint64_t base_seed = 1;
  app.add_option("-o,--out", out_dir, "output directory");
  app.add_option("-n,--count", count, "number of scenarios");
  app.add_option("--seed", base_seed, "base seed");

  CLI11_PARSE(app, argc, argv);

  fs::create_directories(out_dir);
  int written = 0;
  for (int i = 0; i < count; ++i) {
    const int kind = i % 10;  // 4 pocket : 3 junction : 2 rooms : 1 open
    std::string arch;
    std::string text;
    for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
      std::mt19937_64 rng(base_seed * 100003ULL + static_cast<std::uint64_t>(i) * 257ULL +
                          attempt);
      int sx, sy, tx, ty, heading;
      Canvas c;
      if (kind < 4) {
        arch = "pocket";
        c = make_pocket(rng, sx, sy, tx, ty, heading);
      } else if (kind < 7) {
        arch = "junction";
        c = make_junction(rng, sx, sy, tx, ty, heading);
      } else if (kind < 9) {
        arch = "rooms";
        c = make_rooms(rng, sx, sy, tx, ty, heading);
      } else {
        arch = "open";
        c = make_open(rng, sx, sy, tx, ty, heading);
      }
      if (!settle(c, sx, sy) || !settle(c, tx, ty)) continue;
      if (sx == tx && sy == ty) continue;
      char name[64];
      std::snprintf(name, sizeof(name), "%s-%03d", arch.c_str(), i);
      std::vector<std::string> cues;
      if (i % 7 == 0) cues.push_back("the target was last seen across the room");
      const std::string candidate = build_scenario(
          name, base_seed + static_cast<std::uint64_t>(i), c, sx, sy, tx, ty, heading, cues);
      if (validate(candidate)) {
        text = candidate;
        break;
      }
    }
    if (text.empty()) {
      std::cerr << "failed to generate scenario " << i << "\n";
      return 2;
    }
    char fname[64];
    std::snprintf(fname, sizeof(fname), "%03d.scn", i);
    std::ofstream out(fs::path(out_dir) / fname, std::ios::binary);
    out << text;
    ++written;
  }
  std::printf("wrote %d scenarios to %s\n", written, out_dir.c_str());
  return 0;
}
