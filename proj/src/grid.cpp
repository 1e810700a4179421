#include "dscd/grid.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dscd {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& origin, const std::string& msg) {
  throw std::runtime_error("scenario " + origin + ": " + msg);
}

}  // namespace

OccupancyGrid OccupancyGrid::inflate(int radius_cells) const {
  if (radius_cells <= 0) return *this;
  OccupancyGrid out(size_);
  for (int y = 0; y < size_; ++y) {
    for (int x = 0; x < size_; ++x) {
      bool occ = false;
      for (int dy = -radius_cells; !occ && dy <= radius_cells; ++dy) {
        for (int dx = -radius_cells; dx <= radius_cells; ++dx) {
          if (occupied(x + dx, y + dy)) {
            occ = true;
            break;
          }
        }
      }
      out.set(x, y, occ);
    }
  }
  return out;
}

void GridConfig::validate() const {
  if (map_size <= 0) throw std::invalid_argument("grid: map_size must be positive");
  if (cell_size <= 0.0) throw std::invalid_argument("grid: cell_size must be positive");
  if (voxel_ray_size <= 0.0) throw std::invalid_argument("grid: voxel_ray_size must be positive");
  if (!(fov > 0.0 && fov <= 2.0 * kPi)) throw std::invalid_argument("grid: fov out of (0, 2pi]");
  if (max_vis_range <= 0.0) throw std::invalid_argument("grid: max_vis_range must be positive");
  if (n_candidates <= 0) throw std::invalid_argument("grid: n_candidates must be positive");
  if (forward_min > forward_max) throw std::invalid_argument("grid: forward range min > max");
  if (forward_min < 0.0) throw std::invalid_argument("grid: forward range must be non-negative");
  if (rotation_bins <= 0) throw std::invalid_argument("grid: rotation_bins must be positive");
  if (success_radius <= 0.0) throw std::invalid_argument("grid: success_radius must be positive");
  if (max_steps <= 0) throw std::invalid_argument("grid: max_steps must be positive");
  if (body_radius < 0.0) throw std::invalid_argument("grid: body_radius must be non-negative");
}

Scenario Scenario::parse(std::istream& in, const std::string& origin) {
  Scenario sc;
  sc.name = origin;
  std::string line;
  bool in_map = false;
  std::vector<std::string> rows;
  while (std::getline(in, line)) {
    if (!in_map) {
      std::string t = trim(line);
      if (t.empty()) continue;
      std::size_t colon = t.find(':');
      if (colon == std::string::npos) fail(origin, "expected 'key: value' before map, got '" + t + "'");
      std::string key = trim(t.substr(0, colon));
      std::string value = trim(t.substr(colon + 1));
      if (key == "map") {
        in_map = true;
      } else if (key == "name") {
        sc.name = value;
      } else if (key == "seed") {
        sc.seed = std::stoull(value);
      } else if (key == "cell_size") {
        sc.cell_size = std::stod(value);
      } else if (key == "heading_deg") {
        sc.heading_deg = std::stod(value);
      } else if (key == "target_category") {
        sc.target.category = value;
      } else if (key == "cue") {
        sc.cues.push_back(value);
      } else {
        fail(origin, "unknown header key '" + key + "'");
      }
    } else {
      // Map rows are taken verbatim apart from trailing CR/whitespace.
      std::string row = line;
      while (!row.empty() && (row.back() == '\r' || row.back() == ' ' || row.back() == '\t')) {
        row.pop_back();
      }
      if (row.empty()) break;
      rows.push_back(row);
    }
  }
  if (rows.empty()) fail(origin, "missing map section");
  const std::size_t n = rows.size();
  for (const auto& r : rows) {
    if (r.size() != rows.front().size()) fail(origin, "ragged map rows");
  }
  if (rows.front().size() != n) fail(origin, "map must be square");

  sc.grid = OccupancyGrid(static_cast<int>(n));
  int starts = 0, targets = 0;
  for (int y = 0; y < static_cast<int>(n); ++y) {
    for (int x = 0; x < static_cast<int>(n); ++x) {
      char ch = rows[y][x];
      switch (ch) {
        case '#':
          sc.grid.set(x, y, true);
          break;
        case '.':
          break;
        case 'S':
          ++starts;
          sc.start.x = (x + 0.5) * sc.cell_size;
          sc.start.y = (y + 0.5) * sc.cell_size;
          break;
        case 'T':
          ++targets;
          sc.target.cx = x;
          sc.target.cy = y;
          sc.target.x = (x + 0.5) * sc.cell_size;
          sc.target.y = (y + 0.5) * sc.cell_size;
          break;
        default:
          fail(origin, std::string("invalid map character '") + ch + "'");
      }
    }
  }
  if (starts != 1) fail(origin, "map must contain exactly one 'S'");
  if (targets != 1) fail(origin, "map must contain exactly one 'T'");
  for (int i = 0; i < static_cast<int>(n); ++i) {
    if (!sc.grid.occupied(i, 0) || !sc.grid.occupied(i, static_cast<int>(n) - 1) ||
        !sc.grid.occupied(0, i) || !sc.grid.occupied(static_cast<int>(n) - 1, i)) {
      fail(origin, "map border must be fully occupied");
    }
  }
  sc.start.heading = wrap_angle(deg_to_rad(sc.heading_deg));
  if (sc.target.category.empty()) sc.target.category = "target";
  return sc;
}

Scenario Scenario::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("scenario: cannot open '" + path + "'");
  return parse(in, path);
}

std::string Scenario::to_text() const {
  std::ostringstream out;
  out << "name: " << name << "\n";
  out << "seed: " << seed << "\n";
  out << "cell_size: " << cell_size << "\n";
  out << "heading_deg: " << heading_deg << "\n";
  out << "target_category: " << target.category << "\n";
  for (const auto& c : cues) out << "cue: " << c << "\n";
  out << "map:\n";
  const int scx = static_cast<int>(start.x / cell_size);
  const int scy = static_cast<int>(start.y / cell_size);
  for (int y = 0; y < grid.size(); ++y) {
    for (int x = 0; x < grid.size(); ++x) {
      char ch = grid.occupied(x, y) ? '#' : '.';
      if (x == scx && y == scy) ch = 'S';
      if (x == target.cx && y == target.cy) ch = 'T';
      out << ch;
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace dscd
