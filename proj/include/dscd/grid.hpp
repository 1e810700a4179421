#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dscd/geometry.hpp"

namespace dscd {

// Square occupancy bitmap. Out-of-bounds queries read as occupied.
class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  explicit OccupancyGrid(int size, bool occupied = false)
      : size_(size), cells_(static_cast<std::size_t>(size) * size, occupied ? 1 : 0) {}

  int size() const { return size_; }

  bool occupied(int x, int y) const {
    if (x < 0 || y < 0 || x >= size_ || y >= size_) return true;
    return cells_[static_cast<std::size_t>(y) * size_ + x] != 0;
  }

  void set(int x, int y, bool occ) {
    cells_[static_cast<std::size_t>(y) * size_ + x] = occ ? 1 : 0;
  }

  int index(int x, int y) const { return y * size_ + x; }

  // Occupancy dilated by `radius_cells` (Chebyshev); used for motion clearance.
  OccupancyGrid inflate(int radius_cells) const;

  bool operator==(const OccupancyGrid&) const = default;

 private:
  int size_ = 0;
  std::vector<std::uint8_t> cells_;
};

// Environment parameters. Defaults follow the harness conventions:
// 131° field of view, forward range [0.4, 1.5] m, 60 rotation bins,
// 0.5 m success radius, 40-step budget, 0.17 m body radius.
struct GridConfig {
  int map_size = 64;            // cells per side
  double cell_size = 0.25;      // meters per cell
  double voxel_ray_size = 7.0;  // visibility-footprint divisor
  double fov = 2.2863;          // radians (131°)
  double max_vis_range = 5.0;   // meters
  int n_candidates = 8;         // requested per step
  double forward_min = 0.4;     // meters
  double forward_max = 1.5;     // meters
  int rotation_bins = 60;
  double success_radius = 0.5;  // meters
  int max_steps = 40;
  double body_radius = 0.17;    // meters; 0 disables clearance inflation

  void validate() const;  // throws std::invalid_argument

  bool operator==(const GridConfig&) const = default;
};

struct TargetSpec {
  double x = 0.0;
  double y = 0.0;
  int cx = 0;
  int cy = 0;
  std::string category;

  bool operator==(const TargetSpec&) const = default;
};

// A navigation episode definition loaded from a scenario file:
// key-value header plus a square ASCII map ('#' occupied, '.' free,
// 'S' start, 'T' target).
struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  double cell_size = 0.25;
  double heading_deg = 0.0;
  std::vector<std::string> cues;  // optional evidence cues, carried opaquely
  OccupancyGrid grid;
  Pose start;
  TargetSpec target;

  static Scenario parse(std::istream& in, const std::string& origin = "<stream>");
  static Scenario load(const std::string& path);
  std::string to_text() const;
};

}  // namespace dscd
