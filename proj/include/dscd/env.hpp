#pragma once

#include <cstdint>
#include <vector>

#include "dscd/geometry.hpp"
#include "dscd/grid.hpp"

namespace dscd {

// Cells observed at one step, as sorted grid-cell indices (y * size + x).
// Always contains the agent's own cell.
struct VisibilityFootprint {
  int step = 0;
  std::vector<int> cells;

  bool operator==(const VisibilityFootprint&) const = default;
};

struct StepOutcome {
  Pose pose;
  bool collision = false;
  double moved = 0.0;  // meters actually traveled
};

// Deterministic 2D simulator over one scenario. The motion/candidate kernel
// runs on the body-inflated grid; visibility and geodesics use the raw grid.
class Env {
 public:
  Env(const Scenario& scenario, const GridConfig& cfg);

  const Scenario& scenario() const { return scenario_; }
  const GridConfig& config() const { return cfg_; }
  const OccupancyGrid& motion_grid() const { return inflated_; }

  // Free distance along a ray before entering an occupied cell of the motion
  // grid, capped at max_dist. The heading is absolute (world frame).
  double ray_clearance(double px, double py, double heading, double max_dist) const;

  // Geometry-pruned polar candidates: yaw values on the rotation-bin lattice
  // inside the field of view. Strides cover [forward_min,
  // min(forward_max, 0.9 * clearance)] via a seeded low-discrepancy profile
  // over the bins; bins whose cap falls below forward_min are pruned. At
  // most n_candidates, evenly spread over the feasible bins, ascending yaw.
  std::vector<PolarAction> generate_candidates(const Pose& pose) const;

  VisibilityFootprint visible_cells(const Pose& pose, int step) const;

  // Full-FoV variant of the visibility kernel between two cells (range +
  // line of sight, symmetric in its arguments).
  bool cell_visible_full(int ax, int ay, int bx, int by) const;

  bool target_visible(const Pose& pose) const;

  // Markovian transition: rotate by theta, then advance r along the new
  // heading; truncates at 0.9 * clearance with a collision flag if blocked.
  StepOutcome step(const Pose& pose, const PolarAction& action) const;

  // True iff within success_radius of the target and the target cell is
  // inside the current visibility footprint.
  bool check_success(const Pose& pose) const;

  double geodesic_start_to_target() const;

  // Effective visibility radius in cells: calibrated so an unobstructed
  // footprint covers ~pi * (map_size / voxel_ray_size)^2 cells, capped by
  // max_vis_range.
  double vis_radius_cells() const { return vis_radius_cells_; }

  PolarAction recovery_rotation() const;  // pure rotation, +2 bins

 private:
  Scenario scenario_;
  GridConfig cfg_;
  OccupancyGrid inflated_;
  double vis_radius_cells_ = 0.0;

  bool line_of_sight(int ax, int ay, int bx, int by) const;
};

// Shortest free-space path between two cells on the raw grid, 8-connected
// with sqrt(2) diagonals (no corner cutting), scaled by cell_size.
// Returns +infinity when disconnected; throws std::domain_error when an
// endpoint cell is occupied.
double geodesic_distance(const OccupancyGrid& grid, double cell_size, int ax, int ay, int bx,
                         int by);

// Deterministic hash-based uniform in [0, 1).
double hash01(std::uint64_t a, std::uint64_t b, std::uint64_t c);

}  // namespace dscd
