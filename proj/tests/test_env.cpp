#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "dscd/env.hpp"

using namespace dscd;

namespace {

Scenario scenario_from(const std::string& text) {
  std::istringstream in(text);
  return Scenario::parse(in, "inline");
}

// Open 64x64 room, agent in the middle facing east, target far east.
Scenario open_room() {
  std::string text = "name: open\nseed: 1\ncell_size: 0.25\nheading_deg: 0\nmap:\n";
  for (int y = 0; y < 64; ++y) {
    std::string row(64, '.');
    if (y == 0 || y == 63) row.assign(64, '#');
    row[0] = row[63] = '#';
    if (y == 32) row[32] = 'S';
    if (y == 31) row[60] = 'T';
    text += row + "\n";
  }
  return scenario_from(text);
}

GridConfig no_body() {
  GridConfig cfg;
  cfg.body_radius = 0.0;
  return cfg;
}

// Independent fine-stepping ray marcher (oracle for DDA clearance).
double ray_oracle(const OccupancyGrid& grid, double cell, double px, double py, double heading,
                  double max_dist) {
  const double step = 1e-4;
  const double dx = std::cos(heading), dy = std::sin(heading);
  for (double t = step; t <= max_dist; t += step) {
    const int cx = static_cast<int>(std::floor((px + t * dx) / cell));
    const int cy = static_cast<int>(std::floor((py + t * dy) / cell));
    if (grid.occupied(cx, cy)) return t;
  }
  return max_dist;
}

}  // namespace

TEST_CASE("open room: candidate count, fov restriction, forward range") {
  Env env(open_room(), no_body());
  const auto actions = env.generate_candidates(env.scenario().start);
  REQUIRE(actions.size() == 8);
  for (const auto& a : actions) {
    CHECK(std::abs(a.theta) <= deg_to_rad(65.5));
    CHECK(a.r >= 0.4);
    CHECK(a.r <= 1.5);
  }
  for (std::size_t i = 1; i < actions.size(); ++i) {
    CHECK(actions[i - 1].theta < actions[i].theta);  // ascending yaw
  }
}

TEST_CASE("wall ahead prunes the blocked bin") {
  // Wall column 0.375 m in front of the agent: 0.9 * clearance < 0.4.
  std::string text = "name: wall\nseed: 1\ncell_size: 0.25\nheading_deg: 0\nmap:\n";
  for (int y = 0; y < 16; ++y) {
    std::string row(16, '.');
    if (y == 0 || y == 15) row.assign(16, '#');
    row[0] = row[15] = '#';
    if (y > 0 && y < 15) row[4] = '#';  // wall column at x = 1.0 m
    if (y == 8) {
      row[2] = 'S';  // center at x = 0.625 -> clearance 0.375 along heading 0
      row[6] = 'T';
    }
    text += row + "\n";
  }
  Scenario sc = scenario_from(text);
  Env env(sc, no_body());
  const auto actions = env.generate_candidates(sc.start);
  const double bin = 2.0 * kPi / env.config().rotation_bins;
  for (const auto& a : actions) {
    CHECK(std::abs(a.theta) > bin / 2.0);  // the theta = 0 bin cannot survive
    // agreement with the fine-ray oracle on feasibility
    const double clr = ray_oracle(env.motion_grid(), 0.25, sc.start.x, sc.start.y,
                                  wrap_angle(sc.start.heading + a.theta), 5.0);
    CHECK(0.9 * clr >= 0.4 - 1e-3);
  }
}

TEST_CASE("one-cell corridor restricts candidates to the axis") {
  std::string text = "name: corridor\nseed: 1\ncell_size: 0.125\nheading_deg: 0\nmap:\n";
  for (int y = 0; y < 32; ++y) {
    std::string row(32, '#');
    if (y == 16) {
      for (int x = 1; x < 31; ++x) row[x] = '.';
      row[3] = 'S';
      row[28] = 'T';
    }
    text += row + "\n";
  }
  Scenario sc = scenario_from(text);
  Env env(sc, no_body());
  const auto actions = env.generate_candidates(sc.start);
  REQUIRE(!actions.empty());

  // Derive the surviving bins from the independent ray oracle and compare.
  const double bin = 2.0 * kPi / env.config().rotation_bins;
  std::set<int> oracle_bins;
  for (int j = -10; j <= 10; ++j) {
    const double clr =
        ray_oracle(env.motion_grid(), 0.125, sc.start.x, sc.start.y,
                   wrap_angle(sc.start.heading + j * bin), env.config().max_vis_range);
    if (std::min(env.config().forward_max, 0.9 * clr) >= env.config().forward_min) {
      oracle_bins.insert(j);
    }
  }
  std::set<int> got_bins;
  for (const auto& a : actions) got_bins.insert(static_cast<int>(std::lround(a.theta / bin)));
  CHECK(got_bins == oracle_bins);
  for (int j : got_bins) CHECK(std::abs(j) <= 1);  // axis plus at most one 6-degree bin
}

TEST_CASE("visibility: sealed cell sees only itself") {
  std::string text = "name: sealed\nseed: 1\ncell_size: 0.25\nheading_deg: 0\nmap:\n";
  for (int y = 0; y < 8; ++y) {
    std::string row(8, '#');
    if (y == 3) row[3] = 'S';
    if (y == 5) row[5] = 'T';  // sealed elsewhere
    text += row + "\n";
  }
  Scenario sc = scenario_from(text);
  Env env(sc, no_body());
  const auto fp = env.visible_cells(sc.start, 1);
  REQUIRE(fp.cells.size() == 1);
  CHECK(fp.cells[0] == sc.grid.index(3, 3));
}

TEST_CASE("visibility: open-space footprint matches the area calibration") {
  Env env(open_room(), no_body());
  const auto fp = env.visible_cells(env.scenario().start, 1);
  const auto& g = env.config();
  const double expected = kPi * (g.map_size / g.voxel_ray_size) * (g.map_size / g.voxel_ray_size);
  CHECK(fp.cells.size() > 0.9 * expected);
  CHECK(fp.cells.size() < 1.1 * expected);
}

TEST_CASE("visibility: occlusion only shrinks the footprint") {
  Scenario open = open_room();
  Env env_open(open, no_body());
  const auto base = env_open.visible_cells(open.start, 1);

  Scenario blocked = open;
  for (int y = 28; y <= 36; ++y) blocked.grid.set(36, y, true);  // wall slab ahead
  Env env_blocked(blocked, no_body());
  const auto fp = env_blocked.visible_cells(blocked.start, 1);

  CHECK(fp.cells.size() < base.cells.size());
  std::set<int> base_set(base.cells.begin(), base.cells.end());
  for (int cell : fp.cells) {
    if (blocked.grid.occupied(cell % 64, cell / 64)) continue;
    CHECK(base_set.count(cell) == 1);
  }
}

TEST_CASE("visibility symmetry of the full-fov kernel") {
  Scenario sc = open_room();
  for (int y = 20; y <= 40; ++y) sc.grid.set(40, y, true);
  Env env(sc, no_body());
  std::mt19937_64 rng(11);
  for (int i = 0; i < 400; ++i) {
    const int ax = 1 + static_cast<int>(rng() % 62), ay = 1 + static_cast<int>(rng() % 62);
    const int bx = 1 + static_cast<int>(rng() % 62), by = 1 + static_cast<int>(rng() % 62);
    CHECK(env.cell_visible_full(ax, ay, bx, by) == env.cell_visible_full(bx, by, ax, ay));
  }
}

TEST_CASE("step: free motion, truncation, pure rotation") {
  std::string text = "name: stepworld\nseed: 1\ncell_size: 0.25\nheading_deg: 0\nmap:\n";
  for (int y = 0; y < 32; ++y) {
    std::string row(32, '.');
    if (y == 0 || y == 31) row.assign(32, '#');
    row[0] = row[31] = '#';
    if (y == 16) {
      row[2] = 'S';
      row[20] = 'T';
    }
    text += row + "\n";
  }
  Scenario sc = scenario_from(text);
  Env env(sc, no_body());

  SUBCASE("open advance") {
    const auto out = env.step(sc.start, {1.0, 0.0});
    CHECK(!out.collision);
    CHECK(out.moved == 1.0);
    CHECK(out.pose.x == doctest::Approx(sc.start.x + 1.0));
    CHECK(out.pose.y == doctest::Approx(sc.start.y));
  }
  SUBCASE("truncation at 0.9 x clearance") {
    // Wall column at x = 24 -> boundary at 6.0 m; stand 0.5 m west of it.
    Scenario walled = sc;
    for (int y = 1; y < 31; ++y) walled.grid.set(24, y, true);
    Env env2(walled, no_body());
    const Pose pose{5.5, sc.start.y, 0.0};
    const auto out = env2.step(pose, {1.0, 0.0});
    CHECK(out.collision);
    CHECK(out.moved == doctest::Approx(0.45).epsilon(1e-12));
    CHECK(out.pose.x == doctest::Approx(5.95).epsilon(1e-12));
  }
  SUBCASE("pure rotation") {
    const auto out = env.step(sc.start, {0.0, kPi / 2.0});
    CHECK(!out.collision);
    CHECK(out.moved == 0.0);
    CHECK(out.pose.x == sc.start.x);
    CHECK(out.pose.y == sc.start.y);
    CHECK(out.pose.heading == doctest::Approx(kPi / 2.0));
  }
}

TEST_CASE("generated candidates never collide when executed") {
  Scenario sc = open_room();
  for (int y = 10; y <= 50; ++y) sc.grid.set(44, y, true);
  for (int x = 20; x <= 28; ++x) sc.grid.set(x, 24, true);
  GridConfig cfg;  // default body radius applies
  Env env(sc, cfg);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pos(2.0, 13.0), ang(-kPi, kPi);
  int checked = 0;
  while (checked < 300) {
    const Pose pose{pos(rng), pos(rng), ang(rng)};
    const int cx = static_cast<int>(pose.x / 0.25), cy = static_cast<int>(pose.y / 0.25);
    if (env.motion_grid().occupied(cx, cy)) continue;
    for (const auto& a : env.generate_candidates(pose)) {
      CHECK(!env.step(pose, a).collision);
      ++checked;
    }
  }
}

TEST_CASE("check_success requires both radius and visibility") {
  std::string text = "name: success\nseed: 1\ncell_size: 0.25\nheading_deg: 0\nmap:\n";
  for (int y = 0; y < 16; ++y) {
    std::string row(16, '.');
    if (y == 0 || y == 15) row.assign(16, '#');
    row[0] = row[15] = '#';
    if (y == 8) {
      row[2] = 'S';
      row[8] = 'T';  // target center at (2.125, 2.125)
    }
    text += row + "\n";
  }
  Scenario sc = scenario_from(text);
  Env env(sc, no_body());
  const double ty = sc.target.y;

  CHECK(env.check_success({sc.target.x - 0.4, ty, 0.0}));       // 0.4 m, facing it
  CHECK_FALSE(env.check_success({sc.target.x - 0.6, ty, 0.0}));  // radius exceeded

  Scenario waller = sc;
  waller.grid.set(7, 8, true);  // wall cell between
  Env env2(waller, no_body());
  CHECK_FALSE(env2.check_success({sc.target.x - 0.4, ty, 0.0}));
}

namespace {

// Label-correcting sweep oracle with the same exact length representation.
double geodesic_oracle(const OccupancyGrid& grid, double cell_size, int ax, int ay, int bx,
                       int by) {
  const int n = grid.size();
  struct L {
    long long s = -1, d = 0;
  };
  auto less_len = [](long long a1, long long b1, long long a2, long long b2) {
    const long long ds = a1 - a2, dd = b1 - b2;
    if (dd == 0) return ds < 0;
    if (ds == 0) return dd < 0;
    if (ds < 0 && dd < 0) return true;
    if (ds > 0 && dd > 0) return false;
    if (ds > 0) return ds * ds < 2 * dd * dd;
    return 2 * dd * dd < ds * ds;
  };
  std::vector<L> dist(static_cast<std::size_t>(n) * n);
  dist[ay * n + ax] = {0, 0};
  bool changed = true;
  while (changed) {
    changed = false;
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        const L& cur = dist[y * n + x];
        if (cur.s < 0) continue;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const int nx = x + dx, ny = y + dy;
            if (grid.occupied(nx, ny)) continue;
            const bool diag = dx != 0 && dy != 0;
            if (diag && (grid.occupied(nx, y) || grid.occupied(x, ny))) continue;
            const long long ns = cur.s + (diag ? 0 : 1), nd = cur.d + (diag ? 1 : 0);
            L& target = dist[ny * n + nx];
            if (target.s < 0 || less_len(ns, nd, target.s, target.d)) {
              target = {ns, nd};
              changed = true;
            }
          }
        }
      }
    }
  }
  const L& end = dist[by * n + bx];
  if (end.s < 0) return std::numeric_limits<double>::infinity();
  return (static_cast<double>(end.s) + static_cast<double>(end.d) * std::sqrt(2.0)) * cell_size;
}

}  // namespace

TEST_CASE("geodesic distance basics") {
  OccupancyGrid grid(16);
  for (int i = 0; i < 16; ++i) {
    grid.set(i, 0, true);
    grid.set(i, 15, true);
    grid.set(0, i, true);
    grid.set(15, i, true);
  }
  CHECK(geodesic_distance(grid, 0.25, 5, 5, 5, 5) == 0.0);
  CHECK(geodesic_distance(grid, 0.25, 2, 8, 12, 8) == doctest::Approx(2.5));  // 10 straight steps

  OccupancyGrid blocked = grid;
  for (int y = 1; y < 15; ++y) blocked.set(8, y, true);
  CHECK(geodesic_distance(blocked, 0.25, 2, 8, 12, 8) ==
        std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(geodesic_distance(blocked, 0.25, 8, 3, 2, 8), std::domain_error);
}

TEST_CASE("geodesic equals the sweep oracle on an L-shaped detour") {
  OccupancyGrid grid(24);
  for (int i = 0; i < 24; ++i) {
    grid.set(i, 0, true);
    grid.set(i, 23, true);
    grid.set(0, i, true);
    grid.set(23, i, true);
  }
  for (int y = 1; y <= 16; ++y) grid.set(12, y, true);
  const double got = geodesic_distance(grid, 0.25, 4, 4, 20, 4);
  const double want = geodesic_oracle(grid, 0.25, 4, 4, 20, 4);
  CHECK(got == want);  // bit-exact by construction
}

TEST_CASE("geodesic triangle inequality on sampled triples") {
  std::mt19937_64 rng(23);
  OccupancyGrid grid(32);
  for (int i = 0; i < 32; ++i) {
    grid.set(i, 0, true);
    grid.set(i, 31, true);
    grid.set(0, i, true);
    grid.set(31, i, true);
  }
  for (int k = 0; k < 120; ++k) {
    grid.set(1 + static_cast<int>(rng() % 30), 1 + static_cast<int>(rng() % 30), true);
  }
  auto free_cell = [&](int& x, int& y) {
    do {
      x = 1 + static_cast<int>(rng() % 30);
      y = 1 + static_cast<int>(rng() % 30);
    } while (grid.occupied(x, y));
  };
  for (int t = 0; t < 40; ++t) {
    int ax, ay, bx, by, cx, cy;
    free_cell(ax, ay);
    free_cell(bx, by);
    free_cell(cx, cy);
    const double ab = geodesic_distance(grid, 0.25, ax, ay, bx, by);
    const double bc = geodesic_distance(grid, 0.25, bx, by, cx, cy);
    const double ac = geodesic_distance(grid, 0.25, ax, ay, cx, cy);
    if (std::isfinite(ab) && std::isfinite(bc)) CHECK(ac <= ab + bc + 1e-9);
  }
}

TEST_CASE("environment determinism") {
  Scenario sc = open_room();
  GridConfig cfg;
  Env a(sc, cfg), b(sc, cfg);
  Pose pa = sc.start, pb = sc.start;
  for (int step = 1; step <= 15; ++step) {
    const auto ca = a.generate_candidates(pa);
    const auto cb = b.generate_candidates(pb);
    REQUIRE(ca.size() == cb.size());
    for (std::size_t i = 0; i < ca.size(); ++i) CHECK(ca[i] == cb[i]);
    CHECK(a.visible_cells(pa, step).cells == b.visible_cells(pb, step).cells);
    if (ca.empty()) break;
    const auto oa = a.step(pa, ca[step % ca.size()]);
    const auto ob = b.step(pb, cb[step % cb.size()]);
    CHECK(oa.pose == ob.pose);
    CHECK(oa.moved == ob.moved);
    pa = oa.pose;
    pb = ob.pose;
  }
}

TEST_CASE("scenario parser rejects malformed maps") {
  auto parse = [](const std::string& body) {
    std::istringstream in(body);
    return Scenario::parse(in, "bad");
  };
  CHECK_THROWS(parse("map:\n###\n#S#\n###\n"));                       // no target
  CHECK_THROWS(parse("map:\n####\n#ST#\n####\n"));                    // not square
  CHECK_THROWS(parse("map:\n####\n#S.#\n#.T#\n###\n"));               // ragged rows
  CHECK_THROWS(parse("map:\n####\n#S.#\n#.T.\n####\n"));              // open border
  CHECK_THROWS(parse("bogus_key: 1\nmap:\n####\n#S##\n##T#\n####\n"));  // unknown key
  CHECK_THROWS(parse("map:\n####\n#SX#\n##T#\n####\n"));              // bad character
}

TEST_CASE("scenario text round-trips through the writer") {
  Scenario sc = open_room();
  const std::string text = sc.to_text();
  std::istringstream in(text);
  const Scenario again = Scenario::parse(in, "roundtrip");
  CHECK(again.grid == sc.grid);
  CHECK(again.start.x == sc.start.x);
  CHECK(again.start.y == sc.start.y);
  CHECK(again.target.cx == sc.target.cx);
  CHECK(again.target.cy == sc.target.cy);
}
