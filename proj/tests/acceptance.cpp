// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria run against the pinned scenario suite and the committed
// debate fixtures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dscd/debate.hpp"
#include "dscd/execution.hpp"
#include "dscd/metrics.hpp"
#include "dscd/policies.hpp"
#include "dscd/runner.hpp"

using namespace dscd;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;
std::vector<std::string> g_notes;

void note(const std::string& s) { g_notes.push_back(s); }

#define REQUIRE_OR_FAIL(cond, msg)                                  \
  do {                                                              \
    if (!(cond)) {                                                  \
      note(std::string("    check failed: ") + (msg));              \
      ok = false;                                                   \
    }                                                               \
  } while (0)

void run_criterion(int index, const std::string& title, double budget_s,
                   const std::function<bool()>& body) {
  g_notes.clear();
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = false;
  std::string error;
  try {
    ok = body();
  } catch (const std::exception& e) {
    error = e.what();
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (elapsed > budget_s) {
    note("    exceeded time budget: " + std::to_string(elapsed) + " s > " +
         std::to_string(budget_s) + " s");
    ok = false;
  }
  if (!error.empty()) {
    note("    exception: " + error);
    ok = false;
  }
  std::printf("[%s] criterion %d: %s (%.2f s)\n", ok ? "PASS" : "FAIL", index, title.c_str(),
              elapsed);
  for (const auto& n : g_notes) std::printf("%s\n", n.c_str());
  if (!ok) ++g_failures;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// ---------------------------------------------------------------------------
// criterion bodies

bool mode_truth_table() {
  bool ok = true;
  ExecutionConfig cfg;
  const double a = cfg.alpha;
  const double eps = 1e-6;
  const double mags[] = {0.0, a - eps, a, a + eps, kPi};
  for (int cons = 0; cons <= 1; ++cons) {
    for (double mag : mags) {
      for (double sign : {1.0, -1.0}) {
        const ExecMode want =
            (cons == 0 && mag <= a) ? ExecMode::B : ExecMode::A;
        const ExecMode got = select_mode(cons, sign * mag, cfg);
        REQUIRE_OR_FAIL(got == want, "mode mismatch at cons=" + std::to_string(cons) +
                                         " |dtheta|=" + std::to_string(mag));
      }
    }
  }
  return ok;
}

bool soft_compromise_numerics() {
  bool ok = true;
  ExecutionConfig cfg;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  std::uniform_real_distribution<double> radius(0.0, 3.0);
  int done = 0;
  while (done < 10000) {
    const double theta_star = angle(rng);
    // half the cases straddle the +-pi seam
    const double base = (done % 2 == 0) ? theta_star : kPi - 0.05 * std::abs(angle(rng));
    const double delta = std::uniform_real_distribution<double>(-cfg.alpha, cfg.alpha)(rng);
    const double theta_alt = wrap_angle(base + delta);
    if (std::abs(wrap_angle(theta_alt - base)) > cfg.alpha) continue;
    const PolarAction a_star{radius(rng), base};
    const auto exec = soft_compromise(a_star, theta_alt, cfg);
    ++done;
    const double want_r = cfg.beta_r * a_star.r;
    const double want_theta =
        wrap_angle(base + cfg.beta_theta * wrap_angle(theta_alt - base));
    if (std::abs(exec.r - want_r) > 1e-9 || std::abs(exec.theta - want_theta) > 1e-9) {
      REQUIRE_OR_FAIL(false, "compromise numerics diverged");
      break;
    }
  }
  return ok;
}

bool protocol_conformance(const std::string& fixture_dir) {
  bool ok = true;
  ContextPacket ctx;
  {
    std::vector<PolarAction> actions;
    for (int i = 0; i < 4; ++i) actions.push_back({1.0, -0.5 + 0.25 * i});
    ctx.goal_text = "target";
    ctx.cards = package_candidates(actions, false);
  }
  struct Case {
    const char* file;
    std::size_t rounds;
    bool consensus;
  };
  const Case cases[] = {{"debate_agree_r1.jsonl", 1, true},
                        {"debate_agree_r2.jsonl", 2, true},
                        {"debate_counter_r3.jsonl", 3, false}};
  for (const auto& c : cases) {
    const std::string path = fixture_dir + "/" + c.file;
    ScriptedPolicy tsu(Role::TSU, path);
    ScriptedPolicy sib(Role::SIB, path);
    const DebateTrace trace = run_debate(ctx, EnvView{}, tsu, sib, 3);
    REQUIRE_OR_FAIL(trace.rounds.size() == c.rounds,
                    std::string(c.file) + ": unexpected round count");
    REQUIRE_OR_FAIL(trace.consensus == c.consensus, std::string(c.file) + ": consensus flag");
    REQUIRE_OR_FAIL(to_fixture_jsonl(trace) == slurp(path),
                    std::string(c.file) + ": serialization not byte-identical");
  }
  return ok;
}

EpisodeStats synthetic_episode(std::mt19937_64& rng, const std::string& name, int rounds_max) {
  EpisodeStats ep;
  ep.name = name;
  ep.rounds_max = rounds_max;
  ep.map_size = 24 + static_cast<int>(rng() % 16);
  ep.open_footprint_cells = 60.0 + static_cast<double>(rng() % 100);
  ep.outcome.success = static_cast<int>(rng() % 2);
  ep.outcome.geodesic = 0.5 + static_cast<double>(rng() % 100) / 7.0;
  ep.outcome.path_length = 0.5 + static_cast<double>(rng() % 150) / 7.0;
  const int steps = 1 + static_cast<int>(rng() % 7);
  ep.outcome.steps = steps;
  for (int s = 0; s < steps; ++s) {
    StepStats st;
    const int rounds = 1 + static_cast<int>(rng() % rounds_max);
    for (int k = 0; k < rounds; ++k) {
      RoundStat r;
      r.tsu_id = "c" + std::to_string(rng() % 4);
      r.agreed = (k == rounds - 1) && (rng() % 2 == 0);
      r.sib_id = r.agreed ? r.tsu_id : "c" + std::to_string(rng() % 4);
      st.rounds.push_back(r);
    }
    st.final_disagreement = !st.rounds.back().agreed;
    st.final_tsu_id = st.rounds.back().tsu_id;
    st.chosen_id = "c" + std::to_string(rng() % 4);
    st.micro_probe = rng() % 4 == 0;
    st.has_decision = rng() % 8 != 0;
    ep.steps.push_back(st);

    std::set<int> cells;
    const int n = 10 + static_cast<int>(rng() % 50);
    for (int i = 0; i < n; ++i) cells.insert(static_cast<int>(rng() % 600));
    ep.footprints.emplace_back(cells.begin(), cells.end());
    ep.agent_cells.push_back(static_cast<int>(rng() % (ep.map_size * ep.map_size)));
  }
  return ep;
}

bool metric_oracle_equivalence() {
  bool ok = true;
  std::mt19937_64 rng(777);
  for (int suite_idx = 0; suite_idx < 200 && ok; ++suite_idx) {
    MetricsConfig cfg;
    cfg.tau = 4.0 + static_cast<double>(rng() % 30);
    std::vector<EpisodeStats> suite;
    const int n = 1 + static_cast<int>(rng() % 8);
    const int rounds_max = 2 + static_cast<int>(rng() % 3);
    for (int i = 0; i < n; ++i) {
      suite.push_back(synthetic_episode(rng, "ep" + std::to_string(i), rounds_max));
    }
    const MetricsReport rep = evaluate_suite(suite, cfg);

    // Brute-force recount straight from the raw records.
    long s_num = 0;
    double spl_sum = 0.0;
    long dis = 0, rounds = 0, arb = 0, jor_hit = 0, probe = 0;
    double aori_sum = 0.0;
    int aori_n = 0;
    for (const auto& ep : suite) {
      s_num += ep.outcome.success;
      if (ep.outcome.success == 1) {
        spl_sum += ep.outcome.geodesic / std::max(ep.outcome.path_length, ep.outcome.geodesic);
      }
      for (const auto& st : ep.steps) {
        for (const auto& r : st.rounds) {
          ++rounds;
          if (r.tsu_id != r.sib_id) ++dis;
        }
        if (static_cast<int>(st.rounds.size()) == ep.rounds_max && st.final_disagreement &&
            st.has_decision) {
          ++arb;
          if (st.chosen_id != st.final_tsu_id) ++jor_hit;
          if (st.micro_probe) ++probe;
        }
      }
      if (!ep.footprints.empty()) {
        // direct substitution of the redundancy formulas
        const int T = static_cast<int>(ep.footprints.size());
        double r_overlap = 0.0;
        for (int t = 2; t <= T; ++t) {
          int hits = 0;
          for (int i = 1; i < t; ++i) {
            std::set<int> a(ep.footprints[t - 1].begin(), ep.footprints[t - 1].end());
            int inter = 0;
            for (int c : ep.footprints[i - 1]) inter += static_cast<int>(a.count(c));
            if (inter >= *cfg.tau) ++hits;
          }
          r_overlap += static_cast<double>(hits) / (t - 1);
        }
        if (T >= 2) r_overlap /= (T - 1);
        std::map<int, int> counts;
        std::set<int> acc;
        double d_norm = 0.0;
        for (int t = 1; t <= T; ++t) {
          for (int c : ep.footprints[t - 1]) {
            acc.insert(c);
            counts[c] += 1;
          }
          int n_obs = 0;
          for (const auto& [c, k] : counts) {
            if (k >= cfg.revisit_min) ++n_obs;
          }
          const double lambda =
              cfg.eta * (static_cast<double>(acc.size()) /
                         (static_cast<double>(ep.map_size) * ep.map_size)) *
              t;
          d_norm += lambda <= 0.0 ? 1.0 : std::min(1.0, n_obs / lambda);
        }
        d_norm /= T;
        aori_sum += 1.0 - (cfg.w_c * (1.0 - r_overlap) * (1.0 - r_overlap) +
                           cfg.w_d * (1.0 - d_norm));
        ++aori_n;
      }
    }

    const double sr_want = static_cast<double>(s_num) / n;
    const double spl_want = spl_sum / n;
    REQUIRE_OR_FAIL(*rep.sr == sr_want, "SR recount mismatch");
    REQUIRE_OR_FAIL(*rep.spl == spl_want, "SPL recount mismatch");
    REQUIRE_OR_FAIL(*rep.spl <= *rep.sr + 1e-15, "SPL exceeded SR");
    if (rounds == 0) {
      REQUIRE_OR_FAIL(!rep.dr, "DR should be undefined");
    } else {
      REQUIRE_OR_FAIL(*rep.dr == static_cast<double>(dis) / rounds, "DR recount mismatch");
    }
    if (arb == 0) {
      REQUIRE_OR_FAIL(!rep.jor && !rep.mptr, "JOR/MPTR should be undefined");
    } else {
      REQUIRE_OR_FAIL(*rep.jor == static_cast<double>(jor_hit) / arb, "JOR recount mismatch");
      REQUIRE_OR_FAIL(*rep.mptr == static_cast<double>(probe) / arb, "MPTR recount mismatch");
    }
    if (aori_n > 0) {
      REQUIRE_OR_FAIL(std::abs(*rep.aori - aori_sum / aori_n) <= 1e-12,
                      "AORI substitution mismatch");
    }
  }
  return ok;
}

bool aori_directional_fixtures() {
  bool ok = true;
  MetricsConfig mcfg;
  GridConfig gcfg;

  // Stationary agent: the same pose for 12 steps in an open room.
  std::string open_text = "name: open\nseed: 1\ncell_size: 0.25\nheading_deg: 0\nmap:\n";
  for (int y = 0; y < 64; ++y) {
    std::string row(64, '.');
    if (y == 0 || y == 63) row.assign(64, '#');
    row[0] = row[63] = '#';
    if (y == 32) row[32] = 'S';
    if (y == 30) row[50] = 'T';
    open_text += row + "\n";
  }
  std::istringstream open_in(open_text);
  const Scenario open_sc = Scenario::parse(open_in, "open");
  Env open_env(open_sc, gcfg);
  std::vector<std::vector<int>> stationary;
  std::vector<int> agent_cells;
  for (int t = 1; t <= 12; ++t) {
    stationary.push_back(open_env.visible_cells(open_sc.start, t).cells);
    agent_cells.push_back(32 * 64 + 32);
  }
  const double tau = mcfg.resolve_tau(MetricsConfig::open_footprint_cells(open_env.config()));
  const auto st = aori_episode(stationary, agent_cells, tau, mcfg, 64);
  REQUIRE_OR_FAIL(st.aori >= 0.8, "stationary AORI below 0.8: " + std::to_string(st.aori));
  REQUIRE_OR_FAIL(std::abs(st.aori - 0.9666666666666667) <= 1e-9,
                  "stationary AORI moved off the pinned value: " + std::to_string(st.aori));

  // Straight traverse of a long corridor, 1.5 m strides.
  std::string cor_text = "name: corridor\nseed: 1\ncell_size: 0.25\nheading_deg: 0\nmap:\n";
  for (int y = 0; y < 64; ++y) {
    std::string row(64, '#');
    if (y >= 31 && y <= 33) {
      for (int x = 1; x < 63; ++x) row[x] = '.';
    }
    if (y == 32) {
      row[3] = 'S';
      row[60] = 'T';
    }
    cor_text += row + "\n";
  }
  std::istringstream cor_in(cor_text);
  const Scenario cor_sc = Scenario::parse(cor_in, "corridor");
  Env cor_env(cor_sc, gcfg);
  std::vector<std::vector<int>> traverse;
  std::vector<int> cor_cells;
  for (int t = 1; t <= 9; ++t) {
    const Pose pose{cor_sc.start.x + 1.5 * (t - 1), cor_sc.start.y, 0.0};
    traverse.push_back(cor_env.visible_cells(pose, t).cells);
    cor_cells.push_back(32 * 64 + static_cast<int>(pose.x / 0.25));
  }
  const double cor_tau =
      mcfg.resolve_tau(MetricsConfig::open_footprint_cells(cor_env.config()));
  const auto tr = aori_episode(traverse, cor_cells, cor_tau, mcfg, 64);
  REQUIRE_OR_FAIL(tr.aori <= 0.3, "corridor AORI above 0.3: " + std::to_string(tr.aori));
  REQUIRE_OR_FAIL(std::abs(tr.aori - 0.15555555555555556) <= 1e-9,
                  "corridor AORI moved off the pinned value: " + std::to_string(tr.aori));
  return ok;
}

bool geodesic_oracle_equivalence() {
  bool ok = true;
  std::mt19937_64 rng(4242);
  for (int trial = 0; trial < 100 && ok; ++trial) {
    OccupancyGrid grid(64);
    for (int i = 0; i < 64; ++i) {
      grid.set(i, 0, true);
      grid.set(i, 63, true);
      grid.set(0, i, true);
      grid.set(63, i, true);
    }
    for (int y = 1; y < 63; ++y) {
      for (int x = 1; x < 63; ++x) {
        if (rng() % 100 < 25) grid.set(x, y, true);
      }
    }
    auto free_cell = [&](int& x, int& y) {
      do {
        x = 1 + static_cast<int>(rng() % 62);
        y = 1 + static_cast<int>(rng() % 62);
      } while (grid.occupied(x, y));
    };
    int ax, ay, bx, by;
    free_cell(ax, ay);
    free_cell(bx, by);
    const double got = geodesic_distance(grid, 0.25, ax, ay, bx, by);

    // Independent label-correcting sweep with the same exact-length compare.
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
    std::vector<L> dist(64 * 64);
    dist[ay * 64 + ax] = {0, 0};
    bool changed = true;
    while (changed) {
      changed = false;
      for (int y = 1; y < 63; ++y) {
        for (int x = 1; x < 63; ++x) {
          const L cur = dist[y * 64 + x];
          if (cur.s < 0) continue;
          for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              if (dx == 0 && dy == 0) continue;
              const int nx = x + dx, ny = y + dy;
              if (grid.occupied(nx, ny)) continue;
              const bool diag = dx != 0 && dy != 0;
              if (diag && (grid.occupied(nx, y) || grid.occupied(x, ny))) continue;
              const long long ns = cur.s + (diag ? 0 : 1), nd = cur.d + (diag ? 1 : 0);
              L& t = dist[ny * 64 + nx];
              if (t.s < 0 || less_len(ns, nd, t.s, t.d)) {
                t = {ns, nd};
                changed = true;
              }
            }
          }
        }
      }
    }
    const L end = dist[by * 64 + bx];
    const double want =
        end.s < 0 ? std::numeric_limits<double>::infinity()
                  : (static_cast<double>(end.s) + static_cast<double>(end.d) * std::sqrt(2.0)) *
                        0.25;
    const bool same = (std::isinf(got) && std::isinf(want)) || got == want;
    REQUIRE_OR_FAIL(same, "geodesic mismatch on trial " + std::to_string(trial));
  }
  return ok;
}

double sr_of(const MetricsReport& rep) { return rep.sr ? *rep.sr : 0.0; }

bool ablation_trend(const std::vector<Scenario>& suite, const std::string& out_dir) {
  bool ok = true;
  RunConfig base;
  base.parallelism = 8;
  base.output_dir = out_dir + "/ablation";
  const auto rows = run_ablation(base, suite, {"full", "no-probe", "tsu-only", "sib-only"},
                                 "tsu-only");
  std::map<std::string, double> sr;
  for (const auto& row : rows) {
    sr[row.name] = sr_of(row.report);
    note("    " + row.name + ": SR=" + std::to_string(sr_of(row.report)));
  }
  REQUIRE_OR_FAIL(sr["full"] >= sr["no-probe"], "SR(full) < SR(no-probe)");
  REQUIRE_OR_FAIL(sr["no-probe"] >= sr["tsu-only"], "SR(no-probe) < SR(tsu-only)");
  REQUIRE_OR_FAIL(sr["full"] >= sr["sib-only"], "SR(full) < SR(sib-only)");
  const double margin = sr["full"] - std::max(sr["tsu-only"], sr["sib-only"]);
  REQUIRE_OR_FAIL(margin >= 0.10,
                  "single-stance margin " + std::to_string(margin) + " below 0.10");
  return ok;
}

bool rounds_saturation(const std::vector<Scenario>& suite, const std::string& out_dir) {
  bool ok = true;
  RunConfig base;
  base.parallelism = 8;
  base.output_dir = out_dir + "/rounds";
  const auto rows =
      run_ablation(base, suite, {"rounds=1", "rounds=3", "rounds=4"}, "rounds=1");
  std::map<std::string, double> sr;
  for (const auto& row : rows) {
    sr[row.name] = sr_of(row.report);
    note("    " + row.name + ": SR=" + std::to_string(sr_of(row.report)));
  }
  REQUIRE_OR_FAIL(sr["rounds=3"] >= sr["rounds=1"], "SR(rounds=3) < SR(rounds=1)");
  REQUIRE_OR_FAIL(std::abs(sr["rounds=4"] - sr["rounds=3"]) <= 0.05,
                  "rounds 3->4 moved SR by more than 0.05");
  return ok;
}

bool beta_sensitivity(const std::vector<Scenario>& suite, const std::string& out_dir) {
  bool ok = true;
  RunConfig base;
  base.parallelism = 8;
  base.output_dir = out_dir + "/sweep";
  const auto cells = run_beta_sweep(base, suite, 20);
  REQUIRE_OR_FAIL(cells.size() == 9, "sweep must cover 9 combinations");
  double lo = 1.0, hi = 0.0;
  std::printf("    beta_r  beta_theta  SR      SPL\n");
  for (const auto& cell : cells) {
    const double sr = sr_of(cell.report);
    lo = std::min(lo, sr);
    hi = std::max(hi, sr);
    std::printf("    %.3f   %.3f       %.4f  %.4f\n", cell.beta_r, cell.beta_theta, sr,
                cell.report.spl ? *cell.report.spl : 0.0);
  }
  REQUIRE_OR_FAIL(hi - lo <= 0.10, "SR spread " + std::to_string(hi - lo) + " above 0.10");
  return ok;
}

bool determinism(const std::vector<Scenario>& suite, const std::string& out_dir) {
  bool ok = true;
  auto run_into = [&](const std::string& dir, int par) {
    RunConfig cfg;
    cfg.parallelism = par;
    cfg.output_dir = dir;
    return run_suite(cfg, suite);
  };
  const std::string d1 = out_dir + "/det_a";
  const std::string d2 = out_dir + "/det_b";
  const std::string d8 = out_dir + "/det_c";
  run_into(d1, 1);
  run_into(d2, 1);
  run_into(d8, 8);
  for (const auto& entry : fs::directory_iterator(d1)) {
    const std::string name = entry.path().filename().string();
    const std::string a = slurp(entry.path().string());
    REQUIRE_OR_FAIL(a == slurp(d2 + "/" + name), name + ": rerun differs");
    REQUIRE_OR_FAIL(a == slurp(d8 + "/" + name), name + ": parallel run differs");
  }
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  std::string suite_dir = "scenarios/pinned";
  std::string fixture_dir = "tests/fixtures";
  std::string out_dir = "acceptance_out";
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string key = argv[i];
    if (key == "--suite") {
      suite_dir = argv[i + 1];
    } else if (key == "--fixtures") {
      fixture_dir = argv[i + 1];
    } else if (key == "--out") {
      out_dir = argv[i + 1];
    } else {
      std::fprintf(stderr, "usage: %s [--suite dir] [--fixtures dir] [--out dir]\n", argv[0]);
      return 1;
    }
  }
  fs::create_directories(out_dir);

  std::vector<Scenario> suite;
  try {
    suite = load_scenario_dir(suite_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "cannot load pinned suite: %s\n", e.what());
    return 1;
  }
  std::printf("pinned suite: %zu scenarios from %s\n", suite.size(), suite_dir.c_str());
  if (suite.size() < 50) {
    std::printf("[FAIL] pinned suite must contain at least 50 scenarios\n");
    return 1;
  }

  run_criterion(1, "execution-mode truth table", 1.0, mode_truth_table);
  run_criterion(2, "soft-compromise numerics over random angles", 1.0, soft_compromise_numerics);
  run_criterion(3, "scripted debate replay, byte-identical serialization", 1.0,
                [&] { return protocol_conformance(fixture_dir); });
  run_criterion(4, "metric evaluator equals brute-force recounts", 10.0,
                metric_oracle_equivalence);
  run_criterion(5, "redundancy-index directional fixtures", 5.0, aori_directional_fixtures);
  run_criterion(6, "geodesic distance equals sweep oracle", 30.0, geodesic_oracle_equivalence);
  run_criterion(7, "stance ablation trend", 120.0, [&] { return ablation_trend(suite, out_dir); });
  run_criterion(8, "round-count saturation trend", 180.0,
                [&] { return rounds_saturation(suite, out_dir); });
  run_criterion(9, "probe-coefficient sensitivity sweep", 300.0,
                [&] { return beta_sensitivity(suite, out_dir); });
  run_criterion(10, "byte-identical reruns across parallelism", 180.0,
                [&] { return determinism(suite, out_dir); });

  if (g_failures == 0) {
    std::printf("all acceptance criteria passed\n");
    return 0;
  }
  std::printf("%d acceptance criteria failed\n", g_failures);
  return 1;
}
