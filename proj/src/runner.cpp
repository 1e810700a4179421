#include "dscd/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace dscd {

namespace fs = std::filesystem;

PolicySpec PolicySpec::parse(const std::string& text) {
  PolicySpec spec;
  if (text == "heuristic") {
    spec.kind = Kind::heuristic;
  } else if (text.rfind("scripted:", 0) == 0) {
    spec.kind = Kind::scripted;
    spec.arg = text.substr(9);
    if (spec.arg.empty()) throw std::invalid_argument("policy: scripted requires a path");
  } else if (text == "remote") {
    spec.kind = Kind::remote;
  } else if (text.rfind("remote:", 0) == 0) {
    spec.kind = Kind::remote;
    spec.arg = text.substr(7);
  } else {
    throw std::invalid_argument("policy: expected heuristic | scripted:<path> | remote[:model]");
  }
  return spec;
}

std::string PolicySpec::to_string() const {
  switch (kind) {
    case Kind::heuristic:
      return "heuristic";
    case Kind::scripted:
      return "scripted:" + arg;
    case Kind::remote:
      return arg.empty() ? "remote" : "remote:" + arg;
  }
  return "heuristic";
}

std::string variant_name(PipelineVariant v) {
  switch (v) {
    case PipelineVariant::full:
      return "full";
    case PipelineVariant::tsu_only:
      return "tsu-only";
    case PipelineVariant::sib_only:
      return "sib-only";
    case PipelineVariant::no_probe:
      return "no-probe";
  }
  return "full";
}

PipelineVariant parse_variant(const std::string& name) {
  if (name == "full") return PipelineVariant::full;
  if (name == "tsu-only") return PipelineVariant::tsu_only;
  if (name == "sib-only") return PipelineVariant::sib_only;
  if (name == "no-probe") return PipelineVariant::no_probe;
  throw std::invalid_argument("unknown variant '" + name + "'");
}

namespace {

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("expected a boolean, got '" + v + "'");
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "rounds") {
    rounds = std::stoi(value);
  } else if (key == "seed") {
    seed = std::stoull(value);
  } else if (key == "parallelism") {
    parallelism = std::stoi(value);
  } else if (key == "output_dir") {
    output_dir = value;
  } else if (key == "variant") {
    variant = parse_variant(value);
  } else if (key == "bearing_bias_deg") {
    bearing_bias_deg = std::stod(value);
  } else if (key == "bearing_noise_deg") {
    bearing_noise_deg = std::stod(value);
  } else if (key == "tsu") {
    tsu = PolicySpec::parse(value);
  } else if (key == "sib") {
    sib = PolicySpec::parse(value);
  } else if (key == "nca") {
    nca = PolicySpec::parse(value);
  } else if (key == "exec.alpha_deg") {
    exec.alpha = deg_to_rad(std::stod(value));
  } else if (key == "exec.beta_r") {
    exec.beta_r = std::stod(value);
  } else if (key == "exec.beta_theta") {
    exec.beta_theta = std::stod(value);
  } else if (key == "exec.probe") {
    exec.probe_enabled = parse_bool(value);
  } else if (key == "grid.n_candidates") {
    grid.n_candidates = std::stoi(value);
  } else if (key == "grid.fov_deg") {
    grid.fov = deg_to_rad(std::stod(value));
  } else if (key == "grid.max_vis_range") {
    grid.max_vis_range = std::stod(value);
  } else if (key == "grid.voxel_ray_size") {
    grid.voxel_ray_size = std::stod(value);
  } else if (key == "grid.forward_min") {
    grid.forward_min = std::stod(value);
  } else if (key == "grid.forward_max") {
    grid.forward_max = std::stod(value);
  } else if (key == "grid.rotation_bins") {
    grid.rotation_bins = std::stoi(value);
  } else if (key == "grid.success_radius") {
    grid.success_radius = std::stod(value);
  } else if (key == "grid.max_steps") {
    grid.max_steps = std::stoi(value);
  } else if (key == "grid.body_radius") {
    grid.body_radius = std::stod(value);
  } else if (key == "weights.w_g") {
    weights.w_g = std::stod(value);
  } else if (key == "weights.w_p") {
    weights.w_p = std::stod(value);
  } else if (key == "weights.delta_att") {
    weights.delta_att = std::stod(value);
  } else if (key == "weights.delta_sup") {
    weights.delta_sup = std::stod(value);
  } else if (key == "weights.w_s") {
    weights.w_s = std::stod(value);
  } else if (key == "weights.w_i") {
    weights.w_i = std::stod(value);
  } else if (key == "weights.gamma") {
    weights.gamma = std::stod(value);
  } else if (key == "weights.lambda_t") {
    weights.lambda_t = std::stod(value);
  } else if (key == "weights.lambda_s") {
    weights.lambda_s = std::stod(value);
  } else if (key == "weights.lambda_i") {
    weights.lambda_i = std::stod(value);
  } else if (key == "metrics.tau") {
    metrics.tau = std::stod(value);
  } else if (key == "metrics.eta") {
    metrics.eta = std::stod(value);
  } else if (key == "metrics.w_c") {
    metrics.w_c = std::stod(value);
  } else if (key == "metrics.w_d") {
    metrics.w_d = std::stod(value);
  } else if (key == "metrics.revisit_min") {
    metrics.revisit_min = std::stoi(value);
  } else if (key == "metrics.occupancy_based_obs") {
    metrics.occupancy_based_obs = parse_bool(value);
  } else if (key == "remote.endpoint") {
    remote.endpoint = value;
  } else if (key == "remote.model") {
    remote.model = value;
  } else if (key == "remote.api_key_env") {
    remote.api_key_env = value;
  } else if (key == "remote.timeout_s") {
    remote.timeout_s = std::stod(value);
  } else if (key == "remote.max_retries") {
    remote.max_retries = std::stoi(value);
  } else if (key == "remote.temperature") {
    remote.temperature = std::stod(value);
  } else if (key == "remote.backoff_s") {
    remote.backoff_s = std::stod(value);
  } else if (key == "remote.min_request_interval_s") {
    remote.min_request_interval_s = std::stod(value);
  } else if (key == "remote.fallback") {
    remote.fallback_to_heuristic = parse_bool(value);
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config " + path + ":" + std::to_string(lineno) +
                               ": expected 'key = value'");
    }
    try {
      cfg.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    } catch (const std::exception& e) {
      throw std::runtime_error("config " + path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

void RunConfig::validate() const {
  if (rounds < 1) throw std::invalid_argument("config: rounds must be >= 1");
  if (parallelism < 1) throw std::invalid_argument("config: parallelism must be >= 1");
  exec.validate();
  grid.validate();
  for (const PolicySpec* spec : {&tsu, &sib, &nca}) {
    if (spec->kind == PolicySpec::Kind::scripted && !fs::exists(spec->arg)) {
      throw std::invalid_argument("config: scripted fixture missing: " + spec->arg);
    }
  }
}

RunConfig config_for_token(const RunConfig& base, const std::string& token) {
  RunConfig cfg = base;
  if (token.rfind("rounds=", 0) == 0) {
    cfg.variant = PipelineVariant::full;
    cfg.rounds = std::stoi(token.substr(7));
    if (cfg.rounds < 1) throw std::invalid_argument("ablation: rounds must be >= 1");
    return cfg;
  }
  cfg.variant = parse_variant(token);
  if (cfg.variant == PipelineVariant::no_probe) cfg.exec.probe_enabled = false;
  return cfg;
}

PolicySet make_policies(const RunConfig& cfg, std::shared_ptr<RateLimiter> limiter) {
  HeuristicWeights tsu_w = cfg.weights;
  HeuristicWeights sib_w = cfg.weights;
  bool goal_blind = false;
  switch (cfg.variant) {
    case PipelineVariant::full:
    case PipelineVariant::no_probe:
      break;
    case PipelineVariant::tsu_only:
      sib_w.gamma = 0.0;
      sib_w.w_i = 0.0;
      break;
    case PipelineVariant::sib_only:
      goal_blind = true;
      break;
  }

  auto make = [&](Role role, const PolicySpec& spec,
                  const HeuristicWeights& w) -> std::unique_ptr<StancePolicy> {
    switch (spec.kind) {
      case PolicySpec::Kind::heuristic:
        return std::make_unique<HeuristicPolicy>(role, w, role == Role::TSU && goal_blind);
      case PolicySpec::Kind::scripted:
        return std::make_unique<ScriptedPolicy>(role, spec.arg);
      case PolicySpec::Kind::remote: {
        RemoteBackendConfig rc = cfg.remote;
        if (!spec.arg.empty()) rc.model = spec.arg;
        return std::make_unique<RemotePolicy>(role, rc, w, limiter);
      }
    }
    throw std::logic_error("unreachable policy kind");
  };
  PolicySet set;
  set.tsu = make(Role::TSU, cfg.tsu, tsu_w);
  set.sib = make(Role::SIB, cfg.sib, sib_w);
  set.nca = make(Role::NCA, cfg.nca, cfg.weights);
  return set;
}

namespace {

std::vector<std::string> local_sketch(const Env& env, const Pose& pose, int half_span = 10) {
  const double cs = env.config().cell_size;
  const int ax = static_cast<int>(std::floor(pose.x / cs));
  const int ay = static_cast<int>(std::floor(pose.y / cs));
  const auto& grid = env.scenario().grid;
  std::vector<std::string> rows;
  for (int y = ay - half_span; y <= ay + half_span; ++y) {
    std::string row;
    for (int x = ax - half_span; x <= ax + half_span; ++x) {
      char ch = grid.occupied(x, y) ? '#' : '.';
      if (x == env.scenario().target.cx && y == env.scenario().target.cy && ch == '.') ch = 'T';
      if (x == ax && y == ay) ch = '@';
      row.push_back(ch);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

bool contains_sorted(const std::vector<int>& sorted, int value) {
  return std::binary_search(sorted.begin(), sorted.end(), value);
}

}  // namespace

EnvView build_env_view(const Env& env, const Pose& pose, const std::vector<CandidateCard>& cards,
                       const std::vector<int>& accumulated_sorted, const RunConfig& cfg,
                       std::uint64_t episode_seed, int step, bool with_sketch) {
  EnvView view;
  const auto& target = env.scenario().target;
  const double true_bearing =
      wrap_angle(std::atan2(target.y - pose.y, target.x - pose.x) - pose.heading);
  const double amp = deg_to_rad(cfg.bearing_noise_deg);
  const double noise =
      amp > 0.0 ? (2.0 * hash01(episode_seed, 0xBEA11ULL, static_cast<std::uint64_t>(step)) - 1.0) *
                      amp
                : 0.0;
  view.goal_bearing = wrap_angle(true_bearing + deg_to_rad(cfg.bearing_bias_deg) + noise);
  view.goal_distance = std::hypot(target.x - pose.x, target.y - pose.y);
  view.r_max = env.config().forward_max;
  view.success_radius = env.config().success_radius;

  // TODO: the per-candidate visibility probes below dominate step cost on
  // large maps; they could share one footprint scan per heading bucket.
  for (const auto& card : cards) {
    if (card.kind != CardKind::move) continue;
    const double h = wrap_angle(pose.heading + card.action.theta);
    const double ray = env.ray_clearance(pose.x, pose.y, h, env.config().max_vis_range);
    view.clearance[card.id] = std::max(0.0, ray - card.action.r);
    const StepOutcome probe = env.step(pose, card.action);
    const VisibilityFootprint fp = env.visible_cells(probe.pose, step);
    int fresh = 0;
    for (int cell : fp.cells) {
      if (!contains_sorted(accumulated_sorted, cell)) ++fresh;
    }
    view.new_area[card.id] = fresh;
  }
  if (with_sketch) view.local_sketch = local_sketch(env, pose);
  return view;
}

EpisodeTrace run_episode(const RunConfig& cfg_in, const Scenario& scenario, int episode_index,
                         std::shared_ptr<RateLimiter> limiter) {
  RunConfig cfg = cfg_in;
  if (cfg.variant == PipelineVariant::no_probe) cfg.exec.probe_enabled = false;
  const std::uint64_t episode_seed = cfg.seed + static_cast<std::uint64_t>(episode_index);

  Scenario seeded = scenario;  // per-episode seed feeds candidate sampling
  seeded.seed = episode_seed;
  Env env_seeded(seeded, cfg.grid);

  PolicySet policies = make_policies(cfg, limiter);
  const bool with_sketch = cfg.tsu.kind == PolicySpec::Kind::remote ||
                           cfg.sib.kind == PolicySpec::Kind::remote ||
                           cfg.nca.kind == PolicySpec::Kind::remote;

  EpisodeTrace trace;
  trace.scenario_name = scenario.name;
  trace.seed = episode_seed;
  trace.rounds = cfg.rounds;
  trace.variant = variant_name(cfg.variant);
  trace.grid = env_seeded.config();
  trace.exec = cfg.exec;
  trace.weights = cfg.weights;
  trace.start = scenario.start;
  trace.target = scenario.target;
  trace.cues = scenario.cues;
  for (int y = 0; y < scenario.grid.size(); ++y) {
    std::string row;
    for (int x = 0; x < scenario.grid.size(); ++x) {
      row.push_back(scenario.grid.occupied(x, y) ? '#' : '.');
    }
    trace.map_rows.push_back(std::move(row));
  }

  Pose pose = scenario.start;
  std::vector<int> accumulated;  // sorted union of observed cells
  double path_length = 0.0;
  bool success = false;
  std::string error_note;

  try {
    for (int step = 1; step <= env_seeded.config().max_steps; ++step) {
      const VisibilityFootprint fp = env_seeded.visible_cells(pose, step);
      {
        std::vector<int> merged;
        merged.reserve(accumulated.size() + fp.cells.size());
        std::set_union(accumulated.begin(), accumulated.end(), fp.cells.begin(), fp.cells.end(),
                       std::back_inserter(merged));
        accumulated = std::move(merged);
      }
      const bool stop_allowed = env_seeded.target_visible(pose);
      std::vector<PolarAction> actions = env_seeded.generate_candidates(pose);
      if (actions.empty()) actions.push_back(env_seeded.recovery_rotation());
      std::vector<CandidateCard> cards = package_candidates(actions, stop_allowed);

      ContextPacket ctx;
      ctx.goal_text = scenario.target.category;
      ctx.cards = cards;
      ctx.evidence_cues = scenario.cues;

      const EnvView view = build_env_view(env_seeded, pose, cards, accumulated, cfg, episode_seed,
                                          step, with_sketch);
      policies.tsu->begin_step(step);
      policies.sib->begin_step(step);
      policies.nca->begin_step(step);

      const DebateTrace debate = run_debate(ctx, view, *policies.tsu, *policies.sib, cfg.rounds);
      const StepDecision decision = decide_step(ctx, debate, *policies.nca, cfg.exec);

      StepRecord rec;
      rec.step = step;
      rec.pose = pose;
      rec.cards = std::move(cards);
      rec.debate = debate;
      rec.decision = decision;
      rec.footprint = fp;
      rec.backend_fallback = policies.tsu->consumed_fallback() ||
                             policies.sib->consumed_fallback() ||
                             policies.nca->consumed_fallback();

      const CandidateCard* chosen = find_card(rec.cards, decision.chosen_id);
      if (chosen->kind == CardKind::stop) {
        success = env_seeded.check_success(pose);
        rec.pose_after = pose;
        trace.steps.push_back(std::move(rec));
        break;
      }
      const StepOutcome moved = env_seeded.step(pose, decision.exec);
      rec.pose_after = moved.pose;
      rec.collision = moved.collision;
      rec.moved = moved.moved;
      trace.steps.push_back(std::move(rec));
      path_length += moved.moved;
      pose = moved.pose;
    }
  } catch (const std::exception& e) {
    error_note = e.what();  // protocol violations, backend failures, script gaps
  }

  trace.outcome.success = success ? 1 : 0;
  trace.outcome.geodesic = env_seeded.geodesic_start_to_target();
  trace.outcome.path_length = path_length;
  trace.outcome.steps = static_cast<int>(trace.steps.size());
  trace.outcome.error = !error_note.empty();
  trace.outcome.error_note = error_note;
  return trace;
}

std::vector<Scenario> load_scenario_dir(const std::string& dir) {
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".scn") {
      paths.push_back(entry.path().string());
    }
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) throw std::runtime_error("no .scn scenarios under '" + dir + "'");
  std::vector<Scenario> scenarios;
  scenarios.reserve(paths.size());
  for (const auto& p : paths) scenarios.push_back(Scenario::load(p));
  return scenarios;
}

SuiteResult run_suite(const RunConfig& cfg, const std::vector<Scenario>& scenarios) {
  if (scenarios.empty()) throw std::invalid_argument("run_suite: no scenarios");
  {
    std::set<std::string> names;
    for (const auto& sc : scenarios) {
      if (!names.insert(sc.name).second) {
        throw std::invalid_argument("run_suite: duplicate scenario name '" + sc.name + "'");
      }
    }
  }

  std::shared_ptr<RateLimiter> limiter;
  if (cfg.remote.min_request_interval_s > 0.0) {
    limiter = std::make_shared<RateLimiter>(cfg.remote.min_request_interval_s);
  }

  SuiteResult result;
  result.traces.resize(scenarios.size());
  const int workers = std::max(1, std::min<int>(cfg.parallelism, scenarios.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= scenarios.size()) return;
      try {
        result.traces[i] = run_episode(cfg, scenarios[i], static_cast<int>(i), limiter);
      } catch (const std::exception& e) {
        EpisodeTrace failed;
        failed.scenario_name = scenarios[i].name;
        failed.seed = cfg.seed + i;
        failed.rounds = cfg.rounds;
        failed.variant = variant_name(cfg.variant);
        failed.outcome.error = true;
        failed.outcome.error_note = e.what();
        result.traces[i] = std::move(failed);
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  if (!cfg.output_dir.empty()) {
    fs::create_directories(cfg.output_dir);
    for (const auto& trace : result.traces) {
      trace.save((fs::path(cfg.output_dir) / (trace.scenario_name + ".trace.jsonl")).string());
    }
  }

  std::vector<EpisodeStats> stats;
  stats.reserve(result.traces.size());
  for (const auto& trace : result.traces) stats.push_back(trace.to_stats());
  result.report = evaluate_suite(stats, cfg.metrics);

  if (!cfg.output_dir.empty()) {
    std::ofstream out(fs::path(cfg.output_dir) / "report.json", std::ios::binary);
    out << result.report.to_json().dump(2) << "\n";
  }
  return result;
}

std::vector<AblationRow> run_ablation(const RunConfig& base, const std::vector<Scenario>& scenarios,
                                      const std::vector<std::string>& tokens,
                                      const std::string& baseline) {
  std::vector<AblationRow> rows;
  int baseline_index = -1;
  for (const auto& token : tokens) {
    RunConfig cfg = config_for_token(base, token);
    if (!base.output_dir.empty()) {
      cfg.output_dir = (fs::path(base.output_dir) / token).string();
    }
    AblationRow row;
    row.name = token;
    row.report = run_suite(cfg, scenarios).report;
    if (token == baseline) baseline_index = static_cast<int>(rows.size());
    rows.push_back(std::move(row));
  }
  if (baseline_index >= 0) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (static_cast<int>(i) == baseline_index) continue;
      rows[i].report.delta_spl = delta_spl(rows[i].report, rows[baseline_index].report);
      rows[i].report.baseline_name = rows[baseline_index].name;
    }
  }
  return rows;
}

std::vector<SweepCell> run_beta_sweep(const RunConfig& base, const std::vector<Scenario>& scenarios,
                                      int step_cap) {
  const double beta_rs[] = {1.0 / 3.0, 0.5, 2.0 / 3.0};
  const double beta_thetas[] = {0.25, 1.0 / 3.0, 0.5};
  std::vector<SweepCell> cells;
  for (double br : beta_rs) {
    for (double bt : beta_thetas) {
      RunConfig cfg = base;
      cfg.grid.max_steps = step_cap;
      cfg.exec.beta_r = br;
      cfg.exec.beta_theta = bt;
      if (!base.output_dir.empty()) {
        char name[64];
        std::snprintf(name, sizeof(name), "sweep_br%.2f_bt%.2f", br, bt);
        cfg.output_dir = (fs::path(base.output_dir) / name).string();
      }
      SweepCell cell;
      cell.beta_r = br;
      cell.beta_theta = bt;
      cell.report = run_suite(cfg, scenarios).report;
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

}  // namespace dscd
