#include "dscd/trace.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace dscd {

using nlohmann::json;

std::string config_digest(const json& canonical) {
  const std::string s = canonical.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void to_json(json& j, const Pose& p) { j = json{{"heading", p.heading}, {"x", p.x}, {"y", p.y}}; }

void from_json(const json& j, Pose& p) {
  p.x = j.at("x").get<double>();
  p.y = j.at("y").get<double>();
  p.heading = j.at("heading").get<double>();
}

void to_json(json& j, const CandidateCard& c) {
  j = json{{"direction_text", c.direction_text},
           {"id", c.id},
           {"kind", c.kind == CardKind::stop ? "stop" : "move"},
           {"r", c.action.r},
           {"theta", c.action.theta}};
}

void from_json(const json& j, CandidateCard& c) {
  c.id = j.at("id").get<std::string>();
  c.direction_text = j.at("direction_text").get<std::string>();
  c.kind = j.at("kind").get<std::string>() == "stop" ? CardKind::stop : CardKind::move;
  c.action.r = j.at("r").get<double>();
  c.action.theta = j.at("theta").get<double>();
}

void to_json(json& j, const StepDecision& d) {
  j = json{{"arbitration_fallback", d.arbitration_fallback},
           {"chosen_id", d.chosen_id},
           {"delta_theta", d.delta_theta},
           {"evidence", d.evidence},
           {"exec", json{{"r", d.exec.r}, {"theta", d.exec.theta}}},
           {"micro_probe", d.micro_probe},
           {"mode", d.mode == ExecMode::A ? "A" : "B"},
           {"soft_compromise", d.soft_compromise},
           {"why", d.why}};
}

void from_json(const json& j, StepDecision& d) {
  d.chosen_id = j.at("chosen_id").get<std::string>();
  d.why = j.at("why").get<std::string>();
  d.evidence = j.at("evidence").get<std::vector<EvidenceItem>>();
  d.mode = j.at("mode").get<std::string>() == "B" ? ExecMode::B : ExecMode::A;
  d.exec.r = j.at("exec").at("r").get<double>();
  d.exec.theta = j.at("exec").at("theta").get<double>();
  d.delta_theta = j.at("delta_theta").get<double>();
  d.soft_compromise = j.at("soft_compromise").get<bool>();
  d.micro_probe = j.at("micro_probe").get<bool>();
  d.arbitration_fallback = j.at("arbitration_fallback").get<bool>();
}

void to_json(json& j, const GridConfig& g) {
  j = json{{"body_radius", g.body_radius},
           {"cell_size", g.cell_size},
           {"forward_max", g.forward_max},
           {"forward_min", g.forward_min},
           {"fov", g.fov},
           {"map_size", g.map_size},
           {"max_steps", g.max_steps},
           {"max_vis_range", g.max_vis_range},
           {"n_candidates", g.n_candidates},
           {"rotation_bins", g.rotation_bins},
           {"success_radius", g.success_radius},
           {"voxel_ray_size", g.voxel_ray_size}};
}

void from_json(const json& j, GridConfig& g) {
  g.map_size = j.at("map_size").get<int>();
  g.cell_size = j.at("cell_size").get<double>();
  g.voxel_ray_size = j.at("voxel_ray_size").get<double>();
  g.fov = j.at("fov").get<double>();
  g.max_vis_range = j.at("max_vis_range").get<double>();
  g.n_candidates = j.at("n_candidates").get<int>();
  g.forward_min = j.at("forward_min").get<double>();
  g.forward_max = j.at("forward_max").get<double>();
  g.rotation_bins = j.at("rotation_bins").get<int>();
  g.success_radius = j.at("success_radius").get<double>();
  g.max_steps = j.at("max_steps").get<int>();
  g.body_radius = j.at("body_radius").get<double>();
}

void to_json(json& j, const ExecutionConfig& e) {
  j = json{{"alpha", e.alpha},
           {"beta_r", e.beta_r},
           {"beta_theta", e.beta_theta},
           {"probe_enabled", e.probe_enabled}};
}

void from_json(const json& j, ExecutionConfig& e) {
  e.alpha = j.at("alpha").get<double>();
  e.beta_r = j.at("beta_r").get<double>();
  e.beta_theta = j.at("beta_theta").get<double>();
  e.probe_enabled = j.at("probe_enabled").get<bool>();
}

void to_json(json& j, const HeuristicWeights& w) {
  j = json{{"delta_att", w.delta_att},
           {"delta_sup", w.delta_sup},
           {"gamma", w.gamma},
           {"lambda_i", w.lambda_i},
           {"lambda_s", w.lambda_s},
           {"lambda_t", w.lambda_t},
           {"w_g", w.w_g},
           {"w_i", w.w_i},
           {"w_p", w.w_p},
           {"w_s", w.w_s}};
}

void from_json(const json& j, HeuristicWeights& w) {
  w.w_g = j.at("w_g").get<double>();
  w.w_p = j.at("w_p").get<double>();
  w.delta_att = j.at("delta_att").get<double>();
  w.delta_sup = j.at("delta_sup").get<double>();
  w.w_s = j.at("w_s").get<double>();
  w.w_i = j.at("w_i").get<double>();
  w.gamma = j.at("gamma").get<double>();
  w.lambda_t = j.at("lambda_t").get<double>();
  w.lambda_s = j.at("lambda_s").get<double>();
  w.lambda_i = j.at("lambda_i").get<double>();
}

void to_json(json& j, const StepRecord& r) {
  j = json{{"backend_fallback", r.backend_fallback},
           {"cards", r.cards},
           {"collision", r.collision},
           {"debate", r.debate},
           {"decision", r.decision},
           {"footprint", r.footprint.cells},
           {"moved", r.moved},
           {"pose", r.pose},
           {"pose_after", r.pose_after},
           {"step", r.step},
           {"type", "step"}};
}

void from_json(const json& j, StepRecord& r) {
  r.step = j.at("step").get<int>();
  r.pose = j.at("pose").get<Pose>();
  r.cards = j.at("cards").get<std::vector<CandidateCard>>();
  r.debate = j.at("debate").get<DebateTrace>();
  r.decision = j.at("decision").get<StepDecision>();
  r.footprint.step = r.step;
  r.footprint.cells = j.at("footprint").get<std::vector<int>>();
  r.pose_after = j.at("pose_after").get<Pose>();
  r.collision = j.at("collision").get<bool>();
  r.moved = j.at("moved").get<double>();
  r.backend_fallback = j.at("backend_fallback").get<bool>();
}

void to_json(json& j, const EpisodeOutcome& o) {
  j = json{{"error", o.error},
           {"error_note", o.error_note},
           {"geodesic", std::isfinite(o.geodesic) ? json(o.geodesic) : json(nullptr)},
           {"path_length", o.path_length},
           {"steps", o.steps},
           {"success", o.success},
           {"type", "outcome"}};
}

void from_json(const json& j, EpisodeOutcome& o) {
  o.success = j.at("success").get<int>();
  o.geodesic = j.at("geodesic").is_null() ? std::numeric_limits<double>::infinity()
                                          : j.at("geodesic").get<double>();
  o.path_length = j.at("path_length").get<double>();
  o.steps = j.at("steps").get<int>();
  o.error = j.at("error").get<bool>();
  o.error_note = j.at("error_note").get<std::string>();
}

namespace {

json header_json(const EpisodeTrace& t) {
  json j{{"cues", t.cues},
         {"exec", t.exec},
         {"grid", t.grid},
         {"map", t.map_rows},
         {"rounds", t.rounds},
         {"scenario", t.scenario_name},
         {"seed", t.seed},
         {"start", t.start},
         {"target", json{{"category", t.target.category},
                         {"cx", t.target.cx},
                         {"cy", t.target.cy},
                         {"x", t.target.x},
                         {"y", t.target.y}}},
         {"type", "header"},
         {"variant", t.variant},
         {"weights", t.weights}};
  return j;
}

}  // namespace

std::string EpisodeTrace::to_jsonl() const {
  json header = header_json(*this);
  header["digest"] = dscd::config_digest(header);
  std::string out = header.dump();
  out += '\n';
  for (const auto& step : steps) {
    out += json(step).dump();
    out += '\n';
  }
  out += json(outcome).dump();
  out += '\n';
  return out;
}

EpisodeTrace EpisodeTrace::from_jsonl(const std::string& text) {
  EpisodeTrace t;
  std::istringstream in(text);
  std::string line;
  bool have_header = false, have_outcome = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    const std::string type = j.at("type").get<std::string>();
    if (type == "header") {
      t.scenario_name = j.at("scenario").get<std::string>();
      t.seed = j.at("seed").get<std::uint64_t>();
      t.rounds = j.at("rounds").get<int>();
      t.variant = j.at("variant").get<std::string>();
      t.grid = j.at("grid").get<GridConfig>();
      t.exec = j.at("exec").get<ExecutionConfig>();
      t.weights = j.at("weights").get<HeuristicWeights>();
      t.map_rows = j.at("map").get<std::vector<std::string>>();
      t.start = j.at("start").get<Pose>();
      t.target.category = j.at("target").at("category").get<std::string>();
      t.target.cx = j.at("target").at("cx").get<int>();
      t.target.cy = j.at("target").at("cy").get<int>();
      t.target.x = j.at("target").at("x").get<double>();
      t.target.y = j.at("target").at("y").get<double>();
      t.cues = j.at("cues").get<std::vector<std::string>>();
      {
        json canonical = j;
        canonical.erase("digest");
        if (j.at("digest").get<std::string>() != config_digest(canonical)) {
          throw std::runtime_error("trace: header digest mismatch");
        }
      }
      have_header = true;
    } else if (type == "step") {
      t.steps.push_back(j.get<StepRecord>());
    } else if (type == "outcome") {
      t.outcome = j.get<EpisodeOutcome>();
      have_outcome = true;
    } else {
      throw std::runtime_error("trace: unknown record type '" + type + "'");
    }
  }
  if (!have_header) throw std::runtime_error("trace: missing header line");
  if (!have_outcome) throw std::runtime_error("trace: missing outcome line");
  return t;
}

EpisodeTrace EpisodeTrace::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("trace: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return from_jsonl(buf.str());
}

void EpisodeTrace::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("trace: cannot write '" + path + "'");
  out << to_jsonl();
}

EpisodeStats EpisodeTrace::to_stats() const {
  EpisodeStats st;
  st.name = scenario_name;
  st.outcome = outcome;
  st.rounds_max = rounds;
  st.map_size = grid.map_size;
  st.open_footprint_cells = MetricsConfig::open_footprint_cells(grid);
  for (const auto& rec : steps) {
    StepStats ss;
    for (const auto& round : rec.debate.rounds) {
      RoundStat rs;
      rs.tsu_id = round.tsu.candidate_id;
      rs.agreed = round.sib.decision == Decision::agree;
      rs.sib_id = rs.agreed ? rs.tsu_id : *round.sib.candidate_id;
      ss.rounds.push_back(std::move(rs));
    }
    ss.final_disagreement = !rec.debate.consensus;
    ss.final_tsu_id = rec.debate.final_tsu_id;
    ss.chosen_id = rec.decision.chosen_id;
    ss.micro_probe = rec.decision.micro_probe;
    ss.has_decision = true;
    st.steps.push_back(std::move(ss));

    st.footprints.push_back(rec.footprint.cells);
    const int cx = static_cast<int>(std::floor(rec.pose.x / grid.cell_size));
    const int cy = static_cast<int>(std::floor(rec.pose.y / grid.cell_size));
    st.agent_cells.push_back(cy * grid.map_size + cx);
  }
  return st;
}

}  // namespace dscd
