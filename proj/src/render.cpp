#include "dscd/render.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace dscd {

namespace {

struct AltMark {
  double x, y;  // endpoint of the discarded alternative, meters
};

// Discarded final-round alternatives at disagreement steps.
std::vector<AltMark> alternative_marks(const EpisodeTrace& trace) {
  std::vector<AltMark> marks;
  for (const auto& rec : trace.steps) {
    if (rec.debate.consensus) continue;
    const std::string alt_id = final_alternative(rec.debate, rec.decision.chosen_id, rec.cards);
    const CandidateCard* alt = find_card(rec.cards, alt_id);
    if (!alt || alt->kind != CardKind::move) continue;
    const double h = wrap_angle(rec.pose.heading + alt->action.theta);
    marks.push_back(AltMark{rec.pose.x + alt->action.r * std::cos(h),
                            rec.pose.y + alt->action.r * std::sin(h)});
  }
  return marks;
}

}  // namespace

std::string render_ascii(const EpisodeTrace& trace) {
  if (trace.map_rows.empty()) throw std::invalid_argument("render: trace has no map");
  const int n = static_cast<int>(trace.map_rows.size());
  const double cs = trace.grid.cell_size;
  std::vector<std::string> canvas = trace.map_rows;
  auto plot = [&](double x, double y, char ch) {
    const int cx = static_cast<int>(std::floor(x / cs));
    const int cy = static_cast<int>(std::floor(y / cs));
    if (cx < 0 || cy < 0 || cx >= n || cy >= n) return;
    canvas[cy][cx] = ch;
  };

  for (const auto& rec : trace.steps) plot(rec.pose_after.x, rec.pose_after.y, '*');
  for (const auto& mark : alternative_marks(trace)) plot(mark.x, mark.y, 'x');
  for (const auto& rec : trace.steps) {
    if (rec.decision.micro_probe) plot(rec.pose_after.x, rec.pose_after.y, 'o');
  }
  plot(trace.start.x, trace.start.y, 'S');
  canvas[trace.target.cy][trace.target.cx] = 'T';

  std::ostringstream out;
  out << "scenario: " << trace.scenario_name << "  steps: " << trace.outcome.steps
      << "  success: " << trace.outcome.success << "\n";
  out << "legend: S start, T target, * path, o probe, x discarded alternative\n";
  for (const auto& row : canvas) out << row << "\n";
  return out.str();
}

std::string render_svg(const EpisodeTrace& trace) {
  if (trace.map_rows.empty()) throw std::invalid_argument("render: trace has no map");
  const int n = static_cast<int>(trace.map_rows.size());
  const double cs = trace.grid.cell_size;
  const double px_per_cell = 10.0;
  const double scale = px_per_cell / cs;  // meters -> pixels
  const int side = static_cast<int>(n * px_per_cell);

  std::ostringstream out;
  char buf[256];
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << side << "\" height=\"" << side
      << "\" viewBox=\"0 0 " << side << " " << side << "\">\n";
  out << "<rect width=\"" << side << "\" height=\"" << side << "\" fill=\"#ffffff\"/>\n";

  // Occupied cells, merged into row runs.
  for (int y = 0; y < n; ++y) {
    int x = 0;
    while (x < n) {
      if (trace.map_rows[y][x] != '#') {
        ++x;
        continue;
      }
      int run = x;
      while (run < n && trace.map_rows[y][run] == '#') ++run;
      std::snprintf(buf, sizeof(buf),
                    "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"#333333\"/>\n",
                    x * px_per_cell, y * px_per_cell, (run - x) * px_per_cell, px_per_cell);
      out << buf;
      x = run;
    }
  }

  // Executed path.
  if (!trace.steps.empty()) {
    out << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
    std::snprintf(buf, sizeof(buf), "%.1f,%.1f", trace.start.x * scale, trace.start.y * scale);
    out << buf;
    for (const auto& rec : trace.steps) {
      std::snprintf(buf, sizeof(buf), " %.1f,%.1f", rec.pose_after.x * scale,
                    rec.pose_after.y * scale);
      out << buf;
    }
    out << "\"/>\n";
  }

  // Discarded final-round alternatives.
  for (const auto& mark : alternative_marks(trace)) {
    const double x = mark.x * scale;
    const double y = mark.y * scale;
    std::snprintf(buf, sizeof(buf),
                  "<path d=\"M %.1f %.1f L %.1f %.1f M %.1f %.1f L %.1f %.1f\" "
                  "stroke=\"#d62728\" stroke-width=\"2\"/>\n",
                  x - 4.0, y - 4.0, x + 4.0, y + 4.0, x - 4.0, y + 4.0, x + 4.0, y - 4.0);
    out << buf;
  }

  // Probe steps.
  for (const auto& rec : trace.steps) {
    if (!rec.decision.micro_probe) continue;
    std::snprintf(buf, sizeof(buf),
                  "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"4\" fill=\"none\" stroke=\"#ff7f0e\" "
                  "stroke-width=\"2\"/>\n",
                  rec.pose_after.x * scale, rec.pose_after.y * scale);
    out << buf;
  }

  std::snprintf(buf, sizeof(buf), "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"5\" fill=\"#2ca02c\"/>\n",
                trace.start.x * scale, trace.start.y * scale);
  out << buf;
  std::snprintf(buf, sizeof(buf), "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"5\" fill=\"#9467bd\"/>\n",
                trace.target.x * scale, trace.target.y * scale);
  out << buf;
  out << "</svg>\n";
  return out.str();
}

}  // namespace dscd
