#pragma once

#include <string>
#include <vector>

namespace dscd {

inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double deg_to_rad(double d) { return d * kPi / 180.0; }
inline constexpr double rad_to_deg(double r) { return r * 180.0 / kPi; }

// Wraps an angle to the principal interval (-pi, pi].
// Throws std::domain_error for non-finite input.
double wrap_angle(double x);

struct Pose {
  double x = 0.0;        // meters
  double y = 0.0;        // meters
  double heading = 0.0;  // radians, stored wrapped to (-pi, pi]

  bool operator==(const Pose&) const = default;
};

// Executable action in polar form: forward distance plus yaw offset
// relative to the current heading. Positive theta turns left (CCW).
struct PolarAction {
  double r = 0.0;
  double theta = 0.0;

  bool operator==(const PolarAction&) const = default;
};

enum class CardKind { move, stop };

// A packaged action with a step-local identity, ready for debate.
struct CandidateCard {
  std::string id;  // "c0", "c1", ... in input order; "stop" for the stop card
  PolarAction action;
  std::string direction_text;
  CardKind kind = CardKind::move;

  bool operator==(const CandidateCard&) const = default;
};

// Per-step input to the decision layer: goal text, candidate cards, and
// optional evidence cues carried opaquely.
struct ContextPacket {
  std::string goal_text;
  std::vector<CandidateCard> cards;
  std::vector<std::string> evidence_cues;
};

// Deterministic, locale-independent description of an action:
//   "forward {r:.2f} m, bear {left|right} {|theta| deg:.1f}°"
// theta == 0 renders as "bear 0.0°" with no side.
std::string render_direction_text(const PolarAction& a);

// Packaging operator: assigns ids in input order without re-scoring or
// mutating any geometry. Appends the stop card last when allowed.
// Throws std::invalid_argument when there is nothing to package.
std::vector<CandidateCard> package_candidates(const std::vector<PolarAction>& actions,
                                              bool stop_allowed);

// Linear lookup by id; nullptr when absent.
const CandidateCard* find_card(const std::vector<CandidateCard>& cards, const std::string& id);

}  // namespace dscd
