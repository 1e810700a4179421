#include "dscd/geometry.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace dscd {

double wrap_angle(double x) {
  if (!std::isfinite(x)) {
    throw std::domain_error("wrap_angle: non-finite angle");
  }
  double r = std::remainder(x, 2.0 * kPi);  // [-pi, pi], ties to even
  if (r <= -kPi) {
    r = kPi;  // fold the open end onto +pi
  }
  return r;
}

std::string render_direction_text(const PolarAction& a) {
  char buf[64];
  if (a.theta == 0.0) {
    std::snprintf(buf, sizeof(buf), "forward %.2f m, bear 0.0°", a.r);
  } else {
    std::snprintf(buf, sizeof(buf), "forward %.2f m, bear %s %.1f°", a.r,
                  a.theta > 0.0 ? "left" : "right", std::abs(rad_to_deg(a.theta)));
  }
  return buf;
}

std::vector<CandidateCard> package_candidates(const std::vector<PolarAction>& actions,
                                              bool stop_allowed) {
  if (actions.empty() && !stop_allowed) {
    throw std::invalid_argument("no executable candidate");
  }
  std::vector<CandidateCard> cards;
  cards.reserve(actions.size() + (stop_allowed ? 1 : 0));
  for (std::size_t i = 0; i < actions.size(); ++i) {
    CandidateCard c;
    c.id = "c" + std::to_string(i);
    c.action = actions[i];
    c.direction_text = render_direction_text(actions[i]);
    c.kind = CardKind::move;
    cards.push_back(std::move(c));
  }
  if (stop_allowed) {
    CandidateCard s;
    s.id = "stop";
    s.action = PolarAction{0.0, 0.0};
    s.direction_text = "stop";
    s.kind = CardKind::stop;
    cards.push_back(std::move(s));
  }
  return cards;
}

const CandidateCard* find_card(const std::vector<CandidateCard>& cards, const std::string& id) {
  for (const auto& c : cards) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

}  // namespace dscd
