#include "dscd/execution.hpp"

#include <cmath>
#include <stdexcept>

namespace dscd {

void ExecutionConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= kPi)) throw std::invalid_argument("exec: alpha out of (0, pi]");
  if (!(beta_r > 0.0 && beta_r <= 1.0)) throw std::invalid_argument("exec: beta_r out of (0, 1]");
  if (!(beta_theta >= 0.0 && beta_theta <= 1.0)) {
    throw std::invalid_argument("exec: beta_theta out of [0, 1]");
  }
}

ExecMode select_mode(int cons, double delta_theta, const ExecutionConfig& cfg) {
  if (cfg.probe_enabled && cons == 0 && std::abs(delta_theta) <= cfg.alpha) return ExecMode::B;
  return ExecMode::A;
}

PolarAction soft_compromise(const PolarAction& a_star, double theta_alt,
                            const ExecutionConfig& cfg) {
  const double delta = wrap_angle(theta_alt - a_star.theta);
  if (std::abs(delta) > cfg.alpha) {
    throw std::logic_error("soft_compromise: |delta_theta| exceeds alpha");
  }
  return PolarAction{cfg.beta_r * a_star.r, wrap_angle(a_star.theta + cfg.beta_theta * delta)};
}

StepDecision decide_step(const ContextPacket& ctx, const DebateTrace& trace, StancePolicy& nca,
                         const ExecutionConfig& cfg) {
  Arbitration arb = nca.arbitrate(ctx.goal_text, ctx.cards, trace);
  const CandidateCard* chosen = find_card(ctx.cards, arb.id);
  if (!chosen) {
    throw ProtocolViolation("protocol violation: NCA returned unknown id '" + arb.id + "'");
  }

  StepDecision dec;
  dec.chosen_id = arb.id;
  dec.why = std::move(arb.why);
  dec.evidence = std::move(arb.evidence);
  dec.arbitration_fallback = arb.fallback;

  const int cons = consensus_indicator(trace);
  if (chosen->kind == CardKind::stop || cons == 1) {
    dec.mode = ExecMode::A;
    dec.exec = chosen->action;
    return dec;
  }

  const std::string alt_id = final_alternative(trace, arb.id, ctx.cards);
  const CandidateCard* alt = find_card(ctx.cards, alt_id);
  dec.delta_theta = wrap_angle(alt->action.theta - chosen->action.theta);
  dec.mode = select_mode(cons, dec.delta_theta, cfg);
  if (dec.mode == ExecMode::B) {
    dec.exec = soft_compromise(chosen->action, alt->action.theta, cfg);
    dec.soft_compromise = true;
    dec.micro_probe = true;
  } else {
    dec.exec = chosen->action;
  }
  return dec;
}

}  // namespace dscd
