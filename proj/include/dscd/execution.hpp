#pragma once

#include <string>
#include <vector>

#include "dscd/debate.hpp"
#include "dscd/geometry.hpp"

namespace dscd {

struct ExecutionConfig {
  double alpha = kPi / 3.0;      // compromise threshold (60°)
  double beta_r = 0.5;           // forward scaling under micro-probing
  double beta_theta = 1.0 / 3.0; // yaw interpolation toward the alternative
  bool probe_enabled = true;     // ablation switch for micro-probing

  void validate() const;  // throws std::invalid_argument

  bool operator==(const ExecutionConfig&) const = default;
};

enum class ExecMode { A, B };

// Arbitrated decision plus the geometry actually executed.
struct StepDecision {
  std::string chosen_id;
  std::string why;
  std::vector<EvidenceItem> evidence;
  ExecMode mode = ExecMode::A;
  PolarAction exec;
  double delta_theta = 0.0;  // wrap(theta_alt - theta*), 0 under consensus
  bool soft_compromise = false;
  bool micro_probe = false;
  bool arbitration_fallback = false;

  bool operator==(const StepDecision&) const = default;
};

// Mode B iff there is no consensus and |delta_theta| <= alpha (inclusive);
// Mode A otherwise. Disabling probing forces Mode A.
ExecMode select_mode(int cons, double delta_theta, const ExecutionConfig& cfg);

// Shortened forward motion with a yaw bias toward the alternative:
//   r_exec = beta_r * r*,  theta_exec = wrap(theta* + beta_theta * wrap(theta_alt - theta*)).
// Callers must gate on select_mode; |wrap(theta_alt - theta*)| > alpha is a
// contract error.
PolarAction soft_compromise(const PolarAction& a_star, double theta_alt,
                            const ExecutionConfig& cfg);

// Full arbitration-to-execution step: NCA picks an id from the trace, the
// discarded alternative fixes delta_theta, and the mode switch decides
// between direct execution and a micro-probing step. A chosen stop card is
// always executed directly.
StepDecision decide_step(const ContextPacket& ctx, const DebateTrace& trace, StancePolicy& nca,
                         const ExecutionConfig& cfg);

}  // namespace dscd
