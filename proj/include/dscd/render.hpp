#pragma once

#include <string>

#include "dscd/trace.hpp"

namespace dscd {

// Top-down map with the executed path. Probe steps are marked distinctly and
// the discarded final-round alternative is marked at disagreement steps.
// Output bytes are deterministic for a fixed trace.
std::string render_ascii(const EpisodeTrace& trace);
std::string render_svg(const EpisodeTrace& trace);

}  // namespace dscd
