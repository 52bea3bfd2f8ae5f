#pragma once

#include <cstddef>
#include <string>

#include "mmdiag/structure.hpp"

namespace mmdiag::battery {

/// Model flavor: a single switched submodule on its own, or a battery pack
/// of n submodules in series with pack-level current and voltage sensors.
enum class Flavor { SingleSM, Pack };

/// Equation-language source of the reconfigurable battery model. The pack
/// flavor has 8n+3 equations and 3n+2 faults; `n` is ignored for SingleSM.
/// The approach selects fault signals (real constants) or Boolean fault
/// modes (guarded equations).
std::string generate(std::size_t n, structure::Approach approach, Flavor flavor);

}  // namespace mmdiag::battery
