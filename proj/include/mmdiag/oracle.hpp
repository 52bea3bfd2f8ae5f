#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmdiag/diag.hpp"
#include "mmdiag/dm.hpp"
#include "mmdiag/structure.hpp"

namespace mmdiag::oracle {

/// All valid mode assignments (models of the invariant over the system mode
/// variables). Refuses models with more than `cap` mode variables.
std::vector<bdd::Assignment> enumerate_valid_modes(const structure::StructuralModel& m,
                                                   std::size_t cap = 16);

/// Concrete incidence graph in one mode: vertices and edges whose enabling
/// conditions hold under `a` (which must cover their supports).
dm::Bipartite specialize(const structure::LabeledGraph& g, const bdd::Assignment& a);

/// Whether equation `eq` lies in the overdetermined part of the model
/// specialized at `a`. False when the equation is absent or disabled.
bool overdetermined(const structure::LabeledGraph& g, const bdd::Assignment& a,
                    std::string_view eq);

/// Mode-by-mode check of a diagnosability matrix against single-mode
/// Dulmage-Mendelsohn verdicts.
struct MismatchReport {
    bool ok = true;
    std::vector<std::string> lines;  // one JSON object per mismatch
};

MismatchReport compare(const structure::StructuralModel& m, const diag::Matrix& d,
                       std::size_t mode_cap = 16);

/// Small random mode-labeled model (fault signal approach) for property
/// testing: at most 6 equations, 6 unknowns and 3 mode variables, random
/// enabling conditions, faults on roughly half the equations.
structure::StructuralModel random_model(std::uint64_t seed);

}  // namespace mmdiag::oracle
