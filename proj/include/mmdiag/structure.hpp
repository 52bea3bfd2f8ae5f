#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mmdiag/bdd.hpp"
#include "mmdiag/mel.hpp"

namespace mmdiag::structure {

enum class Approach { Signal, Boolean };

struct Fault {
    std::string name;
    std::string equation;               // e_f, the unique equation carrying the fault
    std::optional<bdd::VarId> var;      // Boolean approach only
};

/// Bipartite incidence structure with per-vertex and per-edge enabling
/// conditions. All conditions are pre-conjoined with the model invariant.
struct LabeledGraph {
    struct Edge {
        std::size_t eq;
        std::size_t var;
        bdd::Fn gamma;
    };

    bdd::Manager* mgr = nullptr;
    bdd::Fn invariant;  // valid-mode characteristic function (over system modes)

    std::vector<std::string> eq_names;
    std::vector<bdd::Fn> eq_gamma;
    std::vector<std::string> var_names;
    std::vector<bdd::Fn> var_gamma;
    std::vector<Edge> edges;

    std::vector<std::vector<std::size_t>> eq_edges;   // equation -> incident edge ids
    std::vector<std::vector<std::size_t>> var_edges;  // variable -> incident edge ids

    void rebuild_adjacency();
    std::optional<std::size_t> find_equation(std::string_view name) const;

    /// Copy with one equation vertex (and its edges) removed.
    LabeledGraph without_equation(std::string_view name) const;

    /// Copy into another manager; all named variables must be declared there.
    LabeledGraph clone_into(bdd::Manager& dst) const;
};

struct ExtractConfig {
    std::optional<Approach> approach;  // default: Boolean iff boolean faults exist
    std::string signal_fault_prefix = "f_";
    std::string boolean_fault_prefix = "F_";
    std::vector<std::string> fault_overrides;  // explicit fault symbol names
};

/// A flat model compiled to its mode-labeled structural form. Owns the
/// Boolean-function manager used by all conditions of the graph.
struct StructuralModel {
    std::unique_ptr<bdd::Manager> mgr;
    Approach approach = Approach::Signal;
    LabeledGraph graph;
    std::vector<bdd::VarId> system_modes;  // S, declaration order
    std::vector<bdd::VarId> fault_modes;   // F, Boolean approach only
    std::vector<Fault> faults;
    std::vector<std::string> warnings;

    const Fault* find_fault(std::string_view name) const;
};

StructuralModel extract_structure(const mel::FlatModel& fm, const ExtractConfig& cfg = {});

/// Compiles a Boolean expression over flat symbol names; every referenced
/// name must be a declared manager variable.
bdd::Fn compile_condition(bdd::Manager& mgr, const mel::BExprPtr& e);

/// Flattened-model dump: equations, symbol classes, guards as serialized
/// Boolean functions.
std::string flat_model_json(const mel::FlatModel& fm, const StructuralModel& sm);

}  // namespace mmdiag::structure
