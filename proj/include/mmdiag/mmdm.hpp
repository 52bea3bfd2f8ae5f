#pragma once

#include <optional>
#include <vector>

#include "mmdiag/dm.hpp"
#include "mmdiag/structure.hpp"

namespace mmdiag::mmdm {

/// One structural-signature class: a set of modes whose specialized
/// incidence graphs are identical, together with that concrete graph.
struct SignatureClass {
    bdd::Fn modes;  // class characteristic function; subset of the invariant
    dm::Bipartite graph;
    std::vector<std::size_t> edge_ids;        // original edge id per class edge
    std::vector<std::size_t> eq_ids, var_ids; // original vertex id per class vertex
};

/// Partitions the valid mode set by identical specialized structure.
/// Class functions are pairwise disjoint and their disjunction equals the
/// invariant. Returns nullopt once more than `cap` classes arise.
std::optional<std::vector<SignatureClass>> signature_classes(
    const structure::LabeledGraph& g, std::size_t cap = SIZE_MAX);

/// Per-mode maximum matchings, encoded as one characteristic function per
/// edge: T_a(m) holds iff edge a is matched in mode m.
struct MultiModeMatching {
    std::vector<bdd::Fn> edge_on;
};

enum class MatchStrategy {
    Auto,      ///< signature classes when few, symbolic augmentation otherwise
    Classes,   ///< one concrete matching per signature class
    Symbolic,  ///< augmenting-path search over mode-labeled edges
};

constexpr std::size_t kDefaultClassCap = 4096;

MultiModeMatching mm_matching(const structure::LabeledGraph& g,
                              MatchStrategy strategy = MatchStrategy::Auto,
                              std::size_t class_cap = kDefaultClassCap);

/// Overdetermined-part characteristic functions for every equation and
/// variable, valid simultaneously in every mode.
struct MultiModeDecomposition {
    std::vector<bdd::Fn> eq_over;   // one per equation
    std::vector<bdd::Fn> var_over;  // one per variable
    std::size_t sweeps = 0;         // fixpoint sweeps performed
};

/// Alternating-path fixpoint: seeds each equation with the modes in which it
/// is active but unmatched, then propagates along non-matching and matching
/// edges until nothing changes.
MultiModeDecomposition mm_decompose(const structure::LabeledGraph& g,
                                    const MultiModeMatching& t);

/// Process-wide number of mm_decompose runs; lets tests assert how many
/// decompositions an analysis needs.
std::size_t decompose_count();

/// JSON object mapping each equation name to its serialized
/// overdetermined-part function.
std::string decomposition_json(const structure::LabeledGraph& g,
                               const MultiModeDecomposition& d);

inline MultiModeDecomposition mm_decompose(const structure::LabeledGraph& g,
                                           MatchStrategy strategy = MatchStrategy::Auto) {
    return mm_decompose(g, mm_matching(g, strategy));
}

}  // namespace mmdiag::mmdm
