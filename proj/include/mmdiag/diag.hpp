#pragma once

#include <map>
#include <string>
#include <vector>

#include "mmdiag/mmdm.hpp"
#include "mmdiag/structure.hpp"

namespace mmdiag::diag {

/// Diagnosability matrix D. Rows are faults; column 0 is the no-fault (NF)
/// detectability column, followed by one column per fault. Every entry is a
/// Boolean function over the system mode variables only; entries that hold
/// in every valid mode are simplified to the TRUE constant.
struct Matrix {
    structure::Approach approach;
    std::vector<std::string> faults;
    std::vector<std::vector<bdd::Fn>> entries;  // faults.size() x (faults.size() + 1)
    bdd::Manager* mgr = nullptr;
    bdd::Fn invariant;

    bdd::Fn at(std::size_t row, std::size_t col) const { return entries[row][col]; }
};

/// Detectability of every fault from a single multi-mode decomposition
/// (fault signal approach).
std::map<std::string, bdd::Fn> detectability_signal(
    const structure::StructuralModel& m,
    mmdm::MatchStrategy strategy = mmdm::MatchStrategy::Auto);

/// Full diagnosability matrix in the fault signal approach: one further
/// decomposition per detectable fault, on the model with that fault's
/// equation removed; undetectable faults copy the NF column.
Matrix diagnosability_signal(const structure::StructuralModel& m, unsigned jobs = 1,
                             mmdm::MatchStrategy strategy = mmdm::MatchStrategy::Auto);

/// Boolean fault approach: a single decomposition over system and fault
/// modes answers every detectability and isolability query by substitution.
struct BooleanAnalysis {
    const structure::StructuralModel* model = nullptr;
    mmdm::MultiModeDecomposition dec;

    /// Raw overdetermined-part function of the fault's equation (over S and F).
    bdd::Fn eps(const std::string& fault) const;
    /// Modes (over S) where the fault is detectable: all faults absent.
    bdd::Fn detectability(const std::string& fault) const;
    /// Isolability of `fault` from the multiple fault `gamma`: the faults in
    /// gamma present, all others absent.
    bdd::Fn isolability(const std::string& fault, const std::vector<std::string>& gamma) const;
};

BooleanAnalysis analyze_boolean(const structure::StructuralModel& m,
                                mmdm::MatchStrategy strategy = mmdm::MatchStrategy::Auto);

std::map<std::string, bdd::Fn> detectability_boolean(
    const structure::StructuralModel& m,
    mmdm::MatchStrategy strategy = mmdm::MatchStrategy::Auto);

Matrix diagnosability_boolean(const structure::StructuralModel& m,
                              mmdm::MatchStrategy strategy = mmdm::MatchStrategy::Auto);

/// Named mode-set abbreviations used when rendering matrix entries.
struct MacroTable {
    std::vector<std::pair<std::string, bdd::Fn>> macros;
};

/// Bypass macros derived from forward/backward mode variable pairs:
/// "bypass" or "bypass_<k>" per pair, plus "bypass_all" when there are
/// instance pairs.
MacroTable default_macros(const structure::StructuralModel& m);

/// Macro file: one "name = <Boolean expression>" per line; '#' comments.
MacroTable load_macros(const std::string& path, const structure::StructuralModel& m);

std::string render_entry(const Matrix& d, bdd::Fn entry, const MacroTable& macros);
std::string render_table(const Matrix& d, const MacroTable& macros);
std::string render_csv(const Matrix& d, const MacroTable& macros);
std::string render_json(const Matrix& d);

/// Inverse of render_json against an existing model (same variable names).
Matrix parse_matrix_json(const std::string& text, const structure::StructuralModel& m);

}  // namespace mmdiag::diag
