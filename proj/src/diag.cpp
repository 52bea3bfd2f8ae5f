#include "mmdiag/diag.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace mmdiag::diag {

using bdd::Fn;
using bdd::Manager;
using mel::ModelError;
using structure::Approach;
using structure::LabeledGraph;
using structure::StructuralModel;

namespace {

Fn simplify_always(Manager& mgr, Fn invariant, Fn entry) {
    return mgr.implies(invariant, entry) ? mgr.top() : entry;
}

std::map<std::string, Fn> detectability_from_decomposition(
    const StructuralModel& m, const LabeledGraph& g, const mmdm::MultiModeDecomposition& dec) {
    std::map<std::string, Fn> out;
    for (const auto& f : m.faults) {
        auto e = g.find_equation(f.equation);
        Fn eps = e ? dec.eq_over[*e] : g.mgr->bottom();
        out[f.name] = simplify_always(*g.mgr, g.invariant, eps);
    }
    return out;
}

}  // namespace

std::map<std::string, Fn> detectability_signal(const StructuralModel& m,
                                               mmdm::MatchStrategy strategy) {
    if (m.approach != Approach::Signal)
        throw ModelError("detectability_signal requires a fault-signal model");
    auto dec = mmdm::mm_decompose(m.graph, strategy);
    return detectability_from_decomposition(m, m.graph, dec);
}

Matrix diagnosability_signal(const StructuralModel& m, unsigned jobs,
                             mmdm::MatchStrategy strategy) {
    if (m.approach != Approach::Signal)
        throw ModelError("diagnosability_signal requires a fault-signal model");
    Manager& mgr = *m.mgr;
    const std::size_t n = m.faults.size();

    Matrix d;
    d.approach = Approach::Signal;
    d.mgr = &mgr;
    d.invariant = m.graph.invariant;
    for (const auto& f : m.faults) d.faults.push_back(f.name);
    d.entries.assign(n, std::vector<Fn>(n + 1, mgr.bottom()));

    auto nf = detectability_signal(m, strategy);
    for (std::size_t i = 0; i < n; ++i) d.entries[i][0] = nf.at(m.faults[i].name);

    std::vector<std::size_t> detectable;
    for (std::size_t j = 0; j < n; ++j) {
        if (mgr.as_const(d.entries[j][0]) == std::optional<bool>{false}) {
            // Undetectable fault: removing its equation changes nothing, so
            // the column repeats the NF column.
            for (std::size_t i = 0; i < n; ++i) d.entries[i][j + 1] = d.entries[i][0];
        } else {
            detectable.push_back(j);
        }
    }

    auto column_eps = [&](const LabeledGraph& g, std::vector<Fn>& out) {
        auto dec = mmdm::mm_decompose(g, strategy);
        out.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            auto e = g.find_equation(m.faults[i].equation);
            Fn eps = e ? dec.eq_over[*e] : g.mgr->bottom();
            out[i] = simplify_always(*g.mgr, g.invariant, eps);
        }
    };

    if (jobs <= 1 || detectable.size() <= 1) {
        for (std::size_t j : detectable) {
            std::vector<Fn> col;
            column_eps(m.graph.without_equation(m.faults[j].equation), col);
            for (std::size_t i = 0; i < n; ++i) d.entries[i][j + 1] = col[i];
        }
        return d;
    }

    // Each worker owns a manager with the same variable order; results are
    // re-expressed in the shared manager afterwards.
    struct ColResult {
        std::unique_ptr<Manager> mgr;
        std::vector<Fn> col;
    };
    std::vector<ColResult> results(detectable.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t k = next.fetch_add(1);
            if (k >= detectable.size()) return;
            auto local = std::make_unique<Manager>();
            for (std::size_t v = 0; v < mgr.var_count(); ++v)
                local->declare(mgr.name(bdd::VarId{static_cast<std::uint32_t>(v)}));
            LabeledGraph g = m.graph.clone_into(*local);
            column_eps(g.without_equation(m.faults[detectable[k]].equation), results[k].col);
            results[k].mgr = std::move(local);
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < std::min<std::size_t>(jobs, detectable.size()); ++t)
        pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    for (std::size_t k = 0; k < detectable.size(); ++k)
        for (std::size_t i = 0; i < n; ++i)
            d.entries[i][detectable[k] + 1] = mgr.import(results[k].col[i]);
    return d;
}

Fn BooleanAnalysis::eps(const std::string& fault) const {
    const structure::Fault* f = model->find_fault(fault);
    if (!f) throw ModelError("unknown fault: " + fault);
    auto e = model->graph.find_equation(f->equation);
    if (!e) throw ModelError("fault equation missing from the graph: " + f->equation);
    return dec.eq_over[*e];
}

Fn BooleanAnalysis::detectability(const std::string& fault) const {
    bdd::Assignment assign;
    for (auto v : model->fault_modes) assign[v] = false;
    return model->mgr->restrict(eps(fault), assign);
}

Fn BooleanAnalysis::isolability(const std::string& fault,
                                const std::vector<std::string>& gamma) const {
    bdd::Assignment assign;
    for (auto v : model->fault_modes) assign[v] = false;
    for (const auto& g : gamma) {
        if (g == fault)
            throw bdd::UsageError("isolability: fault " + fault + " cannot be in the fault set");
        const structure::Fault* f = model->find_fault(g);
        if (!f || !f->var) throw ModelError("unknown Boolean fault: " + g);
        assign[*f->var] = true;
    }
    return model->mgr->restrict(eps(fault), assign);
}

BooleanAnalysis analyze_boolean(const StructuralModel& m, mmdm::MatchStrategy strategy) {
    if (m.approach != Approach::Boolean)
        throw ModelError("analyze_boolean requires a Boolean-fault model");
    return BooleanAnalysis{&m, mmdm::mm_decompose(m.graph, strategy)};
}

std::map<std::string, Fn> detectability_boolean(const StructuralModel& m,
                                                mmdm::MatchStrategy strategy) {
    auto analysis = analyze_boolean(m, strategy);
    std::map<std::string, Fn> out;
    for (const auto& f : m.faults)
        out[f.name] = simplify_always(*m.mgr, m.graph.invariant, analysis.detectability(f.name));
    return out;
}

Matrix diagnosability_boolean(const StructuralModel& m, mmdm::MatchStrategy strategy) {
    auto analysis = analyze_boolean(m, strategy);
    Manager& mgr = *m.mgr;
    const std::size_t n = m.faults.size();

    Matrix d;
    d.approach = Approach::Boolean;
    d.mgr = &mgr;
    d.invariant = m.graph.invariant;
    for (const auto& f : m.faults) d.faults.push_back(f.name);
    d.entries.assign(n, std::vector<Fn>(n + 1, mgr.bottom()));
    for (std::size_t i = 0; i < n; ++i) {
        d.entries[i][0] =
            simplify_always(mgr, d.invariant, analysis.detectability(m.faults[i].name));
        for (std::size_t j = 0; j < n; ++j) {
            Fn e;
            if (i == j) {
                // Diagonal: the fault itself is substituted as present.
                bdd::Assignment assign;
                for (auto v : m.fault_modes) assign[v] = false;
                assign[*m.faults[i].var] = true;
                e = mgr.restrict(analysis.eps(m.faults[i].name), assign);
            } else {
                e = analysis.isolability(m.faults[i].name, {m.faults[j].name});
            }
            d.entries[i][j + 1] = simplify_always(mgr, d.invariant, e);
        }
    }
    return d;
}

namespace {

std::string instance_tag(const std::string& name) {
    auto open = name.find('[');
    auto close = name.find(']');
    if (open == std::string::npos || close == std::string::npos || close < open) return "";
    return name.substr(open + 1, close - open - 1);
}

}  // namespace

MacroTable default_macros(const StructuralModel& m) {
    Manager& mgr = *m.mgr;
    MacroTable t;
    std::vector<Fn> instance_bypasses;
    for (auto v : m.system_modes) {
        const std::string& name = mgr.name(v);
        if (!name.ends_with("forward")) continue;
        std::string prefix = name.substr(0, name.size() - std::string("forward").size());
        auto bwd = mgr.find(prefix + "backward");
        if (!bwd) continue;
        Fn bypass = !mgr.var(v) & !mgr.var(*bwd);
        std::string tag = instance_tag(prefix);
        if (tag.empty()) {
            t.macros.emplace_back("bypass", bypass);
        } else {
            t.macros.emplace_back("bypass_" + tag, bypass);
            instance_bypasses.push_back(bypass);
        }
    }
    if (!instance_bypasses.empty()) {
        Fn all = mgr.top();
        for (Fn b : instance_bypasses) all = all & b;
        t.macros.emplace_back("bypass_all", all);
    }
    return t;
}

MacroTable load_macros(const std::string& path, const StructuralModel& m) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open macro file: " + path);
    MacroTable t;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ModelError("macro line without '=': " + line);
        std::string name = line.substr(0, eq);
        name.erase(0, name.find_first_not_of(" \t"));
        name.erase(name.find_last_not_of(" \t") + 1);
        auto expr = mel::parse_bool_expr(line.substr(eq + 1));
        t.macros.emplace_back(name, structure::compile_condition(*m.mgr, expr));
    }
    return t;
}

namespace {

// Disjoint sum-of-products cover read off the diagram's paths to TRUE.
std::string cubes_to_string(Manager& mgr, Fn f) {
    std::vector<std::string> cubes;
    std::vector<std::pair<bdd::VarId, bool>> path;
    auto rec = [&](auto&& self, Fn g) -> void {
        if (auto c = mgr.as_const(g)) {
            if (!*c) return;
            std::string cube;
            for (auto& [v, val] : path) {
                if (!cube.empty()) cube += " & ";
                if (!val) cube += "!";
                cube += mgr.name(v);
            }
            cubes.push_back(cube.empty() ? "true" : cube);
            return;
        }
        auto sup = mgr.support(g);
        bdd::VarId v = sup.front();  // top variable in the order
        for (bool b : {false, true}) {
            path.emplace_back(v, b);
            self(self, mgr.restrict(g, bdd::Assignment{{v, b}}));
            path.pop_back();
        }
    };
    rec(rec, f);
    std::string out;
    for (const auto& c : cubes) {
        if (!out.empty()) out += " | ";
        out += c;
    }
    return out;
}

}  // namespace

std::string render_entry(const Matrix& d, Fn entry, const MacroTable& macros) {
    Manager& mgr = *d.mgr;
    if (auto c = mgr.as_const(entry)) return *c ? "T" : "F";
    for (const auto& [name, fn] : macros.macros) {
        if (mgr.equiv(entry, fn & d.invariant)) return name;
        if (mgr.equiv(entry, !fn & d.invariant)) return "!" + name;
    }
    return cubes_to_string(mgr, entry);
}

namespace {

std::vector<std::vector<std::string>> rendered_cells(const Matrix& d, const MacroTable& macros) {
    std::vector<std::vector<std::string>> cells;
    std::vector<std::string> header{""};
    header.push_back("NF");
    for (const auto& f : d.faults) header.push_back(f);
    cells.push_back(std::move(header));
    for (std::size_t i = 0; i < d.faults.size(); ++i) {
        std::vector<std::string> row{d.faults[i]};
        for (std::size_t j = 0; j <= d.faults.size(); ++j)
            row.push_back(render_entry(d, d.entries[i][j], macros));
        cells.push_back(std::move(row));
    }
    return cells;
}

}  // namespace

std::string render_table(const Matrix& d, const MacroTable& macros) {
    auto cells = rendered_cells(d, macros);
    std::vector<std::size_t> width(cells[0].size(), 0);
    for (const auto& row : cells)
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    std::ostringstream os;
    for (const auto& row : cells) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) os << "  ";
            os << row[c];
            if (c + 1 < row.size()) os << std::string(width[c] - row[c].size(), ' ');
        }
        os << "\n";
    }
    return os.str();
}

std::string render_csv(const Matrix& d, const MacroTable& macros) {
    auto cells = rendered_cells(d, macros);
    cells[0][0] = "fault";
    std::ostringstream os;
    for (const auto& row : cells) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) os << ",";
            os << row[c];
        }
        os << "\n";
    }
    return os.str();
}

std::string render_json(const Matrix& d) {
    nlohmann::json j;
    j["approach"] = d.approach == Approach::Signal ? "signal" : "boolean";
    j["faults"] = d.faults;
    j["matrix"] = nlohmann::json::object();
    for (std::size_t i = 0; i < d.faults.size(); ++i) {
        nlohmann::json row;
        row["NF"] = d.mgr->serialize(d.entries[i][0]);
        for (std::size_t jx = 0; jx < d.faults.size(); ++jx)
            row[d.faults[jx]] = d.mgr->serialize(d.entries[i][jx + 1]);
        j["matrix"][d.faults[i]] = std::move(row);
    }
    return j.dump(2);
}

Matrix parse_matrix_json(const std::string& text, const StructuralModel& m) {
    nlohmann::json j = nlohmann::json::parse(text);
    Matrix d;
    d.approach = j.at("approach") == "signal" ? Approach::Signal : Approach::Boolean;
    d.mgr = m.mgr.get();
    d.invariant = m.graph.invariant;
    d.faults = j.at("faults").get<std::vector<std::string>>();
    const std::size_t n = d.faults.size();
    d.entries.assign(n, std::vector<Fn>(n + 1, m.mgr->bottom()));
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = j.at("matrix").at(d.faults[i]);
        d.entries[i][0] = m.mgr->deserialize(row.at("NF").get<std::string>());
        for (std::size_t jx = 0; jx < n; ++jx)
            d.entries[i][jx + 1] = m.mgr->deserialize(row.at(d.faults[jx]).get<std::string>());
    }
    return d;
}

}  // namespace mmdiag::diag
