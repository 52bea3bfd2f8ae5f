#include "mmdiag/structure.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include <json.hpp>

namespace mmdiag::structure {

using bdd::Fn;
using bdd::Manager;
using mel::ModelError;

void LabeledGraph::rebuild_adjacency() {
    eq_edges.assign(eq_names.size(), {});
    var_edges.assign(var_names.size(), {});
    for (std::size_t a = 0; a < edges.size(); ++a) {
        eq_edges[edges[a].eq].push_back(a);
        var_edges[edges[a].var].push_back(a);
    }
}

std::optional<std::size_t> LabeledGraph::find_equation(std::string_view name) const {
    for (std::size_t i = 0; i < eq_names.size(); ++i)
        if (eq_names[i] == name) return i;
    return std::nullopt;
}

LabeledGraph LabeledGraph::without_equation(std::string_view name) const {
    auto removed = find_equation(name);
    if (!removed) throw ModelError("no such equation: " + std::string(name));

    LabeledGraph out;
    out.mgr = mgr;
    out.invariant = invariant;
    out.var_names = var_names;
    std::vector<std::size_t> eq_map(eq_names.size());
    for (std::size_t e = 0; e < eq_names.size(); ++e) {
        if (e == *removed) continue;
        eq_map[e] = out.eq_names.size();
        out.eq_names.push_back(eq_names[e]);
        out.eq_gamma.push_back(eq_gamma[e]);
    }
    out.var_gamma.assign(var_names.size(), mgr->bottom());
    for (const Edge& a : edges) {
        if (a.eq == *removed) continue;
        out.edges.push_back({eq_map[a.eq], a.var, a.gamma});
        out.var_gamma[a.var] = out.var_gamma[a.var] | a.gamma;
    }
    out.rebuild_adjacency();
    return out;
}

LabeledGraph LabeledGraph::clone_into(Manager& dst) const {
    LabeledGraph out;
    out.mgr = &dst;
    out.invariant = dst.import(invariant);
    out.eq_names = eq_names;
    out.var_names = var_names;
    for (Fn g : eq_gamma) out.eq_gamma.push_back(dst.import(g));
    for (Fn g : var_gamma) out.var_gamma.push_back(dst.import(g));
    for (const Edge& a : edges) out.edges.push_back({a.eq, a.var, dst.import(a.gamma)});
    out.rebuild_adjacency();
    return out;
}

const Fault* StructuralModel::find_fault(std::string_view name) const {
    for (const auto& f : faults)
        if (f.name == name) return &f;
    return nullptr;
}

Fn compile_condition(Manager& mgr, const mel::BExprPtr& e) {
    if (!e) return mgr.top();
    switch (e->kind) {
        case mel::BExpr::Kind::Const: return e->value ? mgr.top() : mgr.bottom();
        case mel::BExpr::Kind::Ref: {
            std::string name = e->ref.base;
            if (e->ref.index) {
                // Qualified reference in a standalone expression (macro files,
                // sidecar configs); the index must be a literal integer.
                std::function<long long(const mel::ExprPtr&)> eval_int =
                    [&](const mel::ExprPtr& ix) -> long long {
                    switch (ix->kind) {
                        case mel::Expr::Kind::Number: return std::stoll(ix->number);
                        case mel::Expr::Kind::Neg: return -eval_int(ix->a);
                        case mel::Expr::Kind::Add: return eval_int(ix->a) + eval_int(ix->b);
                        case mel::Expr::Kind::Sub: return eval_int(ix->a) - eval_int(ix->b);
                        default:
                            throw ModelError("non-constant index in condition: " + e->ref.base);
                    }
                };
                name += "[" + std::to_string(eval_int(e->ref.index)) + "]." + e->ref.member;
            }
            auto v = mgr.find(name);
            if (!v) throw ModelError("condition references a non-Boolean symbol: " + name);
            return mgr.var(*v);
        }
        case mel::BExpr::Kind::Not: return !compile_condition(mgr, e->a);
        case mel::BExpr::Kind::And:
            return compile_condition(mgr, e->a) & compile_condition(mgr, e->b);
        case mel::BExpr::Kind::Or:
            return compile_condition(mgr, e->a) | compile_condition(mgr, e->b);
    }
    throw ModelError("unexpected condition kind");
}

namespace {

bool has_prefix(const std::string& s, const std::string& prefix) {
    // The prefix may occur after an instance qualifier: "c[2].f_cell".
    std::string tail = s;
    if (auto pos = s.rfind('.'); pos != std::string::npos) tail = s.substr(pos + 1);
    return !prefix.empty() && tail.starts_with(prefix);
}

void collect_expr_refs(const mel::ExprPtr& e, std::set<std::string>& refs,
                       std::set<std::string>& cond_refs);

void collect_cond_refs(const mel::BExprPtr& e, std::set<std::string>& refs) {
    if (!e) return;
    switch (e->kind) {
        case mel::BExpr::Kind::Const: return;
        case mel::BExpr::Kind::Ref: refs.insert(e->ref.base); return;
        case mel::BExpr::Kind::Not: collect_cond_refs(e->a, refs); return;
        case mel::BExpr::Kind::And:
        case mel::BExpr::Kind::Or:
            collect_cond_refs(e->a, refs);
            collect_cond_refs(e->b, refs);
            return;
    }
}

void collect_expr_refs(const mel::ExprPtr& e, std::set<std::string>& refs,
                       std::set<std::string>& cond_refs) {
    if (!e) return;
    switch (e->kind) {
        case mel::Expr::Kind::Number: return;
        case mel::Expr::Kind::Ref: refs.insert(e->ref.base); return;
        case mel::Expr::Kind::Ite:
            collect_cond_refs(e->cond, cond_refs);
            collect_expr_refs(e->a, refs, cond_refs);
            collect_expr_refs(e->b, refs, cond_refs);
            return;
        default:
            collect_expr_refs(e->a, refs, cond_refs);
            collect_expr_refs(e->b, refs, cond_refs);
            return;
    }
}

class Extractor {
public:
    Extractor(const mel::FlatModel& fm, const ExtractConfig& cfg) : fm_(fm), cfg_(cfg) {}

    StructuralModel run() {
        classify();
        declare_variables();
        build_graph();
        map_faults();
        return std::move(out_);
    }

private:
    void classify() {
        std::set<std::string> overrides(cfg_.fault_overrides.begin(),
                                        cfg_.fault_overrides.end());
        for (const auto& s : fm_.symbols) {
            bool forced = overrides.contains(s.name);
            switch (s.kind) {
                case mel::SymbolKind::Mode:
                    if (forced || has_prefix(s.name, cfg_.boolean_fault_prefix))
                        boolean_faults_.push_back(s.name);
                    else
                        modes_.push_back(s.name);
                    break;
                case mel::SymbolKind::Constant:
                    if (forced || has_prefix(s.name, cfg_.signal_fault_prefix))
                        signal_faults_.push_back(s.name);
                    break;
                case mel::SymbolKind::Unknown:
                    unknowns_.push_back(s.name);
                    break;
            }
        }
        if (cfg_.approach) {
            out_.approach = *cfg_.approach;
            if (out_.approach == Approach::Signal && !boolean_faults_.empty())
                throw ModelError("signal approach requested but the model declares Boolean faults");
            if (out_.approach == Approach::Boolean && !signal_faults_.empty())
                throw ModelError("Boolean approach requested but the model declares fault signals");
        } else {
            out_.approach = boolean_faults_.empty() ? Approach::Signal : Approach::Boolean;
        }
    }

    void declare_variables() {
        out_.mgr = std::make_unique<Manager>();
        // System mode variables first (textual order), then Boolean faults.
        for (const auto& name : modes_) out_.system_modes.push_back(out_.mgr->declare(name));
        for (const auto& name : boolean_faults_)
            out_.fault_modes.push_back(out_.mgr->declare(name));
    }

    void build_graph() {
        Manager& mgr = *out_.mgr;
        LabeledGraph& g = out_.graph;
        g.mgr = &mgr;
        g.invariant = compile_condition(mgr, fm_.invariant);

        g.var_names = unknowns_;
        std::map<std::string, std::size_t> var_index;
        for (std::size_t i = 0; i < unknowns_.size(); ++i) var_index[unknowns_[i]] = i;

        for (const auto& eq : fm_.equations) {
            std::size_t e = g.eq_names.size();
            g.eq_names.push_back(eq.name);
            Fn gamma_e = compile_condition(mgr, eq.guard) & g.invariant;
            g.eq_gamma.push_back(gamma_e);

            // Disjunction of active-path conditions per unknown occurrence.
            std::map<std::size_t, Fn> occ;
            walk(eq.lhs, mgr.top(), var_index, occ);
            walk(eq.rhs, mgr.top(), var_index, occ);
            for (const auto& [x, cond] : occ) {
                Fn gamma_a = cond & gamma_e;
                g.edges.push_back({e, x, gamma_a});
            }
        }
        g.var_gamma.assign(g.var_names.size(), mgr.bottom());
        for (const auto& a : g.edges) g.var_gamma[a.var] = g.var_gamma[a.var] | a.gamma;
        g.rebuild_adjacency();
    }

    void walk(const mel::ExprPtr& e, Fn path, const std::map<std::string, std::size_t>& var_index,
              std::map<std::size_t, Fn>& occ) {
        if (!e) return;
        switch (e->kind) {
            case mel::Expr::Kind::Number: return;
            case mel::Expr::Kind::Ref: {
                auto it = var_index.find(e->ref.base);
                if (it == var_index.end()) return;  // constant or fault signal
                auto [oit, inserted] = occ.try_emplace(it->second, path);
                if (!inserted) oit->second = oit->second | path;
                return;
            }
            case mel::Expr::Kind::Ite: {
                Fn c = compile_condition(*out_.mgr, e->cond);
                walk(e->a, path & c, var_index, occ);
                walk(e->b, path & !c, var_index, occ);
                return;
            }
            // der(v) counts as a structural occurrence of v.
            default:
                walk(e->a, path, var_index, occ);
                walk(e->b, path, var_index, occ);
                return;
        }
    }

    void map_faults() {
        if (out_.approach == Approach::Signal) {
            for (const auto& f : signal_faults_) {
                std::vector<std::string> carriers;
                bool mode_dependent = false;
                for (const auto& eq : fm_.equations) {
                    std::set<std::string> refs, cond_refs;
                    collect_expr_refs(eq.lhs, refs, cond_refs);
                    collect_expr_refs(eq.rhs, refs, cond_refs);
                    if (refs.contains(f)) {
                        carriers.push_back(eq.name);
                        mode_dependent = !cond_refs.empty() || eq.guard != nullptr;
                    }
                }
                if (carriers.size() != 1)
                    throw ModelError("fault " + f + " must occur in exactly one equation, found " +
                                     std::to_string(carriers.size()));
                if (mode_dependent)
                    out_.warnings.push_back("fault " + f + " occurs in equation " + carriers[0] +
                                            " whose incidence depends on mode variables");
                out_.faults.push_back({f, carriers[0], std::nullopt});
            }
        } else {
            for (std::size_t i = 0; i < boolean_faults_.size(); ++i) {
                const std::string& f = boolean_faults_[i];
                std::vector<std::string> carriers;
                for (const auto& eq : fm_.equations) {
                    std::set<std::string> refs;
                    collect_cond_refs(eq.guard, refs);
                    if (refs.contains(f)) carriers.push_back(eq.name);
                }
                if (carriers.size() != 1)
                    throw ModelError("Boolean fault " + f +
                                     " must guard exactly one equation, found " +
                                     std::to_string(carriers.size()));
                out_.faults.push_back({f, carriers[0], out_.fault_modes[i]});
            }
        }
    }

    const mel::FlatModel& fm_;
    const ExtractConfig& cfg_;
    StructuralModel out_;
    std::vector<std::string> modes_, boolean_faults_, signal_faults_, unknowns_;
};

}  // namespace

StructuralModel extract_structure(const mel::FlatModel& fm, const ExtractConfig& cfg) {
    return Extractor(fm, cfg).run();
}

std::string flat_model_json(const mel::FlatModel& fm, const StructuralModel& sm) {
    nlohmann::json j;
    j["approach"] = sm.approach == Approach::Signal ? "signal" : "boolean";
    j["symbols"] = nlohmann::json::object();
    for (const auto& s : fm.symbols) {
        const char* kind = s.kind == mel::SymbolKind::Mode ? "boolean"
                           : s.kind == mel::SymbolKind::Constant ? "constant"
                                                                 : "unknown";
        j["symbols"][s.name] = kind;
    }
    j["system_modes"] = nlohmann::json::array();
    for (auto v : sm.system_modes) j["system_modes"].push_back(sm.mgr->name(v));
    j["faults"] = nlohmann::json::object();
    for (const auto& f : sm.faults) j["faults"][f.name] = f.equation;
    j["invariant"] = sm.mgr->serialize(sm.graph.invariant);
    j["equations"] = nlohmann::json::array();
    for (std::size_t e = 0; e < sm.graph.eq_names.size(); ++e) {
        nlohmann::json eq;
        eq["name"] = sm.graph.eq_names[e];
        eq["guard"] = sm.mgr->serialize(sm.graph.eq_gamma[e]);
        eq["variables"] = nlohmann::json::object();
        for (std::size_t a : sm.graph.eq_edges[e]) {
            const auto& edge = sm.graph.edges[a];
            eq["variables"][sm.graph.var_names[edge.var]] = sm.mgr->serialize(edge.gamma);
        }
        j["equations"].push_back(std::move(eq));
    }
    return j.dump(2);
}

}  // namespace mmdiag::structure
