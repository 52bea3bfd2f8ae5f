#include "mmdiag/bdd.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace mmdiag::bdd {

Manager::Manager() {
    // Slots 0 and 1 are the FALSE and TRUE terminals.
    nodes_.push_back({kTermVar, 0, 0});
    nodes_.push_back({kTermVar, 1, 1});
}

VarId Manager::declare(std::string name) {
    if (var_index_.contains(name))
        throw UsageError("variable already declared: " + name);
    std::uint32_t index = static_cast<std::uint32_t>(var_names_.size());
    var_index_.emplace(name, index);
    var_names_.push_back(std::move(name));
    return VarId{index};
}

Fn Manager::var(VarId v) {
    if (v.index >= var_names_.size()) throw UsageError("unknown variable id");
    return wrap(mk(v.index, 0, 1));
}

std::optional<VarId> Manager::find(std::string_view name) const {
    auto it = var_index_.find(std::string(name));
    if (it == var_index_.end()) return std::nullopt;
    return VarId{it->second};
}

const std::string& Manager::name(VarId v) const {
    if (v.index >= var_names_.size()) throw UsageError("unknown variable id");
    return var_names_[v.index];
}

std::uint32_t Manager::mk(std::uint32_t var, std::uint32_t low, std::uint32_t high) {
    if (low == high) return low;
    NodeKey key{var, low, high};
    auto it = unique_.find(key);
    if (it != unique_.end()) return it->second;
    std::uint32_t ref = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back({var, low, high});
    unique_.emplace(key, ref);
    peak_nodes_ = std::max(peak_nodes_, nodes_.size());
    return ref;
}

void Manager::check_owned(Fn f) const {
    if (&f.manager() != this)
        throw UsageError("operands belong to different managers");
}

namespace {

// Terminal rules; returns UINT32_MAX when no shortcut applies.
std::uint32_t apply_terminal(Op op, std::uint32_t f, std::uint32_t g) {
    auto is_term = [](std::uint32_t r) { return r <= 1; };
    switch (op) {
        case Op::And:
            if (f == 0 || g == 0) return 0;
            if (f == 1) return g;
            if (g == 1) return f;
            if (f == g) return f;
            break;
        case Op::Or:
            if (f == 1 || g == 1) return 1;
            if (f == 0) return g;
            if (g == 0) return f;
            if (f == g) return f;
            break;
        case Op::Xor:
            if (f == g) return 0;
            if (f == 0) return g;
            if (g == 0) return f;
            break;
        case Op::Implies:
            if (f == 0 || g == 1) return 1;
            if (f == 1) return g;
            if (f == g) return 1;
            break;
        case Op::Iff:
            if (f == g) return 1;
            if (f == 1) return g;
            if (g == 1) return f;
            break;
    }
    if (is_term(f) && is_term(g)) {
        bool a = f == 1, b = g == 1, r = false;
        switch (op) {
            case Op::And: r = a && b; break;
            case Op::Or: r = a || b; break;
            case Op::Xor: r = a != b; break;
            case Op::Implies: r = !a || b; break;
            case Op::Iff: r = a == b; break;
        }
        return r ? 1u : 0u;
    }
    return UINT32_MAX;
}

bool commutative(Op op) {
    return op == Op::And || op == Op::Or || op == Op::Xor || op == Op::Iff;
}

}  // namespace

std::uint32_t Manager::apply_rec(Op op, std::uint32_t f, std::uint32_t g) {
    if (std::uint32_t t = apply_terminal(op, f, g); t != UINT32_MAX) return t;
    std::uint32_t cf = f, cg = g;
    if (commutative(op) && cf > cg) std::swap(cf, cg);
    OpKey key{static_cast<std::uint32_t>(op), cf, cg};
    if (auto it = op_cache_.find(key); it != op_cache_.end()) return it->second;

    std::uint32_t fv = nodes_[f].var, gv = nodes_[g].var;
    std::uint32_t top = std::min(fv, gv);
    std::uint32_t f0 = fv == top ? nodes_[f].low : f;
    std::uint32_t f1 = fv == top ? nodes_[f].high : f;
    std::uint32_t g0 = gv == top ? nodes_[g].low : g;
    std::uint32_t g1 = gv == top ? nodes_[g].high : g;
    std::uint32_t r = mk(top, apply_rec(op, f0, g0), apply_rec(op, f1, g1));
    op_cache_.emplace(key, r);
    return r;
}

Fn Manager::apply(Op op, Fn f, Fn g) {
    check_owned(f);
    check_owned(g);
    return wrap(apply_rec(op, f.ref(), g.ref()));
}

std::uint32_t Manager::negate_rec(std::uint32_t f) {
    if (f <= 1) return f ^ 1u;
    if (auto it = not_cache_.find(f); it != not_cache_.end()) return it->second;
    std::uint32_t r = mk(nodes_[f].var, negate_rec(nodes_[f].low), negate_rec(nodes_[f].high));
    not_cache_.emplace(f, r);
    return r;
}

Fn Manager::negate(Fn f) {
    check_owned(f);
    return wrap(negate_rec(f.ref()));
}

Fn Manager::ite(Fn c, Fn t, Fn e) {
    return apply(Op::Or, apply(Op::And, c, t), apply(Op::And, negate(c), e));
}

std::uint32_t Manager::restrict_rec(std::uint32_t f, const std::vector<std::int8_t>& a,
                                    std::unordered_map<std::uint32_t, std::uint32_t>& memo) {
    if (f <= 1) return f;
    if (auto it = memo.find(f); it != memo.end()) return it->second;
    const Node& n = nodes_[f];
    std::uint32_t r;
    std::int8_t val = n.var < a.size() ? a[n.var] : std::int8_t{-1};
    if (val == 0) {
        r = restrict_rec(n.low, a, memo);
    } else if (val == 1) {
        r = restrict_rec(n.high, a, memo);
    } else {
        r = mk(n.var, restrict_rec(n.low, a, memo), restrict_rec(n.high, a, memo));
    }
    memo.emplace(f, r);
    return r;
}

Fn Manager::restrict(Fn f, const Assignment& a) {
    check_owned(f);
    std::vector<std::int8_t> flat(var_names_.size(), -1);
    for (const auto& [v, b] : a) {
        if (v.index >= var_names_.size()) throw UsageError("assignment to unknown variable");
        flat[v.index] = b ? 1 : 0;
    }
    std::unordered_map<std::uint32_t, std::uint32_t> memo;
    return wrap(restrict_rec(f.ref(), flat, memo));
}

std::uint32_t Manager::exists_rec(std::uint32_t f, const std::vector<bool>& mask,
                                  std::unordered_map<std::uint32_t, std::uint32_t>& memo) {
    if (f <= 1) return f;
    if (auto it = memo.find(f); it != memo.end()) return it->second;
    const Node& n = nodes_[f];
    std::uint32_t lo = exists_rec(n.low, mask, memo);
    std::uint32_t hi = exists_rec(n.high, mask, memo);
    std::uint32_t r = (n.var < mask.size() && mask[n.var]) ? apply_rec(Op::Or, lo, hi)
                                                           : mk(n.var, lo, hi);
    memo.emplace(f, r);
    return r;
}

Fn Manager::exists(Fn f, const std::vector<VarId>& vars) {
    check_owned(f);
    std::vector<bool> mask(var_names_.size(), false);
    for (VarId v : vars) {
        if (v.index >= var_names_.size()) throw UsageError("quantifying unknown variable");
        mask[v.index] = true;
    }
    std::unordered_map<std::uint32_t, std::uint32_t> memo;
    return wrap(exists_rec(f.ref(), mask, memo));
}

std::optional<bool> Manager::as_const(Fn f) const {
    check_owned(f);
    if (f.ref() == 0) return false;
    if (f.ref() == 1) return true;
    return std::nullopt;
}

bool Manager::equiv(Fn f, Fn g) const {
    check_owned(f);
    check_owned(g);
    return f.ref() == g.ref();
}

bool Manager::implies(Fn f, Fn g) {
    return apply(Op::Implies, f, g).ref() == 1;
}

bool Manager::eval(Fn f, const Assignment& a) const {
    check_owned(f);
    std::uint32_t cur = f.ref();
    while (cur > 1) {
        const Node& n = nodes_[cur];
        auto it = a.find(VarId{n.var});
        if (it == a.end())
            throw UsageError("evaluation requires a value for " + var_names_[n.var]);
        cur = it->second ? n.high : n.low;
    }
    return cur == 1;
}

std::vector<VarId> Manager::support(Fn f) const {
    check_owned(f);
    std::set<std::uint32_t> seen;
    std::vector<std::uint32_t> stack{f.ref()};
    std::set<std::uint32_t> vars;
    while (!stack.empty()) {
        std::uint32_t cur = stack.back();
        stack.pop_back();
        if (cur <= 1 || !seen.insert(cur).second) continue;
        vars.insert(nodes_[cur].var);
        stack.push_back(nodes_[cur].low);
        stack.push_back(nodes_[cur].high);
    }
    std::vector<VarId> out;
    for (auto v : vars) out.push_back(VarId{v});
    return out;
}

std::vector<Assignment> Manager::models(Fn f, const std::vector<VarId>& over) {
    check_owned(f);
    std::set<VarId> cover(over.begin(), over.end());
    for (VarId v : support(f))
        if (!cover.contains(v))
            throw UsageError("models(): variable set does not cover the support of f");
    std::vector<VarId> order(cover.begin(), cover.end());

    std::vector<Assignment> out;
    Assignment cur;
    auto rec = [&](auto&& self, std::size_t i, Fn g) -> void {
        if (g.ref() == 0) return;
        if (i == order.size()) {
            if (g.ref() == 1) out.push_back(cur);
            return;
        }
        for (bool b : {false, true}) {
            cur[order[i]] = b;
            self(self, i + 1, restrict(g, Assignment{{order[i], b}}));
        }
        cur.erase(order[i]);
    };
    rec(rec, 0, f);
    return out;
}

std::uint64_t Manager::model_count(Fn f, const std::vector<VarId>& over) {
    return static_cast<std::uint64_t>(models(f, over).size());
}

std::string Manager::serialize(Fn f) const {
    check_owned(f);
    // Reachable nodes in ascending creation order; children always precede
    // their parents, so the listing is topologically sorted.
    std::vector<std::uint32_t> reach;
    std::set<std::uint32_t> seen{0, 1};
    std::vector<std::uint32_t> stack{f.ref()};
    while (!stack.empty()) {
        std::uint32_t cur = stack.back();
        stack.pop_back();
        if (!seen.insert(cur).second) continue;
        reach.push_back(cur);
        stack.push_back(nodes_[cur].low);
        stack.push_back(nodes_[cur].high);
    }
    std::sort(reach.begin(), reach.end());
    std::unordered_map<std::uint32_t, std::uint32_t> id{{0, 0}, {1, 1}};
    for (std::size_t i = 0; i < reach.size(); ++i)
        id[reach[i]] = static_cast<std::uint32_t>(i + 2);

    std::ostringstream os;
    os << "root " << id.at(f.ref());
    for (std::uint32_t ref : reach) {
        const Node& n = nodes_[ref];
        os << "\n(" << id.at(ref) << "," << var_names_[n.var] << "," << id.at(n.low)
           << "," << id.at(n.high) << ")";
    }
    return os.str();
}

Fn Manager::deserialize(const std::string& text) {
    std::istringstream is(text);
    std::string word;
    std::uint32_t root;
    if (!(is >> word >> root) || word != "root")
        throw UsageError("malformed serialized function: missing root");
    std::unordered_map<std::uint32_t, std::uint32_t> ref{{0, 0}, {1, 1}};
    std::string line;
    std::getline(is, line);  // rest of the root line
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::uint32_t id, lo, hi;
        char name[256];
        if (std::sscanf(line.c_str(), "(%u,%255[^,],%u,%u)", &id, name, &lo, &hi) != 4)
            throw UsageError("malformed serialized node: " + line);
        auto v = find(name);
        if (!v) throw UsageError(std::string("serialized node uses undeclared variable ") + name);
        if (!ref.contains(lo) || !ref.contains(hi))
            throw UsageError("serialized node references an undefined child");
        Fn node = ite(var(*v), wrap(ref.at(hi)), wrap(ref.at(lo)));
        ref[id] = node.ref();
    }
    if (!ref.contains(root)) throw UsageError("serialized root is undefined");
    return wrap(ref.at(root));
}

Fn Manager::import(Fn f) {
    Manager& src = f.manager();
    if (&src == this) return f;
    std::unordered_map<std::uint32_t, std::uint32_t> memo{{0, 0}, {1, 1}};
    auto rec = [&](auto&& self, std::uint32_t ref) -> std::uint32_t {
        if (auto it = memo.find(ref); it != memo.end()) return it->second;
        const Node& n = src.nodes_[ref];
        auto v = find(src.var_names_[n.var]);
        if (!v)
            throw UsageError("import: variable not declared here: " + src.var_names_[n.var]);
        std::uint32_t lo = self(self, n.low);
        std::uint32_t hi = self(self, n.high);
        std::uint32_t r =
            apply_rec(Op::Or, apply_rec(Op::And, mk(v->index, 0, 1), hi),
                      apply_rec(Op::And, negate_rec(mk(v->index, 0, 1)), lo));
        memo.emplace(ref, r);
        return r;
    };
    return wrap(rec(rec, f.ref()));
}

}  // namespace mmdiag::bdd
