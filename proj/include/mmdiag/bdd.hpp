#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mmdiag::bdd {

/// Thrown on misuse of the Boolean-function API (cross-manager operands,
/// duplicate variable declarations, enumeration over too few variables).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Variable handle. The index doubles as the position in the diagram's
/// variable order: variables are ordered by declaration.
struct VarId {
    std::uint32_t index = UINT32_MAX;

    friend auto operator<=>(const VarId&, const VarId&) = default;
};

class Manager;

/// Handle to a canonical Boolean function owned by a Manager.
///
/// Two functions from the same Manager are semantically equal iff their
/// handles compare equal.
class Fn {
public:
    Fn() = default;

    bool valid() const { return mgr_ != nullptr; }
    Manager& manager() const;
    std::uint32_t ref() const { return ref_; }

    friend bool operator==(const Fn&, const Fn&) = default;

private:
    friend class Manager;
    Fn(Manager* mgr, std::uint32_t ref) : mgr_(mgr), ref_(ref) {}

    Manager* mgr_ = nullptr;
    std::uint32_t ref_ = 0;
};

enum class Op { And, Or, Xor, Implies, Iff };

/// Total assignment of some variables; missing entries are "unassigned".
using Assignment = std::map<VarId, bool>;

/// Reduced ordered binary decision diagrams with a unique node table and an
/// operation cache. No garbage collection; nodes live as long as the Manager.
class Manager {
public:
    Manager();
    Manager(const Manager&) = delete;
    Manager& operator=(const Manager&) = delete;

    Fn top() { return Fn(this, 1); }
    Fn bottom() { return Fn(this, 0); }

    /// Declares a fresh variable at the end of the order.
    VarId declare(std::string name);
    Fn var(VarId v);
    Fn mk_var(const std::string& name) { return var(declare(name)); }

    std::optional<VarId> find(std::string_view name) const;
    const std::string& name(VarId v) const;
    std::size_t var_count() const { return var_names_.size(); }

    Fn apply(Op op, Fn f, Fn g);
    Fn negate(Fn f);
    Fn ite(Fn c, Fn t, Fn e);

    /// Cofactor under a partial assignment; assigned variables no longer
    /// occur in the result.
    Fn restrict(Fn f, const Assignment& a);

    /// Existential quantification over a set of variables.
    Fn exists(Fn f, const std::vector<VarId>& vars);

    std::optional<bool> as_const(Fn f) const;
    bool equiv(Fn f, Fn g) const;
    bool implies(Fn f, Fn g);

    bool eval(Fn f, const Assignment& a) const;
    std::vector<VarId> support(Fn f) const;

    /// All satisfying assignments of f over `over`, which must cover the
    /// support of f. Enumeration order follows the variable order.
    std::vector<Assignment> models(Fn f, const std::vector<VarId>& over);
    std::uint64_t model_count(Fn f, const std::vector<VarId>& over);

    /// Stable textual form: "root <id>" followed by one "(id,var,low,high)"
    /// line per reachable node in ascending id order. Terminals are 0 and 1.
    std::string serialize(Fn f) const;
    Fn deserialize(const std::string& text);

    /// Rebuilds `f` (owned by another manager) in this manager, matching
    /// variables by name. All named variables must already be declared here.
    Fn import(Fn f);

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t peak_node_count() const { return peak_nodes_; }

private:
    struct Node {
        std::uint32_t var;
        std::uint32_t low;
        std::uint32_t high;
    };
    struct NodeKey {
        std::uint32_t var, low, high;
        bool operator==(const NodeKey&) const = default;
    };
    struct NodeKeyHash {
        std::size_t operator()(const NodeKey& k) const {
            std::uint64_t h = k.var;
            h = h * 0x9e3779b97f4a7c15ull + k.low;
            h = h * 0x9e3779b97f4a7c15ull + k.high;
            return static_cast<std::size_t>(h ^ (h >> 32));
        }
    };
    struct OpKey {
        std::uint32_t op, f, g;
        bool operator==(const OpKey&) const = default;
    };
    struct OpKeyHash {
        std::size_t operator()(const OpKey& k) const {
            std::uint64_t h = k.op;
            h = h * 0x9e3779b97f4a7c15ull + k.f;
            h = h * 0x9e3779b97f4a7c15ull + k.g;
            return static_cast<std::size_t>(h ^ (h >> 32));
        }
    };

    std::uint32_t mk(std::uint32_t var, std::uint32_t low, std::uint32_t high);
    std::uint32_t apply_rec(Op op, std::uint32_t f, std::uint32_t g);
    std::uint32_t negate_rec(std::uint32_t f);
    std::uint32_t restrict_rec(std::uint32_t f, const std::vector<std::int8_t>& a,
                               std::unordered_map<std::uint32_t, std::uint32_t>& memo);
    std::uint32_t exists_rec(std::uint32_t f, const std::vector<bool>& mask,
                             std::unordered_map<std::uint32_t, std::uint32_t>& memo);
    void check_owned(Fn f) const;
    Fn wrap(std::uint32_t ref) { return Fn(this, ref); }

    static constexpr std::uint32_t kTermVar = UINT32_MAX;

    std::vector<Node> nodes_;
    std::unordered_map<NodeKey, std::uint32_t, NodeKeyHash> unique_;
    std::unordered_map<OpKey, std::uint32_t, OpKeyHash> op_cache_;
    std::unordered_map<std::uint32_t, std::uint32_t> not_cache_;
    std::vector<std::string> var_names_;
    std::unordered_map<std::string, std::uint32_t> var_index_;
    std::size_t peak_nodes_ = 2;
};

inline Manager& Fn::manager() const {
    if (!mgr_) throw UsageError("use of an invalid Boolean function handle");
    return *mgr_;
}

inline Fn operator&(Fn f, Fn g) { return f.manager().apply(Op::And, f, g); }
inline Fn operator|(Fn f, Fn g) { return f.manager().apply(Op::Or, f, g); }
inline Fn operator^(Fn f, Fn g) { return f.manager().apply(Op::Xor, f, g); }
inline Fn operator!(Fn f) { return f.manager().negate(f); }

}  // namespace mmdiag::bdd
