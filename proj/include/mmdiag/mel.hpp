#pragma once

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace mmdiag::mel {

struct ParseError : std::runtime_error {
    ParseError(int line, int col, const std::string& msg)
        : std::runtime_error("parse error at " + std::to_string(line) + ":" +
                             std::to_string(col) + ": " + msg),
          line(line),
          col(col) {}
    int line;
    int col;
};

struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Expr;
struct BExpr;
using ExprPtr = std::shared_ptr<const Expr>;
using BExprPtr = std::shared_ptr<const BExpr>;

/// Possibly qualified reference: plain `x`, or instance member `c[k].x`.
struct SymRef {
    std::string base;
    ExprPtr index;       // null for plain references
    std::string member;  // empty for plain references
};

/// Boolean expressions: guards, invariants, if-then-else conditions.
struct BExpr {
    enum class Kind { Const, Ref, Not, And, Or };
    Kind kind;
    bool value = false;
    SymRef ref;
    BExprPtr a, b;
};

/// Real-valued expressions. Never evaluated numerically; only the variable
/// occurrence structure matters.
struct Expr {
    enum class Kind { Number, Ref, Neg, Add, Sub, Mul, Div, Der, Ite, Sum };
    Kind kind;
    std::string number;
    SymRef ref;
    ExprPtr a, b;
    BExprPtr cond;        // Ite
    std::string loop_var; // Sum
    ExprPtr lo, hi;       // Sum bounds
};

struct Declaration {
    bool constant = false;
    std::string name;
    bool boolean = false;
    int line = 0, col = 0;
};

struct Equation {
    std::string name;
    ExprPtr name_index;  // g2[k] style; null otherwise
    ExprPtr lhs, rhs;
    BExprPtr guard;      // from "if <cond> then e : ... end"; null otherwise
    int line = 0, col = 0;
};

struct InvariantDecl {
    BExprPtr cond;
};

struct InstanceDecl {
    std::string name;
    ExprPtr lo, hi;
    std::string module;
    int line = 0, col = 0;
};

struct ParamDecl {
    std::string name;
    long long value = 0;
};

struct Statement;

struct ForeachBlock {
    std::string var;
    ExprPtr lo, hi;
    std::vector<Statement> body;
};

struct Statement {
    std::variant<Declaration, Equation, InvariantDecl, ForeachBlock, InstanceDecl, ParamDecl>
        node;
};

struct ModuleDef {
    std::string name;
    std::vector<Statement> body;
};

struct SourceModel {
    std::vector<ModuleDef> modules;
    std::vector<Statement> top;
};

SourceModel parse(const std::string& text);
SourceModel parse_file(const std::string& path);

/// Parses a standalone Boolean expression (macro definitions, configs).
BExprPtr parse_bool_expr(const std::string& text);

enum class SymbolKind { Mode, Unknown, Constant };

struct Symbol {
    std::string name;
    SymbolKind kind;
};

struct FlatEquation {
    std::string name;
    ExprPtr lhs, rhs;  // references resolved to flat names
    BExprPtr guard;    // null = unguarded
};

/// Fully instantiated equation system. All module instances are expanded,
/// loop constructs unrolled, and every reference resolved to a flat symbol.
struct FlatModel {
    std::vector<Symbol> symbols;  // declaration order
    std::vector<FlatEquation> equations;
    BExprPtr invariant;  // conjunction across instances; null = TRUE

    const Symbol* find_symbol(const std::string& name) const;
};

/// Expands instances, foreach blocks and sum comprehensions. `params`
/// overrides `param` declarations in the source.
FlatModel flatten(const SourceModel& ast,
                  const std::map<std::string, long long>& params = {});

}  // namespace mmdiag::mel
