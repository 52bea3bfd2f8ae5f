#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "mmdiag/bdd.hpp"

using namespace mmdiag::bdd;

namespace {

// Random formula trees evaluated both through the diagram kernel and by a
// direct truth-table walk; the independent ground truth for this module.
struct Formula {
    enum class K { Var, Const, Not, And, Or, Xor } k;
    std::size_t var = 0;
    bool value = false;
    std::unique_ptr<Formula> a, b;

    bool eval(std::uint32_t bits) const {
        switch (k) {
            case K::Var: return (bits >> var) & 1;
            case K::Const: return value;
            case K::Not: return !a->eval(bits);
            case K::And: return a->eval(bits) && b->eval(bits);
            case K::Or: return a->eval(bits) || b->eval(bits);
            case K::Xor: return a->eval(bits) != b->eval(bits);
        }
        return false;
    }

    Fn build(Manager& m, const std::vector<VarId>& vars) const {
        switch (k) {
            case K::Var: return m.var(vars[var]);
            case K::Const: return value ? m.top() : m.bottom();
            case K::Not: return !a->build(m, vars);
            case K::And: return a->build(m, vars) & b->build(m, vars);
            case K::Or: return a->build(m, vars) | b->build(m, vars);
            case K::Xor: return a->build(m, vars) ^ b->build(m, vars);
        }
        return m.bottom();
    }
};

std::unique_ptr<Formula> random_formula(std::mt19937_64& rng, std::size_t n_vars, int depth) {
    auto f = std::make_unique<Formula>();
    std::uniform_int_distribution<int> pick(0, 5);
    int k = depth == 0 ? pick(rng) % 2 : pick(rng);
    switch (k) {
        case 0:
            f->k = Formula::K::Var;
            f->var = rng() % n_vars;
            break;
        case 1:
            f->k = Formula::K::Const;
            f->value = rng() & 1;
            break;
        case 2:
            f->k = Formula::K::Not;
            f->a = random_formula(rng, n_vars, depth - 1);
            break;
        default:
            f->k = k == 3 ? Formula::K::And : k == 4 ? Formula::K::Or : Formula::K::Xor;
            f->a = random_formula(rng, n_vars, depth - 1);
            f->b = random_formula(rng, n_vars, depth - 1);
            break;
    }
    return f;
}

Assignment bits_to_assignment(std::uint32_t bits, const std::vector<VarId>& vars) {
    Assignment a;
    for (std::size_t i = 0; i < vars.size(); ++i) a[vars[i]] = (bits >> i) & 1;
    return a;
}

}  // namespace

TEST_CASE("terminals and variable projection") {
    Manager m;
    CHECK(m.as_const(m.top()) == true);
    CHECK(m.as_const(m.bottom()) == false);
    CHECK(m.top() != m.bottom());
    Fn a = m.mk_var("a");
    CHECK(!m.as_const(a).has_value());
    CHECK(m.eval(a, {{*m.find("a"), true}}));
    CHECK(!m.eval(a, {{*m.find("a"), false}}));
}

TEST_CASE("basic identities") {
    Manager m;
    Fn a = m.mk_var("a"), b = m.mk_var("b");
    CHECK((a & !a) == m.bottom());
    CHECK((a | m.top()) == m.top());
    CHECK(m.apply(Op::Iff, m.apply(Op::Implies, a, b), !a | b) == m.top());
    CHECK((a & b) == (b & a));
}

TEST_CASE("duplicate declaration is rejected") {
    Manager m;
    m.declare("forward");
    CHECK_THROWS_AS(m.declare("forward"), UsageError);
}

TEST_CASE("cross-manager operands are rejected") {
    Manager m1, m2;
    Fn a = m1.mk_var("a");
    Fn b = m2.mk_var("b");
    CHECK_THROWS_AS(m1.apply(Op::And, a, b), UsageError);
}

TEST_CASE("apply/restrict/exists agree with a truth-table oracle") {
    std::mt19937_64 rng(20260823);
    int cases = 0;
    while (cases < 1000) {
        std::size_t n_vars = 1 + rng() % 10;
        Manager m;
        std::vector<VarId> vars;
        for (std::size_t i = 0; i < n_vars; ++i) vars.push_back(m.declare("v" + std::to_string(i)));
        auto formula = random_formula(rng, n_vars, 4);
        Fn f = formula->build(m, vars);

        std::uint64_t sat = 0;
        for (std::uint32_t bits = 0; bits < (1u << n_vars); ++bits) {
            bool expect = formula->eval(bits);
            REQUIRE(m.eval(f, bits_to_assignment(bits, vars)) == expect);
            sat += expect;
        }
        CHECK(m.model_count(f, vars) == sat);
        CHECK(m.models(f, vars).size() == sat);

        // Restriction: fix a random subset, compare on the rest.
        std::uint32_t fixed_mask = static_cast<std::uint32_t>(rng()) & ((1u << n_vars) - 1);
        std::uint32_t fixed_bits = static_cast<std::uint32_t>(rng()) & fixed_mask;
        Assignment partial;
        for (std::size_t i = 0; i < n_vars; ++i)
            if ((fixed_mask >> i) & 1) partial[vars[i]] = (fixed_bits >> i) & 1;
        Fn g = m.restrict(f, partial);
        for (auto v : m.support(g)) CHECK(!partial.contains(v));
        for (std::uint32_t bits = 0; bits < (1u << n_vars); ++bits) {
            std::uint32_t merged = (bits & ~fixed_mask) | fixed_bits;
            CHECK(m.eval(g, bits_to_assignment(bits, vars)) == formula->eval(merged));
        }

        // Shannon expansion of existential quantification.
        VarId q = vars[rng() % n_vars];
        Fn ex = m.exists(f, {q});
        Fn shannon = m.restrict(f, {{q, true}}) | m.restrict(f, {{q, false}});
        CHECK(ex == shannon);
        ++cases;
    }
}

TEST_CASE("canonicity: equivalence iff identical handle") {
    std::mt19937_64 rng(42);
    for (int i = 0; i < 300; ++i) {
        std::size_t n_vars = 1 + rng() % 8;
        Manager m;
        std::vector<VarId> vars;
        for (std::size_t v = 0; v < n_vars; ++v) vars.push_back(m.declare("v" + std::to_string(v)));
        auto fa = random_formula(rng, n_vars, 4);
        auto fb = random_formula(rng, n_vars, 4);
        Fn f = fa->build(m, vars), g = fb->build(m, vars);
        bool same = true;
        for (std::uint32_t bits = 0; bits < (1u << n_vars) && same; ++bits)
            same = fa->eval(bits) == fb->eval(bits);
        CHECK((f == g) == same);
        CHECK(m.equiv(f, g) == same);
    }
}

TEST_CASE("models over too few variables is a usage error") {
    Manager m;
    Fn a = m.mk_var("a"), b = m.mk_var("b");
    Fn f = a & b;
    CHECK_THROWS_AS(m.models(f, {*m.find("a")}), UsageError);
    CHECK(m.models(f, {*m.find("a"), *m.find("b")}).size() == 1);
}

TEST_CASE("models enumerates exactly the satisfying assignments") {
    Manager m;
    Fn a = m.mk_var("a");
    m.declare("b");
    auto ms = m.models(a, {*m.find("a"), *m.find("b")});
    REQUIRE(ms.size() == 2);
    for (const auto& as : ms) CHECK(as.at(*m.find("a")) == true);
}

TEST_CASE("serialization is deterministic and round-trips") {
    auto build = [](Manager& m) {
        Fn a = m.mk_var("a"), b = m.mk_var("b"), c = m.mk_var("c");
        return (a & b) | (!a & c) | (b ^ c);
    };
    Manager m1, m2;
    Fn f1 = build(m1), f2 = build(m2);
    CHECK(m1.serialize(f1) == m2.serialize(f2));
    CHECK(m1.deserialize(m1.serialize(f1)) == f1);
    CHECK(m1.serialize(m1.top()) == m1.serialize(m1.top()));
    CHECK(m1.deserialize(m1.serialize(m1.bottom())) == m1.bottom());
}

TEST_CASE("import rebuilds a function across managers by name") {
    Manager m1;
    Fn a1 = m1.mk_var("a"), b1 = m1.mk_var("b");
    Fn f1 = a1 ^ b1;
    Manager m2;
    m2.declare("b");  // reversed declaration order
    m2.declare("a");
    Fn f2 = m2.import(f1);
    for (bool va : {false, true})
        for (bool vb : {false, true})
            CHECK(m2.eval(f2, {{*m2.find("a"), va}, {*m2.find("b"), vb}}) == (va != vb));
}

TEST_CASE("ite and implies") {
    Manager m;
    Fn a = m.mk_var("a"), b = m.mk_var("b"), c = m.mk_var("c");
    Fn f = m.ite(a, b, c);
    CHECK(m.restrict(f, {{*m.find("a"), true}}) == b);
    CHECK(m.restrict(f, {{*m.find("a"), false}}) == c);
    CHECK(m.implies(a & b, a));
    CHECK(!m.implies(a, a & b));
}
