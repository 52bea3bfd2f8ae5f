#include "mmdiag/mel.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace mmdiag::mel {

namespace {

enum class Tok {
    End,
    Ident,
    Number,
    String,
    Colon,
    Semicolon,
    Assign,   // =
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Dot,
    DotDot,
    Bang,
    Amp,
    Pipe,
    Hash,
};

struct Token {
    Tok kind;
    std::string text;
    int line, col;
};

class Lexer {
public:
    explicit Lexer(const std::string& src) : src_(src) {}

    Token next() {
        skip_ws();
        int line = line_, col = col_;
        if (pos_ >= src_.size()) return {Tok::End, "", line, col};
        char c = src_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string s;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                s += advance();
            return {Tok::Ident, s, line, col};
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::string s;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                s += advance();
            // A '.' belongs to the number unless it starts a '..' range.
            if (pos_ < src_.size() && src_[pos_] == '.' &&
                (pos_ + 1 >= src_.size() || src_[pos_ + 1] != '.')) {
                s += advance();
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                    s += advance();
            }
            if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
                s += advance();
                if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) s += advance();
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                    s += advance();
            }
            return {Tok::Number, s, line, col};
        }
        if (c == '"') {
            advance();
            std::string s;
            while (pos_ < src_.size() && src_[pos_] != '"') s += advance();
            if (pos_ >= src_.size()) throw ParseError(line, col, "unterminated string");
            advance();
            return {Tok::String, s, line, col};
        }
        advance();
        switch (c) {
            case ':': return {Tok::Colon, ":", line, col};
            case ';': return {Tok::Semicolon, ";", line, col};
            case '=': return {Tok::Assign, "=", line, col};
            case '+': return {Tok::Plus, "+", line, col};
            case '-': return {Tok::Minus, "-", line, col};
            case '*': return {Tok::Star, "*", line, col};
            case '/': return {Tok::Slash, "/", line, col};
            case '(': return {Tok::LParen, "(", line, col};
            case ')': return {Tok::RParen, ")", line, col};
            case '{': return {Tok::LBrace, "{", line, col};
            case '}': return {Tok::RBrace, "}", line, col};
            case '[': return {Tok::LBracket, "[", line, col};
            case ']': return {Tok::RBracket, "]", line, col};
            case '!': return {Tok::Bang, "!", line, col};
            case '&': return {Tok::Amp, "&", line, col};
            case '|': return {Tok::Pipe, "|", line, col};
            case '#': return {Tok::Hash, "#", line, col};
            case '.':
                if (pos_ < src_.size() && src_[pos_] == '.') {
                    advance();
                    return {Tok::DotDot, "..", line, col};
                }
                return {Tok::Dot, ".", line, col};
        }
        throw ParseError(line, col, std::string("unexpected character '") + c + "'");
    }

private:
    char advance() {
        char c = src_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }

    void skip_ws() {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                advance();
            } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
                while (pos_ < src_.size() && src_[pos_] != '\n') advance();
            } else {
                break;
            }
        }
    }

    const std::string& src_;
    std::size_t pos_ = 0;
    int line_ = 1, col_ = 1;
};

ExprPtr mk_expr(Expr e) { return std::make_shared<Expr>(std::move(e)); }
BExprPtr mk_bexpr(BExpr e) { return std::make_shared<BExpr>(std::move(e)); }

class Parser {
public:
    Parser(const std::string& src, std::string dir) : lex_(src), dir_(std::move(dir)) {
        cur_ = lex_.next();
    }

    SourceModel parse_model() {
        SourceModel m;
        while (cur_.kind != Tok::End) parse_item(m);
        return m;
    }

    BExprPtr parse_standalone_bexpr() {
        BExprPtr e = parse_bexpr();
        expect(Tok::End, "end of expression");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& msg) { throw ParseError(cur_.line, cur_.col, msg); }

    Token take() {
        Token t = cur_;
        cur_ = lex_.next();
        return t;
    }

    bool at_ident(std::string_view kw) const {
        return cur_.kind == Tok::Ident && cur_.text == kw;
    }

    bool accept(Tok k) {
        if (cur_.kind != k) return false;
        take();
        return true;
    }

    bool accept_ident(std::string_view kw) {
        if (!at_ident(kw)) return false;
        take();
        return true;
    }

    Token expect(Tok k, const std::string& what) {
        if (cur_.kind != k) fail("expected " + what);
        return take();
    }

    void expect_ident(std::string_view kw) {
        if (!at_ident(kw)) fail("expected '" + std::string(kw) + "'");
        take();
    }

    void parse_item(SourceModel& m) {
        if (at_ident("module")) {
            take();
            ModuleDef def;
            def.name = expect(Tok::Ident, "module name").text;
            expect(Tok::LParen, "'('");
            expect(Tok::RParen, "')'");
            while (!at_ident("end")) {
                if (cur_.kind == Tok::End) fail("unterminated module");
                def.body.push_back(parse_statement());
            }
            take();
            accept(Tok::Semicolon);
            m.modules.push_back(std::move(def));
        } else if (cur_.kind == Tok::Hash) {
            take();
            expect_ident("include");
            Token path = expect(Tok::String, "include path");
            std::filesystem::path p(path.text);
            if (p.is_relative()) p = std::filesystem::path(dir_) / p;
            SourceModel inc = parse_file(p.string());
            for (auto& mod : inc.modules) m.modules.push_back(std::move(mod));
            for (auto& st : inc.top) m.top.push_back(std::move(st));
        } else {
            m.top.push_back(parse_statement());
        }
    }

    Statement parse_statement() {
        if (at_ident("invariant")) {
            take();
            InvariantDecl inv{parse_bexpr()};
            expect(Tok::Semicolon, "';'");
            return Statement{std::move(inv)};
        }
        if (at_ident("constant")) {
            take();
            Declaration d = parse_declaration_tail();
            d.constant = true;
            return Statement{std::move(d)};
        }
        if (at_ident("param")) {
            take();
            ParamDecl p;
            p.name = expect(Tok::Ident, "parameter name").text;
            expect(Tok::Assign, "'='");
            Token v = expect(Tok::Number, "integer value");
            p.value = std::stoll(v.text);
            expect(Tok::Semicolon, "';'");
            return Statement{std::move(p)};
        }
        if (at_ident("foreach")) {
            take();
            ForeachBlock fb;
            fb.var = expect(Tok::Ident, "loop variable").text;
            expect_ident("in");
            fb.lo = parse_index_expr();
            expect(Tok::DotDot, "'..'");
            fb.hi = parse_index_expr();
            expect_ident("do");
            while (!at_ident("done")) {
                if (cur_.kind == Tok::End) fail("unterminated foreach");
                fb.body.push_back(parse_statement());
            }
            take();
            accept(Tok::Semicolon);
            return Statement{std::move(fb)};
        }
        if (at_ident("instance")) {
            take();
            InstanceDecl inst;
            inst.line = cur_.line;
            inst.col = cur_.col;
            inst.name = expect(Tok::Ident, "instance name").text;
            expect(Tok::LBracket, "'['");
            inst.lo = parse_index_expr();
            expect(Tok::DotDot, "'..'");
            inst.hi = parse_index_expr();
            expect(Tok::RBracket, "']'");
            expect(Tok::Colon, "':'");
            inst.module = expect(Tok::Ident, "module name").text;
            expect(Tok::LParen, "'('");
            expect(Tok::RParen, "')'");
            expect(Tok::Semicolon, "';'");
            return Statement{std::move(inst)};
        }
        if (at_ident("if")) {
            // Equation guard: if <cond> then <equation> end
            take();
            BExprPtr guard = parse_bexpr();
            expect_ident("then");
            Equation eq = parse_equation();
            expect_ident("end");
            accept(Tok::Semicolon);
            eq.guard = guard;
            return Statement{std::move(eq)};
        }
        if (cur_.kind == Tok::Ident) {
            // Either "name : boolean|real ;" or an equation.
            std::size_t save_line = static_cast<std::size_t>(cur_.line);
            (void)save_line;
            // Peek: declarations have an identifier, ':', then a type keyword.
            // Equations may carry an index before the ':'.
            Token name = cur_;
            (void)name;
            return parse_decl_or_equation();
        }
        fail("expected a statement");
    }

    Declaration parse_declaration_tail() {
        Declaration d;
        d.line = cur_.line;
        d.col = cur_.col;
        d.name = expect(Tok::Ident, "identifier").text;
        expect(Tok::Colon, "':'");
        if (accept_ident("boolean")) {
            d.boolean = true;
        } else if (accept_ident("real")) {
            d.boolean = false;
        } else {
            fail("expected type 'boolean' or 'real'");
        }
        expect(Tok::Semicolon, "';'");
        return d;
    }

    Statement parse_decl_or_equation() {
        Token name = take();
        ExprPtr index;
        if (accept(Tok::LBracket)) {
            index = parse_index_expr();
            expect(Tok::RBracket, "']'");
        }
        expect(Tok::Colon, "':'");
        if (!index && (at_ident("boolean") || at_ident("real"))) {
            Declaration d;
            d.line = name.line;
            d.col = name.col;
            d.name = name.text;
            d.boolean = accept_ident("boolean");
            if (!d.boolean) expect_ident("real");
            expect(Tok::Semicolon, "';'");
            return Statement{std::move(d)};
        }
        Equation eq;
        eq.line = name.line;
        eq.col = name.col;
        eq.name = name.text;
        eq.name_index = index;
        eq.lhs = parse_expr();
        expect(Tok::Assign, "'='");
        eq.rhs = parse_expr();
        expect(Tok::Semicolon, "';'");
        return Statement{std::move(eq)};
    }

    Equation parse_equation() {
        Token name = expect(Tok::Ident, "equation name");
        Equation eq;
        eq.line = name.line;
        eq.col = name.col;
        eq.name = name.text;
        if (accept(Tok::LBracket)) {
            eq.name_index = parse_index_expr();
            expect(Tok::RBracket, "']'");
        }
        expect(Tok::Colon, "':'");
        eq.lhs = parse_expr();
        expect(Tok::Assign, "'='");
        eq.rhs = parse_expr();
        return eq;
    }

    // Boolean grammar: or-expr := and-expr ('|' and-expr)*
    //                  and-expr := unary ('&' unary)*
    //                  unary := '!' unary | '(' or-expr ')' | ref | true | false
    BExprPtr parse_bexpr() {
        BExprPtr e = parse_band();
        while (accept(Tok::Pipe)) {
            BExpr n;
            n.kind = BExpr::Kind::Or;
            n.a = e;
            n.b = parse_band();
            e = mk_bexpr(std::move(n));
        }
        return e;
    }

    BExprPtr parse_band() {
        BExprPtr e = parse_bunary();
        while (accept(Tok::Amp)) {
            BExpr n;
            n.kind = BExpr::Kind::And;
            n.a = e;
            n.b = parse_bunary();
            e = mk_bexpr(std::move(n));
        }
        return e;
    }

    BExprPtr parse_bunary() {
        if (accept(Tok::Bang)) {
            BExpr n;
            n.kind = BExpr::Kind::Not;
            n.a = parse_bunary();
            return mk_bexpr(std::move(n));
        }
        if (accept(Tok::LParen)) {
            BExprPtr e = parse_bexpr();
            expect(Tok::RParen, "')'");
            return e;
        }
        if (cur_.kind == Tok::Ident) {
            if (at_ident("true") || at_ident("false")) {
                BExpr n;
                n.kind = BExpr::Kind::Const;
                n.value = take().text == "true";
                return mk_bexpr(std::move(n));
            }
            BExpr n;
            n.kind = BExpr::Kind::Ref;
            n.ref = parse_ref();
            return mk_bexpr(std::move(n));
        }
        fail("expected a Boolean expression");
    }

    SymRef parse_ref() {
        SymRef r;
        r.base = expect(Tok::Ident, "identifier").text;
        if (cur_.kind == Tok::LBracket) {
            take();
            r.index = parse_index_expr();
            expect(Tok::RBracket, "']'");
            expect(Tok::Dot, "'.'");
            r.member = expect(Tok::Ident, "member name").text;
        }
        return r;
    }

    // Integer expressions for ranges and indices: + and - over idents/literals.
    ExprPtr parse_index_expr() {
        ExprPtr e = parse_index_atom();
        while (cur_.kind == Tok::Plus || cur_.kind == Tok::Minus) {
            bool add = take().kind == Tok::Plus;
            Expr n;
            n.kind = add ? Expr::Kind::Add : Expr::Kind::Sub;
            n.a = e;
            n.b = parse_index_atom();
            e = mk_expr(std::move(n));
        }
        return e;
    }

    ExprPtr parse_index_atom() {
        if (cur_.kind == Tok::Number) {
            Expr n;
            n.kind = Expr::Kind::Number;
            n.number = take().text;
            return mk_expr(std::move(n));
        }
        if (cur_.kind == Tok::Ident) {
            Expr n;
            n.kind = Expr::Kind::Ref;
            n.ref.base = take().text;
            return mk_expr(std::move(n));
        }
        fail("expected an index expression");
    }

    ExprPtr parse_expr() { return parse_additive(); }

    ExprPtr parse_additive() {
        ExprPtr e = parse_multiplicative();
        while (cur_.kind == Tok::Plus || cur_.kind == Tok::Minus) {
            bool add = take().kind == Tok::Plus;
            Expr n;
            n.kind = add ? Expr::Kind::Add : Expr::Kind::Sub;
            n.a = e;
            n.b = parse_multiplicative();
            e = mk_expr(std::move(n));
        }
        return e;
    }

    ExprPtr parse_multiplicative() {
        ExprPtr e = parse_unary();
        while (cur_.kind == Tok::Star || cur_.kind == Tok::Slash) {
            bool mul = take().kind == Tok::Star;
            Expr n;
            n.kind = mul ? Expr::Kind::Mul : Expr::Kind::Div;
            n.a = e;
            n.b = parse_unary();
            e = mk_expr(std::move(n));
        }
        return e;
    }

    ExprPtr parse_unary() {
        if (accept(Tok::Minus)) {
            Expr n;
            n.kind = Expr::Kind::Neg;
            n.a = parse_unary();
            return mk_expr(std::move(n));
        }
        return parse_primary();
    }

    ExprPtr parse_primary() {
        if (cur_.kind == Tok::Number) {
            Expr n;
            n.kind = Expr::Kind::Number;
            n.number = take().text;
            return mk_expr(std::move(n));
        }
        if (accept(Tok::LParen)) {
            ExprPtr e = parse_expr();
            expect(Tok::RParen, "')'");
            return e;
        }
        if (at_ident("if")) {
            take();
            Expr n;
            n.kind = Expr::Kind::Ite;
            n.cond = parse_bexpr();
            expect_ident("then");
            n.a = parse_expr();
            expect_ident("else");
            n.b = parse_expr();
            return mk_expr(std::move(n));
        }
        if (at_ident("der")) {
            take();
            expect(Tok::LParen, "'('");
            Expr n;
            n.kind = Expr::Kind::Der;
            n.a = parse_expr();
            expect(Tok::RParen, "')'");
            return mk_expr(std::move(n));
        }
        if (at_ident("sum")) {
            take();
            expect(Tok::LBrace, "'{'");
            Expr n;
            n.kind = Expr::Kind::Sum;
            n.loop_var = expect(Tok::Ident, "loop variable").text;
            expect_ident("in");
            n.lo = parse_index_expr();
            expect(Tok::DotDot, "'..'");
            n.hi = parse_index_expr();
            expect(Tok::Colon, "':'");
            n.a = parse_expr();
            expect(Tok::RBrace, "'}'");
            return mk_expr(std::move(n));
        }
        if (cur_.kind == Tok::Ident) {
            Expr n;
            n.kind = Expr::Kind::Ref;
            n.ref = parse_ref();
            return mk_expr(std::move(n));
        }
        fail("expected an expression");
    }

    Lexer lex_;
    Token cur_{Tok::End, "", 0, 0};
    std::string dir_;
};

}  // namespace

SourceModel parse(const std::string& text) { return Parser(text, ".").parse_model(); }

SourceModel parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open model file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    std::string text = ss.str();
    return Parser(text, std::filesystem::path(path).parent_path().string()).parse_model();
}

BExprPtr parse_bool_expr(const std::string& text) {
    return Parser(text, ".").parse_standalone_bexpr();
}

const Symbol* FlatModel::find_symbol(const std::string& name) const {
    for (const auto& s : symbols)
        if (s.name == name) return &s;
    return nullptr;
}

namespace {

struct Scope {
    std::string prefix;                     // "" at top level, "c[2]." inside instances
    const std::set<std::string>* locals;    // names declared by the enclosing module
};

class Flattener {
public:
    explicit Flattener(const SourceModel& ast, const std::map<std::string, long long>& params)
        : ast_(ast), params_(params) {
        for (const auto& m : ast.modules) {
            if (!modules_.emplace(m.name, &m).second)
                throw ModelError("duplicate module definition: " + m.name);
        }
    }

    FlatModel run() {
        std::map<std::string, long long> env = params_;
        Scope scope{"", nullptr};
        declare_pass(ast_.top, scope, env);
        body_pass(ast_.top, scope, env);

        std::set<std::string> eq_names;
        for (const auto& eq : out_.equations)
            if (!eq_names.insert(eq.name).second)
                throw ModelError("duplicate equation name after flattening: " + eq.name);
        return std::move(out_);
    }

private:
    long long eval_int(const ExprPtr& e, const std::map<std::string, long long>& env) {
        switch (e->kind) {
            case Expr::Kind::Number: {
                if (e->number.find_first_of(".eE") != std::string::npos)
                    throw ModelError("expected an integer, got " + e->number);
                return std::stoll(e->number);
            }
            case Expr::Kind::Ref: {
                auto it = env.find(e->ref.base);
                if (it == env.end())
                    throw ModelError("unresolved parameter: " + e->ref.base);
                return it->second;
            }
            case Expr::Kind::Add: return eval_int(e->a, env) + eval_int(e->b, env);
            case Expr::Kind::Sub: return eval_int(e->a, env) - eval_int(e->b, env);
            case Expr::Kind::Neg: return -eval_int(e->a, env);
            default: throw ModelError("unsupported index expression");
        }
    }

    void declare_symbol(const std::string& name, SymbolKind kind) {
        if (declared_.contains(name)) throw ModelError("duplicate declaration: " + name);
        declared_.insert(name);
        out_.symbols.push_back({name, kind});
    }

    // Registers declarations and instance symbols so equations may refer to
    // symbols declared later in the same scope.
    void declare_pass(const std::vector<Statement>& stmts, const Scope& scope,
                      std::map<std::string, long long>& env) {
        for (const auto& st : stmts) {
            if (const auto* d = std::get_if<Declaration>(&st.node)) {
                SymbolKind kind = d->boolean ? SymbolKind::Mode
                                 : d->constant ? SymbolKind::Constant
                                               : SymbolKind::Unknown;
                declare_symbol(scope.prefix + d->name, kind);
            } else if (const auto* p = std::get_if<ParamDecl>(&st.node)) {
                if (!env.contains(p->name)) env[p->name] = p->value;
            } else if (const auto* fb = std::get_if<ForeachBlock>(&st.node)) {
                long long lo = eval_int(fb->lo, env), hi = eval_int(fb->hi, env);
                for (long long k = lo; k <= hi; ++k) {
                    auto child = env;
                    child[fb->var] = k;
                    declare_pass(fb->body, scope, child);
                }
            } else if (const auto* inst = std::get_if<InstanceDecl>(&st.node)) {
                const ModuleDef* mod = lookup_module(inst->module);
                long long lo = eval_int(inst->lo, env), hi = eval_int(inst->hi, env);
                for (long long k = lo; k <= hi; ++k) {
                    Scope inner = module_scope(*mod, inst->name, k);
                    auto child = env;
                    declare_pass(mod->body, inner, child);
                }
            }
        }
    }

    void body_pass(const std::vector<Statement>& stmts, const Scope& scope,
                   std::map<std::string, long long>& env) {
        for (const auto& st : stmts) {
            if (const auto* eq = std::get_if<Equation>(&st.node)) {
                FlatEquation fe;
                fe.name = scope.prefix + eq->name;
                if (eq->name_index)
                    fe.name += "[" + std::to_string(eval_int(eq->name_index, env)) + "]";
                if (eq->guard) fe.guard = resolve_b(eq->guard, scope, env);
                fe.lhs = resolve(eq->lhs, scope, env);
                fe.rhs = resolve(eq->rhs, scope, env);
                out_.equations.push_back(std::move(fe));
            } else if (const auto* inv = std::get_if<InvariantDecl>(&st.node)) {
                BExprPtr c = resolve_b(inv->cond, scope, env);
                if (!out_.invariant) {
                    out_.invariant = c;
                } else {
                    BExpr n;
                    n.kind = BExpr::Kind::And;
                    n.a = out_.invariant;
                    n.b = c;
                    out_.invariant = mk_bexpr(std::move(n));
                }
            } else if (const auto* fb = std::get_if<ForeachBlock>(&st.node)) {
                long long lo = eval_int(fb->lo, env), hi = eval_int(fb->hi, env);
                for (long long k = lo; k <= hi; ++k) {
                    auto child = env;
                    child[fb->var] = k;
                    body_pass(fb->body, scope, child);
                }
            } else if (const auto* inst = std::get_if<InstanceDecl>(&st.node)) {
                const ModuleDef* mod = lookup_module(inst->module);
                long long lo = eval_int(inst->lo, env), hi = eval_int(inst->hi, env);
                for (long long k = lo; k <= hi; ++k) {
                    Scope inner = module_scope(*mod, inst->name, k);
                    auto child = env;
                    body_pass(mod->body, inner, child);
                }
            }
        }
    }

    const ModuleDef* lookup_module(const std::string& name) {
        auto it = modules_.find(name);
        if (it == modules_.end()) throw ModelError("unknown module: " + name);
        return it->second;
    }

    Scope module_scope(const ModuleDef& mod, const std::string& inst, long long k) {
        auto [it, inserted] = module_locals_.try_emplace(&mod);
        if (inserted) {
            for (const auto& st : mod.body)
                if (const auto* d = std::get_if<Declaration>(&st.node)) it->second.insert(d->name);
        }
        return Scope{inst + "[" + std::to_string(k) + "].", &it->second};
    }

    std::string resolve_name(const SymRef& ref, const Scope& scope,
                             const std::map<std::string, long long>& env) {
        if (ref.index) {
            long long k = eval_int(ref.index, env);
            std::string flat = ref.base + "[" + std::to_string(k) + "]." + ref.member;
            if (!declared_.contains(flat))
                throw ModelError("unresolved port: " + flat);
            return flat;
        }
        if (scope.locals && scope.locals->contains(ref.base)) return scope.prefix + ref.base;
        if (declared_.contains(ref.base)) return ref.base;
        throw ModelError("undeclared identifier: " + ref.base);
    }

    BExprPtr resolve_b(const BExprPtr& e, const Scope& scope,
                       const std::map<std::string, long long>& env) {
        BExpr n;
        n.kind = e->kind;
        switch (e->kind) {
            case BExpr::Kind::Const: n.value = e->value; break;
            case BExpr::Kind::Ref: n.ref.base = resolve_name(e->ref, scope, env); break;
            case BExpr::Kind::Not: n.a = resolve_b(e->a, scope, env); break;
            case BExpr::Kind::And:
            case BExpr::Kind::Or:
                n.a = resolve_b(e->a, scope, env);
                n.b = resolve_b(e->b, scope, env);
                break;
        }
        return mk_bexpr(std::move(n));
    }

    ExprPtr resolve(const ExprPtr& e, const Scope& scope,
                    std::map<std::string, long long> env) {
        switch (e->kind) {
            case Expr::Kind::Number: return e;
            case Expr::Kind::Ref: {
                Expr n;
                n.kind = Expr::Kind::Ref;
                n.ref.base = resolve_name(e->ref, scope, env);
                return mk_expr(std::move(n));
            }
            case Expr::Kind::Neg:
            case Expr::Kind::Der: {
                Expr n;
                n.kind = e->kind;
                n.a = resolve(e->a, scope, env);
                return mk_expr(std::move(n));
            }
            case Expr::Kind::Add:
            case Expr::Kind::Sub:
            case Expr::Kind::Mul:
            case Expr::Kind::Div: {
                Expr n;
                n.kind = e->kind;
                n.a = resolve(e->a, scope, env);
                n.b = resolve(e->b, scope, env);
                return mk_expr(std::move(n));
            }
            case Expr::Kind::Ite: {
                Expr n;
                n.kind = Expr::Kind::Ite;
                n.cond = resolve_b(e->cond, scope, env);
                n.a = resolve(e->a, scope, env);
                n.b = resolve(e->b, scope, env);
                return mk_expr(std::move(n));
            }
            case Expr::Kind::Sum: {
                long long lo = eval_int(e->lo, env), hi = eval_int(e->hi, env);
                ExprPtr acc;
                for (long long k = lo; k <= hi; ++k) {
                    auto child = env;
                    child[e->loop_var] = k;
                    ExprPtr term = resolve(e->a, scope, child);
                    if (!acc) {
                        acc = term;
                    } else {
                        Expr n;
                        n.kind = Expr::Kind::Add;
                        n.a = acc;
                        n.b = term;
                        acc = mk_expr(std::move(n));
                    }
                }
                if (!acc) {
                    Expr zero;
                    zero.kind = Expr::Kind::Number;
                    zero.number = "0";
                    acc = mk_expr(std::move(zero));
                }
                return acc;
            }
        }
        throw ModelError("unexpected expression kind");
    }

    const SourceModel& ast_;
    std::map<std::string, long long> params_;
    std::map<std::string, const ModuleDef*> modules_;
    std::map<const ModuleDef*, std::set<std::string>> module_locals_;
    std::set<std::string> declared_;
    FlatModel out_;
};

}  // namespace

FlatModel flatten(const SourceModel& ast, const std::map<std::string, long long>& params) {
    return Flattener(ast, params).run();
}

}  // namespace mmdiag::mel
