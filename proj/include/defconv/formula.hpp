#pragma once
// First-order formula syntax trees and their canonical text form.

#include <algorithm>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace defconv {

struct Term {
    enum class Kind { variable, constant, apply };

    Kind kind = Kind::variable;
    std::string name;  // variable, constant/element name or numeral, function symbol
    std::vector<Term> args;

    static Term variable(std::string n) { return {Kind::variable, std::move(n), {}}; }
    static Term constant(std::string n) { return {Kind::constant, std::move(n), {}}; }
    static Term apply(std::string f, std::vector<Term> a) {
        return {Kind::apply, std::move(f), std::move(a)};
    }

    bool operator==(const Term&) const = default;
};

struct Formula {
    enum class Kind {
        forall,
        exists,
        exists_unique,
        conjunction,
        disjunction,
        negation,
        implies,
        relation,
        equality
    };

    Kind kind = Kind::equality;
    std::string name;  // bound variable for quantifiers, symbol for relation atoms
    std::vector<Term> terms;
    std::vector<Formula> children;

    static Formula quantifier(Kind k, std::string var, Formula body) {
        return {k, std::move(var), {}, {std::move(body)}};
    }
    static Formula forall(std::string var, Formula body) {
        return quantifier(Kind::forall, std::move(var), std::move(body));
    }
    static Formula exists(std::string var, Formula body) {
        return quantifier(Kind::exists, std::move(var), std::move(body));
    }
    static Formula exists_unique(std::string var, Formula body) {
        return quantifier(Kind::exists_unique, std::move(var), std::move(body));
    }
    static Formula conjunction(std::vector<Formula> parts) {
        return {Kind::conjunction, {}, {}, std::move(parts)};
    }
    static Formula disjunction(std::vector<Formula> parts) {
        return {Kind::disjunction, {}, {}, std::move(parts)};
    }
    static Formula negation(Formula f) { return {Kind::negation, {}, {}, {std::move(f)}}; }
    static Formula implies(Formula lhs, Formula rhs) {
        return {Kind::implies, {}, {}, {std::move(lhs), std::move(rhs)}};
    }
    static Formula relation(std::string symbol, std::vector<Term> args) {
        return {Kind::relation, std::move(symbol), std::move(args), {}};
    }
    static Formula equality(Term lhs, Term rhs) {
        return {Kind::equality, {}, {std::move(lhs), std::move(rhs)}, {}};
    }

    bool is_quantifier() const noexcept {
        return kind == Kind::forall || kind == Kind::exists || kind == Kind::exists_unique;
    }

    bool operator==(const Formula&) const = default;
};

namespace detail {

inline void collect_free(const Term& t, const std::multiset<std::string>& bound,
                         std::set<std::string>& out) {
    if (t.kind == Term::Kind::variable) {
        if (!bound.count(t.name)) out.insert(t.name);
        return;
    }
    for (const auto& a : t.args) collect_free(a, bound, out);
}

inline void collect_free(const Formula& f, std::multiset<std::string>& bound,
                         std::set<std::string>& out) {
    if (f.is_quantifier()) {
        auto it = bound.insert(f.name);
        collect_free(f.children.front(), bound, out);
        bound.erase(it);
        return;
    }
    for (const auto& t : f.terms) collect_free(t, bound, out);
    for (const auto& c : f.children) collect_free(c, bound, out);
}

// Binding strength; a child is parenthesized when its level is below the
// context level. Quantifiers are always parenthesized inside connectives
// because their bodies extend as far right as possible.
inline int level(Formula::Kind k) {
    switch (k) {
        case Formula::Kind::forall:
        case Formula::Kind::exists:
        case Formula::Kind::exists_unique: return 0;
        case Formula::Kind::implies: return 1;
        case Formula::Kind::disjunction: return 2;
        case Formula::Kind::conjunction: return 3;
        case Formula::Kind::negation: return 4;
        default: return 5;
    }
}

inline void print_term(const Term& t, std::string& out) {
    out += t.name;
    if (t.kind != Term::Kind::apply) return;
    out += '(';
    for (std::size_t i = 0; i < t.args.size(); ++i) {
        if (i) out += ", ";
        print_term(t.args[i], out);
    }
    out += ')';
}

inline void print_formula(const Formula& f, int context, std::string& out) {
    int own = level(f.kind);
    bool wrap = own < context;
    if (wrap) out += '(';
    switch (f.kind) {
        case Formula::Kind::forall: out += "forall "; break;
        case Formula::Kind::exists: out += "exists "; break;
        case Formula::Kind::exists_unique: out += "exists! "; break;
        default: break;
    }
    switch (f.kind) {
        case Formula::Kind::forall:
        case Formula::Kind::exists:
        case Formula::Kind::exists_unique:
            out += f.name;
            out += ". ";
            print_formula(f.children.front(), 0, out);
            break;
        case Formula::Kind::implies:
            print_formula(f.children[0], 2, out);
            out += " -> ";
            print_formula(f.children[1], 1, out);
            break;
        case Formula::Kind::disjunction:
        case Formula::Kind::conjunction: {
            const char* op = f.kind == Formula::Kind::conjunction ? " & " : " | ";
            for (std::size_t i = 0; i < f.children.size(); ++i) {
                if (i) out += op;
                print_formula(f.children[i], own + 1, out);
            }
            break;
        }
        case Formula::Kind::negation:
            out += '!';
            print_formula(f.children.front(), 4, out);
            break;
        case Formula::Kind::relation:
            out += f.name;
            out += '(';
            for (std::size_t i = 0; i < f.terms.size(); ++i) {
                if (i) out += ", ";
                print_term(f.terms[i], out);
            }
            out += ')';
            break;
        case Formula::Kind::equality:
            print_term(f.terms[0], out);
            out += " = ";
            print_term(f.terms[1], out);
            break;
    }
    if (wrap) out += ')';
}

inline int quantifier_depth(const Formula& f) {
    int deepest = 0;
    for (const auto& c : f.children) deepest = std::max(deepest, quantifier_depth(c));
    return deepest + (f.is_quantifier() ? 1 : 0);
}

}  // namespace detail

inline std::set<std::string> free_variables(const Formula& f) {
    std::set<std::string> out;
    std::multiset<std::string> bound;
    detail::collect_free(f, bound, out);
    return out;
}

// Maximum nesting depth of quantifiers.
inline int quantifier_depth(const Formula& f) { return detail::quantifier_depth(f); }

// Text that parse_formula maps back to a structurally equal tree.
inline std::string pretty_print(const Formula& f) {
    std::string out;
    detail::print_formula(f, 0, out);
    return out;
}

inline std::string pretty_print(const Term& t) {
    std::string out;
    detail::print_term(t, out);
    return out;
}

}  // namespace defconv
