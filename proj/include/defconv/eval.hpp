#pragma once
// Satisfaction of formulas in a finite structure by exhaustive enumeration,
// and the definable sets they carve out.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "defconv/error.hpp"
#include "defconv/formula.hpp"
#include "defconv/structure.hpp"

namespace defconv {

// Quantifier enumeration is refused when m^depth exceeds this.
inline constexpr double kQuantifierBudget = 1e8;

inline void check_quantifier_budget(std::size_t m, int depth) {
    double cost = std::pow(static_cast<double>(m), depth);
    if (cost > kQuantifierBudget) {
        throw BudgetError("quantifier enumeration needs " + std::to_string(m) + "^" +
                          std::to_string(depth) + " assignments, budget is 1e8");
    }
}

// A subset of the universe, one bit per element.
class DefinableSet {
public:
    DefinableSet() = default;
    explicit DefinableSet(std::size_t m, bool value = false) : bits_(m, value) {}

    std::size_t size() const noexcept { return bits_.size(); }
    bool contains(Element e) const { return bits_.at(e); }
    void set(Element e, bool v = true) { bits_.at(e) = v; }

    std::size_t count() const {
        return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), true));
    }

    std::vector<Element> elements() const {
        std::vector<Element> out;
        for (std::size_t i = 0; i < bits_.size(); ++i) {
            if (bits_[i]) out.push_back(i);
        }
        return out;
    }

    DefinableSet complement() const {
        DefinableSet out(size());
        for (std::size_t i = 0; i < size(); ++i) out.bits_[i] = !bits_[i];
        return out;
    }

    bool operator==(const DefinableSet&) const = default;

private:
    std::vector<bool> bits_;
};

namespace detail {

struct CompiledTerm {
    enum class Kind { slot, value, apply };
    Kind kind = Kind::value;
    std::size_t index = 0;  // slot number or element
    const FunctionSymbol* fn = nullptr;
    std::vector<CompiledTerm> args;
};

struct CompiledNode {
    Formula::Kind kind = Formula::Kind::equality;
    std::size_t slot = 0;  // bound slot for quantifiers
    const RelationSymbol* rel = nullptr;
    std::vector<CompiledTerm> terms;
    std::vector<CompiledNode> children;
};

}  // namespace detail

// A formula resolved against a structure, with variables mapped to slots of
// a flat assignment vector. Free variables occupy slots 0..k-1 in the order
// given at construction.
class CompiledFormula {
public:
    CompiledFormula(const FiniteStructure& s, const Formula& f,
                    const std::vector<std::string>& free_order)
        : s_(&s) {
        auto free = free_variables(f);
        for (const auto& v : free) {
            if (std::find(free_order.begin(), free_order.end(), v) == free_order.end()) {
                throw DomainError("free variable '" + v + "' is not bound by the environment");
            }
        }
        check_quantifier_budget(s.size(), quantifier_depth(f));
        std::map<std::string, std::vector<std::size_t>> scope;
        for (const auto& v : free_order) scope[v].push_back(slots_++);
        arity_ = slots_;
        root_ = compile(f, scope);
    }

    std::size_t arity() const noexcept { return arity_; }

    bool operator()(std::span<const Element> values) const {
        std::vector<Element> env(slots_, 0);
        std::copy(values.begin(), values.begin() + std::min(values.size(), arity_), env.begin());
        return eval(root_, env);
    }

    // Evaluate with a caller-owned scratch buffer of at least slot_count().
    bool evaluate(std::vector<Element>& env) const { return eval(root_, env); }
    std::size_t slot_count() const noexcept { return slots_; }

private:
    using Scope = std::map<std::string, std::vector<std::size_t>>;

    detail::CompiledTerm compile(const Term& t, const Scope& scope) const {
        detail::CompiledTerm out;
        switch (t.kind) {
            case Term::Kind::variable: {
                auto it = scope.find(t.name);
                if (it == scope.end() || it->second.empty()) {
                    throw DomainError("unbound variable '" + t.name + "'");
                }
                out.kind = detail::CompiledTerm::Kind::slot;
                out.index = it->second.back();
                break;
            }
            case Term::Kind::constant: {
                auto v = s_->resolve_constant(t.name);
                if (!v) throw DomainError("unknown constant '" + t.name + "'");
                out.kind = detail::CompiledTerm::Kind::value;
                out.index = *v;
                break;
            }
            case Term::Kind::apply: {
                out.kind = detail::CompiledTerm::Kind::apply;
                out.fn = s_->function(t.name);
                if (!out.fn) throw DomainError("unknown function '" + t.name + "'");
                if (out.fn->arity != t.args.size()) {
                    throw DomainError("arity mismatch for '" + t.name + "'");
                }
                for (const auto& a : t.args) out.args.push_back(compile(a, scope));
                break;
            }
        }
        return out;
    }

    detail::CompiledNode compile(const Formula& f, Scope& scope) {
        detail::CompiledNode out;
        out.kind = f.kind;
        if (f.is_quantifier()) {
            out.slot = slots_++;
            scope[f.name].push_back(out.slot);
            out.children.push_back(compile(f.children.front(), scope));
            scope[f.name].pop_back();
            return out;
        }
        if (f.kind == Formula::Kind::relation) {
            out.rel = s_->relation(f.name);
            if (!out.rel) throw DomainError("unknown relation '" + f.name + "'");
            if (out.rel->arity != f.terms.size()) {
                throw DomainError("arity mismatch for '" + f.name + "'");
            }
        }
        for (const auto& t : f.terms) out.terms.push_back(compile(t, scope));
        for (const auto& c : f.children) out.children.push_back(compile(c, scope));
        return out;
    }

    Element value(const detail::CompiledTerm& t, const std::vector<Element>& env) const {
        switch (t.kind) {
            case detail::CompiledTerm::Kind::slot: return env[t.index];
            case detail::CompiledTerm::Kind::value: return t.index;
            case detail::CompiledTerm::Kind::apply: {
                Element args[8];
                std::vector<Element> wide;
                Element* dst = args;
                if (t.args.size() > 8) {
                    wide.resize(t.args.size());
                    dst = wide.data();
                }
                for (std::size_t i = 0; i < t.args.size(); ++i) dst[i] = value(t.args[i], env);
                return s_->apply(*t.fn, std::span<const Element>(dst, t.args.size()));
            }
        }
        return 0;
    }

    bool eval(const detail::CompiledNode& n, std::vector<Element>& env) const {
        const std::size_t m = s_->size();
        switch (n.kind) {
            case Formula::Kind::forall:
                for (Element a = 0; a < m; ++a) {
                    env[n.slot] = a;
                    if (!eval(n.children.front(), env)) return false;
                }
                return true;
            case Formula::Kind::exists:
                for (Element a = 0; a < m; ++a) {
                    env[n.slot] = a;
                    if (eval(n.children.front(), env)) return true;
                }
                return false;
            case Formula::Kind::exists_unique: {
                int witnesses = 0;
                for (Element a = 0; a < m; ++a) {
                    env[n.slot] = a;
                    if (eval(n.children.front(), env) && ++witnesses > 1) return false;
                }
                return witnesses == 1;
            }
            case Formula::Kind::conjunction:
                for (const auto& c : n.children) {
                    if (!eval(c, env)) return false;
                }
                return true;
            case Formula::Kind::disjunction:
                for (const auto& c : n.children) {
                    if (eval(c, env)) return true;
                }
                return false;
            case Formula::Kind::negation: return !eval(n.children.front(), env);
            case Formula::Kind::implies:
                return !eval(n.children[0], env) || eval(n.children[1], env);
            case Formula::Kind::relation: {
                Element args[8];
                std::vector<Element> wide;
                Element* dst = args;
                if (n.terms.size() > 8) {
                    wide.resize(n.terms.size());
                    dst = wide.data();
                }
                for (std::size_t i = 0; i < n.terms.size(); ++i) dst[i] = value(n.terms[i], env);
                return s_->holds(*n.rel, std::span<const Element>(dst, n.terms.size()));
            }
            case Formula::Kind::equality:
                return value(n.terms[0], env) == value(n.terms[1], env);
        }
        return false;
    }

    const FiniteStructure* s_;
    std::size_t slots_ = 0;
    std::size_t arity_ = 0;
    detail::CompiledNode root_;
};

inline bool eval_formula(const FiniteStructure& s, const Formula& f,
                         const std::map<std::string, Element>& env) {
    std::vector<std::string> order;
    std::vector<Element> values;
    for (const auto& [name, value] : env) {
        if (value >= s.size()) {
            throw DomainError("variable '" + name + "' bound to " + std::to_string(value) +
                              ", outside the universe");
        }
        order.push_back(name);
        values.push_back(value);
    }
    CompiledFormula compiled(s, f, order);
    return compiled(values);
}

inline DefinableSet definable_set(const FiniteStructure& s, const Formula& f,
                                  const std::string& free_var) {
    auto free = free_variables(f);
    if (free.size() != 1 || *free.begin() != free_var) {
        throw DomainError("definable_set needs exactly one free variable '" + free_var +
                          "', formula has " + std::to_string(free.size()));
    }
    CompiledFormula compiled(s, f, {free_var});
    DefinableSet out(s.size());
    std::vector<Element> env(compiled.slot_count(), 0);
    for (Element a = 0; a < s.size(); ++a) {
        env[0] = a;
        out.set(a, compiled.evaluate(env));
    }
    return out;
}

}  // namespace defconv
