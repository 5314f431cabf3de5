#pragma once
// Finite first-order structures: a universe {0..m-1} with interpreted
// function, relation and constant symbols.

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "defconv/error.hpp"

namespace defconv {

using Element = std::size_t;

// How the structure names its semigroup operation, if it does.
struct SemigroupSpec {
    enum class Kind { none, formula, function };
    Kind kind = Kind::none;
    std::string text;  // formula text or function symbol
};

struct FunctionSymbol {
    std::size_t arity = 0;
    std::vector<Element> table;  // row-major, m^arity entries
};

struct RelationSymbol {
    std::size_t arity = 0;
    std::vector<std::uint8_t> members;  // dense indicator, m^arity entries
};

enum class SymbolKind { none, function, relation, constant, element };

namespace detail {

inline std::uint64_t next_structure_id() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1);
}

inline constexpr double kMaxDenseEntries = 1e8;

inline std::size_t dense_size(std::size_t m, std::size_t arity) {
    double total = 1.0;
    for (std::size_t i = 0; i < arity; ++i) total *= static_cast<double>(m);
    if (total > kMaxDenseEntries) {
        throw InputError("symbol table of size " + std::to_string(m) + "^" +
                         std::to_string(arity) + " is too large");
    }
    std::size_t n = 1;
    for (std::size_t i = 0; i < arity; ++i) n *= m;
    return n;
}

}  // namespace detail

class FiniteStructure {
public:
    explicit FiniteStructure(std::size_t universe_size)
        : m_(universe_size), id_(detail::next_structure_id()) {
        if (m_ == 0) throw InputError("universe must be non-empty");
    }

    std::size_t size() const noexcept { return m_; }
    std::uint64_t id() const noexcept { return id_; }

    void name_element(const std::string& name, Element index) {
        check_index(index, "element name '" + name + "'");
        check_fresh(name);
        for (const auto& [other, idx] : element_names_) {
            if (idx == index) {
                throw InputError("element " + std::to_string(index) +
                                 " already named '" + other + "'");
            }
        }
        element_names_[name] = index;
    }

    void add_function(const std::string& symbol, std::size_t arity,
                      std::vector<Element> table) {
        check_fresh(symbol);
        if (arity == 0) throw InputError("function '" + symbol + "' has arity 0");
        if (table.size() != detail::dense_size(m_, arity)) {
            throw InputError("function '" + symbol + "' table has " +
                             std::to_string(table.size()) + " entries, expected " +
                             std::to_string(detail::dense_size(m_, arity)));
        }
        for (Element e : table) check_index(e, "function '" + symbol + "' table entry");
        functions_[symbol] = FunctionSymbol{arity, std::move(table)};
    }

    void add_relation(const std::string& symbol, std::size_t arity,
                      const std::vector<std::vector<Element>>& tuples) {
        check_fresh(symbol);
        if (arity == 0) throw InputError("relation '" + symbol + "' has arity 0");
        RelationSymbol rel{arity, std::vector<std::uint8_t>(detail::dense_size(m_, arity), 0)};
        for (const auto& t : tuples) {
            if (t.size() != arity) {
                throw InputError("relation '" + symbol + "' tuple has arity " +
                                 std::to_string(t.size()) + ", expected " +
                                 std::to_string(arity));
            }
            for (Element e : t) check_index(e, "relation '" + symbol + "' tuple entry");
            rel.members[flat_index(t)] = 1;
        }
        relations_[symbol] = std::move(rel);
    }

    void add_constant(const std::string& symbol, Element index) {
        check_fresh(symbol);
        check_index(index, "constant '" + symbol + "'");
        constants_[symbol] = index;
    }

    void set_semigroup(SemigroupSpec spec) { semigroup_ = std::move(spec); }
    const SemigroupSpec& semigroup() const noexcept { return semigroup_; }

    SymbolKind kind_of(const std::string& name) const {
        if (functions_.count(name)) return SymbolKind::function;
        if (relations_.count(name)) return SymbolKind::relation;
        if (constants_.count(name)) return SymbolKind::constant;
        if (element_names_.count(name)) return SymbolKind::element;
        return SymbolKind::none;
    }

    // Constants, element names and decimal numerals denote elements.
    std::optional<Element> resolve_constant(const std::string& name) const {
        if (auto it = constants_.find(name); it != constants_.end()) return it->second;
        if (auto it = element_names_.find(name); it != element_names_.end()) return it->second;
        if (!name.empty() && name.find_first_not_of("0123456789") == std::string::npos) {
            if (name.size() > 18) return std::nullopt;
            Element idx = std::stoull(name);
            if (idx < m_) return idx;
        }
        return std::nullopt;
    }

    const FunctionSymbol* function(const std::string& name) const {
        auto it = functions_.find(name);
        return it == functions_.end() ? nullptr : &it->second;
    }

    const RelationSymbol* relation(const std::string& name) const {
        auto it = relations_.find(name);
        return it == relations_.end() ? nullptr : &it->second;
    }

    const std::map<std::string, Element>& element_names() const noexcept { return element_names_; }
    const std::map<std::string, Element>& constants() const noexcept { return constants_; }
    const std::map<std::string, FunctionSymbol>& functions() const noexcept { return functions_; }
    const std::map<std::string, RelationSymbol>& relations() const noexcept { return relations_; }

    std::string element_label(Element e) const {
        for (const auto& [name, idx] : element_names_) {
            if (idx == e) return name;
        }
        return std::to_string(e);
    }

    std::size_t flat_index(std::span<const Element> args) const noexcept {
        std::size_t idx = 0;
        for (Element a : args) idx = idx * m_ + a;
        return idx;
    }

    Element apply(const FunctionSymbol& f, std::span<const Element> args) const noexcept {
        return f.table[flat_index(args)];
    }

    bool holds(const RelationSymbol& r, std::span<const Element> args) const noexcept {
        return r.members[flat_index(args)] != 0;
    }

private:
    void check_index(Element e, const std::string& what) const {
        if (e >= m_) {
            throw InputError(what + " = " + std::to_string(e) +
                             " is outside the universe of size " + std::to_string(m_));
        }
    }

    void check_fresh(const std::string& name) const {
        if (name.empty()) throw InputError("empty symbol name");
        if (kind_of(name) != SymbolKind::none) {
            throw InputError("symbol '" + name + "' declared twice");
        }
    }

    std::size_t m_;
    std::uint64_t id_;
    std::map<std::string, Element> element_names_;
    std::map<std::string, FunctionSymbol> functions_;
    std::map<std::string, RelationSymbol> relations_;
    std::map<std::string, Element> constants_;
    SemigroupSpec semigroup_;
};

}  // namespace defconv
