#pragma once
// Certification of a definable commutative semigroup with neutral element.
//
// theta(x, y, z) is read as x + y = z. The four axioms checked are
//   1. forall x y exists! z theta(x, y, z)
//   2. forall x y z (theta(x, y, z) <-> theta(y, x, z))
//   3. forall x y z w ((exists v (theta(x, y, v) & theta(v, z, w)))
//                      <-> (exists u (theta(y, z, u) & theta(x, u, w))))
//   4. exists x forall y theta(x, y, y)
// All are decided by exhaustive scans over the tabulated relation; the
// first counterexample in lexicographic index order is reported.

#include <bit>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "defconv/error.hpp"
#include "defconv/eval.hpp"
#include "defconv/formula.hpp"
#include "defconv/parser.hpp"
#include "defconv/structure.hpp"

namespace defconv {

struct AxiomResult {
    std::string name;
    bool passed = false;
    std::vector<Element> counterexample;  // empty when passed or no tuple applies
    std::string note;
};

struct SemigroupCertificate {
    std::size_t universe_size = 0;
    std::uint64_t structure_id = 0;
    std::vector<std::vector<Element>> add_table;  // filled when axiom 1 holds
    std::optional<Element> zero;
    bool zero_unique = false;
    std::vector<AxiomResult> axioms;

    bool passed() const {
        if (axioms.size() != 4 || !zero || !zero_unique) return false;
        for (const auto& a : axioms) {
            if (!a.passed) return false;
        }
        return true;
    }

    const AxiomResult* first_failure() const {
        for (const auto& a : axioms) {
            if (!a.passed) return &a;
        }
        return nullptr;
    }
};

namespace detail {

// theta tabulated as bitsets: row (x, y) holds { z : theta(x, y, z) }.
class TernaryTable {
public:
    explicit TernaryTable(std::size_t m) : m_(m), words_((m + 63) / 64), bits_(m * m * words_, 0) {}

    void set(Element x, Element y, Element z) {
        bits_[(x * m_ + y) * words_ + z / 64] |= std::uint64_t{1} << (z % 64);
    }
    bool test(Element x, Element y, Element z) const {
        return (bits_[(x * m_ + y) * words_ + z / 64] >> (z % 64)) & 1u;
    }
    const std::uint64_t* row(Element x, Element y) const { return &bits_[(x * m_ + y) * words_]; }
    std::size_t words() const noexcept { return words_; }

    std::size_t count(Element x, Element y) const {
        std::size_t c = 0;
        const std::uint64_t* r = row(x, y);
        for (std::size_t w = 0; w < words_; ++w) c += static_cast<std::size_t>(std::popcount(r[w]));
        return c;
    }

private:
    std::size_t m_;
    std::size_t words_;
    std::vector<std::uint64_t> bits_;
};

inline void or_into(std::vector<std::uint64_t>& dst, const std::uint64_t* src) {
    for (std::size_t w = 0; w < dst.size(); ++w) dst[w] |= src[w];
}

}  // namespace detail

inline SemigroupCertificate verify_semigroup(const FiniteStructure& s, const Formula& theta) {
    auto free = free_variables(theta);
    if (free != std::set<std::string>{"x", "y", "z"}) {
        throw DomainError("semigroup formula must have exactly the free variables x, y, z; found " +
                          std::to_string(free.size()));
    }
    const std::size_t m = s.size();
    check_quantifier_budget(m, 3 + quantifier_depth(theta));

    CompiledFormula compiled(s, theta, {"x", "y", "z"});
    detail::TernaryTable table(m);
    std::vector<Element> env(compiled.slot_count(), 0);
    for (Element x = 0; x < m; ++x) {
        for (Element y = 0; y < m; ++y) {
            for (Element z = 0; z < m; ++z) {
                env[0] = x;
                env[1] = y;
                env[2] = z;
                if (compiled.evaluate(env)) table.set(x, y, z);
            }
        }
    }

    SemigroupCertificate cert;
    cert.universe_size = m;
    cert.structure_id = s.id();

    AxiomResult total{"total_unique", true, {}, {}};
    for (Element x = 0; x < m && total.passed; ++x) {
        for (Element y = 0; y < m; ++y) {
            std::size_t c = table.count(x, y);
            if (c != 1) {
                total.passed = false;
                total.counterexample = {x, y};
                total.note = std::to_string(c) + " values of z satisfy theta(x, y, z)";
                break;
            }
        }
    }
    if (total.passed) {
        cert.add_table.assign(m, std::vector<Element>(m, 0));
        for (Element x = 0; x < m; ++x) {
            for (Element y = 0; y < m; ++y) {
                const std::uint64_t* r = table.row(x, y);
                for (std::size_t w = 0; w < table.words(); ++w) {
                    if (r[w]) {
                        cert.add_table[x][y] = w * 64 + static_cast<std::size_t>(std::countr_zero(r[w]));
                        break;
                    }
                }
            }
        }
    }

    AxiomResult commutative{"commutative", true, {}, {}};
    for (Element x = 0; x < m && commutative.passed; ++x) {
        for (Element y = 0; y < m && commutative.passed; ++y) {
            for (Element z = 0; z < m; ++z) {
                if (table.test(x, y, z) != table.test(y, x, z)) {
                    commutative.passed = false;
                    commutative.counterexample = {x, y, z};
                    commutative.note = "theta(x, y, z) and theta(y, x, z) differ";
                    break;
                }
            }
        }
    }

    AxiomResult associative{"associative", true, {}, {}};
    std::vector<std::uint64_t> lhs(table.words()), rhs(table.words());
    for (Element x = 0; x < m && associative.passed; ++x) {
        for (Element y = 0; y < m && associative.passed; ++y) {
            for (Element z = 0; z < m && associative.passed; ++z) {
                std::fill(lhs.begin(), lhs.end(), 0);
                std::fill(rhs.begin(), rhs.end(), 0);
                for (Element v = 0; v < m; ++v) {
                    if (table.test(x, y, v)) detail::or_into(lhs, table.row(v, z));
                    if (table.test(y, z, v)) detail::or_into(rhs, table.row(x, v));
                }
                for (std::size_t w = 0; w < lhs.size(); ++w) {
                    std::uint64_t diff = lhs[w] ^ rhs[w];
                    if (diff) {
                        Element bad = w * 64 + static_cast<std::size_t>(std::countr_zero(diff));
                        associative.passed = false;
                        associative.counterexample = {x, y, z, bad};
                        associative.note = "(x + y) + z and x + (y + z) differ at w";
                        break;
                    }
                }
            }
        }
    }

    AxiomResult neutral{"neutral", false, {}, {}};
    std::vector<Element> candidates;
    for (Element x = 0; x < m; ++x) {
        bool ok = true;
        for (Element y = 0; y < m && ok; ++y) ok = table.test(x, y, y);
        if (ok) candidates.push_back(x);
    }
    if (candidates.empty()) {
        neutral.note = "no element x satisfies theta(x, y, y) for all y";
    } else {
        neutral.passed = true;
        cert.zero = candidates.front();
        cert.zero_unique = candidates.size() == 1;
        if (!cert.zero_unique) {
            neutral.note = std::to_string(candidates.size()) + " neutral elements";
        }
    }

    cert.axioms = {std::move(total), std::move(commutative), std::move(associative),
                   std::move(neutral)};
    return cert;
}

// theta(x, y, z) synthesized from a binary function symbol: f(x, y) = z.
inline Formula table_formula(const FiniteStructure& s, const std::string& fn) {
    const FunctionSymbol* f = s.function(fn);
    if (!f) throw InputError("semigroup function '" + fn + "' is not declared");
    if (f->arity != 2) throw InputError("semigroup function '" + fn + "' must have arity 2");
    return Formula::equality(Term::apply(fn, {Term::variable("x"), Term::variable("y")}),
                             Term::variable("z"));
}

// Certify the semigroup declared by the structure itself.
inline SemigroupCertificate verify_semigroup(const FiniteStructure& s) {
    const SemigroupSpec& spec = s.semigroup();
    switch (spec.kind) {
        case SemigroupSpec::Kind::formula:
            return verify_semigroup(s, parse_formula(spec.text, s));
        case SemigroupSpec::Kind::function:
            return verify_semigroup(s, table_formula(s, spec.text));
        case SemigroupSpec::Kind::none: break;
    }
    throw InputError("structure declares no semigroup");
}

// Verified addition table; only constructible from a passing certificate.
class Semigroup {
public:
    explicit Semigroup(const SemigroupCertificate& cert) {
        if (!cert.passed()) {
            const AxiomResult* bad = cert.first_failure();
            throw DomainError("semigroup certificate did not pass" +
                              (bad ? ": axiom '" + bad->name + "' fails" : std::string()));
        }
        m_ = cert.universe_size;
        id_ = cert.structure_id;
        zero_ = *cert.zero;
        table_.resize(m_ * m_);
        for (Element x = 0; x < m_; ++x) {
            for (Element y = 0; y < m_; ++y) table_[x * m_ + y] = cert.add_table[x][y];
        }
    }

    std::size_t size() const noexcept { return m_; }
    std::uint64_t id() const noexcept { return id_; }
    Element zero() const noexcept { return zero_; }
    Element add(Element x, Element y) const noexcept { return table_[x * m_ + y]; }
    std::span<const Element> row(Element x) const noexcept {
        return {table_.data() + x * m_, m_};
    }

private:
    std::size_t m_ = 0;
    std::uint64_t id_ = 0;
    Element zero_ = 0;
    std::vector<Element> table_;
};

}  // namespace defconv
