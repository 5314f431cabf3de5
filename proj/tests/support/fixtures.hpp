#pragma once
// Structures and random inputs shared by the unit and acceptance tests.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "defconv/algebra.hpp"
#include "defconv/measure.hpp"
#include "defconv/semigroup.hpp"
#include "defconv/structure.hpp"

namespace fixtures {

using defconv::Element;
using defconv::FiniteStructure;
using defconv::Measure;
using defconv::Semigroup;
using defconv::SemigroupSpec;

using BinaryOp = std::function<Element(Element, Element)>;

inline std::vector<Element> tabulate(std::size_t m, const BinaryOp& op) {
    std::vector<Element> t(m * m);
    for (Element x = 0; x < m; ++x) {
        for (Element y = 0; y < m; ++y) t[x * m + y] = op(x, y);
    }
    return t;
}

// Structure whose semigroup is given by the function symbol "add".
inline FiniteStructure with_add_table(std::size_t m, std::vector<Element> table) {
    FiniteStructure s(m);
    s.add_function("add", 2, std::move(table));
    s.set_semigroup({SemigroupSpec::Kind::function, "add"});
    return s;
}

// Structure whose semigroup is the relation theta(x, y, z) <=> add(x, y) = z.
inline FiniteStructure with_theta_relation(std::size_t m, const BinaryOp& op) {
    FiniteStructure s(m);
    std::vector<std::vector<Element>> tuples;
    for (Element x = 0; x < m; ++x) {
        for (Element y = 0; y < m; ++y) tuples.push_back({x, y, op(x, y)});
    }
    s.add_relation("theta", 3, tuples);
    s.set_semigroup({SemigroupSpec::Kind::formula, "theta(x, y, z)"});
    return s;
}

inline FiniteStructure cyclic(std::size_t m) {
    return with_add_table(m, tabulate(m, [m](Element a, Element b) { return (a + b) % m; }));
}

inline FiniteStructure c2_theta() {
    return with_theta_relation(2, [](Element a, Element b) { return (a + b) % 2; });
}

inline FiniteStructure chain_table(std::size_t m) {
    return with_add_table(m, tabulate(m, [](Element a, Element b) { return std::max(a, b); }));
}

// Chain {0 < 1 < ... < m-1}; theta says z is the least upper bound of x and y.
inline FiniteStructure chain_lub(std::size_t m) {
    FiniteStructure s(m);
    std::vector<std::vector<Element>> le;
    for (Element a = 0; a < m; ++a) {
        for (Element b = a; b < m; ++b) le.push_back({a, b});
    }
    s.add_relation("le", 2, le);
    s.set_semigroup({SemigroupSpec::Kind::formula,
                     "le(x, z) & le(y, z) & forall w. (le(x, w) & le(y, w) -> le(z, w))"});
    return s;
}

inline FiniteStructure left_projection() {
    return with_theta_relation(2, [](Element a, Element) { return a; });
}

inline Semigroup certify(const FiniteStructure& s) { return Semigroup(defconv::verify_semigroup(s)); }

struct RandomSemigroup {
    std::string family;
    FiniteStructure structure;
};

inline std::vector<Element> relabel(std::size_t m, const std::vector<Element>& table,
                                    const std::vector<Element>& perm) {
    std::vector<Element> out(m * m);
    for (Element x = 0; x < m; ++x) {
        for (Element y = 0; y < m; ++y) out[perm[x] * m + perm[y]] = perm[table[x * m + y]];
    }
    return out;
}

// A commutative monoid on at most max_m elements, relabeled by a random permutation.
inline RandomSemigroup random_semigroup(std::mt19937_64& rng, std::size_t max_m = 16) {
    auto pick = [&](std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    };
    std::string family;
    std::size_t m = 0;
    BinaryOp op;
    switch (pick(0, 5)) {
        case 0:
            family = "cyclic";
            m = pick(1, max_m);
            op = [m](Element a, Element b) { return (a + b) % m; };
            break;
        case 1: {
            family = "product";
            std::size_t a = pick(2, 4), b = pick(2, std::max<std::size_t>(2, max_m / a));
            m = a * b;
            op = [a, b](Element x, Element y) {
                return ((x / b + y / b) % a) * b + (x % b + y % b) % b;
            };
            break;
        }
        case 2:
            family = "chain";
            m = pick(1, max_m);
            op = [](Element a, Element b) { return std::max(a, b); };
            break;
        case 3:
            family = "truncated";
            m = pick(1, max_m);
            op = [m](Element a, Element b) { return std::min(a + b, m - 1); };
            break;
        case 4: {
            family = "bitwise_or";
            std::size_t bits = 0;
            while ((std::size_t{2} << bits) <= max_m && pick(0, 1)) ++bits;
            m = std::size_t{1} << std::max<std::size_t>(bits, 1);
            op = [](Element a, Element b) { return a | b; };
            break;
        }
        default:
            // Multiplicative monoid mod m; the neutral element is 1.
            family = "multiplicative";
            m = pick(2, max_m);
            op = [m](Element a, Element b) { return (a * b) % m; };
            break;
    }
    std::vector<Element> perm(m);
    std::iota(perm.begin(), perm.end(), Element{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    return {family, with_add_table(m, relabel(m, tabulate(m, op), perm))};
}

// Random point of the simplex; some draws are sparse.
inline std::vector<double> random_weights(std::size_t m, std::mt19937_64& rng) {
    std::exponential_distribution<double> expo(1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    bool sparse = m > 1 && u(rng) < 0.25;
    std::vector<double> w(m);
    double total = 0.0;
    for (auto& x : w) {
        x = (sparse && u(rng) < 0.5) ? 0.0 : expo(rng);
        total += x;
    }
    if (total == 0.0) {
        w[std::uniform_int_distribution<std::size_t>(0, m - 1)(rng)] = 1.0;
        return w;
    }
    for (auto& x : w) x /= total;
    return w;
}

template <class Space>
Measure random_measure(const Space& space, std::mt19937_64& rng) {
    return defconv::make_measure(space, random_weights(space.size(), rng));
}

}  // namespace fixtures
