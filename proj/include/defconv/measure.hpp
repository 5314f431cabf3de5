#pragma once
// Probability vectors over the universe of a finite structure.
//
// On a finite structure every subset is definable, so the definable
// probabilities are exactly the points of the probability simplex.

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "defconv/error.hpp"
#include "defconv/numeric.hpp"

namespace defconv {

// Accepted deviation of a weight vector's total from 1.
inline constexpr double kSimplexTolerance = 1e-9;

class Measure {
public:
    // Validates the simplex conditions and rescales so the compensated sum
    // is 1 to working precision.
    Measure(std::vector<double> weights, std::uint64_t structure_id)
        : Measure(std::move(weights), structure_id, true) {}

    // Same validation, weights kept bit-for-bit. Used when reading back
    // weights that were already normalized.
    static Measure verbatim(std::vector<double> weights, std::uint64_t structure_id) {
        return Measure(std::move(weights), structure_id, false);
    }

    std::size_t size() const noexcept { return w_.size(); }
    std::uint64_t structure_id() const noexcept { return structure_id_; }
    std::span<const double> weights() const noexcept { return w_; }
    double operator[](std::size_t i) const { return w_.at(i); }

    bool operator==(const Measure&) const = default;

private:
    Measure(std::vector<double> weights, std::uint64_t structure_id, bool rescale)
        : w_(std::move(weights)), structure_id_(structure_id) {
        if (w_.empty()) throw DomainError("measure over an empty universe");
        for (std::size_t i = 0; i < w_.size(); ++i) {
            if (!std::isfinite(w_[i]) || w_[i] < 0.0) {
                throw DomainError("weight " + std::to_string(i) + " = " + std::to_string(w_[i]) +
                                  " is not a non-negative real");
            }
        }
        double total = compensated_sum(w_);
        if (std::fabs(total - 1.0) > kSimplexTolerance) {
            throw DomainError("weights sum to " + std::to_string(total) + ", expected 1");
        }
        if (rescale && total != 1.0) {
            for (double& x : w_) x /= total;
        }
    }

    std::vector<double> w_;
    std::uint64_t structure_id_;
};

// Anything exposing size() and id(): a FiniteStructure or a Semigroup.
template <class Space>
concept MeasureSpace = requires(const Space& s) {
    { s.size() } -> std::convertible_to<std::size_t>;
    { s.id() } -> std::convertible_to<std::uint64_t>;
};

template <MeasureSpace Space>
Measure make_measure(const Space& space, std::vector<double> weights) {
    if (weights.size() != space.size()) {
        throw DomainError("measure has " + std::to_string(weights.size()) +
                          " weights, universe has " + std::to_string(space.size()));
    }
    return Measure(std::move(weights), space.id());
}

template <MeasureSpace Space>
Measure dirac(const Space& space, std::size_t a) {
    if (a >= space.size()) {
        throw DomainError("dirac index " + std::to_string(a) + " outside universe of size " +
                          std::to_string(space.size()));
    }
    std::vector<double> w(space.size(), 0.0);
    w[a] = 1.0;
    return Measure(std::move(w), space.id());
}

template <MeasureSpace Space>
Measure uniform(const Space& space) {
    return Measure(std::vector<double>(space.size(), 1.0 / static_cast<double>(space.size())),
                   space.id());
}

inline void require_same_space(const Measure& a, const Measure& b) {
    if (a.size() != b.size() || a.structure_id() != b.structure_id()) {
        throw DomainError("measures live on different structures");
    }
}

}  // namespace defconv
