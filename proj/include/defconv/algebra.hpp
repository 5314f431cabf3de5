#pragma once
// The convolution algebra of probabilities over a verified semigroup:
// mixtures, convolution, translation, powers, exponentials, and the
// total-variation metric used as the finite stand-in for closeness.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "defconv/error.hpp"
#include "defconv/eval.hpp"
#include "defconv/measure.hpp"
#include "defconv/numeric.hpp"
#include "defconv/semigroup.hpp"

namespace defconv {

inline void require_on(const Semigroup& g, const Measure& mu) {
    if (mu.size() != g.size() || mu.structure_id() != g.id()) {
        throw DomainError("measure does not live on the semigroup's structure");
    }
}

// (a * b)(z) = sum over x + y = z of a(x) b(y), for arbitrary real vectors.
inline std::vector<double> convolve_raw(const Semigroup& g, std::span<const double> a,
                                        std::span<const double> b) {
    const std::size_t m = g.size();
    std::vector<KahanSum> acc(m);
    for (Element x = 0; x < m; ++x) {
        if (a[x] == 0.0) continue;
        auto row = g.row(x);
        for (Element y = 0; y < m; ++y) {
            if (b[y] == 0.0) continue;
            acc[row[y]].add(a[x] * b[y]);
        }
    }
    std::vector<double> out(m);
    for (std::size_t z = 0; z < m; ++z) out[z] = acc[z].value();
    return out;
}

// correlate(c, h)(y) = sum over x of c(x) h(x + y); the adjoint of
// convolution by c.
inline std::vector<double> correlate(const Semigroup& g, std::span<const double> c,
                                     std::span<const double> h) {
    const std::size_t m = g.size();
    std::vector<double> out(m);
    for (Element y = 0; y < m; ++y) {
        KahanSum s;
        for (Element x = 0; x < m; ++x) {
            if (c[x] != 0.0) s.add(c[x] * h[g.add(x, y)]);
        }
        out[y] = s.value();
    }
    return out;
}

inline Measure convolve(const Semigroup& g, const Measure& mu, const Measure& nu) {
    require_on(g, mu);
    require_on(g, nu);
    return Measure(convolve_raw(g, mu.weights(), nu.weights()), g.id());
}

// mu * delta_a, computed directly from one column of the table.
inline Measure translate(const Semigroup& g, const Measure& mu, Element a) {
    require_on(g, mu);
    if (a >= g.size()) throw DomainError("translation index " + std::to_string(a) + " out of range");
    std::vector<KahanSum> acc(g.size());
    for (Element x = 0; x < g.size(); ++x) acc[g.add(x, a)].add(mu[x]);
    std::vector<double> out(g.size());
    for (std::size_t z = 0; z < out.size(); ++z) out[z] = acc[z].value();
    return Measure(std::move(out), g.id());
}

inline Measure mix(std::span<const double> coeffs, std::span<const Measure> measures) {
    if (coeffs.size() != measures.size()) {
        throw DomainError("mix: " + std::to_string(coeffs.size()) + " coefficients for " +
                          std::to_string(measures.size()) + " measures");
    }
    if (measures.empty()) throw DomainError("mix of no measures");
    for (double c : coeffs) {
        if (!std::isfinite(c) || c < 0.0) throw DomainError("mix: negative coefficient");
    }
    if (std::fabs(compensated_sum(coeffs) - 1.0) > kSimplexTolerance) {
        throw DomainError("mix: coefficients do not sum to 1");
    }
    for (const auto& mu : measures) require_same_space(measures.front(), mu);
    const std::size_t m = measures.front().size();
    std::vector<double> out(m);
    for (std::size_t i = 0; i < m; ++i) {
        KahanSum s;
        for (std::size_t k = 0; k < measures.size(); ++k) s.add(coeffs[k] * measures[k][i]);
        out[i] = s.value();
    }
    return Measure(std::move(out), measures.front().structure_id());
}

inline Measure mix(std::initializer_list<double> coeffs, std::initializer_list<Measure> measures) {
    std::vector<double> c(coeffs);
    std::vector<Measure> ms(measures);
    return mix(std::span<const double>(c), std::span<const Measure>(ms));
}

// mu^{n*} by binary exponentiation; mu^{0*} = delta_0.
inline Measure conv_power(const Semigroup& g, const Measure& mu, std::size_t n) {
    require_on(g, mu);
    Measure result = dirac(g, g.zero());
    Measure base = mu;
    bool first = true;
    while (n > 0) {
        if (n & 1u) {
            result = first ? base : convolve(g, result, base);
            first = false;
        }
        n >>= 1u;
        if (n > 0) base = convolve(g, base, base);
    }
    return result;
}

inline double tv_distance(const Measure& mu, const Measure& nu) {
    require_same_space(mu, nu);
    KahanSum s;
    for (std::size_t i = 0; i < mu.size(); ++i) s.add(std::fabs(mu[i] - nu[i]));
    return std::clamp(0.5 * s.value(), 0.0, 1.0);
}

inline double measure_of_event(const Measure& mu, const DefinableSet& event) {
    if (event.size() != mu.size()) {
        throw DomainError("event and measure have different universe sizes");
    }
    KahanSum s;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (event.contains(i)) s.add(mu[i]);
    }
    return std::clamp(s.value(), 0.0, 1.0);
}

// Poisson(r) weights p_0..p_N where N is the least index whose upper tail
// P(X > N) is below `tail`.
struct PoissonTruncation {
    std::vector<double> weights;
    double kept_mass = 0.0;
    double tail_mass = 0.0;
};

inline PoissonTruncation poisson_truncation(double rate, double tail) {
    if (!(rate >= 0.0) || !std::isfinite(rate)) throw DomainError("rate must be finite and >= 0");
    if (!(tail > 0.0)) throw DomainError("tolerance must be > 0");
    PoissonTruncation out;
    if (rate == 0.0) {
        out.weights = {1.0};
        out.kept_mass = 1.0;
        return out;
    }
    // Tabulate until the terms are geometrically negligible, then read the
    // tails off backwards so they are accurate even far below 1e-16.
    std::vector<double> p;
    const double log_rate = std::log(rate);
    for (std::size_t n = 0;; ++n) {
        double lp = -rate + static_cast<double>(n) * log_rate - std::lgamma(static_cast<double>(n) + 1.0);
        p.push_back(std::exp(lp));
        if (static_cast<double>(n) > 2.0 * rate + 1.0 && p.back() < tail * 1e-20) break;
        if (p.size() > 50'000'000) throw DomainError("rate too large for series truncation");
    }
    std::vector<double> upper(p.size() + 1, 0.0);  // upper[n] = sum_{k >= n} p_k
    KahanSum acc;
    for (std::size_t n = p.size(); n-- > 0;) {
        acc.add(p[n]);
        upper[n] = acc.value();
    }
    std::size_t N = 0;
    while (N + 1 < p.size() && upper[N + 1] >= tail) ++N;
    out.weights.assign(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(N + 1));
    out.tail_mass = upper[N + 1];
    out.kept_mass = compensated_sum(out.weights);
    return out;
}

enum class ExpMethod { series, scaling_squaring };

namespace detail {

inline Measure conv_exp_series(const Semigroup& g, const Measure& mu, double r, double tol) {
    PoissonTruncation pt = poisson_truncation(r, tol / 2.0);
    const std::size_t m = g.size();
    std::vector<KahanSum> acc(m);
    std::vector<double> power(m, 0.0);
    power[g.zero()] = 1.0;
    for (std::size_t n = 0; n < pt.weights.size(); ++n) {
        if (n > 0) power = convolve_raw(g, power, mu.weights());
        for (std::size_t i = 0; i < m; ++i) acc[i].add(pt.weights[n] * power[i]);
    }
    std::vector<double> out(m);
    for (std::size_t i = 0; i < m; ++i) out[i] = acc[i].value() / pt.kept_mass;
    return Measure(std::move(out), g.id());
}

}  // namespace detail

// e^{r(mu* - 1)} = e^{-r} sum_n r^n/n! mu^{n*}, within total variation tol of
// the exact value.
inline Measure conv_exp(const Semigroup& g, const Measure& mu, double r, double tol,
                        ExpMethod method = ExpMethod::series) {
    require_on(g, mu);
    if (!(r >= 0.0) || !std::isfinite(r)) throw DomainError("conv_exp: r must be finite and >= 0");
    if (!(tol > 0.0)) throw DomainError("conv_exp: tol must be > 0");
    if (r == 0.0) return dirac(g, g.zero());
    if (method == ExpMethod::series) return detail::conv_exp_series(g, mu, r, tol);

    // Halve r until it is at most 1/2, then square back; each squaring at
    // most doubles the total-variation error.
    int halvings = 0;
    double small = r;
    while (small > 0.5) {
        small /= 2.0;
        ++halvings;
    }
    Measure out = detail::conv_exp_series(g, mu, small, std::ldexp(tol, -halvings));
    for (int i = 0; i < halvings; ++i) out = convolve(g, out, out);
    return out;
}

}  // namespace defconv
