#pragma once
// Levy processes on finite timelines: X(0) = delta_0 and
// X(s + t) = X(s) * X(t) whenever s, t and s + t are represented ticks.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "defconv/algebra.hpp"
#include "defconv/error.hpp"
#include "defconv/measure.hpp"
#include "defconv/parallel.hpp"
#include "defconv/semigroup.hpp"

namespace defconv {

struct Fraction {
    std::int64_t num = 0;
    std::int64_t den = 1;

    static Fraction reduced(std::int64_t n, std::int64_t d) {
        if (d == 0) throw DomainError("fraction with zero denominator");
        if (d < 0) {
            n = -n;
            d = -d;
        }
        std::int64_t g = std::gcd(n, d);
        if (g > 1) {
            n /= g;
            d /= g;
        }
        return {n, d};
    }

    double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }

    friend Fraction operator+(const Fraction& a, const Fraction& b) {
        std::int64_t g = std::gcd(a.den, b.den);
        std::int64_t bd = b.den / g;
        return reduced(a.num * bd + b.num * (a.den / g), a.den * bd);
    }
    Fraction divided_by(std::int64_t n) const { return reduced(num, den * n); }

    auto operator<=>(const Fraction& o) const {
        return static_cast<__int128>(num) * o.den <=> static_cast<__int128>(o.num) * den;
    }
    bool operator==(const Fraction& o) const { return num == o.num && den == o.den; }

    std::string str() const {
        return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
    }
};

struct Tick {
    std::optional<Fraction> exact;  // set for grid and rational timelines
    double value = 0.0;
};

class Timeline {
public:
    enum class Kind { uniform_grid, rationals, samples };

    static Timeline uniform_grid(std::size_t N) {
        if (N == 0) throw DomainError("uniform grid needs N >= 1");
        std::vector<Fraction> ticks;
        for (std::size_t k = 0; k <= N; ++k) {
            ticks.push_back(Fraction::reduced(static_cast<std::int64_t>(k), static_cast<std::int64_t>(N)));
        }
        Timeline t(Kind::uniform_grid, std::move(ticks));
        t.grid_ = N;
        return t;
    }

    static Timeline rationals(std::vector<Fraction> points) {
        for (auto& p : points) {
            p = Fraction::reduced(p.num, p.den);
            if (p.num < 0 || p.num > p.den) {
                throw DomainError("rational tick " + p.str() + " is outside [0, 1]");
            }
        }
        points.push_back({0, 1});
        points.push_back({1, 1});
        std::sort(points.begin(), points.end());
        points.erase(std::unique(points.begin(), points.end()), points.end());
        return Timeline(Kind::rationals, std::move(points));
    }

    static Timeline samples(std::vector<double> points) {
        if (points.empty()) throw DomainError("empty sample list");
        for (double p : points) {
            if (!(p >= 0.0 && p <= 1.0)) {
                throw DomainError("sample tick " + std::to_string(p) + " is outside [0, 1]");
            }
        }
        points.push_back(0.0);
        points.push_back(1.0);
        std::sort(points.begin(), points.end());
        points.erase(std::unique(points.begin(), points.end()), points.end());
        Timeline t;
        t.kind_ = Kind::samples;
        for (double p : points) t.ticks_.push_back(Tick{std::nullopt, p});
        return t;
    }

    Kind kind() const noexcept { return kind_; }
    std::size_t grid_size() const noexcept { return grid_; }
    const std::vector<Tick>& ticks() const noexcept { return ticks_; }
    std::size_t size() const noexcept { return ticks_.size(); }
    bool exact() const noexcept { return kind_ != Kind::samples; }

    // Index of the tick equal to t (exact for fractions, within 1e-12 for
    // real samples).
    std::optional<std::size_t> find(const Tick& t) const {
        if (exact() && t.exact) {
            auto it = std::lower_bound(ticks_.begin(), ticks_.end(), *t.exact,
                                       [](const Tick& a, const Fraction& f) { return *a.exact < f; });
            if (it != ticks_.end() && *it->exact == *t.exact) return static_cast<std::size_t>(it - ticks_.begin());
            return std::nullopt;
        }
        auto it = std::lower_bound(ticks_.begin(), ticks_.end(), t.value - 1e-12,
                                   [](const Tick& a, double v) { return a.value < v; });
        if (it != ticks_.end() && std::fabs(it->value - t.value) <= 1e-12) {
            return static_cast<std::size_t>(it - ticks_.begin());
        }
        return std::nullopt;
    }

    Tick sum(const Tick& a, const Tick& b) const {
        if (a.exact && b.exact) {
            Fraction f = *a.exact + *b.exact;
            return Tick{f, f.value()};
        }
        return Tick{std::nullopt, a.value + b.value};
    }

    Tick divided(const Tick& a, std::size_t n) const {
        if (a.exact) {
            Fraction f = a.exact->divided_by(static_cast<std::int64_t>(n));
            return Tick{f, f.value()};
        }
        return Tick{std::nullopt, a.value / static_cast<double>(n)};
    }

    std::string label(std::size_t i) const;

    // Sub-timeline made of the chosen tick indices (0 and 1 are kept).
    Timeline restrict_to(std::vector<std::size_t> indices) const {
        indices.push_back(0);
        indices.push_back(ticks_.size() - 1);
        std::sort(indices.begin(), indices.end());
        indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
        Timeline t;
        t.kind_ = kind_ == Kind::samples ? Kind::samples : Kind::rationals;
        for (std::size_t i : indices) t.ticks_.push_back(ticks_.at(i));
        return t;
    }

private:
    Timeline() = default;
    Timeline(Kind kind, std::vector<Fraction> fractions) : kind_(kind) {
        for (const auto& f : fractions) ticks_.push_back(Tick{f, f.value()});
    }

    Kind kind_ = Kind::rationals;
    std::size_t grid_ = 0;
    std::vector<Tick> ticks_;
};

namespace detail {

inline std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

inline std::string Timeline::label(std::size_t i) const {
    const Tick& t = ticks_.at(i);
    return t.exact ? t.exact->str() : detail::format_real(t.value);
}

struct PathGenerator {
    enum class Kind { root, exponential, external };
    Kind kind = Kind::external;
    std::vector<double> nu;  // root or jump measure weights
    std::size_t grid = 0;    // N for root paths
    double rate = 0.0;       // r for exponential paths
    double tol = 0.0;

    std::string describe() const {
        std::string out;
        switch (kind) {
            case Kind::root: out = "root N=" + std::to_string(grid); break;
            case Kind::exponential:
                out = "exponential r=" + detail::format_real(rate) + " tol=" + detail::format_real(tol);
                break;
            case Kind::external: return "external";
        }
        out += " nu=[";
        for (std::size_t i = 0; i < nu.size(); ++i) {
            if (i) out += ' ';
            out += detail::format_real(nu[i]);
        }
        return out + "]";
    }
};

struct LevyViolation {
    enum class Kind { origin, increment, divisibility };
    Kind kind = Kind::origin;
    double violation = 0.0;
    std::size_t s = 0;  // tick indices; for divisibility s is t/n and n is stored
    std::size_t t = 0;
    std::size_t n = 0;
};

struct LevyValidation {
    double tol = 0.0;
    double origin_error = 0.0;
    double worst_increment = 0.0;
    double worst_divisibility = 0.0;
    std::size_t increment_pairs = 0;
    std::size_t divisibility_pairs = 0;
    std::optional<LevyViolation> worst;  // worst violation among failing checks
    bool origin_ok = false;
    bool increments_ok = false;
    bool divisibility_ok = false;

    bool passed() const { return origin_ok && increments_ok && divisibility_ok; }
};

struct LevyPath {
    Timeline timeline;
    std::vector<Measure> marginals;
    PathGenerator generator;
    std::optional<LevyValidation> validation;
};

inline LevyPath levy_from_root(const Semigroup& g, const Measure& nu, std::size_t N,
                               std::size_t threads = 1) {
    require_on(g, nu);
    if (N == 0) throw DomainError("levy_from_root: N must be >= 1");
    Timeline t = Timeline::uniform_grid(N);
    std::vector<std::optional<Measure>> slots(N + 1);
    parallel_for(N + 1, threads, [&](std::size_t k) { slots[k] = conv_power(g, nu, k); });
    std::vector<Measure> marginals;
    for (auto& s : slots) marginals.push_back(std::move(*s));
    PathGenerator gen{PathGenerator::Kind::root,
                      std::vector<double>(nu.weights().begin(), nu.weights().end()), N, 0.0, 0.0};
    return LevyPath{std::move(t), std::move(marginals), std::move(gen), std::nullopt};
}

inline LevyPath levy_from_exponential(const Semigroup& g, const Measure& nu, double r,
                                      const Timeline& t, double tol, std::size_t threads = 1) {
    require_on(g, nu);
    if (!(r >= 0.0) || !std::isfinite(r)) throw DomainError("levy_from_exponential: r must be >= 0");
    if (!(tol > 0.0)) throw DomainError("levy_from_exponential: tol must be > 0");
    // X(t/n)^{n*} multiplies the truncation error of X(t/n) by about n, so
    // each marginal is computed tighter by the largest tick ratio. Every
    // marginal stays within tol of the exact exponential.
    double lo = 0.0, hi = 0.0;
    for (const auto& tick : t.ticks()) {
        if (tick.value > 0.0 && (lo == 0.0 || tick.value < lo)) lo = tick.value;
        hi = std::max(hi, tick.value);
    }
    const double inner_tol = lo > 0.0 ? tol / (1.0 + hi / lo) : tol;
    std::vector<std::optional<Measure>> slots(t.size());
    parallel_for(t.size(), threads, [&](std::size_t i) {
        slots[i] = conv_exp(g, nu, t.ticks()[i].value * r, inner_tol);
    });
    std::vector<Measure> marginals;
    for (auto& s : slots) marginals.push_back(std::move(*s));
    PathGenerator gen{PathGenerator::Kind::exponential,
                      std::vector<double>(nu.weights().begin(), nu.weights().end()), 0, r, tol};
    return LevyPath{t, std::move(marginals), std::move(gen), std::nullopt};
}

namespace detail {

// Orders violations by (amount, s, t) with the larger amount first.
inline bool worse(const LevyViolation& a, const LevyViolation& b) {
    if (a.violation != b.violation) return a.violation > b.violation;
    if (a.s != b.s) return a.s < b.s;
    return a.t < b.t;
}

}  // namespace detail

inline LevyValidation validate_levy(const Semigroup& g, const LevyPath& path, double tol,
                                    std::size_t threads = 1) {
    const Timeline& tl = path.timeline;
    if (path.marginals.size() != tl.size()) {
        throw DomainError("path has " + std::to_string(path.marginals.size()) + " marginals for " +
                          std::to_string(tl.size()) + " ticks");
    }
    for (const auto& mu : path.marginals) require_on(g, mu);

    LevyValidation rep;
    rep.tol = tol;
    rep.origin_error = tv_distance(path.marginals.front(), dirac(g, g.zero()));
    rep.origin_ok = rep.origin_error <= tol;
    std::optional<LevyViolation> worst;
    auto consider = [&](const LevyViolation& v) {
        if (v.violation > tol && (!worst || detail::worse(v, *worst))) worst = v;
    };
    if (!rep.origin_ok) consider({LevyViolation::Kind::origin, rep.origin_error, 0, 0, 0});

    const std::size_t T = tl.size();
    struct Increment {
        std::size_t s, t, sum;
    };
    std::vector<Increment> pairs;
    for (std::size_t i = 0; i < T; ++i) {
        for (std::size_t j = i; j < T; ++j) {
            if (auto k = tl.find(tl.sum(tl.ticks()[i], tl.ticks()[j]))) pairs.push_back({i, j, *k});
        }
    }
    std::vector<double> inc_err(pairs.size());
    parallel_for(pairs.size(), threads, [&](std::size_t p) {
        const auto& pr = pairs[p];
        inc_err[p] = tv_distance(path.marginals[pr.sum],
                                 convolve(g, path.marginals[pr.s], path.marginals[pr.t]));
    });
    rep.increment_pairs = pairs.size();
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        rep.worst_increment = std::max(rep.worst_increment, inc_err[p]);
        consider({LevyViolation::Kind::increment, inc_err[p], pairs[p].s, pairs[p].t, 0});
    }
    rep.increments_ok = rep.worst_increment <= tol;

    struct Division {
        std::size_t part, whole, n;
    };
    std::vector<Division> divisions;
    const double smallest = T > 1 ? tl.ticks()[1].value : 1.0;
    for (std::size_t i = 1; i < T; ++i) {
        const Tick& whole = tl.ticks()[i];
        for (std::size_t n = 2; whole.value / static_cast<double>(n) >= smallest - 1e-12; ++n) {
            if (auto k = tl.find(tl.divided(whole, n))) divisions.push_back({*k, i, n});
        }
    }
    std::vector<double> div_err(divisions.size());
    parallel_for(divisions.size(), threads, [&](std::size_t p) {
        const auto& d = divisions[p];
        div_err[p] = tv_distance(conv_power(g, path.marginals[d.part], d.n), path.marginals[d.whole]);
    });
    rep.divisibility_pairs = divisions.size();
    for (std::size_t p = 0; p < divisions.size(); ++p) {
        rep.worst_divisibility = std::max(rep.worst_divisibility, div_err[p]);
        consider({LevyViolation::Kind::divisibility, div_err[p], divisions[p].part,
                  divisions[p].whole, divisions[p].n});
    }
    rep.divisibility_ok = rep.worst_divisibility <= tol;
    rep.worst = worst;
    return rep;
}

// Largest tick-wise total-variation distance between two paths on the same
// ticks.
inline double compare_paths(const LevyPath& a, const LevyPath& b) {
    if (a.marginals.size() != b.marginals.size()) throw DomainError("paths have different tick counts");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.marginals.size(); ++i) {
        const Tick& ta = a.timeline.ticks()[i];
        const Tick& tb = b.timeline.ticks()[i];
        bool same = ta.exact && tb.exact ? *ta.exact == *tb.exact : std::fabs(ta.value - tb.value) <= 1e-12;
        if (!same) throw DomainError("paths differ at tick " + std::to_string(i));
        worst = std::max(worst, tv_distance(a.marginals[i], b.marginals[i]));
    }
    return worst;
}

inline LevyPath restrict_path(const LevyPath& path, const std::vector<std::size_t>& indices) {
    Timeline sub = path.timeline.restrict_to(indices);
    std::vector<Measure> marginals;
    for (const Tick& t : sub.ticks()) marginals.push_back(path.marginals[*path.timeline.find(t)]);
    return LevyPath{std::move(sub), std::move(marginals), path.generator, std::nullopt};
}

}  // namespace defconv
