#pragma once
// Approximate infinite divisibility: n-th convolution roots by multi-start
// exponentiated-gradient descent on the simplex, certified lower bounds by
// branch-and-bound for m <= 3, the chain-semilattice root oracle, the
// Bernoulli approximation of convolution exponentials, jump-measure
// extraction, the concentration conditions and Levy-Khintchine fitting.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "defconv/algebra.hpp"
#include "defconv/error.hpp"
#include "defconv/measure.hpp"
#include "defconv/numeric.hpp"
#include "defconv/parallel.hpp"
#include "defconv/semigroup.hpp"

namespace defconv {

struct SolverConfig {
    std::uint64_t seed = 0;
    std::size_t restarts = 16;
    std::size_t max_iters = 5000;
    double tol_residual = 1e-9;
    std::size_t grid_resolution = 64;  // branch-and-bound seed grid, m <= 3
    std::size_t threads = 1;

    void validate() const {
        if (!(tol_residual > 0.0)) throw DomainError("tol_residual must be > 0");
        if (restarts < 1) throw DomainError("restarts must be >= 1");
        if (max_iters < 1) throw DomainError("max_iters must be >= 1");
        if (grid_resolution < 1) throw DomainError("grid_resolution must be >= 1");
        if (threads < 1) throw DomainError("threads must be >= 1");
    }
};

enum class RootVerdict { exact_within_tol, local_minimum_only, infeasible_lower_bound };

inline const char* to_string(RootVerdict v) {
    switch (v) {
        case RootVerdict::exact_within_tol: return "exact_within_tol";
        case RootVerdict::local_minimum_only: return "local_minimum_only";
        case RootVerdict::infeasible_lower_bound: return "infeasible_lower_bound";
    }
    return "unknown";
}

struct RootCertificate {
    Measure target;
    std::size_t n = 0;
    Measure best_root;
    double residual = 0.0;  // tv(best_root^{n*}, target)
    RootVerdict verdict = RootVerdict::local_minimum_only;
    std::optional<double> lower_bound;
    std::vector<Measure> all_roots_found;
    std::uint64_t seed = 0;
    std::size_t best_restart = 0;
};

namespace detail {

inline std::vector<double> power_raw(const Semigroup& g, std::span<const double> x, std::size_t n) {
    std::vector<double> result(g.size(), 0.0);
    result[g.zero()] = 1.0;
    std::vector<double> base(x.begin(), x.end());
    bool first = true;
    while (n > 0) {
        if (n & 1u) {
            result = first ? base : convolve_raw(g, result, base);
            first = false;
        }
        n >>= 1u;
        if (n > 0) base = convolve_raw(g, base, base);
    }
    return result;
}

inline double half_l1(std::span<const double> v) {
    KahanSum s;
    for (double x : v) s.add(std::fabs(x));
    return 0.5 * s.value();
}

// Smooth objective on the simplex: value, gradient, and the total-variation
// residual that decides convergence.
struct ObjectiveValue {
    double value = 0.0;
    double tv = 0.0;
    std::vector<double> gradient;
};

// Exponentiated gradient with Armijo backtracking and step growth on
// success. Zero coordinates of the start point stay zero.
template <class Objective>
std::vector<double> exponentiated_gradient(Objective&& objective, std::vector<double> x,
                                           std::size_t max_iters, double stop_tv) {
    ObjectiveValue cur = objective(x);
    double gmax = 0.0;
    for (double gi : cur.gradient) gmax = std::max(gmax, std::fabs(gi));
    double eta = gmax > 0.0 ? 1.0 / gmax : 1.0;
    std::size_t stalled = 0;
    std::vector<double> y(x.size());
    for (std::size_t it = 0; it < max_iters; ++it) {
        if (cur.tv <= stop_tv) break;
        bool accepted = false;
        ObjectiveValue next;
        while (eta > 1e-300) {
            double gmin = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < x.size(); ++i) {
                if (x[i] > 0.0) gmin = std::min(gmin, cur.gradient[i]);
            }
            KahanSum z;
            for (std::size_t i = 0; i < x.size(); ++i) {
                y[i] = x[i] > 0.0 ? x[i] * std::exp(-eta * (cur.gradient[i] - gmin)) : 0.0;
                z.add(y[i]);
            }
            double zv = z.value();
            for (double& yi : y) yi /= zv;
            KahanSum decrease;
            for (std::size_t i = 0; i < x.size(); ++i) decrease.add(cur.gradient[i] * (y[i] - x[i]));
            next = objective(y);
            if (next.value <= cur.value + 1e-4 * decrease.value() && next.value < cur.value) {
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if (!accepted) break;
        double improvement = cur.value - next.value;
        stalled = improvement <= 1e-15 * cur.value ? stalled + 1 : 0;
        x = y;
        cur = std::move(next);
        eta *= 2.0;
        if (stalled >= 50) break;
    }
    return x;
}

// Deterministic uniform draws in [0, 1) from a 64-bit engine.
inline double unit_draw(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::vector<double> dirichlet_one(std::size_t m, std::mt19937_64& rng) {
    std::vector<double> w(m);
    KahanSum s;
    for (auto& x : w) {
        x = -std::log1p(-unit_draw(rng));
        s.add(x);
    }
    double total = s.value();
    for (auto& x : w) x /= total;
    return w;
}

// Start points: the target, delta_0, uniform, then seeded Dirichlet(1)
// draws; restart k draws from its own engine so parallel runs agree.
inline std::vector<std::vector<double>> restart_points(const Semigroup& g, const Measure& target,
                                                       const SolverConfig& cfg) {
    const std::size_t m = g.size();
    std::vector<std::vector<double>> out;
    std::vector<double> delta(m, 0.0);
    delta[g.zero()] = 1.0;
    std::vector<std::vector<double>> fixed{
        std::vector<double>(target.weights().begin(), target.weights().end()), delta,
        std::vector<double>(m, 1.0 / static_cast<double>(m))};
    for (std::size_t k = 0; k < cfg.restarts; ++k) {
        if (k < fixed.size()) {
            out.push_back(fixed[k]);
        } else {
            std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                              static_cast<std::uint32_t>(k)};
            std::mt19937_64 rng(seq);
            out.push_back(dirichlet_one(m, rng));
        }
    }
    return out;
}

inline Measure to_measure(const Semigroup& g, std::vector<double> x) {
    for (double& v : x) v = std::max(v, 0.0);
    double total = compensated_sum(x);
    for (double& v : x) v /= total;
    return Measure(std::move(x), g.id());
}

}  // namespace detail

// Gradient of J(nu) = 1/2 ||nu^{n*} - target||_2^2 with respect to the
// coordinates of nu: n * correlate(nu^{(n-1)*}, nu^{n*} - target).
inline std::vector<double> power_gradient(const Semigroup& g, const Measure& nu, std::size_t n,
                                          const Measure& target) {
    require_on(g, nu);
    require_on(g, target);
    if (n == 0) throw DomainError("power_gradient: n must be >= 1");
    auto lower = detail::power_raw(g, nu.weights(), n - 1);
    auto full = convolve_raw(g, lower, nu.weights());
    for (std::size_t i = 0; i < full.size(); ++i) full[i] -= target[i];
    auto grad = correlate(g, lower, full);
    for (double& v : grad) v *= static_cast<double>(n);
    return grad;
}

// Measure whose cumulative function along the chain is the n-th root of
// the target's. Requires + to be max over a total order.
inline std::optional<std::vector<Element>> chain_order(const Semigroup& g) {
    const std::size_t m = g.size();
    std::vector<std::size_t> rank(m, 0);
    for (Element x = 0; x < m; ++x) {
        if (g.add(x, x) != x) return std::nullopt;
        for (Element y = 0; y < m; ++y) {
            Element s = g.add(x, y);
            if (s != x && s != y) return std::nullopt;
            if (s == x) ++rank[x];  // y <= x
        }
    }
    std::vector<Element> order(m);
    for (Element x = 0; x < m; ++x) {
        if (rank[x] < 1 || rank[x] > m) return std::nullopt;
        order[rank[x] - 1] = x;
    }
    for (std::size_t k = 0; k < m; ++k) {
        if (rank[order[k]] != k + 1) return std::nullopt;
    }
    return order;
}

inline Measure semilattice_root_oracle(const Semigroup& g, const Measure& target, std::size_t n) {
    require_on(g, target);
    if (n == 0) throw DomainError("root order must be >= 1");
    auto order = chain_order(g);
    if (!order) throw DomainError("semigroup is not a chain join-semilattice");
    const std::size_t m = g.size();
    std::vector<double> w(m, 0.0);
    KahanSum cumulative;
    double previous_root = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        cumulative.add(target[(*order)[k]]);
        double c = k + 1 == m ? 1.0 : std::clamp(cumulative.value(), 0.0, 1.0);
        double root = n == 1 ? c : std::pow(c, 1.0 / static_cast<double>(n));
        root = std::max(root, previous_root);
        w[(*order)[k]] = root - previous_root;
        previous_root = root;
    }
    return Measure(std::move(w), g.id());
}

namespace detail {

// Certified lower bound on inf_nu tv(nu^{n*}, target) for m <= 3. nu -> that
// residual is n-Lipschitz in total variation, so a cell's value at its
// center minus n times its radius bounds it from below; cells are refined
// best-first until the bound is within `gap` of the best value seen.
struct GridBound {
    double lower_bound = 0.0;
    double best_value = 0.0;
    std::vector<double> best_point;
};

inline GridBound grid_lower_bound(const Semigroup& g, const Measure& target, std::size_t n,
                                  std::size_t resolution, double gap = 1e-7,
                                  std::size_t budget = 400'000) {
    const std::size_t m = g.size();
    const double lipschitz = static_cast<double>(n);
    auto value = [&](const std::vector<double>& p) {
        auto pw = power_raw(g, p, n);
        for (std::size_t i = 0; i < m; ++i) pw[i] -= target[i];
        return half_l1(pw);
    };
    GridBound out;
    if (m == 1) {
        out.best_point = {1.0};
        return out;
    }
    if (m > 3) throw DomainError("grid oracle is limited to universes of size <= 3");

    struct Cell {
        double bound;
        std::size_t serial;
        std::vector<std::vector<double>> vertices;
        bool operator>(const Cell& o) const {
            return bound != o.bound ? bound > o.bound : serial > o.serial;
        }
    };
    std::priority_queue<Cell, std::vector<Cell>, std::greater<Cell>> open;
    std::size_t serial = 0;
    out.best_value = std::numeric_limits<double>::infinity();

    auto push = [&](std::vector<std::vector<double>> vs) {
        std::vector<double> center(m, 0.0);
        for (const auto& v : vs) {
            for (std::size_t i = 0; i < m; ++i) center[i] += v[i] / static_cast<double>(vs.size());
        }
        double radius = 0.0;
        for (const auto& v : vs) {
            std::vector<double> d(m);
            for (std::size_t i = 0; i < m; ++i) d[i] = v[i] - center[i];
            radius = std::max(radius, half_l1(d));
        }
        double f = value(center);
        if (f < out.best_value) {
            out.best_value = f;
            out.best_point = center;
        }
        // Pad the radius for rounding in the vertex coordinates.
        open.push(Cell{f - lipschitz * (radius + 1e-15), serial++, std::move(vs)});
    };
    auto point = [&](double a, double b, double c) {
        std::vector<double> p{a, b};
        if (m == 3) p.push_back(c);
        return p;
    };

    const double R = static_cast<double>(resolution);
    if (m == 2) {
        for (std::size_t k = 0; k < resolution; ++k) {
            double a = static_cast<double>(k) / R, b = static_cast<double>(k + 1) / R;
            push({point(a, 1.0 - a, 0.0), point(b, 1.0 - b, 0.0)});
        }
    } else {
        auto at = [&](std::size_t i, std::size_t j) {
            double a = static_cast<double>(i) / R, b = static_cast<double>(j) / R;
            return point(a, b, std::max(0.0, 1.0 - a - b));
        };
        for (std::size_t i = 0; i < resolution; ++i) {
            for (std::size_t j = 0; i + j < resolution; ++j) {
                push({at(i, j), at(i + 1, j), at(i, j + 1)});
                if (i + j + 2 <= resolution) push({at(i + 1, j), at(i, j + 1), at(i + 1, j + 1)});
            }
        }
    }

    auto midpoint = [&](const std::vector<double>& a, const std::vector<double>& b) {
        std::vector<double> c(m);
        for (std::size_t i = 0; i < m; ++i) c[i] = 0.5 * (a[i] + b[i]);
        return c;
    };
    while (!open.empty()) {
        const Cell& top = open.top();
        if (top.bound >= out.best_value - gap || serial >= budget) break;
        Cell cell = top;
        open.pop();
        const auto& v = cell.vertices;
        if (m == 2) {
            auto c = midpoint(v[0], v[1]);
            push({v[0], c});
            push({c, v[1]});
        } else {
            auto a = midpoint(v[0], v[1]), b = midpoint(v[1], v[2]), c = midpoint(v[0], v[2]);
            push({v[0], a, c});
            push({a, v[1], b});
            push({c, b, v[2]});
            push({a, b, c});
        }
    }
    out.lower_bound = open.empty() ? out.best_value : std::max(0.0, open.top().bound);
    return out;
}

}  // namespace detail

inline RootCertificate nth_root(const Semigroup& g, const Measure& target, std::size_t n,
                                const SolverConfig& cfg) {
    require_on(g, target);
    cfg.validate();
    if (n == 0) throw DomainError("root order must be >= 1");
    const std::size_t m = g.size();

    auto objective = [&](const std::vector<double>& x) {
        detail::ObjectiveValue out;
        auto lower = detail::power_raw(g, x, n - 1);
        auto res = convolve_raw(g, lower, x);
        KahanSum sq;
        for (std::size_t i = 0; i < m; ++i) {
            res[i] -= target[i];
            sq.add(res[i] * res[i]);
        }
        out.value = 0.5 * sq.value();
        out.tv = detail::half_l1(res);
        out.gradient = correlate(g, lower, res);
        for (double& v : out.gradient) v *= static_cast<double>(n);
        return out;
    };

    auto starts = detail::restart_points(g, target, cfg);
    const double stop_tv = cfg.tol_residual * 1e-3;
    std::vector<std::optional<Measure>> roots(starts.size());
    std::vector<double> residuals(starts.size(), 0.0);
    parallel_for(starts.size(), cfg.threads, [&](std::size_t k) {
        auto x = detail::exponentiated_gradient(objective, starts[k], cfg.max_iters, stop_tv);
        Measure root = detail::to_measure(g, std::move(x));
        residuals[k] = tv_distance(conv_power(g, root, n), target);
        roots[k] = std::move(root);
    });

    std::vector<std::size_t> ranking(starts.size());
    for (std::size_t k = 0; k < ranking.size(); ++k) ranking[k] = k;
    std::stable_sort(ranking.begin(), ranking.end(),
                     [&](std::size_t a, std::size_t b) { return residuals[a] < residuals[b]; });

    const std::size_t best = ranking.front();
    RootCertificate cert{target, n, *roots[best], residuals[best], RootVerdict::local_minimum_only,
                         std::nullopt, {}, cfg.seed, best};
    for (std::size_t k : ranking) {
        if (residuals[k] > cert.residual + cfg.tol_residual) break;
        bool distinct = true;
        for (const auto& r : cert.all_roots_found) {
            if (tv_distance(r, *roots[k]) < 1e-4) {
                distinct = false;
                break;
            }
        }
        if (distinct) cert.all_roots_found.push_back(*roots[k]);
    }

    if (m <= 3) {
        cert.lower_bound = detail::grid_lower_bound(g, target, n, cfg.grid_resolution).lower_bound;
    }
    if (cert.residual <= cfg.tol_residual) {
        cert.verdict = RootVerdict::exact_within_tol;
    } else if (cert.lower_bound && *cert.lower_bound >= 100.0 * cfg.tol_residual) {
        cert.verdict = RootVerdict::infeasible_lower_bound;
    }
    return cert;
}

struct DivisibilityReport {
    std::size_t n_max = 0;
    std::vector<RootCertificate> certificates;  // orders 2..n_max
    bool divisible = false;                     // every order certified exact
    std::optional<std::size_t> first_failure;
};

inline DivisibilityReport is_infinitely_divisible(const Semigroup& g, const Measure& target,
                                                  std::size_t n_max, const SolverConfig& cfg) {
    if (n_max < 2) throw DomainError("n_max must be >= 2");
    DivisibilityReport report;
    report.n_max = n_max;
    for (std::size_t n = 2; n <= n_max; ++n) {
        report.certificates.push_back(nth_root(g, target, n, cfg));
        if (report.certificates.back().verdict != RootVerdict::exact_within_tol &&
            !report.first_failure) {
            report.first_failure = n;
        }
    }
    report.divisible = !report.first_failure;
    return report;
}

// (1 + r/K)^{-1} (delta_0 + (r/K) mu): the K-th root candidate whose K-th
// power approximates e^{r(mu* - 1)}.
inline Measure lambda_for(const Semigroup& g, const Measure& mu, double r, std::size_t K) {
    require_on(g, mu);
    if (K == 0) throw DomainError("lambda_for: K must be >= 1");
    if (!(r >= 0.0) || !std::isfinite(r)) throw DomainError("lambda_for: r must be finite and >= 0");
    const double q = r / static_cast<double>(K);
    std::vector<double> w(g.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = q * mu[i] / (1.0 + q);
    w[g.zero()] = (1.0 + q * mu[g.zero()]) / (1.0 + q);
    return Measure(std::move(w), g.id());
}

inline double exp_approx_error(const Semigroup& g, const Measure& mu, double r, std::size_t K,
                               double tol) {
    return tv_distance(conv_power(g, lambda_for(g, mu, r, K), K), conv_exp(g, mu, r, tol));
}

// Inverse of lambda_for: (1 + K/r) lambda - (K/r) delta_0.
inline Measure extract_jump(const Semigroup& g, const Measure& lambda, double r, std::size_t K) {
    require_on(g, lambda);
    if (K == 0) throw DomainError("extract_jump: K must be >= 1");
    if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("extract_jump: r must be finite and > 0");
    const double Kd = static_cast<double>(K);
    const double bound = 1.0 / (1.0 + r / Kd);
    const Element zero = g.zero();
    if (lambda[zero] < bound - 1e-12) {
        throw DomainError("extract_jump: lambda({0}) = " + std::to_string(lambda[zero]) +
                          " is below (1 + r/K)^{-1} = " + std::to_string(bound) + " by " +
                          std::to_string(bound - lambda[zero]));
    }
    const double scale = 1.0 + Kd / r;
    std::vector<double> w(g.size());
    KahanSum rest;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (i == zero) continue;
        w[i] = scale * lambda[i];
        rest.add(w[i]);
    }
    // Mass at 0 as the complement; equal to scale * lambda(0) - K/r on the
    // simplex but without the cancellation.
    w[zero] = std::max(0.0, 1.0 - rest.value());
    double total = compensated_sum(w);
    for (double& x : w) x /= total;
    return Measure(std::move(w), g.id());
}

struct ConcentrationReport {
    double scalar = 0.0;  // e^r (1 + r/K)^{-K}
    double eps = 0.0;
    bool scalar_ok = false;

    double tv = 0.0;  // tv(mu, lambda^{K*})
    double tv_bound = 0.0;
    bool tv_ok = false;

    double mass_at_zero = 0.0;  // lambda({0})
    double mass_bound = 0.0;    // (1 + r/K)^{-1}
    bool mass_ok = false;

    bool all() const { return scalar_ok && tv_ok && mass_ok; }
};

inline ConcentrationReport check_concentration(const Semigroup& g, const Measure& mu,
                                               const Measure& lambda, double r, std::size_t K,
                                               double eps) {
    require_on(g, mu);
    require_on(g, lambda);
    if (K == 0) throw DomainError("check_concentration: K must be >= 1");
    if (!(r >= 0.0)) throw DomainError("check_concentration: r must be >= 0");
    const double Kd = static_cast<double>(K);
    ConcentrationReport rep;
    rep.eps = eps;
    rep.scalar = std::exp(r - Kd * std::log1p(r / Kd));
    rep.scalar_ok = std::fabs(rep.scalar - 1.0) <= eps;
    rep.tv = tv_distance(mu, conv_power(g, lambda, K));
    rep.tv_bound = 1.0 / Kd;
    rep.tv_ok = rep.tv <= rep.tv_bound;
    rep.mass_at_zero = lambda[g.zero()];
    rep.mass_bound = 1.0 / (1.0 + r / Kd);
    rep.mass_ok = rep.mass_at_zero >= rep.mass_bound - 1e-12;
    return rep;
}

struct LevyKhintchineFit {
    double r = 0.0;
    Measure nu;
    double residual = 0.0;  // tv(e^{r(nu* - 1)}, target)
};

namespace detail {

inline constexpr double kFitExpTolerance = 1e-12;

struct FitPoint {
    double r = 0.0;
    std::optional<Measure> nu;
    double residual = 0.0;
};

inline FitPoint fit_at_rate(const Semigroup& g, const Measure& target, double r,
                            const SolverConfig& cfg, const std::vector<double>* warm) {
    const std::size_t m = g.size();
    FitPoint out;
    out.r = r;
    if (r == 0.0) {
        out.nu = target;
        out.residual = tv_distance(dirac(g, g.zero()), target);
        return out;
    }
    PoissonTruncation pt = poisson_truncation(r, kFitExpTolerance / 2.0);
    auto objective = [&](const std::vector<double>& x) {
        ObjectiveValue ov;
        std::vector<KahanSum> mixed(m), slope(m);
        std::vector<double> power(m, 0.0);
        power[g.zero()] = 1.0;
        for (std::size_t k = 0; k < pt.weights.size(); ++k) {
            if (k > 0) {
                // d/dnu of nu^{k*} pairs with k * nu^{(k-1)*} = k * current power
                for (std::size_t i = 0; i < m; ++i) {
                    slope[i].add(pt.weights[k] * static_cast<double>(k) * power[i]);
                }
                power = convolve_raw(g, power, x);
            }
            for (std::size_t i = 0; i < m; ++i) mixed[i].add(pt.weights[k] * power[i]);
        }
        std::vector<double> res(m), c(m);
        KahanSum sq;
        for (std::size_t i = 0; i < m; ++i) {
            res[i] = mixed[i].value() / pt.kept_mass - target[i];
            c[i] = slope[i].value() / pt.kept_mass;
            sq.add(res[i] * res[i]);
        }
        ov.value = 0.5 * sq.value();
        ov.tv = half_l1(res);
        ov.gradient = correlate(g, c, res);
        return ov;
    };
    auto starts = restart_points(g, target, cfg);
    if (warm) starts.insert(starts.begin(), *warm);
    const double stop_tv = cfg.tol_residual * 1e-3;
    for (std::size_t k = 0; k < starts.size(); ++k) {
        auto x = exponentiated_gradient(objective, starts[k], cfg.max_iters, stop_tv);
        Measure nu = to_measure(g, std::move(x));
        double res = tv_distance(conv_exp(g, nu, r, kFitExpTolerance), target);
        if (!out.nu || res < out.residual) {
            out.nu = std::move(nu);
            out.residual = res;
        }
        if (out.residual <= stop_tv) break;
    }
    return out;
}

// 32 linear and 32 geometric points on [lo, hi].
inline std::vector<double> hybrid_grid(double lo, double hi) {
    std::vector<double> out;
    const double span = hi - lo;
    for (int k = 0; k < 32; ++k) out.push_back(lo + span * k / 31.0);
    for (int k = 0; k < 32; ++k) out.push_back(lo + span * std::pow(10.0, -4.0 * (1.0 - k / 31.0)));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace detail

// Search for (r, nu) with e^{r(nu* - 1)} close to the target. Among rates
// whose fit meets tol_residual the smallest is preferred; the boundary of
// the feasible rates is located by bisection.
inline LevyKhintchineFit fit_levy_khintchine(const Semigroup& g, const Measure& target,
                                             const SolverConfig& cfg, double r_max) {
    require_on(g, target);
    cfg.validate();
    if (!(r_max > 0.0) || !std::isfinite(r_max)) throw DomainError("r_max must be finite and > 0");

    std::vector<detail::FitPoint> evaluated;
    auto feasible = [&](const detail::FitPoint& p) { return p.residual <= cfg.tol_residual; };
    auto select = [&]() -> const detail::FitPoint& {
        const detail::FitPoint* best = nullptr;
        for (const auto& p : evaluated) {
            if (feasible(p) && (!best || p.r < best->r)) best = &p;
        }
        if (best) return *best;
        for (const auto& p : evaluated) {
            if (!best || p.residual < best->residual ||
                (p.residual == best->residual && p.r < best->r)) {
                best = &p;
            }
        }
        return *best;
    };

    double lo = 0.0, hi = r_max, span = r_max;
    for (int round = 0; round < 4; ++round) {
        auto grid = detail::hybrid_grid(lo, hi);
        std::vector<detail::FitPoint> batch(grid.size());
        parallel_for(grid.size(), cfg.threads, [&](std::size_t k) {
            batch[k] = detail::fit_at_rate(g, target, grid[k], cfg, nullptr);
        });
        evaluated.insert(evaluated.end(), batch.begin(), batch.end());
        double center = select().r;
        span /= 4.0;
        lo = std::max(0.0, center - span / 2.0);
        hi = std::min(r_max, center + span / 2.0);
    }

    detail::FitPoint chosen = select();
    if (feasible(chosen)) {
        double below = -1.0;
        for (const auto& p : evaluated) {
            if (!feasible(p) && p.r < chosen.r) below = std::max(below, p.r);
        }
        if (below >= 0.0) {
            double a = below;
            for (int it = 0; it < 60 && chosen.r - a > 1e-13 * std::max(1.0, chosen.r); ++it) {
                double mid = 0.5 * (a + chosen.r);
                std::vector<double> warm(chosen.nu->weights().begin(), chosen.nu->weights().end());
                auto p = detail::fit_at_rate(g, target, mid, cfg, &warm);
                if (feasible(p)) {
                    chosen = std::move(p);
                } else {
                    a = mid;
                }
            }
        }
    }
    return LevyKhintchineFit{chosen.r, *chosen.nu, chosen.residual};
}

}  // namespace defconv
