#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "defconv/divisibility.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace defconv;

namespace {

Measure on(const Semigroup& g, std::vector<double> w) { return make_measure(g, std::move(w)); }

oracles::Table table_of(const Semigroup& g) {
    oracles::Table t(g.size() * g.size());
    for (Element x = 0; x < g.size(); ++x) {
        for (Element y = 0; y < g.size(); ++y) t[x * g.size() + y] = g.add(x, y);
    }
    return t;
}

double objective(const Semigroup& g, std::span<const double> nu, std::size_t n, const Measure& target) {
    return oracles::objective(table_of(g), g.size(), g.zero(), nu, n, target.weights());
}

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

Measure dense_measure(const Semigroup& g, std::mt19937_64& rng) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> w(g.size());
    double t = 0.0;
    for (auto& x : w) t += (x = e(rng));
    for (auto& x : w) x /= t;
    return make_measure(g, w);
}

}  // namespace

TEST(Gradient, OrderOneIsDifference) {
    auto g = fixtures::certify(fixtures::cyclic(3));
    Measure nu = on(g, {0.2, 0.3, 0.5}), target = on(g, {0.6, 0.1, 0.3});
    auto grad = power_gradient(g, nu, 1, target);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(grad[i], nu[i] - target[i], 1e-16);
    EXPECT_THROW(power_gradient(g, nu, 0, target), DomainError);
}

TEST(Gradient, MatchesFiniteDifferencesOnC2) {
    auto g = fixtures::certify(fixtures::cyclic(2));
    Measure nu = on(g, {0.5, 0.5}), target = dirac(g, 0);
    auto analytic = oracles::project_tangent(power_gradient(g, nu, 2, target));
    auto fd = oracles::project_tangent(oracles::fd_gradient(table_of(g), 2, 0, nu.weights(), 2, target.weights()));
    std::vector<double> diff(2);
    for (int i = 0; i < 2; ++i) diff[i] = analytic[i] - fd[i];
    EXPECT_LE(max_abs(diff), 1e-5 * max_abs(fd));
}

TEST(Gradient, NegativeTangentDirectionDescends) {
    auto g = fixtures::certify(fixtures::chain_table(2));
    Measure nu = dirac(g, 0), target = dirac(g, 1);
    auto dir = oracles::project_tangent(power_gradient(g, nu, 3, target));
    double j0 = objective(g, nu.weights(), 3, target);
    // Stay on the simplex: move mass from 0 to 1.
    std::vector<double> step{nu[0] - 1e-3 * dir[0], nu[1] - 1e-3 * dir[1]};
    ASSERT_GE(step[1], 0.0);
    EXPECT_LT(objective(g, step, 3, target), j0);
}

TEST(Gradient, RandomInstances) {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 40; ++i) {
        auto g = fixtures::certify(fixtures::random_semigroup(rng, 8).structure);
        Measure nu = dense_measure(g, rng), target = fixtures::random_measure(g, rng);
        std::size_t n = 1 + rng() % 6;
        auto analytic = oracles::project_tangent(power_gradient(g, nu, n, target));
        auto fd = oracles::project_tangent(
            oracles::fd_gradient(table_of(g), g.size(), g.zero(), nu.weights(), n, target.weights()));
        std::vector<double> diff(g.size());
        for (std::size_t k = 0; k < g.size(); ++k) diff[k] = analytic[k] - fd[k];
        EXPECT_LE(max_abs(diff), 1e-5 * std::max(max_abs(fd), 1e-6)) << "n=" << n;
    }
}

TEST(Root, DeltaZeroIsItsOwnRoot) {
    auto g = fixtures::certify(fixtures::cyclic(4));
    for (std::size_t n : {1, 2, 5}) {
        auto cert = nth_root(g, dirac(g, 0), n, {});
        EXPECT_LE(cert.residual, 1e-12);
        EXPECT_LE(tv_distance(cert.best_root, dirac(g, 0)), 1e-9);
        EXPECT_EQ(cert.verdict, RootVerdict::exact_within_tol);
    }
}

TEST(Root, ChainTwoSquareRoot) {
    auto g = fixtures::certify(fixtures::chain_table(2));
    auto cert = nth_root(g, on(g, {0.25, 0.75}), 2, {});
    EXPECT_LE(cert.residual, 1e-9);
    EXPECT_LE(tv_distance(cert.best_root, on(g, {0.5, 0.5})), 1e-6);
    EXPECT_EQ(cert.verdict, RootVerdict::exact_within_tol);
    ASSERT_TRUE(cert.lower_bound.has_value());
    EXPECT_LE(*cert.lower_bound, cert.residual);
}

TEST(Root, C2DiracOneHasNoSquareRoot) {
    auto g = fixtures::certify(fixtures::cyclic(2));
    SolverConfig cfg;
    cfg.seed = 7;
    auto cert = nth_root(g, dirac(g, 1), 2, cfg);
    EXPECT_EQ(cert.verdict, RootVerdict::infeasible_lower_bound);
    ASSERT_TRUE(cert.lower_bound.has_value());
    EXPECT_GE(*cert.lower_bound, 0.5 - 1e-6);
    EXPECT_LE(*cert.lower_bound, cert.residual + 1e-12);
    EXPECT_NEAR(cert.residual, 0.5, 1e-6);
}

TEST(Root, StoredResidualIsRecomputable) {
    std::mt19937_64 rng(22);
    for (int i = 0; i < 10; ++i) {
        auto g = fixtures::certify(fixtures::random_semigroup(rng, 6).structure);
        Measure target = fixtures::random_measure(g, rng);
        SolverConfig cfg;
        cfg.restarts = 4;
        cfg.max_iters = 500;
        auto cert = nth_root(g, target, 2, cfg);
        EXPECT_NEAR(cert.residual, tv_distance(conv_power(g, cert.best_root, 2), target), 1e-12);
        if (cert.verdict == RootVerdict::exact_within_tol) {
            EXPECT_LE(cert.residual, cfg.tol_residual);
        }
        ASSERT_FALSE(cert.all_roots_found.empty());
        for (std::size_t a = 0; a < cert.all_roots_found.size(); ++a) {
            for (std::size_t b = a + 1; b < cert.all_roots_found.size(); ++b) {
                EXPECT_GE(tv_distance(cert.all_roots_found[a], cert.all_roots_found[b]), 1e-4);
            }
        }
    }
}

TEST(Root, NonUniqueRootsAreReported) {
    auto g = fixtures::certify(fixtures::cyclic(4));
    SolverConfig cfg;
    cfg.restarts = 24;
    auto cert = nth_root(g, on(g, {0.5, 0.0, 0.5, 0.0}), 2, cfg);
    EXPECT_EQ(cert.verdict, RootVerdict::exact_within_tol);
    // (1/2)(delta_0 + delta_2) and (1/2)(delta_1 + delta_3) both square to it.
    EXPECT_GE(cert.all_roots_found.size(), 2u);
}

TEST(Root, DeterministicAcrossThreads) {
    std::mt19937_64 rng(23);
    auto g = fixtures::certify(fixtures::random_semigroup(rng, 8).structure);
    Measure target = fixtures::random_measure(g, rng);
    SolverConfig a, b;
    a.seed = b.seed = 99;
    a.threads = 1;
    b.threads = 4;
    auto ca = nth_root(g, target, 3, a), cb = nth_root(g, target, 3, b);
    EXPECT_EQ(ca.best_root, cb.best_root);
    EXPECT_EQ(ca.residual, cb.residual);
    EXPECT_EQ(ca.best_restart, cb.best_restart);
    ASSERT_EQ(ca.all_roots_found.size(), cb.all_roots_found.size());
    for (std::size_t i = 0; i < ca.all_roots_found.size(); ++i) EXPECT_EQ(ca.all_roots_found[i], cb.all_roots_found[i]);
}

TEST(Root, ConfigValidation) {
    auto g = fixtures::certify(fixtures::cyclic(2));
    SolverConfig bad;
    bad.tol_residual = 0.0;
    EXPECT_THROW(nth_root(g, dirac(g, 0), 2, bad), DomainError);
    SolverConfig none;
    none.restarts = 0;
    EXPECT_THROW(nth_root(g, dirac(g, 0), 2, none), DomainError);
    EXPECT_THROW(nth_root(g, dirac(g, 0), 0, {}), DomainError);
}

TEST(SemilatticeOracle, Examples) {
    auto j2 = fixtures::certify(fixtures::chain_table(2));
    Measure r = semilattice_root_oracle(j2, on(j2, {0.25, 0.75}), 2);
    EXPECT_NEAR(r[0], 0.5, 1e-15);
    EXPECT_NEAR(r[1], 0.5, 1e-15);
    auto j3 = fixtures::certify(fixtures::chain_table(3));
    Measure t = on(j3, {0.04, 0.32, 0.64});
    EXPECT_EQ(semilattice_root_oracle(j3, t, 1), t);
    Measure root = semilattice_root_oracle(j3, t, 2);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(root[i], (std::vector<double>{0.2, 0.4, 0.4})[i], 1e-15);
    auto sq = oracles::convolve(table_of(j3), 3, root.weights(), root.weights());
    EXPECT_LE(oracles::tv(sq, t.weights()), 1e-15);
}

TEST(SemilatticeOracle, RejectsNonChains) {
    auto c2 = fixtures::certify(fixtures::cyclic(2));
    EXPECT_THROW(semilattice_root_oracle(c2, dirac(c2, 0), 2), DomainError);
    // Bitwise OR on {0,1,2,3} is a semilattice but not a chain.
    auto orr = fixtures::certify(fixtures::with_add_table(4, fixtures::tabulate(4, [](Element a, Element b) { return a | b; })));
    EXPECT_FALSE(chain_order(orr).has_value());
}

TEST(SemilatticeOracle, RelabeledChainsAgreeWithCumulativeRoots) {
    std::mt19937_64 rng(24);
    for (int i = 0; i < 30; ++i) {
        std::size_t m = 1 + rng() % 8;
        std::vector<Element> perm(m);
        std::iota(perm.begin(), perm.end(), Element{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        auto base = fixtures::tabulate(m, [](Element a, Element b) { return std::max(a, b); });
        auto g = fixtures::certify(fixtures::with_add_table(m, fixtures::relabel(m, base, perm)));
        Measure target = fixtures::random_measure(g, rng);
        std::size_t n = 1 + rng() % 16;
        // Read the target in chain order, run the independent oracle, map back.
        std::vector<double> natural(m);
        for (Element k = 0; k < m; ++k) natural[k] = target[perm[k]];
        auto expect = oracles::chain_root(natural, n);
        Measure got = semilattice_root_oracle(g, target, n);
        for (Element k = 0; k < m; ++k) EXPECT_NEAR(got[perm[k]], expect[k], 1e-12);
        EXPECT_LE(tv_distance(conv_power(g, got, n), target), 1e-12);
    }
}

TEST(Divisible, ChainIsDivisible) {
    auto g = fixtures::certify(fixtures::chain_table(3));
    std::mt19937_64 rng(25);
    auto rep = is_infinitely_divisible(g, fixtures::random_measure(g, rng), 16, {});
    EXPECT_TRUE(rep.divisible);
    EXPECT_EQ(rep.certificates.size(), 15u);
    EXPECT_FALSE(rep.first_failure.has_value());
}

TEST(Divisible, C2DiracOne) {
    auto g = fixtures::certify(fixtures::cyclic(2));
    auto rep = is_infinitely_divisible(g, dirac(g, 1), 2, {});
    EXPECT_FALSE(rep.divisible);
    ASSERT_TRUE(rep.first_failure.has_value());
    EXPECT_EQ(*rep.first_failure, 2u);
    ASSERT_TRUE(rep.certificates[0].lower_bound.has_value());
    EXPECT_NEAR(*rep.certificates[0].lower_bound, 0.5, 1e-6);
    EXPECT_THROW(is_infinitely_divisible(g, dirac(g, 1), 1, {}), DomainError);
}

TEST(Divisible, ExponentialsAreDivisible) {
    const double tol = 1e-12;
    std::mt19937_64 rng(26);
    std::vector<Semigroup> gs{fixtures::certify(fixtures::cyclic(2)), fixtures::certify(fixtures::cyclic(5)),
                              fixtures::certify(fixtures::chain_table(3))};
    for (const auto& g : gs) {
        Measure target = conv_exp(g, dense_measure(g, rng), 1.0, tol);
        SolverConfig cfg;
        auto rep = is_infinitely_divisible(g, target, 8, cfg);
        for (const auto& c : rep.certificates) {
            EXPECT_LE(c.residual, std::max((c.n + 1) * tol, cfg.tol_residual)) << "n=" << c.n;
        }
        EXPECT_TRUE(rep.divisible);
    }
}

TEST(Lambda, Examples) {
    auto g = fixtures::certify(fixtures::cyclic(2));
    std::mt19937_64 rng(27);
    Measure mu = fixtures::random_measure(g, rng);
    EXPECT_EQ(lambda_for(g, mu, 0.0, 5), dirac(g, 0));
    Measure lam = lambda_for(g, dirac(g, 1), 1.0, 10);
    EXPECT_NEAR(lam[0], 10.0 / 11.0, 1e-15);
    EXPECT_NEAR(lam[1], 1.0 / 11.0, 1e-15);
    EXPECT_THROW(lambda_for(g, mu, 1.0, 0), DomainError);
    for (int i = 0; i < 50; ++i) {
        Measure nu = fixtures::random_measure(g, rng);
        double r = 3.0 * (rng() % 1000) / 1000.0;
        std::size_t K = 1 + rng() % 100;
        double bound = 1.0 / (1.0 + r / K);
        Measure l = lambda_for(g, nu, r, K);
        EXPECT_GE(l[0], bound - 1e-15);
        if (nu[0] == 0.0) {
            EXPECT_NEAR(l[0], bound, 1e-15);
        }
    }
}

TEST(ExpApprox, ZeroRate) {
    auto g = fixtures::certify(fixtures::cyclic(8));
    std::mt19937_64 rng(28);
    Measure mu = fixtures::random_measure(g, rng);
    for (std::size_t K : {1, 7, 64}) EXPECT_EQ(exp_approx_error(g, mu, 0.0, K, 1e-12), 0.0);
}

TEST(ExpApprox, GeometricDecayOnZ8Seed42) {
    auto g = fixtures::certify(fixtures::cyclic(8));
    std::mt19937_64 rng(42);
    Measure mu = dense_measure(g, rng);
    double prev = exp_approx_error(g, mu, 1.0, 64, 1e-12);
    for (int j = 7; j <= 12; ++j) {
        double e = exp_approx_error(g, mu, 1.0, std::size_t{1} << j, 1e-12);
        EXPECT_LE(e, 0.6 * prev) << "K=2^" << j;
        prev = e;
    }
}

TEST(ExpApprox, LargeK) {
    std::mt19937_64 rng(29);
    for (int i = 0; i < 5; ++i) {
        auto g = fixtures::certify(fixtures::random_semigroup(rng, 8).structure);
        Measure mu = fixtures::random_measure(g, rng);
        EXPECT_LE(exp_approx_error(g, mu, 2.0, std::size_t{1} << 14, 1e-12), 1e-3);
    }
}

TEST(ExtractJump, Examples) {
    auto g = fixtures::certify(fixtures::cyclic(2));
    Measure nu = extract_jump(g, on(g, {10.0 / 11.0, 1.0 / 11.0}), 1.0, 10);
    EXPECT_LE(tv_distance(nu, dirac(g, 1)), 1e-14);
    EXPECT_EQ(extract_jump(g, dirac(g, 0), 2.5, 3), dirac(g, 0));
    EXPECT_THROW(extract_jump(g, on(g, {0.5, 0.5}), 1.0, 10), DomainError);
    EXPECT_THROW(extract_jump(g, dirac(g, 0), 0.0, 10), DomainError);
    EXPECT_THROW(extract_jump(g, dirac(g, 0), 1.0, 0), DomainError);
}

TEST(ExtractJump, RoundTrips) {
    std::mt19937_64 rng(30);
    for (int i = 0; i < 100; ++i) {
        auto g = fixtures::certify(fixtures::random_semigroup(rng, 12).structure);
        Measure mu = fixtures::random_measure(g, rng);
        double r = 0.01 + 4.0 * (rng() % 1000) / 1000.0;
        std::size_t K = 1 + rng() % 4096;
        Measure lam = lambda_for(g, mu, r, K);
        EXPECT_LE(tv_distance(extract_jump(g, lam, r, K), mu), 1e-12);
        EXPECT_LE(tv_distance(lambda_for(g, extract_jump(g, lam, r, K), r, K), lam), 1e-12);
    }
}

TEST(Concentration, ExponentialTargetAtLargeK) {
    auto g = fixtures::certify(fixtures::cyclic(2));
    const std::size_t K = 4096;
    Measure mu = conv_exp(g, dirac(g, 1), 1.0, 1e-12);
    auto rep = check_concentration(g, mu, lambda_for(g, dirac(g, 1), 1.0, K), 1.0, K, 1e-3);
    EXPECT_TRUE(rep.scalar_ok);
    EXPECT_TRUE(rep.tv_ok);
    EXPECT_TRUE(rep.mass_ok);
    EXPECT_TRUE(rep.all());
}

TEST(Concentration, SmallKFailsScalarCondition) {
    auto g = fixtures::certify(fixtures::cyclic(2));
    Measure mu = conv_exp(g, dirac(g, 1), 1.0, 1e-12);
    auto rep = check_concentration(g, mu, lambda_for(g, dirac(g, 1), 1.0, 2), 1.0, 2, 1e-3);
    EXPECT_FALSE(rep.scalar_ok);
    EXPECT_NEAR(rep.scalar, std::exp(1.0) / 2.25, 1e-12);
    EXPECT_FALSE(rep.all());
}

TEST(Concentration, NoMassAtZeroFails) {
    auto g = fixtures::certify(fixtures::cyclic(2));
    auto rep = check_concentration(g, dirac(g, 1), dirac(g, 1), 1.0, 8, 1e-3);
    EXPECT_FALSE(rep.mass_ok);
}

TEST(ContinuityModulus, Grid) {
    std::mt19937_64 rng(31);
    auto g = fixtures::certify(fixtures::cyclic(8));
    for (double r : {0.25, 1.0, 2.0}) {
        Measure mu = fixtures::random_measure(g, rng);
        for (std::size_t K : {40, 200, 1000}) {
            for (std::size_t L : {1, 2, 5, 20}) {
                if (r * L / K > 0.1) continue;
                Measure lam = lambda_for(g, mu, r, K);
                double d = tv_distance(conv_power(g, lam, K + L), conv_power(g, lam, K));
                EXPECT_LE(d, 2 * r * L / K + 1e-9);
            }
        }
    }
}

TEST(FitLevyKhintchine, DeltaZero) {
    auto g = fixtures::certify(fixtures::cyclic(3));
    auto fit = fit_levy_khintchine(g, dirac(g, 0), {}, 4.0);
    EXPECT_EQ(fit.r, 0.0);
    EXPECT_LE(fit.residual, 1e-12);
}

TEST(FitLevyKhintchine, ChainTwo) {
    auto g = fixtures::certify(fixtures::chain_table(2));
    auto fit = fit_levy_khintchine(g, on(g, {0.5, 0.5}), {}, 4.0);
    EXPECT_LE(fit.residual, 1e-9);
    EXPECT_NEAR(fit.r, std::log(2.0), 1e-6);
    EXPECT_LE(tv_distance(fit.nu, dirac(g, 1)), 1e-6);
}

TEST(FitLevyKhintchine, C2RecoversRateOne) {
    auto g = fixtures::certify(fixtures::cyclic(2));
    Measure target = on(g, {std::exp(-1.0) * std::cosh(1.0), std::exp(-1.0) * std::sinh(1.0)});
    auto fit = fit_levy_khintchine(g, target, {}, 4.0);
    EXPECT_LE(fit.residual, 1e-6);
    EXPECT_NEAR(fit.r, 1.0, 1e-3);
    EXPECT_LE(tv_distance(fit.nu, dirac(g, 1)), 1e-3);
    EXPECT_THROW(fit_levy_khintchine(g, target, {}, 0.0), DomainError);
}
