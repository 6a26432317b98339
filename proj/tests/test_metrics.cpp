#include <gtest/gtest.h>

#include <cmath>

#include <dsrank/metrics.hpp>

#include "support.hpp"

using namespace dsrank;
using namespace dsrank::testing;

namespace {

ShockParams once(double rho) {
    ShockParams p;
    p.rho = rho;
    p.damping = Damping::once();
    return p;
}

} // namespace

TEST(DsRank, TwoBankOracle) {
    auto s = two_bank_market();
    auto traj = run(individual_shock(s, "B2"), two_bank_exposures(), s, once(1.0));
    EXPECT_NEAR(ds_rank(traj, s), 0.41, 1e-15);
    traj = run(individual_shock(s, "B2"), two_bank_exposures(), s, once(0.0));
    EXPECT_NEAR(ds_rank(traj, s), 0.25, 1e-15);
}

TEST(DsRank, BoundaryShocks) {
    auto s = two_bank_market();
    EXPECT_EQ(ds_rank(run(group_shock(2, 0.0), two_bank_exposures(), s, once(1.0)), s), 0.0);
    EXPECT_EQ(ds_rank(run(group_shock(2, 1.0), two_bank_exposures(), s, once(1.0)), s), 0.0);
}

TEST(DsRank, IdentityViolationIsReported) {
    auto s = two_bank_market();
    auto traj = run(group_shock(2, 0.1), two_bank_exposures(), s, once(1.0));
    traj.h_initial[0] = std::nan("");
    EXPECT_THROW(ds_rank(traj, s), InternalError);
}

TEST(Shocks, Definitions) {
    EXPECT_EQ(group_shock(3, 0.0), std::vector<double>(3, 0.0));
    EXPECT_EQ(group_shock(3, 1.0), std::vector<double>(3, 1.0));
    EXPECT_EQ(group_shock(3, 0.3), std::vector<double>(3, 0.3));
    EXPECT_THROW(group_shock(3, 1.1), UsageError);
    for (std::size_t u = 0; u < 3; ++u) {
        auto h = individual_shock(3, u);
        for (std::size_t i = 0; i < 3; ++i)
            EXPECT_EQ(h[i], i == u ? 1.0 : 0.0);
    }
    EXPECT_THROW(individual_shock(two_bank_market(), "nope"), UsageError);
}

TEST(Analytic, NoFailClosedForm) {
    auto s = two_bank_market();
    EXPECT_DOUBLE_EQ(analytic_no_fail(0.2, 1.0, 0.0, s), 0.2 * 9.0 / 20.0);
    EXPECT_EQ(analytic_no_fail(0.0, 1.0, 1.0, s), 0.0);
    // 0.01 * 9 * (1 + 0.01/0.99) / 20
    const double expected = 0.01 * 9.0 * (1.0 + 0.01 / 0.99) / 20.0;
    EXPECT_NEAR(analytic_no_fail(0.01, 1.0, 1.0, s), expected, 1e-15);
    EXPECT_NEAR(expected, 0.0045455, 1e-7);
    auto traj = run(group_shock(2, 0.01), two_bank_exposures(), s, once(1.0));
    EXPECT_NEAR(ds_rank(traj, s), expected, 1e-9 * expected);
    EXPECT_THROW(analytic_no_fail(1.0, 1.0, 1.0, s), UsageError);
}

TEST(Analytic, FullFail) {
    EXPECT_EQ(analytic_full_fail(1.0), 0.0);
    EXPECT_NEAR(analytic_full_fail(0.7), 0.3, 1e-15);
    EXPECT_EQ(analytic_full_fail(0.0), 1.0);
}

TEST(Analytic, NoFailIncreasesWithRho) {
    auto s = synth_market(10, {500, 200}, 1.0, 1);
    for (double psi : {0.001, 0.01, 0.1, 0.5}) {
        double previous = -1.0;
        for (double rho = 0.0; rho <= 1.0; rho += 0.125) {
            const double ds = analytic_no_fail(psi, 1.0, rho, s);
            EXPECT_GT(ds, previous);
            previous = ds;
        }
        // the rho-increment matches psi C rho^2 psi / [(1 - rho psi) E0]
        const double rho = 0.6;
        const double delta = analytic_no_fail(psi, 1.0, rho, s) - analytic_no_fail(psi, 1.0, 0.0, s);
        const double closed = psi * s.total_volume() * rho * rho * psi / ((1.0 - rho * psi) * s.total_equity());
        EXPECT_NEAR(delta, closed, 1e-12 * closed);
    }
}

TEST(ImpactVulnerability, TwoBankOracle) {
    auto s = two_bank_market();
    auto e = two_bank_exposures();
    EXPECT_NEAR(impact(1, e, s, once(1.0)), 0.82, 1e-15);
    EXPECT_NEAR(impact(1, e, s, once(0.0)), 0.5, 1e-15);
    EXPECT_NEAR(vulnerability(0, e, s, once(1.0)), 0.82, 1e-15);

    auto profiles = risk_profiles(LeverageMatrices::build(e, s), s, once(1.0));
    EXPECT_NEAR(profiles[1].impact, 0.82, 1e-15);
    EXPECT_NEAR(profiles[0].vulnerability, 0.82, 1e-15);
    EXPECT_EQ(profiles[0].leverage, 0.5);
    EXPECT_NEAR(profiles[0].extended_leverage, 0.9, 1e-15);
    EXPECT_EQ(profiles[0].weight, 0.5);
}

TEST(ImpactVulnerability, IsolatedBank) {
    MarketSnapshot s(0, {sheet("a", 5, 4, 10), sheet("b", 4, 5, 10), sheet("z", 0, 0, 10)});
    ExposureMatrix e(3, {{0, 1, 5.0}, {1, 0, 4.0}});
    EXPECT_EQ(impact(2, e, s, once(1.0)), 0.0);
    EXPECT_EQ(vulnerability(2, e, s, once(1.0)), 0.0);
}

TEST(ImpactVulnerability, SingleBankMarket) {
    MarketSnapshot s(0, {sheet("a", 5, 4, 10)});
    EXPECT_THROW(impact(0, ExposureMatrix(1, {}), s, once(1.0)), UsageError);
    EXPECT_THROW(vulnerability(0, ExposureMatrix(1, {}), s, once(1.0)), UsageError);
}

TEST(ImpactVulnerability, FullyDefaultingMarket) {
    // every bank lends far more than its equity to every other bank
    std::vector<BalanceSheet> banks;
    std::vector<Exposure> entries;
    for (std::uint32_t i = 0; i < 4; ++i) {
        banks.push_back(sheet(std::to_string(i), 30, 30, 1));
        for (std::uint32_t j = 0; j < 4; ++j)
            if (i != j)
                entries.push_back({i, j, 10.0});
    }
    MarketSnapshot s(0, banks);
    ExposureMatrix e(4, entries);
    auto m = LeverageMatrices::build(e, s);
    auto profiles = risk_profiles(m, s, once(0.0));
    for (const auto &p : profiles) {
        EXPECT_EQ(p.vulnerability, 1.0);
        EXPECT_NEAR(p.impact, 1.0, 1e-15);
    }
}

TEST(Leverage, ProfileAndSafetyThreshold) {
    auto s = two_bank_market();
    auto m = LeverageMatrices::build(two_bank_exposures(), s);
    auto prof = leverage_profile(m, 1.0, 1.0);
    EXPECT_EQ(prof[0].leverage, 0.5);
    EXPECT_EQ(prof[1].leverage, 0.4);
    EXPECT_NEAR(prof[0].extended_leverage, 0.9, 1e-15);
    EXPECT_NEAR(prof[1].extended_leverage, 0.9, 1e-15);

    // a bank that only lends has no funding leverage
    MarketSnapshot s2(0, {sheet("a", 5, 0, 10), sheet("b", 0, 5, 10)});
    auto m2 = LeverageMatrices::build(ExposureMatrix(2, {{0, 1, 5.0}}), s2);
    auto p2 = leverage_profile(m2, 0.7, 1.0);
    EXPECT_EQ(p2[0].extended_leverage, 0.7 * p2[0].leverage);

    // Lambda_a < 1: a survives the default of all its debtors in one credit round
    ShockParams p = once(0.0);
    auto traj = run(individual_shock(2, 1), m2, s2, p);
    EXPECT_LT(traj.h_final[0], 1.0);
}

TEST(Leverage, LogHistogram) {
    std::vector<double> values{0.0, 0.5, 1.0, 1.0, 2.0, 10.0, 99.0};
    auto h = log_histogram(values, 30);
    EXPECT_EQ(h.zeros, 1u);
    EXPECT_EQ(h.median, 1.0);
    std::size_t total = 0;
    for (auto c : h.counts)
        total += c;
    EXPECT_EQ(total, 6u);
    EXPECT_EQ(h.edges.size(), h.counts.size() + 1);
    for (std::size_t b = 0; b + 1 < h.edges.size(); ++b)
        EXPECT_NEAR(std::log10(h.edges[b + 1] / h.edges[b]), 1.0 / 30.0, 1e-12);
    EXPECT_LE(h.edges.front(), 0.5);
    EXPECT_GT(h.edges.back(), 99.0);
    EXPECT_TRUE(log_histogram({}, 30).counts.empty());
}

// ---------------------------------------------------------------------------

TEST(MetricsProperties, AccountingIdentityAndBounds) {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const std::size_t n = 3 + seed % 15;
        auto inst = random_closed_instance(n, 7000 + seed, 0.3, 0.5 + static_cast<double>(seed % 7));
        ShockParams p;
        p.rho = 0.5 * static_cast<double>(seed % 3);
        p.damping = seed % 3 == 0 ? Damping::once() : seed % 3 == 1 ? Damping::persistent() : Damping::exponential(2.0);
        Xoshiro256 rng(seed);
        const double psi = rng.uniform();
        auto traj = run(group_shock(n, psi), inst.exposures, inst.snapshot, p);
        auto forms = ds_forms(traj, inst.snapshot);
        EXPECT_LT(std::abs(forms.weighted - forms.equity), 1e-12);
        EXPECT_GE(forms.weighted, 0.0);
        EXPECT_LE(forms.weighted, 1.0 - psi + 1e-12);

        auto m = LeverageMatrices::build(inst.exposures, inst.snapshot);
        const std::size_t u = seed % n;
        const double imp = impact(u, m, inst.snapshot, p);
        EXPECT_GE(imp, 0.0);
        EXPECT_LE(imp, 1.0 + 1e-12);
        auto t = run(individual_shock(n, u), m, inst.snapshot, p);
        const bool all_others_default =
            std::all_of(t.h_final.begin(), t.h_final.end(), [](double h) { return h >= 1.0; });
        if (all_others_default)
            EXPECT_NEAR(imp, 1.0, 1e-12);
        else
            EXPECT_LT(imp, 1.0);
    }
}
